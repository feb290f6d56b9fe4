"""The constrained energies: normalized L^p norm of the weighted mean
curvature, its sup-norm limit, the anchoring penalisation, and the
low-energy gate that rules out topological degeneration.

The L^p integrand is accumulated in log space so that exponents in the
hundreds stay inside double range; a p of 512 is routine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffgeo import SurfaceFields, surface_fields
from .distance import ReferenceSurface, cached_query
from .errors import EnergyOverflowError
from .mesh import TriMesh, total_area

INF = math.inf

LOW_ENERGY_THRESHOLD = math.sqrt(8.0 * math.pi)


@dataclass(frozen=True)
class EnergyParams:
    """Parameter record shared by every energy evaluation.

    p may be any float in [2, inf); use ``INF`` for the sup-norm problem.
    A positive sigma requires a reference surface to penalise against.
    """

    p: float
    epsilon: float
    sigma: float
    target_area: float
    weight: object
    reference: ReferenceSurface | None = None

    def __post_init__(self):
        if not (self.p >= 2.0):
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.target_area <= 0.0:
            raise ValueError(
                f"target_area must be positive, got {self.target_area}")
        if self.sigma > 0.0 and self.reference is None:
            raise ValueError("sigma > 0 requires a reference surface")

    def replace(self, **kw) -> "EnergyParams":
        data = {"p": self.p, "epsilon": self.epsilon, "sigma": self.sigma,
                "target_area": self.target_area, "weight": self.weight,
                "reference": self.reference}
        data.update(kw)
        return EnergyParams(**data)


def weighted_curvature(mesh: TriMesh, params: EnergyParams,
                       fields: SurfaceFields | None = None) -> np.ndarray:
    """The per-vertex product xi(f_i) * H_i."""
    if fields is None:
        fields = surface_fields(mesh)
    xi, _ = params.weight.evaluate(mesh.positions)
    return xi * fields.H


def lp_energy(mesh: TriMesh, params: EnergyParams,
              fields: SurfaceFields | None = None) -> float:
    """Normalized L^p energy of the weighted mean curvature.

    A^(-1/p) * (sum_i ((xi_i H_i)^2 + eps)^(p/2) a_i)^(1/p), accumulated in
    log space.  Equals 1/r on a round mesh of radius r with unit weight.
    """
    p = params.p
    if not np.isfinite(p):
        raise ValueError("lp_energy needs finite p; use linf_energy")
    if fields is None:
        fields = surface_fields(mesh)
    xh = weighted_curvature(mesh, params, fields)
    with np.errstate(over="ignore"):
        s = xh * xh + params.epsilon
    if np.all(s == 0.0):
        return 0.0
    with np.errstate(divide="ignore"):
        log_terms = 0.5 * p * np.log(s) + np.log(fields.measure)
    shift = log_terms.max()
    log_sum = shift + math.log(float(np.sum(np.exp(log_terms - shift))))
    value = math.exp((log_sum - math.log(params.target_area)) / p)
    if not math.isfinite(value):
        raise EnergyOverflowError(
            f"L^p energy overflowed at p={p}: log integral {log_sum:g}, "
            f"max |xi H| {np.sqrt(s.max()):g}")
    return value


def linf_energy(mesh: TriMesh, params: EnergyParams,
                fields: SurfaceFields | None = None):
    """Sup norm of |xi H| and the attaining vertex (lowest index on ties)."""
    xh = np.abs(weighted_curvature(mesh, params, fields))
    idx = int(np.argmax(xh))
    return float(xh[idx]), idx


def penalisation(mesh: TriMesh, params: EnergyParams,
                 fields: SurfaceFields | None = None) -> float:
    """Anchoring term (sigma / 2A) * sum_i d(f_i)^2 a_i."""
    if params.sigma == 0.0:
        return 0.0
    if params.reference is None:
        raise ValueError("sigma > 0 requires a reference surface")
    if fields is None:
        fields = surface_fields(mesh)
    d, _, _ = cached_query(params.reference, mesh)
    return float(params.sigma / (2.0 * params.target_area)
                 * np.sum(d * d * fields.measure))


def total_energy(mesh: TriMesh, params: EnergyParams,
                 fields: SurfaceFields | None = None) -> float:
    """L^p (or sup-norm when p is infinite) energy plus penalisation."""
    if fields is None:
        fields = surface_fields(mesh)
    if np.isfinite(params.p):
        main = lp_energy(mesh, params, fields)
    else:
        main, _ = linf_energy(mesh, params, fields)
    return main + penalisation(mesh, params, fields)


def low_energy_check(mesh: TriMesh, params: EnergyParams,
                     fields: SurfaceFields | None = None):
    """Gate value sup|xi H| * sqrt(area) against sqrt(8 pi).

    Below the threshold, sphere topology cannot pinch or split along a
    minimizing sequence; above it the whole approach is off warranty.
    """
    value, _ = linf_energy(mesh, params, fields)
    value *= math.sqrt(total_area(mesh))
    return bool(value < LOW_ENERGY_THRESHOLD), float(value)
