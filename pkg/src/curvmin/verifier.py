"""Coefficient fields of the curvature optimality system and its numerical
certification.

At a constrained critical point of the p-energy, the density

    G = 1/2 Delta w + Q w - sigma d D_nu(d) - sigma d^2 H

must be proportional to H through the area multiplier lambda.  The fields
are written in the package conventions (outward normals, H = +1/r on round
spheres); terms that are odd in the normal direction therefore carry the
opposite sign to a transcription that keeps the normal pointing along the
displacement.  The finite-difference tests in the suite pin these signs.

In the large-p limit the residual system collapses to

    1/2 Delta w + Q w = lambda H,      h w = |w| xi H,

so the weighted curvature xi H concentrates on the three values
{+h, 0, -h}; this module reports how close a mesh gets at finite p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .diffgeo import SurfaceFields, laplacian_apply, surface_fields
from .energy import EnergyParams, lp_energy, linf_energy
from .mesh import TriMesh
from .weights import normal_weight_derivative

PLUS = np.int8(1)
ZERO = np.int8(0)
MINUS = np.int8(-1)

_CLASS_NAMES = {1: "PLUS", 0: "ZERO", -1: "MINUS"}
_CLASS_CODES = {v: k for k, v in _CLASS_NAMES.items()}


def compute_w(mesh: TriMesh, params: EnergyParams,
              fields: SurfaceFields | None = None,
              h: float | None = None) -> np.ndarray:
    """EL coefficient field w, evaluated in log space.

    w = h^(1-p) ((xi H)^2 + eps)^((p-2)/2) xi^2 H, which for eps = 0
    reduces to h^(1-p) xi^p |H|^(p-2) H.  Equals 1 identically on a round
    mesh with unit weight, and keeps the sign of H everywhere.
    """
    p = params.p
    if not np.isfinite(p):
        raise ValueError("compute_w needs finite p")
    if fields is None:
        fields = surface_fields(mesh)
    if h is None:
        h = lp_energy(mesh, params, fields)
    if h <= 0.0:
        raise ValueError("h = 0: weighted curvature vanishes identically")
    xi, _ = params.weight.evaluate(mesh.positions)
    H = fields.H
    sign = np.sign(H)
    with np.errstate(divide="ignore"):
        log_absh = np.log(np.abs(H))
        log_xi = np.log(xi)
        if params.epsilon == 0.0:
            log_absw = ((1.0 - p) * math.log(h) + p * log_xi
                        + (p - 1.0) * log_absh)
        else:
            s = (xi * H) ** 2 + params.epsilon
            log_absw = ((1.0 - p) * math.log(h)
                        + 0.5 * (p - 2.0) * np.log(s)
                        + 2.0 * log_xi + log_absh)
    w = sign * np.exp(log_absw)
    if not np.all(np.isfinite(w)):
        bad = int(np.nonzero(~np.isfinite(w))[0][0])
        raise FloatingPointError(
            f"w overflowed at vertex {bad} (p={p}, |H|={abs(H[bad]):g}, "
            f"h={h:g})")
    return w


def compute_Q(mesh: TriMesh, params: EnergyParams,
              fields: SurfaceFields | None = None) -> np.ndarray:
    """EL potential field Q.

    Q = 2 (p-1)/p H^2 - K - H D_nu(xi)/xi for eps = 0; with regularization
    the middle term splits as 2H^2 - K - (2/p)(H^2 + eps/xi^2) - ..., which
    agrees with the eps = 0 form up to exactly (2/p) eps/xi^2.
    """
    p = params.p
    if fields is None:
        fields = surface_fields(mesh)
    H, K = fields.H, fields.K
    xi, _ = params.weight.evaluate(mesh.positions)
    dnu_xi = normal_weight_derivative(mesh, params.weight, fields.normal)
    if params.epsilon == 0.0:
        return 2.0 * (p - 1.0) / p * H ** 2 - K - H * dnu_xi / xi
    return (2.0 * H ** 2 - K
            - (2.0 / p) * (H ** 2 + params.epsilon / xi ** 2)
            - H * dnu_xi / xi)


@dataclass(frozen=True)
class ELParts:
    """Everything the flow and the verifier share for one mesh."""

    fields: SurfaceFields
    h: float
    w: np.ndarray
    Q: np.ndarray
    G: np.ndarray
    lam: float


def el_parts(mesh: TriMesh, params: EnergyParams) -> ELParts:
    """Assemble w, Q, the density G, and the projected multiplier lambda."""
    fields = surface_fields(mesh)
    h = lp_energy(mesh, params, fields)
    w = compute_w(mesh, params, fields, h)
    Q = compute_Q(mesh, params, fields)
    G = 0.5 * laplacian_apply(mesh, w) / fields.measure + Q * w
    if params.sigma > 0.0:
        from .distance import cached_query
        d, grad_d, _ = cached_query(params.reference, mesh)
        dnu_d = np.einsum("ij,ij->i", grad_d, fields.normal)
        G = G - params.sigma * (d * dnu_d + d * d * fields.H)
    if not np.all(np.isfinite(G)):
        bad = int(np.nonzero(~np.isfinite(G))[0][0])
        raise FloatingPointError(f"EL density non-finite at vertex {bad}")
    lam = project_multiplier(G, fields.H, fields.measure)
    return ELParts(fields=fields, h=h, w=w, Q=Q, G=G, lam=lam)


def project_multiplier(G: np.ndarray, H: np.ndarray,
                       measure: np.ndarray) -> float:
    """Area multiplier by L2(mu) projection of G onto H.

    Makes the flow speed G - lambda H orthogonal to H, so the first
    variation of area vanishes along the flow.  The denominator is positive
    on any closed mesh (there are no compact minimal surfaces).
    """
    denom = float(np.sum(H * H * measure))
    if denom <= 0.0:
        raise ValueError("cannot project multiplier: integral of H^2 is zero")
    return float(np.sum(G * H * measure) / denom)


@dataclass(frozen=True)
class ELReport:
    """Verdict on how well a mesh satisfies the optimality system."""

    p: float
    epsilon: float
    h: float
    lam: float
    residual_l2: float
    w: np.ndarray
    Q: np.ndarray
    three_value: np.ndarray | None = None
    concentration: float | None = None
    alignment_residual: float | None = None
    tau: float | None = None
    delta_c: float | None = None

    def class_counts(self):
        if self.three_value is None:
            return None
        return {name: int(np.sum(self.three_value == code))
                for code, name in _CLASS_NAMES.items()}

    def to_json_dict(self) -> dict:
        doc = {
            "p": self.p,
            "epsilon": self.epsilon,
            "h": self.h,
            "lambda": self.lam,
            "residual_l2": self.residual_l2,
            "w": [float(x) for x in self.w],
            "Q": [float(x) for x in self.Q],
        }
        if self.three_value is not None:
            doc["three_value"] = [_CLASS_NAMES[int(c)] for c in self.three_value]
            doc["concentration"] = self.concentration
            doc["alignment_residual"] = self.alignment_residual
            doc["tau"] = self.tau
            doc["delta_c"] = self.delta_c
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ELReport":
        three = doc.get("three_value")
        if three is not None:
            three = np.array([_CLASS_CODES[name] for name in three],
                             dtype=np.int8)
        return cls(p=doc["p"], epsilon=doc["epsilon"], h=doc["h"],
                   lam=doc["lambda"], residual_l2=doc["residual_l2"],
                   w=np.asarray(doc["w"], dtype=float),
                   Q=np.asarray(doc["Q"], dtype=float),
                   three_value=three,
                   concentration=doc.get("concentration"),
                   alignment_residual=doc.get("alignment_residual"),
                   tau=doc.get("tau"), delta_c=doc.get("delta_c"))


def el_residual(mesh: TriMesh, params: EnergyParams) -> ELReport:
    """Scale-free L2 residual of the optimality system at finite p.

    ||G - lambda H||_{L2(mu)} / ||Q w||_{L2(mu)}: near zero at discrete
    critical points, order one on generic meshes.
    """
    if not np.isfinite(params.p):
        raise ValueError("el_residual needs finite p")
    parts = el_parts(mesh, params)
    a = parts.fields.measure
    res = parts.G - parts.lam * parts.fields.H
    num = math.sqrt(float(np.sum(res * res * a)))
    den = math.sqrt(float(np.sum((parts.Q * parts.w) ** 2 * a)))
    if den == 0.0:
        raise ValueError("residual normalizer ||Q w|| vanished")
    return ELReport(p=params.p, epsilon=params.epsilon, h=parts.h,
                    lam=parts.lam, residual_l2=num / den,
                    w=parts.w, Q=parts.Q)


def classify_three_values(w: np.ndarray, tau: float) -> np.ndarray:
    """Partition vertices by the sign of w with a relative dead band.

    ZERO where |w| <= tau * max|w|, PLUS/MINUS by sign elsewhere.
    """
    band = tau * float(np.abs(w).max())
    classes = np.where(w > band, PLUS, np.where(w < -band, MINUS, ZERO))
    return classes.astype(np.int8)


def three_value_report(mesh: TriMesh, params: EnergyParams,
                       tau: float = 0.05,
                       delta_c: float = 0.10) -> ELReport:
    """Full report: residual plus the three-value structure of xi H.

    Concentration is the mu-fraction of vertices outside the dead band whose
    weighted curvature lies within delta_c * h of the sign-matched value
    h * sgn(w).  The alignment residual is the L1 defect of h w = |w| xi H,
    normalized by h ||w||_{L1(mu)}.
    """
    report = el_residual(mesh, params)
    fields = surface_fields(mesh)
    xi, _ = params.weight.evaluate(mesh.positions)
    xh = xi * fields.H
    a = fields.measure
    w, h = report.w, report.h

    classes = classify_three_values(w, tau)
    nonzero = classes != ZERO
    if np.any(nonzero):
        good = np.abs(xh - h * np.sign(w)) <= delta_c * h
        concentration = float(np.sum(a[nonzero & good])
                              / np.sum(a[nonzero]))
    else:
        concentration = 0.0

    alignment = float(np.sum(np.abs(h * w - np.abs(w) * xh) * a)
                      / (h * np.sum(np.abs(w) * a)))
    return replace(report, three_value=classes, concentration=concentration,
                   alignment_residual=alignment, tau=tau, delta_c=delta_c)


def holder_curve(mesh: TriMesh, params: EnergyParams, p_list):
    """(p, h_p) along increasing p with eps = 0; nondecreasing by the
    power-mean inequality when the mesh area matches the target."""
    fields = surface_fields(mesh)
    curve = []
    for p in p_list:
        h = lp_energy(mesh, params.replace(p=float(p), epsilon=0.0), fields)
        curve.append((float(p), h))
    return curve
