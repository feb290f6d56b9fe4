"""Ambient weight functions multiplying the mean curvature inside the norms.

Every weight is >= 1 everywhere with an exact analytic gradient.  The
quadratic-in-one-axis variant does not grow in every direction, so it is
flagged non-coercive and a run has to anchor itself with a penalisation
term instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffgeo import surface_fields
from .mesh import TriMesh


@dataclass(frozen=True)
class ConstantWeight:
    """xi(x) = value, with value >= 1."""

    value: float = 1.0
    needs_penalisation = False

    def __post_init__(self):
        if self.value < 1.0:
            raise ValueError(f"constant weight must be >= 1, got {self.value}")

    def evaluate(self, points: np.ndarray):
        points = np.atleast_2d(points)
        vals = np.full(len(points), self.value)
        return vals, np.zeros_like(points)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class RadialQuadraticWeight:
    """xi(x) = 1 + coeff * |x - center|^2; grows in every direction."""

    center: tuple = (0.0, 0.0, 0.0)
    coeff: float = 1.0
    needs_penalisation = False

    def __post_init__(self):
        if self.coeff <= 0.0:
            raise ValueError(f"coeff must be positive, got {self.coeff}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def evaluate(self, points: np.ndarray):
        points = np.atleast_2d(points)
        offset = points - np.asarray(self.center)
        vals = 1.0 + self.coeff * np.einsum("ij,ij->i", offset, offset)
        return vals, 2.0 * self.coeff * offset

    def to_dict(self):
        return {"kind": "radial_quadratic", "center": list(self.center),
                "coeff": self.coeff}


@dataclass(frozen=True)
class AxisQuadraticWeight:
    """xi(x) = 1 + coeff * <axis, x>^2.

    Constant on planes orthogonal to the axis, hence non-coercive: it cannot
    stop a surface from drifting sideways.  Only valid together with an
    active penalisation term; run configuration enforces that.
    """

    axis: tuple = (0.0, 0.0, 1.0)
    coeff: float = 1.0
    needs_penalisation = True

    def __post_init__(self):
        if self.coeff <= 0.0:
            raise ValueError(f"coeff must be positive, got {self.coeff}")
        axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ValueError("axis must be a nonzero vector")
        object.__setattr__(self, "axis", tuple(axis / norm))

    def evaluate(self, points: np.ndarray):
        points = np.atleast_2d(points)
        axis = np.asarray(self.axis)
        proj = points @ axis
        vals = 1.0 + self.coeff * proj ** 2
        grads = (2.0 * self.coeff * proj)[:, None] * axis[None, :]
        return vals, grads

    def to_dict(self):
        return {"kind": "axis_quadratic", "axis": list(self.axis),
                "coeff": self.coeff}


_WEIGHT_KINDS = {
    "constant": ConstantWeight,
    "radial_quadratic": RadialQuadraticWeight,
    "axis_quadratic": AxisQuadraticWeight,
}


def weight_from_dict(record: dict):
    """Build a weight from its tagged-record form (inverse of to_dict)."""
    record = dict(record)
    try:
        kind = record.pop("kind")
    except KeyError:
        raise ValueError("weight record is missing the 'kind' tag") from None
    try:
        cls = _WEIGHT_KINDS[kind]
    except KeyError:
        raise ValueError(
            f"unknown weight kind {kind!r}; expected one of "
            f"{sorted(_WEIGHT_KINDS)}") from None
    return cls(**record)


def weight_eval(weight, point):
    """Value and exact gradient of a weight at one point."""
    vals, grads = weight.evaluate(np.asarray(point, dtype=float)[None, :])
    return float(vals[0]), grads[0]


def normal_weight_derivative(mesh: TriMesh, weight,
                             normals: np.ndarray | None = None) -> np.ndarray:
    """Per-vertex directional derivative of the weight along the normal."""
    if normals is None:
        normals = surface_fields(mesh).normal
    _, grads = weight.evaluate(mesh.positions)
    return np.einsum("ij,ij->i", grads, normals)
