"""Discrete differential operators on triangle meshes.

Sign conventions, fixed once for the whole package:

* the Laplace-Beltrami operator is negative semi-definite (div grad), so
  applying it to the position field gives -2 H nu on a smooth sphere;
* vertex normals point outward on a positively oriented closed mesh;
* mean curvature is the average of the principal curvatures and equals
  +1/r on a round sphere of radius r with outward normals.

The sparse operator object exists for callers that want the coefficient
table; internal evaluation uses a matrix-free accumulation of the same
weights, which is considerably faster for single applications.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .mesh import TriMesh, face_corner_vectors, face_cotangents, vertex_measure


@dataclass(frozen=True)
class LaplacianOperator:
    """Integrated cotangent Laplacian with companion lumped mass.

    ``matrix`` is the symmetric V x V cotangent coefficient table with zero
    row sums (constants in the kernel); ``mass`` holds the lumped vertex
    areas.  The pointwise operator is ``matrix @ u / mass``.
    """

    matrix: sparse.csr_matrix
    mass: np.ndarray

    def apply(self, field: np.ndarray) -> np.ndarray:
        """Pointwise Laplacian of a per-vertex scalar or vector field."""
        out = self.matrix @ field
        if field.ndim == 1:
            return out / self.mass
        return out / self.mass[:, None]


def _edge_index_pairs(mesh: TriMesh):
    """Row/column gather indices for the six per-face edge contributions,
    grouped per opposite corner (0, 0, 1, 1, 2, 2)."""
    cached = mesh._derived.get("lap_indices")
    if cached is None:
        tri = mesh.triangles
        rows = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 2], tri[:, 0],
                               tri[:, 0], tri[:, 1]])
        cols = np.concatenate([tri[:, 2], tri[:, 1], tri[:, 0], tri[:, 2],
                               tri[:, 1], tri[:, 0]])
        cached = (rows, cols)
        mesh._derived["lap_indices"] = cached
    return cached


def _edge_weights(mesh: TriMesh) -> np.ndarray:
    cots = face_cotangents(mesh)
    half = 0.5 * cots
    return np.concatenate([half[:, 0], half[:, 0], half[:, 1], half[:, 1],
                           half[:, 2], half[:, 2]])


def laplacian_apply(mesh: TriMesh, field: np.ndarray) -> np.ndarray:
    """Integrated cotangent Laplacian times a field, matrix-free.

    Returns the same values as ``cotan_laplacian(mesh).matrix @ field`` up
    to summation order.  Divide by the vertex measure for the pointwise
    operator.
    """
    rows, cols, n = *_edge_index_pairs(mesh), mesh.num_vertices
    w = _edge_weights(mesh)
    if field.ndim == 1:
        vals = w * (field[cols] - field[rows])
        return np.bincount(rows, weights=vals, minlength=n)
    diff = w[:, None] * (field[cols] - field[rows])
    out = np.empty((n, field.shape[1]))
    for k in range(field.shape[1]):
        out[:, k] = np.bincount(rows, weights=diff[:, k], minlength=n)
    return out


def cotan_laplacian(mesh: TriMesh) -> LaplacianOperator:
    """Assemble the cotangent Laplacian (negative semi-definite convention).

    Off-diagonal entry for edge (i, j) is (cot a + cot b) / 2 over the
    angles opposite the edge; diagonals make the row sums vanish.  Weights
    are not clamped: obtuse triangles yield negative entries, which keeps
    the Delta f = -2 H nu identity intact.
    """
    cached = mesh._derived.get("laplacian")
    if cached is not None:
        return cached
    rows, cols = _edge_index_pairs(mesh)
    n = mesh.num_vertices
    vals = _edge_weights(mesh)
    off = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    matrix = (off + sparse.diags(diag)).tocsr()
    op = LaplacianOperator(matrix=matrix, mass=vertex_measure(mesh))
    mesh._derived["laplacian"] = op
    return op


@dataclass(frozen=True)
class SurfaceFields:
    """Per-vertex curvature data of one mesh.

    H : mean curvature (1/length), K : Gauss curvature (1/length^2),
    normal : outward unit normals, measure : lumped vertex areas.
    """

    H: np.ndarray
    K: np.ndarray
    normal: np.ndarray
    measure: np.ndarray


def _corner_angles(mesh: TriMesh) -> np.ndarray:
    # |u x v| equals twice the face area for every corner's edge pair.
    p0, p1, p2, _, area = face_corner_vectors(mesh)
    double_area = 2.0 * area
    angles = np.empty((mesh.num_triangles, 3))
    angles[:, 0] = np.arctan2(double_area,
                              np.einsum("ij,ij->i", p1 - p0, p2 - p0))
    angles[:, 1] = np.arctan2(double_area,
                              np.einsum("ij,ij->i", p2 - p1, p0 - p1))
    angles[:, 2] = np.arctan2(double_area,
                              np.einsum("ij,ij->i", p0 - p2, p1 - p2))
    return angles


def _vertex_normals(mesh: TriMesh, corner_angles: np.ndarray) -> np.ndarray:
    """Angle-weighted average of incident face normals, normalized."""
    _, _, _, cross, area = face_corner_vectors(mesh)
    face_unit = cross / (2.0 * area)[:, None]
    tri = mesh.triangles
    n = mesh.num_vertices
    acc = np.zeros((n, 3))
    for c in range(3):
        w = corner_angles[:, c]
        idx = tri[:, c]
        for k in range(3):
            acc[:, k] += np.bincount(idx, weights=face_unit[:, k] * w,
                                     minlength=n)
    norms = np.linalg.norm(acc, axis=1)
    if np.any(norms == 0):
        raise ValueError("vertex with vanishing normal accumulation")
    return acc / norms[:, None]


def surface_fields(mesh: TriMesh) -> SurfaceFields:
    """Mean curvature, Gauss curvature, outward normals, lumped measure."""
    cached = mesh._derived.get("surface_fields")
    if cached is not None:
        return cached
    measure = vertex_measure(mesh)
    angles = _corner_angles(mesh)
    normal = _vertex_normals(mesh, angles)

    lap_pos = laplacian_apply(mesh, mesh.positions)
    H = -np.einsum("ij,ij->i", lap_pos / (2.0 * measure)[:, None], normal)

    defect = 2.0 * np.pi - np.bincount(
        mesh.triangles.ravel(order="F"), weights=angles.ravel(order="F"),
        minlength=mesh.num_vertices)
    K = defect / measure

    fields = SurfaceFields(H=H, K=K, normal=normal, measure=measure)
    mesh._derived["surface_fields"] = fields
    return fields


def mean_curvature(mesh: TriMesh) -> SurfaceFields:
    """Surface fields of the mesh; H and normal are the advertised outputs."""
    return surface_fields(mesh)


def gauss_curvature(mesh: TriMesh) -> np.ndarray:
    """Angle-defect Gauss curvature: (2 pi - sum of incident angles) / area."""
    return surface_fields(mesh).K


def willmore_energy(mesh: TriMesh) -> float:
    """Integral of H^2 over the mesh (lumped); >= 4 pi for closed surfaces."""
    f = surface_fields(mesh)
    return float(np.sum(f.H ** 2 * f.measure))
