"""Closed oriented triangle meshes: construction, validation, measure, OBJ I/O.

A :class:`TriMesh` is an immutable value; every operation that changes
geometry returns a new mesh. Vertex indices are 0-based internally and are
converted from/to the 1-based OBJ convention at the file boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, ObjFormatError

MAX_ICOSPHERE_SUBDIVISIONS = 8


class TriMesh:
    """Oriented triangle mesh with fixed connectivity.

    Parameters
    ----------
    positions : (V, 3) array_like of float
        Vertex coordinates.
    triangles : (F, 3) array_like of int
        Vertex-index triples, counterclockwise when seen from outside.

    Both arrays are copied and frozen; derived quantities are cached on the
    instance, which is safe because instances never mutate.
    """

    __slots__ = ("positions", "triangles", "_derived")

    def __init__(self, positions, triangles):
        pos = np.array(positions, dtype=np.float64)
        tri = np.array(triangles, dtype=np.int64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise MeshError(f"positions must be (V, 3), got {pos.shape}")
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise MeshError(f"triangles must be (F, 3), got {tri.shape}")
        if not np.all(np.isfinite(pos)):
            raise MeshError("positions contain non-finite values")
        if tri.size and (tri.min() < 0 or tri.max() >= len(pos)):
            raise MeshError("triangle index out of range")
        if np.any(tri[:, 0] == tri[:, 1]) or np.any(tri[:, 1] == tri[:, 2]) \
                or np.any(tri[:, 0] == tri[:, 2]):
            raise MeshError("triangle with repeated vertex")
        pos.setflags(write=False)
        tri.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "_derived", {})

    def __setattr__(self, name, value):
        raise AttributeError("TriMesh is immutable")

    @property
    def num_vertices(self) -> int:
        return len(self.positions)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def edges(self) -> np.ndarray:
        """Undirected edges as a sorted unique (E, 2) array."""
        cached = self._derived.get("edges")
        if cached is None:
            tri = self.triangles
            e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
            e.sort(axis=1)
            cached = np.unique(e, axis=0)
            self._derived["edges"] = cached
        return cached

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def vertex_triangles(self):
        """Incident-triangle index array per vertex (tuple of arrays)."""
        cached = self._derived.get("vertex_triangles")
        if cached is None:
            flat = self.triangles.ravel()
            order = np.argsort(flat, kind="stable")
            counts = np.bincount(flat, minlength=self.num_vertices)
            split = np.cumsum(counts)[:-1]
            cached = tuple(np.split(order // 3, split))
            self._derived["vertex_triangles"] = cached
        return cached

    @property
    def edge_opposite_vertices(self) -> np.ndarray:
        """For edge k of ``edges``, the two vertices opposite it, (E, 2).

        Requires a closed manifold mesh; entries are -1 where a side is
        missing.
        """
        cached = self._derived.get("edge_opposite")
        if cached is None:
            tri = self.triangles
            edges = self.edges
            lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
            out = np.full((len(edges), 2), -1, dtype=np.int64)
            for i, j, k in tri:
                for a, b, opp in ((i, j, k), (j, k, i), (k, i, j)):
                    key = (a, b) if a < b else (b, a)
                    e = lookup[key]
                    slot = 0 if out[e, 0] == -1 else 1
                    out[e, slot] = opp
            out.setflags(write=False)
            cached = out
            self._derived["edge_opposite"] = cached
        return cached

    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_triangles

    def with_positions(self, positions) -> "TriMesh":
        """New mesh with the same connectivity and different coordinates."""
        return TriMesh(positions, self.triangles)

    def __repr__(self):
        return (f"TriMesh(V={self.num_vertices}, E={self.num_edges}, "
                f"F={self.num_triangles})")


def face_corner_vectors(mesh: TriMesh):
    """Edge vectors, cross products, and areas per face.

    Returns (p0, p1, p2, cross, area) where cross = (p1-p0) x (p2-p0) and
    area = |cross| / 2.  Raises on exactly degenerate faces.
    """
    pos, tri = mesh.positions, mesh.triangles
    cached = mesh._derived.get("corner")
    if cached is not None:
        return cached
    p0, p1, p2 = pos[tri[:, 0]], pos[tri[:, 1]], pos[tri[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    area = 0.5 * np.linalg.norm(cross, axis=1)
    if np.any(area <= 0.0) or not np.all(np.isfinite(area)):
        bad = int(np.argmin(area))
        raise MeshError(f"degenerate triangle {bad} (area {area[bad]:g})")
    cached = (p0, p1, p2, cross, area)
    mesh._derived["corner"] = cached
    return cached


def face_areas(mesh: TriMesh) -> np.ndarray:
    return face_corner_vectors(mesh)[4]


def total_area(mesh: TriMesh) -> float:
    return float(face_areas(mesh).sum())


def face_cotangents(mesh: TriMesh) -> np.ndarray:
    """Cotangent of each corner angle, (F, 3), corner c opposite edge c."""
    cached = mesh._derived.get("cotangents")
    if cached is not None:
        return cached
    p0, p1, p2, _, area = face_corner_vectors(mesh)
    double_area = 2.0 * area
    cots = np.empty((len(area), 3))
    cots[:, 0] = np.einsum("ij,ij->i", p1 - p0, p2 - p0) / double_area
    cots[:, 1] = np.einsum("ij,ij->i", p2 - p1, p0 - p1) / double_area
    cots[:, 2] = np.einsum("ij,ij->i", p0 - p2, p1 - p2) / double_area
    mesh._derived["cotangents"] = cots
    return cots


def vertex_measure(mesh: TriMesh) -> np.ndarray:
    """Lumped per-vertex area: circumcentric (Voronoi) cells with the usual
    obtuse-triangle correction.

    Acute triangles are split by perpendicular bisectors; an obtuse triangle
    gives half its area to the obtuse corner and a quarter to each other
    corner.  Cells are positive by construction, partition each triangle
    exactly, and sum to the total mesh area up to float roundoff.  (Plain
    one-third lumping is not used: it makes pointwise curvature at irregular
    vertices an order of magnitude less accurate.)
    """
    cached = mesh._derived.get("vertex_measure")
    if cached is None:
        tri = mesh.triangles
        p0, p1, p2, _, area = face_corner_vectors(mesh)
        cots = face_cotangents(mesh)
        # Squared edge lengths, edge c opposite corner c.
        l0 = np.einsum("ij,ij->i", p2 - p1, p2 - p1)
        l1 = np.einsum("ij,ij->i", p0 - p2, p0 - p2)
        l2 = np.einsum("ij,ij->i", p1 - p0, p1 - p0)
        voronoi = np.empty_like(cots)
        voronoi[:, 0] = (l2 * cots[:, 2] + l1 * cots[:, 1]) / 8.0
        voronoi[:, 1] = (l0 * cots[:, 0] + l2 * cots[:, 2]) / 8.0
        voronoi[:, 2] = (l1 * cots[:, 1] + l0 * cots[:, 0]) / 8.0

        obtuse_face = np.min(cots, axis=1) < 0.0
        obtuse_corner = np.argmax(cots < 0.0, axis=1)
        pieces = voronoi
        if np.any(obtuse_face):
            corrected = 0.25 * area[:, None] * np.ones((1, 3))
            rows = np.nonzero(obtuse_face)[0]
            corrected[rows, obtuse_corner[rows]] = 0.5 * area[rows]
            pieces = np.where(obtuse_face[:, None], corrected, voronoi)

        cached = np.bincount(tri.ravel(), weights=pieces.ravel(),
                             minlength=mesh.num_vertices)
        mesh._derived["vertex_measure"] = cached
    return cached


def area_centroid(mesh: TriMesh) -> np.ndarray:
    """Area-weighted centroid of the surface."""
    area = face_areas(mesh)
    tri = mesh.triangles
    face_centers = mesh.positions[tri].mean(axis=1)
    return (face_centers * area[:, None]).sum(axis=0) / area.sum()


def enclosed_volume(mesh: TriMesh) -> float:
    """Signed enclosed volume (positive for outward orientation).

    Diagnostic only; no functional constrains it.
    """
    p0, p1, p2, _, _ = face_corner_vectors(mesh)
    return float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)


def rescale_to_area(mesh: TriMesh, target_area: float) -> TriMesh:
    """Uniformly scale about the area-weighted centroid to the given area."""
    if target_area <= 0:
        raise ValueError(f"target area must be positive, got {target_area}")
    a0 = total_area(mesh)
    if a0 <= 0:
        raise MeshError("cannot rescale a zero-area mesh")
    s = np.sqrt(target_area / a0)
    c = area_centroid(mesh)
    return mesh.with_positions(c + s * (mesh.positions - c))


def perturb_radial(mesh: TriMesh, amplitude: float, seed: int) -> TriMesh:
    """Seeded radial noise: scale each vertex's offset from the centroid by
    a factor in [1 - amplitude, 1 + amplitude]."""
    rng = np.random.default_rng(seed)
    factors = 1.0 + amplitude * rng.uniform(-1.0, 1.0, size=mesh.num_vertices)
    c = area_centroid(mesh)
    return mesh.with_positions(c + factors[:, None] * (mesh.positions - c))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the topological and metric checks on a mesh."""

    ok: bool
    closed: bool
    oriented: bool
    euler_characteristic: int
    boundary_edges: int
    nonmanifold_edges: int
    min_triangle_area: float
    obtuse_triangles: int
    messages: tuple = field(default_factory=tuple)

    def __str__(self):
        status = "pass" if self.ok else "fail"
        lines = [f"validation: {status} (chi={self.euler_characteristic}, "
                 f"min area={self.min_triangle_area:.3g}, "
                 f"obtuse={self.obtuse_triangles})"]
        lines += [f"  - {m}" for m in self.messages]
        return "\n".join(lines)


def validate(mesh: TriMesh) -> ValidationReport:
    """Check the closed-oriented-sphere invariants; report-only, never raises.

    Passing requires: every undirected edge shared by exactly two triangles,
    each directed edge used exactly once (consistent orientation), Euler
    characteristic 2, and strictly positive triangle areas.  Obtuse triangles
    are counted as a warning because they produce negative cotangent weights.
    """
    tri = mesh.triangles
    messages = []

    directed = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    und_unique, und_counts = np.unique(und, axis=0, return_counts=True)
    boundary = int(np.sum(und_counts == 1))
    nonmanifold = int(np.sum(und_counts > 2))
    closed = boundary == 0 and nonmanifold == 0
    if boundary:
        messages.append(f"{boundary} boundary edge(s) detected")
    if nonmanifold:
        messages.append(f"{nonmanifold} edge(s) shared by more than 2 triangles")

    _, dir_counts = np.unique(directed, axis=0, return_counts=True)
    oriented = bool(np.all(dir_counts == 1))
    if not oriented:
        messages.append("orientation inconsistency: repeated directed edge")

    chi = mesh.num_vertices - len(und_unique) + mesh.num_triangles
    if chi != 2:
        messages.append(f"Euler characteristic {chi} != 2")

    pos = mesh.positions
    p0, p1, p2 = pos[tri[:, 0]], pos[tri[:, 1]], pos[tri[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    area = 0.5 * np.linalg.norm(cross, axis=1)
    min_area = float(area.min()) if len(area) else 0.0
    if min_area <= 0:
        messages.append("degenerate triangle (zero area)")

    obtuse = 0
    if min_area > 0:
        for a, b, c in ((p0, p1, p2), (p1, p2, p0), (p2, p0, p1)):
            obtuse += int(np.sum(np.einsum("ij,ij->i", b - a, c - a) < 0))
        if obtuse:
            messages.append(f"{obtuse} obtuse corner(s): negative cotangent "
                            "weights possible")

    ok = closed and oriented and chi == 2 and min_area > 0
    return ValidationReport(ok=ok, closed=closed, oriented=oriented,
                            euler_characteristic=chi, boundary_edges=boundary,
                            nonmanifold_edges=nonmanifold,
                            min_triangle_area=min_area,
                            obtuse_triangles=obtuse,
                            messages=tuple(messages))


# Icosahedron with unit circumradius, outward counterclockwise faces.
_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
    (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
    (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
]) / np.sqrt(1.0 + _PHI ** 2)
_ICO_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
])


def build_icosphere(subdivisions: int, radius: float = 1.0) -> TriMesh:
    """Icosahedron subdivided ``subdivisions`` times, vertices on the sphere.

    V = 10 * 4**s + 2.  Subdivision is capped at
    :data:`MAX_ICOSPHERE_SUBDIVISIONS` as a memory guard.
    """
    if not 0 <= subdivisions <= MAX_ICOSPHERE_SUBDIVISIONS:
        raise ValueError(
            f"subdivisions must be in [0, {MAX_ICOSPHERE_SUBDIVISIONS}], "
            f"got {subdivisions}")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")

    verts = [tuple(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            idx = midpoint.get(key)
            if idx is None:
                a, b = np.array(verts[i]), np.array(verts[j])
                m = a + b
                m /= np.linalg.norm(m)
                idx = len(verts)
                verts.append(tuple(m))
                midpoint[key] = idx
            return idx

        new_faces = []
        for i, j, k in faces:
            ij, jk, ki = mid(i, j), mid(j, k), mid(k, i)
            new_faces += [(i, ij, ki), (j, jk, ij), (k, ki, jk), (ij, jk, ki)]
        faces = new_faces

    pos = np.array(verts)
    pos = radius * pos / np.linalg.norm(pos, axis=1, keepdims=True)
    return TriMesh(pos, np.array(faces))


def load_obj(path) -> TriMesh:
    """Read an ASCII OBJ restricted to `v x y z` and triangular `f i j k`."""
    positions = []
    triangles = []
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ObjFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) != 4:
                raise ObjFormatError(f"{path}:{lineno}: vertex needs 3 coords")
            try:
                positions.append([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise ObjFormatError(f"{path}:{lineno}: bad coordinate") from exc
        elif tag == "f":
            if len(parts) != 4:
                raise ObjFormatError(
                    f"{path}:{lineno}: non-triangular face "
                    f"({len(parts) - 1} vertices)")
            idx = []
            for tok in parts[1:]:
                if not tok.lstrip("-").isdigit():
                    raise ObjFormatError(
                        f"{path}:{lineno}: unsupported face token {tok!r}")
                idx.append(int(tok))
            if any(i < 1 or i > len(positions) for i in idx):
                raise ObjFormatError(f"{path}:{lineno}: face index out of range")
            triangles.append([i - 1 for i in idx])
        else:
            raise ObjFormatError(
                f"{path}:{lineno}: unsupported record {tag!r} "
                "(only v and f are accepted)")
    try:
        return TriMesh(np.array(positions, dtype=np.float64).reshape(-1, 3),
                       np.array(triangles, dtype=np.int64).reshape(-1, 3))
    except MeshError as exc:
        raise ObjFormatError(f"{path}: {exc}") from exc


def save_obj(mesh: TriMesh, path) -> None:
    """Write OBJ with 17-significant-digit coordinates (lossless round trip)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for x, y, z in mesh.positions:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"f {i + 1} {j + 1} {k + 1}\n")
