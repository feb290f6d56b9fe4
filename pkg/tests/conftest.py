"""Shared fixtures: canonical meshes, open test patches, and field helpers."""

import numpy as np
import pytest

from curvmin import mesh as cm_mesh
from curvmin.mesh import TriMesh, build_icosphere, enclosed_volume


@pytest.fixture(scope="session")
def ico2():
    return build_icosphere(2, 1.0)


@pytest.fixture(scope="session")
def ico3():
    return build_icosphere(3, 1.0)


@pytest.fixture(scope="session")
def ico4():
    return build_icosphere(4, 1.0)


def surface_of_revolution(profile, n_z=48, n_phi=32) -> TriMesh:
    """Closed genus-0 surface of revolution about the z axis.

    ``profile(z)`` must be positive on (-1, 1) and vanish at the poles
    z = -1, 1; rings are placed at z = -cos(pi t) for uniform t.
    Orientation is fixed to outward (positive enclosed volume).
    """
    ts = np.linspace(0.0, 1.0, n_z + 1)
    zs = -np.cos(np.pi * ts)
    verts = [(0.0, 0.0, zs[0])]
    for j in range(1, n_z):
        r = profile(zs[j])
        for k in range(n_phi):
            a = 2.0 * np.pi * k / n_phi
            verts.append((r * np.cos(a), r * np.sin(a), zs[j]))
    verts.append((0.0, 0.0, zs[-1]))

    tris = []

    def ring(j):
        return 1 + (j - 1) * n_phi

    for k in range(n_phi):
        tris.append((0, ring(1) + (k + 1) % n_phi, ring(1) + k))
    for j in range(1, n_z - 1):
        for k in range(n_phi):
            a, b = ring(j) + k, ring(j) + (k + 1) % n_phi
            c, d = ring(j + 1) + k, ring(j + 1) + (k + 1) % n_phi
            tris += [(a, b, d), (a, d, c)]
    top = len(verts) - 1
    for k in range(n_phi):
        tris.append((top, ring(n_z - 1) + k, ring(n_z - 1) + (k + 1) % n_phi))

    mesh = TriMesh(np.array(verts), np.array(tris))
    if enclosed_volume(mesh) < 0:
        mesh = TriMesh(np.array(verts), np.array(tris)[:, ::-1])
    return mesh


@pytest.fixture(scope="session")
def dumbbell():
    """Two bulbs joined by a thin neck; fails the low-energy gate."""
    return surface_of_revolution(
        lambda z: np.sqrt(max(1.0 - z * z, 0.0)) * (0.25 + 0.9 * z * z))


def planar_patch(n=10, scale=1.0):
    """Open flat grid patch in a tilted plane; returns (mesh, interior mask).

    Only unit tests may use open meshes; production operators require
    closed ones via validate().
    """
    xs = np.linspace(0.0, scale, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)], axis=1)
    # generic orientation: fixed rotation about (1, 1, 0)-ish axis
    axis = np.array([1.0, 2.0, 0.5])
    axis /= np.linalg.norm(axis)
    angle = 0.7
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)
    pts = pts @ R.T

    def vid(i, j):
        return i * (n + 1) + j

    tris = []
    for i in range(n):
        for j in range(n):
            tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            tris.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
    interior = np.zeros(len(pts), dtype=bool)
    for i in range(1, n):
        for j in range(1, n):
            interior[vid(i, j)] = True
    return TriMesh(pts, np.array(tris)), interior


def paraboloid_patch(radius=0.6, n_rings=12, n_phi=24):
    """Open graph patch z = (x^2 + y^2)/2 around the origin.

    Oriented so the vertex normal at the center points along -z, outward
    with respect to the osculating sphere, making the discrete mean
    curvature at the center +1 in the package convention.
    """
    verts = [(0.0, 0.0, 0.0)]
    for i in range(1, n_rings + 1):
        r = radius * i / n_rings
        for k in range(n_phi):
            a = 2.0 * np.pi * k / n_phi
            x, y = r * np.cos(a), r * np.sin(a)
            verts.append((x, y, 0.5 * (x * x + y * y)))

    def ring(i):
        return 1 + (i - 1) * n_phi

    tris = []
    for k in range(n_phi):
        tris.append((0, ring(1) + (k + 1) % n_phi, ring(1) + k))
    for i in range(1, n_rings):
        for k in range(n_phi):
            a, b = ring(i) + k, ring(i) + (k + 1) % n_phi
            c, d = ring(i + 1) + k, ring(i + 1) + (k + 1) % n_phi
            tris += [(a, b, d), (a, d, c)]
    return TriMesh(np.array(verts), np.array(tris))


def random_smooth_normal_field(mesh: TriMesh, seed: int) -> np.ndarray:
    """Seeded smooth ambient scalar sampled at the vertices."""
    rng = np.random.default_rng(seed)
    amps = rng.uniform(-1.0, 1.0, size=4)
    freqs = rng.uniform(-2.0, 2.0, size=(4, 3))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=4)
    x = mesh.positions
    field = np.zeros(len(x))
    for a, b, c in zip(amps, freqs, phases):
        field += a * np.sin(x @ b + c)
    return field


def relerr(value, target):
    return abs(value - target) / abs(target)
