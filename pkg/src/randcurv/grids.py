"""Evaluation grids: quasi-uniform sphere point sets, a triangulated sphere
mesh for topological counts, and regular torus lattices.

Each grid knows how to produce its canonical refinement (used for the
grid-convergence diagnostics): the Fibonacci set doubles its point count, the
mesh subdivides once more, the torus lattice doubles each axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SphereGrid", "TorusGrid", "fibonacci_sphere", "icosphere", "torus_grid", "sphere_distance"]

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SphereGrid:
    kind: str                       # "fibonacci" or "icosphere"
    xyz: np.ndarray                 # (n, 3) unit vectors
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray             # quadrature weights, sum 4 pi
    faces: np.ndarray | None = None     # (n_faces, 3), icosphere only
    edges: np.ndarray | None = None     # (n_edges, 2), icosphere only
    depth: int | None = None

    @property
    def n_points(self) -> int:
        return self.xyz.shape[0]

    def refine(self) -> "SphereGrid":
        if self.kind == "fibonacci":
            return fibonacci_sphere(2 * self.n_points)
        return icosphere(self.depth + 1)


@dataclass(frozen=True)
class TorusGrid:
    points: np.ndarray              # (n^2, 2) in [0, 2 pi)^2, row-major
    n_per_axis: int
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def refine(self) -> "TorusGrid":
        return torus_grid(2 * self.n_per_axis)


def _angles(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.clip(xyz[:, 2], -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.mod(np.arctan2(xyz[:, 1], xyz[:, 0]), 2.0 * math.pi)
    return theta, phi


def fibonacci_sphere(n: int) -> SphereGrid:
    """n quasi-uniform points from the golden-angle spiral, equal weights."""
    if n < 2:
        raise ValueError("need at least 2 points")
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    ang = _GOLDEN_ANGLE * i
    xyz = np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)
    theta, phi = _angles(xyz)
    weights = np.full(n, 4.0 * math.pi / n)
    return SphereGrid("fibonacci", xyz, theta, phi, weights)


# icosahedron: 12 vertices, 20 faces (standard listing)
_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
        [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
        [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
    ],
    dtype=float,
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def icosphere(depth: int) -> SphereGrid:
    """Icosahedron subdivided depth times, vertices projected to the sphere.

    Vertex/edge/face counts are 10*4^d + 2, 30*4^d, 20*4^d.  Midpoints are
    shared through a cache so the mesh is watertight (Euler number 2).
    Weights are the spherical areas of the dual regions, approximated by a
    third of each incident triangle's spherical area.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(depth):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            idx = cache.get(key)
            if idx is None:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                idx = len(verts) - 1
                cache[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    xyz = np.array(verts)
    farr = np.array(faces, dtype=np.int64)
    e = np.sort(
        np.concatenate([farr[:, [0, 1]], farr[:, [1, 2]], farr[:, [2, 0]]], axis=0), axis=1
    )
    edges = np.unique(e, axis=0)

    # spherical triangle areas by l'Huilier, shared to the three corners
    A, B, C = xyz[farr[:, 0]], xyz[farr[:, 1]], xyz[farr[:, 2]]
    a = sphere_distance(B, C)
    b = sphere_distance(C, A)
    c = sphere_distance(A, B)
    s = 0.5 * (a + b + c)
    tanq = np.sqrt(
        np.maximum(
            0.0,
            np.tan(s / 2) * np.tan((s - a) / 2) * np.tan((s - b) / 2) * np.tan((s - c) / 2),
        )
    )
    area = 4.0 * np.arctan(tanq)
    weights = np.zeros(xyz.shape[0])
    for col in range(3):
        np.add.at(weights, farr[:, col], area / 3.0)

    theta, phi = _angles(xyz)
    return SphereGrid("icosphere", xyz, theta, phi, weights, faces=farr, edges=edges, depth=depth)


def torus_grid(n_per_axis: int) -> TorusGrid:
    """Regular n x n lattice on [0, 2 pi)^2, row-major point order."""
    if n_per_axis < 2:
        raise ValueError("need at least 2 points per axis")
    step = 2.0 * math.pi / n_per_axis
    ax = np.arange(n_per_axis) * step
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    weights = np.full(pts.shape[0], step * step)
    return TorusGrid(pts, n_per_axis, weights)


def sphere_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Great-circle distance between unit vectors, accurate at 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)
