"""Uniform triangulations of the unit square with edge connectivity."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .quadrature import edge_points, triangle_points


class BoundaryTag(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    ROBIN = 2


class BoundaryRule(str, enum.Enum):
    ALL_DIRICHLET = "all-dirichlet"
    ROBIN_ON_RIGHT = "robin-on-right"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of (0,1)^2 built from an n x n grid.

    Local edge ``i`` of a triangle is the edge opposite its local vertex ``i``.
    ``tri_signs[t, i]`` is +1 when the outward normal of triangle ``t`` on that
    edge agrees with the edge's global normal (tangent low->high vertex rotated
    clockwise), -1 otherwise.
    """

    n: int
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    edges: np.ndarray  # (ne, 2), low < high
    tri_edges: np.ndarray  # (nt, 3)
    tri_signs: np.ndarray  # (nt, 3)
    edge_tris: np.ndarray  # (ne, 2), second entry -1 on the boundary
    boundary_tag: np.ndarray  # (ne,)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_dofs(self) -> int:
        return self.n_triangles + self.n_edges

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Global unit normal of every edge."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.column_stack([d[:, 1], -d[:, 0]]) / self.edge_lengths[:, None]

    @cached_property
    def cell_quadrature_points(self) -> np.ndarray:
        """(nt, 7, 2) physical points of the triangle rule."""
        return triangle_points(self.vertices[self.triangles])

    @cached_property
    def edge_quadrature_points(self) -> np.ndarray:
        """(ne, 3, 2) physical points of the edge rule."""
        return edge_points(self.vertices[self.edges])

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tris[:, 1] < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tris[:, 1] >= 0)

    def edges_tagged(self, tag: BoundaryTag) -> np.ndarray:
        return np.flatnonzero(self.boundary_tag == tag)


def build_uniform_mesh(n: int) -> Mesh:
    """Split each grid cell along its lower-left to upper-right diagonal."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)  # row j holds y = xs[j]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    # local edge i joins local vertices i+1 and i+2
    a = triangles[:, [1, 2, 0]]
    b = triangles[:, [2, 0, 1]]
    lo = np.minimum(a, b).ravel()
    hi = np.maximum(a, b).ravel()
    keys = lo * len(vertices) + hi
    uniq, inverse = np.unique(keys, return_inverse=True)
    edges = np.column_stack([uniq // len(vertices), uniq % len(vertices)])
    tri_edges = inverse.reshape(-1, 3)
    tri_signs = np.where(a < b, 1, -1)

    flat = tri_edges.ravel()
    order = np.argsort(flat, kind="stable")
    owner = order // 3
    counts = np.bincount(flat, minlength=len(edges))
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
    edge_tris[:, 0] = owner[start]
    two = counts == 2
    edge_tris[two, 1] = owner[start[two] + 1]

    tag = np.where(edge_tris[:, 1] < 0, BoundaryTag.DIRICHLET, BoundaryTag.INTERIOR)
    return Mesh(
        n=n,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        tri_edges=tri_edges,
        tri_signs=tri_signs,
        edge_tris=edge_tris,
        boundary_tag=tag.astype(np.int64),
    )


def classify_boundary(mesh: Mesh, rule: BoundaryRule | str) -> Mesh:
    """Return a copy of ``mesh`` with boundary edges tagged per ``rule``."""
    rule = BoundaryRule(rule)
    tag = np.where(mesh.edge_tris[:, 1] < 0, BoundaryTag.DIRICHLET, BoundaryTag.INTERIOR)
    if rule is BoundaryRule.ROBIN_ON_RIGHT:
        x = mesh.vertices[mesh.edges][:, :, 0]
        on_right = np.all(np.isclose(x, 1.0, rtol=0.0, atol=1e-14), axis=1)
        tag = np.where(on_right, BoundaryTag.ROBIN, tag)
    return replace(mesh, boundary_tag=tag.astype(np.int64))


@dataclass(frozen=True)
class ElementGeometry:
    area: float
    centroid: np.ndarray
    edge_lengths: np.ndarray  # by local edge
    normals: np.ndarray  # (3, 2) outward unit normals by local edge


def triangle_geometry(points: np.ndarray) -> ElementGeometry:
    """Geometry of a single counterclockwise triangle given as a (3, 2) array."""
    p = np.asarray(points, dtype=float)
    d1, d2 = p[1] - p[0], p[2] - p[0]
    area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
    if not area > 0:
        raise ValueError("triangle must be non-degenerate and counterclockwise")
    tang = p[[2, 0, 1]] - p[[1, 2, 0]]
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    return ElementGeometry(area, p.mean(axis=0), lengths, normals)


def element_geometry(mesh: Mesh, t: int) -> ElementGeometry:
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range [0, {mesh.n_triangles})")
    return triangle_geometry(mesh.vertices[mesh.triangles[t]])
