"""Piecewise-constant weak functions {v0, vb} and their L2 projections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import BoundaryTag, Mesh
from .quadrature import EDGE_RULE, TRIANGLE_RULE, triangle_points

ScalarField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class NumericInputError(ValueError):
    """A user-supplied field produced a non-finite value."""


@dataclass(eq=False)
class WgFunction:
    """One value per triangle (v0) and one per edge (vb)."""

    mesh: Mesh
    interior: np.ndarray
    edge: np.ndarray

    def __post_init__(self):
        self.interior = np.asarray(self.interior, dtype=float)
        self.edge = np.asarray(self.edge, dtype=float)
        if self.interior.shape != (self.mesh.n_triangles,):
            raise ValueError(f"interior has shape {self.interior.shape}, expected ({self.mesh.n_triangles},)")
        if self.edge.shape != (self.mesh.n_edges,):
            raise ValueError(f"edge has shape {self.edge.shape}, expected ({self.mesh.n_edges},)")

    @classmethod
    def zeros(cls, mesh: Mesh) -> WgFunction:
        return cls(mesh, np.zeros(mesh.n_triangles), np.zeros(mesh.n_edges))

    @classmethod
    def from_vector(cls, mesh: Mesh, x: np.ndarray) -> WgFunction:
        x = np.asarray(x, dtype=float)
        return cls(mesh, x[: mesh.n_triangles].copy(), x[mesh.n_triangles :].copy())

    @property
    def vector(self) -> np.ndarray:
        """Global DOF vector: triangles first, then edges."""
        return np.concatenate([self.interior, self.edge])

    def local_dofs(self) -> np.ndarray:
        """(nt, 4) array ordered [v0, vb_1, vb_2, vb_3] by local edge."""
        return np.column_stack([self.interior, self.edge[self.mesh.tri_edges]])

    def vanishes_on_dirichlet(self) -> bool:
        return bool(np.all(self.edge[self.mesh.boundary_tag == BoundaryTag.DIRICHLET] == 0.0))

    def __add__(self, other: WgFunction) -> WgFunction:
        return WgFunction(self.mesh, self.interior + other.interior, self.edge + other.edge)

    def __sub__(self, other: WgFunction) -> WgFunction:
        return WgFunction(self.mesh, self.interior - other.interior, self.edge - other.edge)

    def __mul__(self, c: float) -> WgFunction:
        return WgFunction(self.mesh, c * self.interior, c * self.edge)

    __rmul__ = __mul__


def evaluate(field: ScalarField, pts: np.ndarray, t: float) -> np.ndarray:
    values = np.broadcast_to(np.asarray(field(pts[..., 0], pts[..., 1], t), dtype=float), pts.shape[:-1])
    if not np.all(np.isfinite(values)):
        raise NumericInputError("field returned a non-finite value at a quadrature point")
    return values


def cell_integrals(field: ScalarField, mesh: Mesh, t: float = 0.0) -> np.ndarray:
    """Integral of ``field(., t)`` over every triangle."""
    values = evaluate(field, mesh.cell_quadrature_points, t)
    return 2.0 * mesh.areas * (values @ TRIANGLE_RULE.weights)


def edge_means(field: ScalarField, mesh: Mesh, t: float = 0.0, edges: np.ndarray | None = None) -> np.ndarray:
    """Mean value of ``field(., t)`` on each edge (all edges by default)."""
    pts = mesh.edge_quadrature_points if edges is None else mesh.edge_quadrature_points[edges]
    return evaluate(field, pts, t) @ EDGE_RULE.weights


def integrate_cell(field: ScalarField, mesh: Mesh, t: int, time: float = 0.0) -> float:
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range")
    corners = mesh.vertices[mesh.triangles[t]]
    values = evaluate(field, triangle_points(corners), time)
    return float(2.0 * mesh.areas[t] * (values @ TRIANGLE_RULE.weights))


def project_qh(field: ScalarField, mesh: Mesh, t: float = 0.0) -> WgFunction:
    """Cell means and edge means of ``field`` at time ``t``."""
    return WgFunction(mesh, cell_integrals(field, mesh, t) / mesh.areas, edge_means(field, mesh, t))
