"""Lowest-order Raviart-Thomas algebra and the discrete weak gradient.

On a triangle with vertices p_1, p_2, p_3 the basis is

    phi_i(x) = (x - p_i) / (2 |T|),

so that phi_i has unit outward flux through local edge i (opposite p_i) and
zero normal component on the other two edges. With this normalization the
right-hand side of the weak-gradient equation for v = {v0, vb} is simply
``vb_i - v0`` and the RT0 coefficient of a field equals its edge flux.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Mesh
from .quadrature import EDGE_RULE, TRIANGLE_RULE, triangle_points
from .wg_space import NumericInputError, WgFunction

CoefficientField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

_FLUX_RHS = np.column_stack([-np.ones(3), np.eye(3)])  # b = vb - v0


class CoefficientError(ValueError):
    """Diffusion coefficient is not symmetric positive definite."""


def identity_coefficient(x, y, t):
    return np.broadcast_to(np.eye(2), np.shape(x) + (2, 2))


def _signed_area(corners: np.ndarray) -> np.ndarray:
    d1 = corners[..., 1, :] - corners[..., 0, :]
    d2 = corners[..., 2, :] - corners[..., 0, :]
    return 0.5 * (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])


def rt0_basis(corners: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Basis values, shape (..., q, 3, 2), for ``pts`` of shape (..., q, 2)."""
    area = _signed_area(corners)
    diff = pts[..., :, None, :] - corners[..., None, :, :]
    return diff / (2.0 * area[..., None, None, None])


def rt0_divergence(corners: np.ndarray) -> np.ndarray:
    """Constant divergence 1/|T| of each basis function."""
    return np.repeat((1.0 / _signed_area(corners))[..., None], 3, axis=-1)


def sample_coefficient(coeff: CoefficientField, pts: np.ndarray, t: float) -> np.ndarray:
    a = np.broadcast_to(np.asarray(coeff(pts[..., 0], pts[..., 1], t), dtype=float), pts.shape[:-1] + (2, 2))
    if not np.all(np.isfinite(a)):
        raise NumericInputError("coefficient returned a non-finite value")
    if np.max(np.abs(a[..., 0, 1] - a[..., 1, 0]), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise CoefficientError("coefficient is not symmetric")
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    if np.any(a[..., 0, 0] <= 0) or np.any(det <= 0):
        raise CoefficientError("coefficient is not positive definite at some quadrature point")
    return a


def rt0_mass(corners: np.ndarray, coeff: CoefficientField | None = None, t: float = 0.0) -> np.ndarray:
    """Matrices M_ij = int_T (a phi_j) . phi_i, shape (..., 3, 3)."""
    corners = np.asarray(corners, dtype=float)
    pts = triangle_points(corners)
    phi = rt0_basis(corners, pts)
    w = 2.0 * _signed_area(corners)[..., None] * TRIANGLE_RULE.weights
    if coeff is None:
        return np.einsum("...q,...qid,...qjd->...ij", w, phi, phi)
    a = sample_coefficient(coeff, pts, t)
    return np.einsum("...q,...qid,...qde,...qje->...ij", w, phi, a, phi)


def rt0_mass_matrix(mesh: Mesh, t: int, coeff: CoefficientField | None = None, time: float = 0.0) -> np.ndarray:
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range")
    return rt0_mass(mesh.vertices[mesh.triangles[t]], coeff, time)


def gradient_maps(corners: np.ndarray, mass: np.ndarray | None = None) -> np.ndarray:
    """Linear maps [v0, vb_1, vb_2, vb_3] -> RT0 coefficients, shape (..., 3, 4)."""
    if mass is None:
        mass = rt0_mass(corners)
    rhs = np.broadcast_to(_FLUX_RHS, mass.shape[:-2] + (3, 4))
    return np.linalg.solve(mass, rhs)


def local_gradient_map(mesh: Mesh, t: int) -> np.ndarray:
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range")
    return gradient_maps(mesh.vertices[mesh.triangles[t]])


def weak_gradient_local(mesh: Mesh, t: int, v0: float, vb) -> np.ndarray:
    """RT0 coefficients of the weak gradient of {v0, vb} on triangle ``t``."""
    m = rt0_mass_matrix(mesh, t)
    return np.linalg.solve(m, np.asarray(vb, dtype=float) - v0)


@dataclass(eq=False)
class Rt0Field:
    """Per-triangle RT0 coefficients (edge fluxes by local edge)."""

    mesh: Mesh
    coeffs: np.ndarray  # (nt, 3)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.n_triangles, 3):
            raise ValueError(f"coeffs has shape {self.coeffs.shape}, expected ({self.mesh.n_triangles}, 3)")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Values at per-triangle points of shape (nt, q, 2)."""
        corners = self.mesh.vertices[self.mesh.triangles]
        return np.einsum("tqid,ti->tqd", rt0_basis(corners, pts), self.coeffs)

    def global_edge_flux(self) -> np.ndarray:
        """Flux through each local edge measured along the edge's global normal."""
        return self.coeffs * self.mesh.tri_signs


class WeakGradient:
    """Cached per-mesh RT0 mass matrices and gradient maps."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.corners = mesh.vertices[mesh.triangles]
        self.mass = rt0_mass(self.corners)
        self.maps = gradient_maps(self.corners, self.mass)

    def __call__(self, v: WgFunction) -> Rt0Field:
        return Rt0Field(self.mesh, np.einsum("tij,tj->ti", self.maps, v.local_dofs()))


def weak_gradient(v: WgFunction) -> Rt0Field:
    return WeakGradient(v.mesh)(v)


def project_rt0(field: VectorField, mesh: Mesh, t: float = 0.0, mass: np.ndarray | None = None) -> Rt0Field:
    """L2 projection of a vector field onto RT0, triangle by triangle."""
    corners = mesh.vertices[mesh.triangles]
    pts = triangle_points(corners)
    values = np.broadcast_to(np.asarray(field(pts[..., 0], pts[..., 1], t), dtype=float), pts.shape)
    if not np.all(np.isfinite(values)):
        raise NumericInputError("field returned a non-finite value at a quadrature point")
    w = 2.0 * mesh.areas[:, None] * TRIANGLE_RULE.weights
    rhs = np.einsum("tq,tqid,tqd->ti", w, rt0_basis(corners, pts), values)
    if mass is None:
        mass = rt0_mass(corners)
    return Rt0Field(mesh, np.linalg.solve(mass, rhs[..., None])[..., 0])


def interpolate_rt0(field: VectorField, mesh: Mesh, t: float = 0.0) -> Rt0Field:
    """Canonical RT0 interpolant: coefficient j is the exact outward flux through local edge j."""
    pts = mesh.edge_quadrature_points
    values = np.broadcast_to(np.asarray(field(pts[..., 0], pts[..., 1], t), dtype=float), pts.shape)
    if not np.all(np.isfinite(values)):
        raise NumericInputError("field returned a non-finite value at a quadrature point")
    normal_flux = np.einsum("eqd,ed->eq", values, mesh.edge_normals) @ EDGE_RULE.weights * mesh.edge_lengths
    return Rt0Field(mesh, normal_flux[mesh.tri_edges] * mesh.tri_signs)


def project_flux(grad: Rt0Field, coeff: CoefficientField, t: float = 0.0, mass: np.ndarray | None = None) -> Rt0Field:
    """RT0 projection of ``coeff * grad`` (the numerical flux up to sign)."""
    corners = grad.mesh.vertices[grad.mesh.triangles]
    if mass is None:
        mass = rt0_mass(corners)
    mass_a = rt0_mass(corners, coeff, t)
    rhs = np.einsum("tij,tj->ti", mass_a, grad.coeffs)
    return Rt0Field(grad.mesh, np.linalg.solve(mass, rhs[..., None])[..., 0])
