"""Error norms, rate fitting, and conservation diagnostics."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields, replace

import numpy as np

from .assembly import DirichletReduction, DofMap, assemble_mass, assemble_stiffness
from .linsolve import solve_spd
from .mesh import BoundaryRule, Mesh, classify_boundary
from .problems import ProblemDefinition
from .quadrature import TRIANGLE_RULE
from .weak_gradient import (
    CoefficientField,
    Rt0Field,
    VectorField,
    WeakGradient,
    interpolate_rt0,
    project_flux,
    project_rt0,
)
from .wg_space import ScalarField, WgFunction, cell_integrals, project_qh

NORM_NAMES = ("inf_T", "inf_dT", "grad_d", "l2_T", "l2_dT")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorNorms:
    inf_T: float
    inf_dT: float
    grad_d: float
    l2_T: float
    l2_dT: float

    def as_tuple(self) -> tuple[float, ...]:
        return astuple(self)

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def wg_norms(e: WgFunction, gradient: WeakGradient | None = None) -> ErrorNorms:
    """The five discrete norms of a weak function.

    The edge L2 norm weights each edge by h_e |e| with h_e = |e|, so it scales
    like an area integral.
    """
    mesh = e.mesh
    if gradient is None:
        gradient = WeakGradient(mesh)
    g = gradient(e).coeffs
    lengths = mesh.edge_lengths
    return ErrorNorms(
        inf_T=float(np.max(np.abs(e.interior))),
        inf_dT=float(np.max(np.abs(e.edge))),
        grad_d=rt0_norm(g, gradient.mass),
        l2_T=float(np.sqrt(np.sum(mesh.areas * e.interior**2))),
        l2_dT=float(np.sqrt(np.sum(lengths * lengths * e.edge**2))),
    )


def rt0_norm(coeffs: np.ndarray, mass: np.ndarray) -> float:
    return float(np.sqrt(max(np.einsum("ti,tij,tj->", coeffs, mass, coeffs), 0.0)))


def exact_flux(problem: ProblemDefinition) -> VectorField:
    """a grad u for the problem's exact solution."""

    def field(x, y, t):
        return np.einsum("...ij,...j->...i", problem.coeff(x, y, t), problem.exact_grad(x, y, t))

    return field


def flux_error(U: WgFunction, problem: ProblemDefinition, t: float, gradient: WeakGradient | None = None) -> float:
    """L2 distance between the RT0 interpolant of a grad u and the numerical flux of U."""
    if problem.exact_grad is None:
        raise ConfigurationError(f"problem {problem.name!r} has no exact gradient")
    if gradient is None:
        gradient = WeakGradient(U.mesh)
    diff = interpolate_rt0(exact_flux(problem), U.mesh, t).coeffs - numerical_flux(U, problem.coeff, t, gradient).coeffs
    return rt0_norm(diff, gradient.mass)


def weak_gradient_error(U: WgFunction, problem: ProblemDefinition, t: float) -> float:
    """||grad_d(Q_h u(., t) - U)||."""
    if problem.exact is None:
        raise ConfigurationError(f"problem {problem.name!r} has no exact solution")
    return wg_norms(project_qh(problem.exact, U.mesh, t) - U).grad_d


def error_norms(U: WgFunction, problem: ProblemDefinition, t: float) -> ErrorNorms:
    """Table norms of e_h = Q_h u(., t) - U.

    The gradient column is the flux error ``flux_error`` rather than
    ||grad_d e_h||: grad_d Q_h u is the RT0 L2 projection of grad u, which is only
    first-order close to the flux that the scheme approximates to second order.
    ``wg_norms(project_qh(u) - U).grad_d`` gives the literal quantity.
    """
    if problem.exact is None:
        raise ConfigurationError(f"problem {problem.name!r} has no exact solution")
    gradient = WeakGradient(U.mesh)
    norms = wg_norms(project_qh(problem.exact, U.mesh, t) - U, gradient)
    return replace(norms, grad_d=flux_error(U, problem, t, gradient))


def grad_norm_quadrature(field: Rt0Field) -> float:
    """L2 norm of an RT0 field by direct quadrature of |q|^2."""
    mesh = field.mesh
    values = field(mesh.cell_quadrature_points)
    w = 2.0 * mesh.areas[:, None] * TRIANGLE_RULE.weights
    return float(np.sqrt(np.sum(w * np.sum(values**2, axis=-1))))


def fit_rate(levels) -> float:
    """Least-squares slope of log(error) against log(h) over all levels."""
    h, err = np.asarray(levels, dtype=float).T
    if len(h) < 2:
        raise ValueError("need at least two levels to fit a rate")
    if np.any(err <= 0) or np.any(h <= 0):
        raise ValueError("errors and mesh sizes must be positive")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def numerical_flux(U: WgFunction, coeff: CoefficientField, t: float, gradient: WeakGradient | None = None) -> Rt0Field:
    """RT0 projection of a grad_d U; coefficient j is its outward flux through local edge j."""
    if gradient is None:
        gradient = WeakGradient(U.mesh)
    return project_flux(gradient(U), coeff, t, gradient.mass)


def energy_balance(
    problem: ProblemDefinition, previous: WgFunction, current: WgFunction, t_n: float, k: float
) -> np.ndarray:
    """Per-triangle residual of the discrete balance |K| dU/dt - outflow = int_K f."""
    mesh = current.mesh
    flux = numerical_flux(current, problem.coeff, t_n).coeffs
    change = mesh.areas * (current.interior - previous.interior) / k
    return change - flux.sum(axis=1) - cell_integrals(problem.source, mesh, t_n)


def edge_flux_jumps(U: WgFunction, coeff: CoefficientField, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Sum of the two outward fluxes on every interior edge, and all edge fluxes."""
    mesh = U.mesh
    flux = numerical_flux(U, coeff, t).coeffs
    total = np.bincount(mesh.tri_edges.ravel(), weights=flux.ravel(), minlength=mesh.n_edges)
    return np.abs(total[mesh.interior_edges]), flux


def flux_continuity(problem: ProblemDefinition, U: WgFunction, t: float) -> float:
    """Largest normal-flux jump across an interior edge."""
    jumps, _ = edge_flux_jumps(U, problem.coeff, t)
    return float(jumps.max(initial=0.0))


def commutativity_residual(w: ScalarField, grad_w: VectorField, mesh: Mesh, t: float = 0.0) -> float:
    """max |grad_d(Q_h w) - RT0 projection of grad w| over all RT0 coefficients."""
    gradient = WeakGradient(mesh)
    lhs = gradient(project_qh(w, mesh, t)).coeffs
    rhs = project_rt0(grad_w, mesh, t, gradient.mass).coeffs
    return float(np.max(np.abs(lhs - rhs)))


def poincare_quotient(phi: WgFunction, gradient: WeakGradient | None = None) -> float:
    n = wg_norms(phi, gradient)
    return n.l2_T / n.grad_d


def poincare_ratio(mesh: Mesh, trials: int = 100, seed: int = 0, sweeps: int = 4) -> float:
    """Largest observed ||phi|| / ||grad_d phi|| over random phi vanishing on the boundary.

    Each trial draws standard-normal DOFs and then applies ``sweeps`` steps of
    inverse iteration phi <- A^{-1} M phi, which keeps phi in the zero-boundary
    space and drives the quotient up toward the best constant. ``sweeps=0``
    evaluates the raw draws.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    mesh = classify_boundary(mesh, BoundaryRule.ALL_DIRICHLET)
    gradient = WeakGradient(mesh)
    red = DirichletReduction(assemble_stiffness(mesh, gradient=gradient), DofMap(mesh))
    mass = assemble_mass(mesh)[red.free][:, red.free]
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        x = rng.standard_normal(len(red.free))
        while not np.any(x):
            x = rng.standard_normal(len(red.free))
        for _ in range(sweeps):
            x, _ = solve_spd(red.matrix, mass @ x, 1e-8, x0=x * (x @ (mass @ x)) / (x @ (red.matrix @ x)))
            x /= np.linalg.norm(x)
        phi = WgFunction.from_vector(mesh, red.expand(x, np.zeros(len(red.fixed))))
        best = max(best, poincare_quotient(phi, gradient))
    return best
