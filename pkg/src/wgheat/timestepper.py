"""Backward Euler WG time stepping and the stationary WG solve."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .assembly import (
    DirichletReduction,
    DofMap,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    dirichlet_values,
    robin_load,
)
from .linsolve import DEFAULT_TOL, SolveReport, solve_spd
from .mesh import Mesh, classify_boundary
from .problems import ProblemDefinition
from .weak_gradient import WeakGradient
from .wg_space import WgFunction, project_qh


def prepare_mesh(problem: ProblemDefinition, mesh: Mesh) -> Mesh:
    return classify_boundary(mesh, problem.boundary_rule)


def initial_state(problem: ProblemDefinition, mesh: Mesh) -> WgFunction:
    return project_qh(lambda x, y, t: problem.initial(x, y), prepare_mesh(problem, mesh), 0.0)


def step_count(t_final: float, k: float) -> int:
    if not k > 0:
        raise ValueError(f"time step must be positive, got {k}")
    steps = round(t_final / k)
    if steps < 1 or abs(steps * k - t_final) > 4 * math.ulp(t_final) * max(steps, 1):
        raise ValueError(f"final time {t_final} is not an integer multiple of k={k}")
    return steps


class BackwardEuler:
    """Solves (M + k A(t_n)) U^n = M U^{n-1} + k F(t_n) with Dirichlet data Q_b g(t_n).

    The system matrix is built once unless the coefficient depends on time.
    """

    def __init__(self, problem: ProblemDefinition, mesh: Mesh, k: float, tol: float = DEFAULT_TOL):
        if not k > 0:
            raise ValueError(f"time step must be positive, got {k}")
        self.problem = problem
        self.mesh = prepare_mesh(problem, mesh)
        self.k = k
        self.tol = tol
        self.dofmap = DofMap(self.mesh)
        self.gradient = WeakGradient(self.mesh)
        self.mass = assemble_mass(self.mesh)
        self._reduction: DirichletReduction | None = None
        self.reports: list[SolveReport] = []

    def reduction(self, t: float) -> DirichletReduction:
        if self._reduction is None or self.problem.coeff_time_dependent:
            A = assemble_stiffness(self.mesh, self.problem.coeff, t, self.problem.has_robin, self.gradient)
            self._reduction = DirichletReduction(self.mass + self.k * A, self.dofmap)
        return self._reduction

    def step(self, previous: WgFunction, t_n: float, guess: np.ndarray | None = None) -> WgFunction:
        """Advance one step; ``guess`` is an optional full-length initial CG iterate."""
        p, k = self.problem, self.k
        red = self.reduction(t_n)
        rhs = self.mass @ previous.vector + k * assemble_load(self.mesh, p.source, t_n)
        if p.has_robin and p.robin_data is not None:
            rhs += k * robin_load(self.mesh, p.robin_data, t_n)
        fixed = dirichlet_values(self.mesh, p.dirichlet, t_n)
        start = previous.vector if guess is None else guess
        x, report = solve_spd(red.matrix, red.reduce_rhs(rhs, fixed), self.tol, x0=start[red.free])
        self.reports.append(report)
        return WgFunction.from_vector(self.mesh, red.expand(x, fixed))


def backward_euler_step(
    problem: ProblemDefinition, mesh: Mesh, previous: WgFunction, t_n: float, k: float, tol: float = DEFAULT_TOL
) -> WgFunction:
    return BackwardEuler(problem, mesh, k, tol).step(previous, t_n)


def iterate_parabolic(
    problem: ProblemDefinition, mesh: Mesh, k: float, tol: float = DEFAULT_TOL, t_final: float | None = None
) -> Iterator[tuple[float, WgFunction, WgFunction]]:
    """Yield ``(t_n, U^{n-1}, U^n)`` for n = 1..N, holding only two states."""
    t_final = problem.t_final if t_final is None else t_final
    steps = step_count(t_final, k)
    stepper = BackwardEuler(problem, mesh, k, tol)
    current = initial_state(problem, stepper.mesh)
    older = current
    for n in range(1, steps + 1):
        t_n = n * k
        # linear extrapolation in time as the starting iterate
        new = stepper.step(current, t_n, guess=2.0 * current.vector - older.vector)
        yield t_n, current, new
        older, current = current, new


def solve_parabolic(
    problem: ProblemDefinition, mesh: Mesh, k: float, tol: float = DEFAULT_TOL, t_final: float | None = None
) -> list[WgFunction]:
    """Full trajectory U^0, ..., U^N at t_n = n k."""
    states = [initial_state(problem, mesh)]
    for _, _, new in iterate_parabolic(problem, mesh, k, tol, t_final):
        states.append(new)
    return states


def final_state(
    problem: ProblemDefinition, mesh: Mesh, k: float, tol: float = DEFAULT_TOL, t_final: float | None = None
) -> WgFunction:
    last = initial_state(problem, mesh)
    for _, _, last in iterate_parabolic(problem, mesh, k, tol, t_final):
        pass
    return last


def solve_elliptic(problem: ProblemDefinition, mesh: Mesh, t: float = 0.0, tol: float = DEFAULT_TOL) -> WgFunction:
    """WG solution of -div(a grad u) = f(., t) with the problem's boundary data at time t."""
    mesh = prepare_mesh(problem, mesh)
    dofmap = DofMap(mesh)
    A = assemble_stiffness(mesh, problem.coeff, t, problem.has_robin)
    rhs = assemble_load(mesh, problem.source, t)
    if problem.has_robin and problem.robin_data is not None:
        rhs += robin_load(mesh, problem.robin_data, t)
    red = DirichletReduction(A, dofmap)
    fixed = dirichlet_values(mesh, problem.dirichlet, t)
    x, _ = solve_spd(red.matrix, red.reduce_rhs(rhs, fixed), tol)
    return WgFunction.from_vector(mesh, red.expand(x, fixed))
