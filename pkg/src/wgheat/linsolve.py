"""Jacobi-preconditioned conjugate gradients for SPD sparse systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float  # final ||b - Ax|| / ||b||
    converged: bool


class SolverError(RuntimeError):
    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class ConvergenceError(SolverError):
    pass


class NotSPDError(SolverError):
    pass


def solve_spd(A, b, tol: float = DEFAULT_TOL, max_iter: int | None = None, x0=None):
    """Solve ``A x = b`` to relative residual ``tol``.

    Returns ``(x, report)``. Raises ConvergenceError when ``max_iter`` is
    exhausted and NotSPDError on non-positive curvature; both carry the report.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite")
    n = b.shape[0]
    if max_iter is None:
        max_iter = 20 * max(n, 1)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    diag = A.diagonal() if hasattr(A, "diagonal") else np.diag(A)
    if np.any(diag <= 0):
        raise NotSPDError("matrix has a non-positive diagonal entry", SolveReport(0, 1.0, False))
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x if x0 is not None else b.copy()
    target = tol * bnorm
    rnorm = np.linalg.norm(r)
    if rnorm <= target:
        return x, SolveReport(0, rnorm / bnorm, True)

    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0.0:
            raise NotSPDError("non-positive curvature encountered", SolveReport(it, rnorm / bnorm, False))
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.linalg.norm(r)
        if rnorm <= target:
            # guard against drift of the recursive residual
            rnorm = np.linalg.norm(b - A @ x)
            if rnorm <= target:
                return x, SolveReport(it, rnorm / bnorm, True)
            r = b - A @ x
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    report = SolveReport(max_iter, rnorm / bnorm, False)
    raise ConvergenceError(f"CG did not converge in {max_iter} iterations (residual {report.residual:.3e})", report)
