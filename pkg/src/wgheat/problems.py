"""Problem definitions and the registry of manufactured-solution problems.

Sources are derived by hand from the exact solutions (f = u_t - div(a grad u))
and written out in closed form; tests cross-check them symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import BoundaryRule
from .weak_gradient import CoefficientField, identity_coefficient
from .wg_space import ScalarField

pi = np.pi


@dataclass(frozen=True)
class ProblemDefinition:
    """u_t - div(a grad u) = f on the unit square with boundary data and initial value."""

    name: str
    coeff: CoefficientField
    source: ScalarField
    dirichlet: ScalarField
    initial: Callable[[np.ndarray, np.ndarray], np.ndarray]
    boundary_rule: BoundaryRule = BoundaryRule.ALL_DIRICHLET
    robin_data: ScalarField | None = None
    exact: ScalarField | None = None
    exact_t: ScalarField | None = None
    exact_grad: Callable | None = None  # (x, y, t) -> (..., 2)
    t_final: float = 1.0
    coeff_time_dependent: bool = False

    @property
    def has_robin(self) -> bool:
        return self.boundary_rule is BoundaryRule.ROBIN_ON_RIGHT

    def check_consistency(self, samples: int = 20, seed: int = 0, atol: float = 1e-12) -> None:
        """Spot-check that initial and boundary data match the exact solution."""
        if self.exact is None:
            return
        rng = np.random.default_rng(seed)
        x, y = rng.random(samples), rng.random(samples)
        if np.max(np.abs(self.initial(x, y) - self.exact(x, y, 0.0))) > atol:
            raise ValueError(f"{self.name}: initial data differs from u(., 0)")
        s, t = rng.random(samples), rng.random(samples) * self.t_final
        for bx, by in ((s, 0 * s), (s, 0 * s + 1), (0 * s, s), (0 * s + 1, s)):
            if self.has_robin and np.all(bx == 1):
                continue
            if np.max(np.abs(self.dirichlet(bx, by, t) - self.exact(bx, by, t))) > atol:
                raise ValueError(f"{self.name}: boundary data differs from the trace of u")


def _time_factor(t):
    return np.sin(2 * pi * (t * t + 1) + pi / 2)


def _time_factor_dt(t):
    return 4 * pi * t * np.cos(2 * pi * (t * t + 1) + pi / 2)


def _wave(s):
    return np.sin(2 * pi * s + pi / 2)


def _wave_d(s):
    return 2 * pi * np.cos(2 * pi * s + pi / 2)


def _example1_u(x, y, t):
    return _time_factor(t) * _wave(x) * _wave(y)


def _example1_ut(x, y, t):
    return _time_factor_dt(t) * _wave(x) * _wave(y)


def _example1_grad(x, y, t):
    s = _time_factor(t)
    return np.stack([s * _wave_d(x) * _wave(y), s * _wave(x) * _wave_d(y)], axis=-1)


def _example1_f(x, y, t):
    return (_time_factor_dt(t) + 8 * pi**2 * _time_factor(t)) * _wave(x) * _wave(y)


def tensor_coefficient(x, y, t):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    diag = x * x + y * y + 1.0
    off = x * y
    return np.stack([np.stack([diag, off], -1), np.stack([off, diag], -1)], -2)


def _example2_f(x, y, t):
    s, s_t = _time_factor(t), _time_factor_dt(t)
    wx, wy, dx, dy = _wave(x), _wave(y), _wave_d(x), _wave_d(y)
    u = s * wx * wy
    # div(a grad u) = 3x u_x + 3y u_y + (x^2+y^2+1) lap u + 2xy u_xy, with lap u = -8 pi^2 u
    div = s * (3 * x * dx * wy + 3 * y * wx * dy + 2 * x * y * dx * dy) - 8 * pi**2 * (x * x + y * y + 1) * u
    return s_t * wx * wy - div


def _robin_u(x, y, t):
    return _time_factor(t) * np.sin(pi * y) * np.exp(-x)


def _robin_ut(x, y, t):
    return _time_factor_dt(t) * np.sin(pi * y) * np.exp(-x)


def _robin_grad(x, y, t):
    s = _time_factor(t)
    return np.stack([-s * np.sin(pi * y) * np.exp(-x), s * pi * np.cos(pi * y) * np.exp(-x)], axis=-1)


def _robin_f(x, y, t):
    return _robin_ut(x, y, t) - (1 - pi**2) * _robin_u(x, y, t)


def _robin_g(x, y, t):
    # a = I and the outward normal on x = 1 is (1, 0)
    return _robin_grad(x, y, t)[..., 0] + _robin_u(x, y, t)


def _constant(value):
    def field(x, y, t=0.0):
        return np.full(np.broadcast(x, y).shape, float(value))

    return field


def _zero_vector(x, y, t):
    return np.zeros(np.broadcast(x, y).shape + (2,))


def example1_dirichlet() -> ProblemDefinition:
    return ProblemDefinition(
        name="example1-dirichlet",
        coeff=identity_coefficient,
        source=_example1_f,
        dirichlet=_example1_u,
        initial=lambda x, y: _example1_u(x, y, 0.0),
        exact=_example1_u,
        exact_t=_example1_ut,
        exact_grad=_example1_grad,
    )


def example1_robin() -> ProblemDefinition:
    return ProblemDefinition(
        name="example1-robin",
        coeff=identity_coefficient,
        source=_robin_f,
        dirichlet=_robin_u,
        initial=lambda x, y: _robin_u(x, y, 0.0),
        boundary_rule=BoundaryRule.ROBIN_ON_RIGHT,
        robin_data=_robin_g,
        exact=_robin_u,
        exact_t=_robin_ut,
        exact_grad=_robin_grad,
    )


def example2_tensor() -> ProblemDefinition:
    return ProblemDefinition(
        name="example2-tensor",
        coeff=tensor_coefficient,
        source=_example2_f,
        dirichlet=_example1_u,
        initial=lambda x, y: _example1_u(x, y, 0.0),
        exact=_example1_u,
        exact_t=_example1_ut,
        exact_grad=_example1_grad,
    )


def constant_sanity(value: float = 1.0) -> ProblemDefinition:
    one = _constant(value)
    return ProblemDefinition(
        name="constant-sanity",
        coeff=tensor_coefficient,
        source=_constant(0.0),
        dirichlet=one,
        initial=lambda x, y: one(x, y),
        exact=one,
        exact_t=_constant(0.0),
        exact_grad=_zero_vector,
    )


def sine_elliptic() -> ProblemDefinition:
    """Steady data for the elliptic projection of sin(pi x) sin(pi y) with a = I."""

    def v(x, y, t=0.0):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y, t=0.0):
        return pi * np.stack([np.cos(pi * x) * np.sin(pi * y), np.sin(pi * x) * np.cos(pi * y)], axis=-1)

    return ProblemDefinition(
        name="sine-elliptic",
        coeff=identity_coefficient,
        source=lambda x, y, t: 2 * pi**2 * v(x, y),
        dirichlet=v,
        initial=lambda x, y: v(x, y),
        exact=v,
        exact_t=_constant(0.0),
        exact_grad=grad,
    )


REGISTRY: dict[str, Callable[[], ProblemDefinition]] = {
    "example1-dirichlet": example1_dirichlet,
    "example1-robin": example1_robin,
    "example2-tensor": example2_tensor,
    "constant-sanity": constant_sanity,
}


class UnknownProblemError(KeyError):
    pass


def registry_lookup(name: str) -> ProblemDefinition:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise UnknownProblemError(f"unknown problem {name!r}; valid ids: {', '.join(REGISTRY)}") from None
