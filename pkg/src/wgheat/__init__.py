"""Weak Galerkin finite elements for the heat equation on the unit square."""

from .analysis import ErrorNorms, error_norms, fit_rate
from .mesh import BoundaryRule, BoundaryTag, Mesh, build_uniform_mesh, classify_boundary
from .problems import ProblemDefinition, registry_lookup
from .timestepper import backward_euler_step, final_state, initial_state, solve_elliptic, solve_parabolic
from .weak_gradient import Rt0Field, WeakGradient, weak_gradient
from .wg_space import WgFunction, project_qh

__version__ = "0.1.0"

__all__ = [
    "BoundaryRule",
    "BoundaryTag",
    "ErrorNorms",
    "Mesh",
    "ProblemDefinition",
    "Rt0Field",
    "WeakGradient",
    "WgFunction",
    "backward_euler_step",
    "build_uniform_mesh",
    "classify_boundary",
    "error_norms",
    "final_state",
    "fit_rate",
    "initial_state",
    "project_qh",
    "registry_lookup",
    "solve_elliptic",
    "solve_parabolic",
    "weak_gradient",
]
