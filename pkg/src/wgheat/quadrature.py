"""Quadrature on the reference triangle and the unit interval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Quadrature:
    points: np.ndarray  # barycentric (m, 3) for triangles, parametric (m,) for edges
    weights: np.ndarray  # sum to the reference measure
    degree: int


def _triangle_rule() -> Quadrature:
    # 7-point degree-5 rule on the triangle with vertices (0,0), (1,0), (0,1)
    s = np.sqrt(15.0)
    a1, a2 = (6.0 - s) / 21.0, (6.0 + s) / 21.0
    w1, w2 = (155.0 - s) / 1200.0, (155.0 + s) / 1200.0
    bary = [(1 / 3, 1 / 3, 1 / 3)]
    weights = [9.0 / 40.0]
    for a, w in ((a1, w1), (a2, w2)):
        b = 1.0 - 2.0 * a
        bary += [(b, a, a), (a, b, a), (a, a, b)]
        weights += [w, w, w]
    return Quadrature(np.array(bary), 0.5 * np.array(weights), degree=5)


def _edge_rule() -> Quadrature:
    x, w = np.polynomial.legendre.leggauss(3)
    return Quadrature(0.5 * (x + 1.0), 0.5 * w, degree=5)


TRIANGLE_RULE = _triangle_rule()
EDGE_RULE = _edge_rule()


def triangle_points(corners: np.ndarray, rule: Quadrature = TRIANGLE_RULE) -> np.ndarray:
    """Physical quadrature points for triangles with ``corners`` of shape (..., 3, 2)."""
    return np.einsum("qk,...kd->...qd", rule.points, corners)


def edge_points(ends: np.ndarray, rule: Quadrature = EDGE_RULE) -> np.ndarray:
    """Physical quadrature points for segments with ``ends`` of shape (..., 2, 2)."""
    s = rule.points[:, None]
    return ends[..., None, 0, :] * (1.0 - s) + ends[..., None, 1, :] * s
