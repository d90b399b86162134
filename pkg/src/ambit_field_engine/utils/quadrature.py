import logging
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    nodes, weights = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (nodes + 1.0), half * weights


def circle_angles(n_theta: int) -> np.ndarray:
    """Equispaced angles ``2 pi k / n`` of the periodic trapezoid rule."""
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def unit_directions(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward normals ``u(theta)`` and tangents ``u_perp(theta) = (-sin, cos)``."""
    u = np.column_stack((np.cos(theta), np.sin(theta)))
    u_perp = np.column_stack((-u[:, 1], u[:, 0]))
    return u, u_perp


@lru_cache(maxsize=32)
def _polar_disk_rule(n_radial: int, n_angular: int) -> tuple[np.ndarray, np.ndarray]:
    rho, w_rho = gauss_legendre(n_radial, 0.0, 1.0)
    theta = circle_angles(n_angular)
    points = (rho[:, None, None] * np.stack((np.cos(theta), np.sin(theta)), axis=-1)[None, :, :]).reshape(-1, 2)
    weights = (w_rho[:, None] * rho[:, None] * np.full(n_angular, 2.0 * np.pi / n_angular)[None, :]).reshape(-1)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def polar_disk_rule(n_radial: int = 4, n_angular: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit disk: Gauss in the radius, trapezoid in the angle.

    Exact for polynomials of total degree below ``min(2 * n_radial - 1, n_angular)``;
    scale points by ``r`` and weights by ``r**2`` for a disk of radius ``r``.
    """
    return _polar_disk_rule(n_radial, n_angular)


def richardson(values: np.ndarray, ratio: float = 2.0, order: int = 1) -> np.ndarray:
    """One Richardson step on a sequence computed at step sizes ``h, h/ratio, ...``."""
    values = np.asarray(values, dtype=float)
    factor = ratio**order
    return (factor * values[1:] - values[:-1]) / (factor - 1.0)
