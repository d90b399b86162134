"""Evaluation of vector kernels, their divergence, curl and Jacobian."""

import logging

import numpy as np

from ambit_field_engine.ambit_geometry import as_ambit_set, discretize_boundary
from ambit_field_engine.exceptions import DomainError
from ambit_field_engine.objects import AmbitSet, KernelSpec, Tabulated

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-300


def _points(q) -> tuple[np.ndarray, bool]:
    pts = np.asarray(q, dtype=float)
    return pts.reshape(-1, 2), pts.ndim == 1


def _check_domain(kernel: KernelSpec, pts: np.ndarray):
    for singular in kernel.singular_points():
        hit = np.linalg.norm(pts - np.asarray(singular), axis=1) <= SINGULAR_TOL
        if np.any(hit):
            raise DomainError(f"Kernel is singular at {pts[np.argmax(hit)].tolist()}")
    if isinstance(kernel, Tabulated):
        x0, y0, x1, y1 = kernel.bounds
        outside = (pts[:, 0] < x0) | (pts[:, 0] > x1) | (pts[:, 1] < y0) | (pts[:, 1] > y1)
        if np.any(outside):
            raise DomainError(f"{pts[np.argmax(outside)].tolist()} is outside the tabulated kernel grid")


def fd_step(pts: np.ndarray) -> np.ndarray:
    """Central-difference step ``max(1e-5, 1e-4 |q|)`` per point."""
    return np.maximum(1e-5, 1e-4 * np.linalg.norm(pts, axis=1))


def fd_jacobian(kernel: KernelSpec, q, h=None) -> np.ndarray:
    """Jacobian of ``F`` by central differences; ``h`` defaults to :func:`fd_step`."""
    pts, _ = _points(q)
    step = fd_step(pts) if h is None else np.broadcast_to(np.asarray(h, dtype=float), pts.shape[:1])
    columns = []
    for axis in (0, 1):
        shift = np.zeros_like(pts)
        shift[:, axis] = step
        columns.append((kernel.value(pts + shift) - kernel.value(pts - shift)) / (2.0 * step[:, None]))
    return np.stack(columns, axis=2)


def eval_F(kernel: KernelSpec, q) -> np.ndarray:
    """``F(q)`` for one point ``(2,)`` or many ``(n, 2)``.

    Raises
    ------
    DomainError
        If ``q`` hits a singular point of the kernel
    """
    pts, single = _points(q)
    _check_domain(kernel, pts)
    values = kernel.value(pts)
    return values[0] if single else values


def jacobian(kernel: KernelSpec, q) -> np.ndarray:
    pts, single = _points(q)
    _check_domain(kernel, pts)
    values = fd_jacobian(kernel, pts) if isinstance(kernel, Tabulated) else kernel.jacobian(pts)
    return values[0] if single else values


def div_F(kernel: KernelSpec, q):
    """``dF_1/dx + dF_2/dy``; analytic except for tabulated kernels."""
    pts, single = _points(q)
    _check_domain(kernel, pts)
    if isinstance(kernel, Tabulated):
        jac = fd_jacobian(kernel, pts)
        values = jac[:, 0, 0] + jac[:, 1, 1]
    else:
        values = kernel.divergence(pts)
    return float(values[0]) if single else values


def curl_F(kernel: KernelSpec, q):
    """``dF_2/dx - dF_1/dy``, i.e. ``(-d_y, d_x) . F``."""
    pts, single = _points(q)
    _check_domain(kernel, pts)
    if isinstance(kernel, Tabulated):
        jac = fd_jacobian(kernel, pts)
        values = jac[:, 1, 0] - jac[:, 0, 1]
    else:
        values = kernel.curl(pts)
    return float(values[0]) if single else values


def vanishes_on_boundary(kernel: KernelSpec, ambit_set: AmbitSet, tol: float = 1e-10, mesh: float | None = None) -> bool:
    """Whether ``max |F(-q)|`` over boundary samples ``q`` is below ``tol``."""
    ambit_set = as_ambit_set(ambit_set)
    mesh = mesh or ambit_set.perimeter / 2048
    samples = discretize_boundary(ambit_set, mesh).points
    for curve in ambit_set.boundary_components:
        samples = np.concatenate((samples, curve.corners))
    largest = float(np.max(np.linalg.norm(eval_F(kernel, -samples), axis=1)))
    logger.debug(f"Largest kernel norm on the reflected boundary: {largest:.3g}")
    return largest < tol


def check_kernel_on_set(kernel: KernelSpec, ambit_set: AmbitSet):
    """Reject kernels singular on ``-R``: a singular point ``s`` requires ``-s`` outside ``R`` with a margin."""
    for singular in kernel.singular_points():
        reflected = -np.asarray(singular, dtype=float)
        if ambit_set.contains(reflected) or ambit_set.boundary_distance(reflected) <= ambit_set.tol_boundary:
            raise DomainError(f"Kernel singularity {singular} lies on -R; use a set excluding {reflected.tolist()}")
