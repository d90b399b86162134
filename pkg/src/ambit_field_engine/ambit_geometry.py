"""Geometry of ambit sets: membership, distances, normals, parallel sets and quadrature."""

import json
import logging
import math
from typing import Callable

import numpy as np

from ambit_field_engine.exceptions import DomainError, GeometryError, InvalidParameterError, NumericalFailureError
from ambit_field_engine.objects import (
    AmbitSet,
    Annulus,
    RegularityReport,
    BoundaryDiscretization,
    CircleCurve,
    ComponentDiagnostic,
    ConvexPolygon,
    Disk,
    JordanDomainSpec,
    PolygonCurve,
    SetDifference,
    shape_from_dict,
)
from ambit_field_engine.utils import circle_angles, gauss_legendre, richardson

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 24


def as_ambit_set(value) -> AmbitSet:
    if isinstance(value, AmbitSet):
        return value
    if isinstance(value, dict):
        return AmbitSet(shape_from_dict(value))
    if isinstance(value, (Disk, Annulus, ConvexPolygon, SetDifference)):
        return AmbitSet(value)
    raise InvalidParameterError(f"Not an ambit set: {value!r}")


def contains(ambit_set, q) -> np.ndarray | bool:
    return as_ambit_set(ambit_set).contains(q)


def boundary_distance(ambit_set, q) -> np.ndarray | float:
    return as_ambit_set(ambit_set).boundary_distance(q)


def outward_normal(ambit_set, q) -> np.ndarray:
    """Outward unit normal at a boundary point, or the zero vector at a corner.

    Raises
    ------
    DomainError
        If ``q`` is not within ``tol_boundary`` of the boundary
    """
    ambit_set = as_ambit_set(ambit_set)
    point = np.asarray(q, dtype=float).reshape(1, 2)
    distance = ambit_set.boundary_distance(point)[0]
    if distance > ambit_set.tol_boundary:
        raise DomainError(f"{point[0].tolist()} is {distance:.3g} away from the boundary")
    curve = ambit_set.boundary_components[int(ambit_set.nearest_component(point)[0])]
    if isinstance(curve, PolygonCurve):
        return curve.normal(point, corner_tol=ambit_set.tol_boundary)[0]
    return curve.normal(point)[0]


def area(ambit_set) -> float:
    return as_ambit_set(ambit_set).area


def perimeter(ambit_set) -> float:
    return as_ambit_set(ambit_set).perimeter


def diameter(ambit_set) -> float:
    return as_ambit_set(ambit_set).diameter


def bbox(ambit_set) -> tuple[float, float, float, float]:
    return as_ambit_set(ambit_set).bbox


def translate(ambit_set, shift) -> AmbitSet:
    return as_ambit_set(ambit_set).translate(shift)


# ---------------------------------------------------------------------------
# Parallel sets
# ---------------------------------------------------------------------------


def _component_gap(a, b) -> float:
    if isinstance(a, CircleCurve) and isinstance(b, CircleCurve):
        d = math.dist(a.center, b.center)
        if d >= a.radius + b.radius:
            return d - a.radius - b.radius
        return abs(a.radius - b.radius) - d
    samples, _, _ = discretize_curve(a, a.length / 4096)
    return float(b.distance(samples).min())


def check_separation(ambit_set: AmbitSet, r: float):
    """Raise when the r-neighborhoods of two boundary components meet."""
    curves = ambit_set.boundary_components
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            gap = _component_gap(curves[i], curves[j])
            if gap <= 2.0 * r:
                raise GeometryError(
                    f"Boundary components {i} and {j} are {gap:.6g} apart; their {r}-neighborhoods merge"
                )


def _inset_polygon(vertices: np.ndarray, r: float) -> np.ndarray:
    """Intersection of the half-planes of a ccw convex polygon shifted inward by ``r``."""
    clipped = vertices.copy()
    n = len(vertices)
    for k in range(n):
        start, end = vertices[k], vertices[(k + 1) % n]
        direction = (end - start) / np.linalg.norm(end - start)
        inward = np.array([-direction[1], direction[0]])
        anchor = start + r * inward
        if len(clipped) == 0:
            break
        side = (clipped - anchor) @ inward
        kept = []
        for i in range(len(clipped)):
            cur, nxt = clipped[i], clipped[(i + 1) % len(clipped)]
            s_cur, s_nxt = side[i], side[(i + 1) % len(clipped)]
            if s_cur >= 0:
                kept.append(cur)
            if (s_cur >= 0) != (s_nxt >= 0):
                kept.append(cur + (nxt - cur) * s_cur / (s_cur - s_nxt))
        clipped = np.asarray(kept).reshape(-1, 2)
    return clipped


def _polygon_area(vertices: np.ndarray) -> float:
    if len(vertices) < 3:
        return 0.0
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _curve_parallel_area(curve, r: float) -> float:
    if isinstance(curve, CircleCurve):
        if r >= curve.radius:
            return math.pi * (curve.radius + r) ** 2
        return 4.0 * math.pi * curve.radius * r
    vertices = curve.array
    polygon_area = _polygon_area(vertices)
    outer = polygon_area + curve.length * r + math.pi * r * r
    return outer - _polygon_area(_inset_polygon(vertices, r))


def parallel_set_area(ambit_set, r: float) -> float:
    """``Leb`` of the closed r-neighborhood of the boundary.

    Raises
    ------
    GeometryError
        If the neighborhoods of two boundary components merge at this ``r``
    """
    if not r > 0:
        raise InvalidParameterError(f"Parallel set radius must be positive, got {r}")
    ambit_set = as_ambit_set(ambit_set)
    check_separation(ambit_set, r)
    return float(sum(_curve_parallel_area(curve, r) for curve in ambit_set.boundary_components))


def minkowski_content(ambit_set, r0: float | None = None, levels: int = 8, rtol: float = 1e-6) -> float:
    """Limit of ``parallel_set_area(r) / r`` as ``r -> 0``, by Richardson extrapolation.

    Raises
    ------
    NumericalFailureError
        If the extrapolated sequence does not settle; ``trace`` holds ``(r, ratio)`` pairs
    """
    ambit_set = as_ambit_set(ambit_set)
    if r0 is None:
        r0 = 0.01 * ambit_set.diameter
    radii = r0 * 2.0 ** -np.arange(levels)
    ratios = np.array([parallel_set_area(ambit_set, float(r)) / r for r in radii])
    extrapolated = richardson(ratios, ratio=2.0, order=1)
    trace = list(zip(radii.tolist(), ratios.tolist()))
    last, previous = extrapolated[-1], extrapolated[-2]
    if not abs(last - previous) <= rtol * abs(last):
        raise NumericalFailureError(
            f"Minkowski content did not settle: {previous} vs {last}", partial_estimate=float(last), trace=trace
        )
    logger.debug(f"Minkowski content trace: {trace}")
    return float(last)


# ---------------------------------------------------------------------------
# Boundary discretization and quadrature
# ---------------------------------------------------------------------------


def discretize_curve(curve, max_length: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(curve, CircleCurve):
        return curve.parametrize(curve.n_arcs(max_length))
    pieces = [
        curve.parametrize_edge(k, max(1, math.ceil(length / max_length - 1e-12)))
        for k, length in enumerate(curve.edge_lengths)
    ]
    return tuple(np.concatenate(parts) for parts in zip(*pieces))


def discretize_boundary(ambit_set, mesh: float) -> BoundaryDiscretization:
    """Arcs of length at most ``mesh`` covering every boundary component."""
    if not mesh > 0:
        raise InvalidParameterError(f"Boundary mesh must be positive, got {mesh}")
    ambit_set = as_ambit_set(ambit_set)
    points, lengths, normals, component = [], [], [], []
    for index, curve in enumerate(ambit_set.boundary_components):
        pts, lens, nrm = discretize_curve(curve, mesh)
        points.append(pts)
        lengths.append(lens)
        normals.append(nrm)
        component.append(np.full(lens.size, index))
    return BoundaryDiscretization(
        np.concatenate(points), np.concatenate(lengths), np.concatenate(normals), mesh, np.concatenate(component)
    )


def boundary_quadrature(ambit_set, n_per_component: int = 512, order: int = 16):
    """High-order rule for ``int_{dR} g dH^1``: points, weights and outward normals.

    Circles use the periodic trapezoid rule; polygon edges use Gauss-Legendre
    panels, so corners get no weight.
    """
    ambit_set = as_ambit_set(ambit_set)
    points, weights, normals = [], [], []
    for curve in ambit_set.boundary_components:
        if isinstance(curve, CircleCurve):
            theta = circle_angles(n_per_component)
            radial = np.column_stack((np.cos(theta), np.sin(theta)))
            points.append(np.asarray(curve.center) + curve.radius * radial)
            weights.append(np.full(theta.size, curve.length / theta.size))
            normals.append(radial if curve.outward else -radial)
            continue
        start, direction = curve.edges
        panels = max(1, n_per_component // (order * len(curve.vertices)))
        for k in range(len(curve.vertices)):
            edges = np.linspace(0.0, 1.0, panels + 1)
            for a, b in zip(edges[:-1], edges[1:]):
                s, w = gauss_legendre(order, a, b)
                points.append(start[k] + s[:, None] * direction[k])
                weights.append(w * curve.edge_lengths[k])
                normals.append(np.repeat(curve.edge_normals[k][None], s.size, axis=0))
    return np.concatenate(points), np.concatenate(weights), np.concatenate(normals)


def boundary_regularity(ambit_set) -> RegularityReport:
    """Reach lower bound and corners per boundary component.

    Circles have reach equal to their radius; polygons have reach 0 at their
    corners and are piecewise ``C^{1,1}``, so both classes pass.
    """
    ambit_set = as_ambit_set(ambit_set)
    components = tuple(
        ComponentDiagnostic(
            kind="circle" if isinstance(curve, CircleCurve) else "polygon",
            length=curve.length,
            reach=curve.reach,
            corners=len(curve.corners),
            outward=curve.outward,
        )
        for curve in ambit_set.boundary_components
    )
    return RegularityReport(
        components=components,
        passed=True,
        detail=f"{len(components)} component(s), piecewise C^1,1 with positive-reach smooth parts",
    )


# ---------------------------------------------------------------------------
# Area quadrature
# ---------------------------------------------------------------------------


def _disk_rule(center, inner: float, outer: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    rho, w_rho = gauss_legendre(order, inner, outer)
    theta = circle_angles(4 * order)
    radial = np.column_stack((np.cos(theta), np.sin(theta)))
    points = np.asarray(center) + (rho[:, None, None] * radial[None]).reshape(-1, 2)
    weights = np.outer(w_rho * rho, np.full(theta.size, 2.0 * math.pi / theta.size)).reshape(-1)
    return points, weights


def _polygon_rule(vertices, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Fan triangulation from the centroid, collapsed-square Gauss rule per triangle."""
    arr = np.asarray(vertices, dtype=float)
    apex = arr.mean(axis=0)
    u, wu = gauss_legendre(order, 0.0, 1.0)
    v, wv = gauss_legendre(order, 0.0, 1.0)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv) * uu
    points, weights = [], []
    for k in range(len(arr)):
        b, c = arr[k], arr[(k + 1) % len(arr)]
        jac = abs((b[0] - apex[0]) * (c[1] - apex[1]) - (b[1] - apex[1]) * (c[0] - apex[0]))
        pts = apex + uu[..., None] * (b - apex) + (uu * vv)[..., None] * (c - b)
        points.append(pts.reshape(-1, 2))
        weights.append((ww * jac).reshape(-1))
    return np.concatenate(points), np.concatenate(weights)


def _shape_rule(shape: JordanDomainSpec, order: int) -> tuple[np.ndarray, np.ndarray]:
    match shape:
        case Disk(center=center, radius=radius):
            return _disk_rule(center, 0.0, radius, order)
        case Annulus(center=center, inner=inner, outer=outer):
            return _disk_rule(center, inner, outer, order)
        case ConvexPolygon(vertices=vertices):
            return _polygon_rule(vertices, order)
        case SetDifference(outer=outer, holes=holes):
            points, weights = _shape_rule(outer, order)
            parts_p, parts_w = [points], [weights]
            for hole in holes:
                hp, hw = _shape_rule(hole, order)
                parts_p.append(hp)
                parts_w.append(-hw)
            return np.concatenate(parts_p), np.concatenate(parts_w)
    raise InvalidParameterError(f"No quadrature rule for {shape!r}")


def area_rule(ambit_set, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights with ``sum(w f(x)) ~ int_R f``; hole weights are negative."""
    return _shape_rule(as_ambit_set(ambit_set).spec, order)


def integrate_over(ambit_set, fn: Callable[[np.ndarray], np.ndarray], order: int = DEFAULT_ORDER):
    """``int_R fn(q) dq`` for a vectorized ``fn: (n, 2) -> (n,)`` or ``(n, k)``.

    Set differences are integrated by inclusion-exclusion, so ``fn`` must be
    finite on the holes.
    """
    points, weights = area_rule(ambit_set, order)
    values = np.asarray(fn(points))
    return np.tensordot(weights, values, axes=(0, 0))


# ---------------------------------------------------------------------------
# Collar quadrature
# ---------------------------------------------------------------------------


def _circle_collar(curve: CircleCurve, r: float, n_along: int, n_across: int):
    if r >= curve.radius:
        raise GeometryError(f"Collar width {r} exceeds the radius {curve.radius} of a boundary circle")
    theta = circle_angles(n_along)
    radial = np.column_stack((np.cos(theta), np.sin(theta)))
    t, wt = gauss_legendre(n_across, 0.0, r)
    points, weights, in_set = [], [], []
    for side in (-1.0, +1.0):
        radius = curve.radius + side * t
        pts = np.asarray(curve.center) + (radius[:, None, None] * radial[None]).reshape(-1, 2)
        w = np.outer(wt * radius, np.full(n_along, 2.0 * math.pi / n_along)).reshape(-1)
        points.append(pts)
        weights.append(w)
        # the inside of the circle belongs to R for outer components
        in_set.append(np.full(w.size, (side < 0) == curve.outward))
    return np.concatenate(points), np.concatenate(weights), np.concatenate(in_set)


def _polygon_collar(curve: PolygonCurve, r: float, n_along: int, n_across: int):
    start, direction = curve.edges
    lengths = curve.edge_lengths
    unit = direction / lengths[:, None]
    inward = np.column_stack((-unit[:, 1], unit[:, 0]))
    half_cot = 1.0 / np.tan(0.5 * curve.interior_angles)
    n = len(curve.vertices)
    t, wt = gauss_legendre(n_across, 0.0, r)
    s_nodes, s_weights = gauss_legendre(n_along, 0.0, 1.0)
    points, weights, in_set = [], [], []

    for k in range(n):
        lo = t * half_cot[k]
        hi = lengths[k] - t * half_cot[(k + 1) % n]
        if np.any(hi <= lo):
            raise GeometryError(f"Collar width {r} collapses edge {k} of a polygon boundary")
        s = lo[:, None] + (hi - lo)[:, None] * s_nodes[None]
        w = wt[:, None] * (hi - lo)[:, None] * s_weights[None]
        pts = start[k] + s[..., None] * unit[k] + t[:, None, None] * inward[k]
        points.append(pts.reshape(-1, 2))
        weights.append(w.reshape(-1))
        in_set.append(np.full(w.size, curve.outward))

        s = lengths[k] * s_nodes
        w = np.outer(wt, lengths[k] * s_weights)
        pts = start[k] + s[None, :, None] * unit[k] - t[:, None, None] * inward[k]
        points.append(pts.reshape(-1, 2))
        weights.append(w.reshape(-1))
        in_set.append(np.full(w.size, not curve.outward))

    rho, w_rho = gauss_legendre(n_across, 0.0, r)
    for k in range(n):
        previous = -inward[k - 1]
        opening = math.pi - curve.interior_angles[k]
        phi0 = math.atan2(previous[1], previous[0])
        phi, w_phi = gauss_legendre(n_across, phi0, phi0 + opening)
        offsets = rho[:, None, None] * np.stack((np.cos(phi), np.sin(phi)), axis=-1)[None]
        points.append((start[k] + offsets).reshape(-1, 2))
        weights.append(np.outer(w_rho * rho, w_phi).reshape(-1))
        in_set.append(np.full(rho.size * phi.size, not curve.outward))
    return np.concatenate(points), np.concatenate(weights), np.concatenate(in_set)


def collar_quadrature(ambit_set, r: float, n_along: int = 64, n_across: int = 16):
    """Quadrature on the r-neighborhood of the boundary.

    Returns
    -------
    tuple[np.ndarray, np.ndarray, np.ndarray]
        Points, weights (summing to :func:`parallel_set_area`) and a mask of
        the points lying in ``R``
    """
    ambit_set = as_ambit_set(ambit_set)
    check_separation(ambit_set, r)
    parts = []
    for curve in ambit_set.boundary_components:
        if isinstance(curve, CircleCurve):
            parts.append(_circle_collar(curve, r, max(n_along, 16), n_across))
        else:
            parts.append(_polygon_collar(curve, r, n_along, n_across))
    return tuple(np.concatenate(part) for part in zip(*parts))


def shape_to_json(ambit_set) -> str:
    return json.dumps(as_ambit_set(ambit_set).to_dict(), sort_keys=True)


def shape_from_json(text: str) -> AmbitSet:
    try:
        return AmbitSet(shape_from_dict(json.loads(text)))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidParameterError(f"Malformed shape spec: {e}") from e
