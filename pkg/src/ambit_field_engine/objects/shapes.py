import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ambit_field_engine.constants import ShapeKind
from ambit_field_engine.exceptions import GeometryError, InvalidParameterError

logger = logging.getLogger(__name__)


def _as_points(q) -> np.ndarray:
    pts = np.asarray(q, dtype=float)
    return pts.reshape(-1, 2)


def _as_vector(value, name: str) -> tuple[float, float]:
    vec = tuple(float(v) for v in value)
    if len(vec) != 2 or not all(math.isfinite(v) for v in vec):
        raise InvalidParameterError(f"{name} must be a finite 2-vector, got {value!r}")
    return vec


@dataclass(frozen=True)
class CircleCurve:
    """A circle of the boundary.

    ``outward`` is True when the set lies inside the circle (outer boundary,
    counter-clockwise), False when it is a hole (clockwise); normals always
    point out of the set.
    """

    center: tuple[float, float]
    radius: float
    outward: bool = True

    @property
    def length(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def reach(self) -> float:
        return self.radius

    @property
    def corners(self) -> np.ndarray:
        return np.empty((0, 2))

    def distance(self, q) -> np.ndarray:
        pts = _as_points(q)
        return np.abs(np.linalg.norm(pts - self.center, axis=1) - self.radius)

    def normal(self, q) -> np.ndarray:
        pts = _as_points(q)
        offset = pts - self.center
        norm = np.linalg.norm(offset, axis=1, keepdims=True)
        direction = np.divide(offset, norm, out=np.zeros_like(offset), where=norm > 0)
        return direction if self.outward else -direction

    def parametrize(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Midpoints, lengths and normals of ``n`` equal arcs."""
        theta = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        radial = np.column_stack((np.cos(theta), np.sin(theta)))
        points = np.asarray(self.center) + self.radius * radial
        normals = radial if self.outward else -radial
        return points, np.full(n, self.length / n), normals

    def n_arcs(self, max_length: float) -> int:
        return max(4, math.ceil(self.length / max_length - 1e-12))

    def translate(self, shift) -> "CircleCurve":
        return CircleCurve((self.center[0] + shift[0], self.center[1] + shift[1]), self.radius, self.outward)


@dataclass(frozen=True)
class PolygonCurve:
    """Closed polygonal boundary with vertices in counter-clockwise order."""

    vertices: tuple[tuple[float, float], ...]
    outward: bool = True

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        start = self.array
        return start, np.roll(start, -1, axis=0) - start

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges[1], axis=1)

    @property
    def edge_normals(self) -> np.ndarray:
        _, direction = self.edges
        normals = np.column_stack((direction[:, 1], -direction[:, 0])) / self.edge_lengths[:, None]
        return normals if self.outward else -normals

    @property
    def interior_angles(self) -> np.ndarray:
        _, direction = self.edges
        incoming = -np.roll(direction, 1, axis=0)
        cos = np.einsum("ij,ij->i", incoming, direction) / (
            np.linalg.norm(incoming, axis=1) * np.linalg.norm(direction, axis=1)
        )
        return np.arccos(np.clip(cos, -1.0, 1.0))

    @property
    def length(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def reach(self) -> float:
        return 0.0

    @property
    def corners(self) -> np.ndarray:
        return self.array

    def _closest(self, q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pts = _as_points(q)
        start, direction = self.edges
        rel = pts[:, None, :] - start[None, :, :]
        t = np.clip(np.einsum("nkj,kj->nk", rel, direction) / self.edge_lengths**2, 0.0, 1.0)
        foot = start[None] + t[..., None] * direction[None]
        dist = np.linalg.norm(pts[:, None, :] - foot, axis=2)
        return dist, t, np.argmin(dist, axis=1)

    def distance(self, q) -> np.ndarray:
        dist, _, _ = self._closest(q)
        return dist.min(axis=1)

    def normal(self, q, corner_tol: float = 1e-12) -> np.ndarray:
        """Edge normal of the closest edge; zero at the vertices."""
        dist, t, edge = self._closest(q)
        rows = np.arange(edge.size)
        t_best = t[rows, edge]
        scaled = corner_tol / self.edge_lengths[edge]
        at_corner = (t_best <= scaled) | (t_best >= 1.0 - scaled)
        normals = self.edge_normals[edge]
        normals[at_corner] = 0.0
        return normals

    def interior_contains(self, q) -> np.ndarray:
        pts = _as_points(q)
        start, direction = self.edges
        rel = pts[:, None, :] - start[None, :, :]
        cross = direction[None, :, 0] * rel[..., 1] - direction[None, :, 1] * rel[..., 0]
        return np.all(cross > 0, axis=1)

    def closed_contains(self, q, tol: float = 0.0) -> np.ndarray:
        pts = _as_points(q)
        start, direction = self.edges
        rel = pts[:, None, :] - start[None, :, :]
        cross = (direction[None, :, 0] * rel[..., 1] - direction[None, :, 1] * rel[..., 0]) / self.edge_lengths
        return np.all(cross >= -tol, axis=1)

    def parametrize_edge(self, k: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        start, direction = self.edges
        fractions = (np.arange(n) + 0.5) / n
        points = start[k] + fractions[:, None] * direction[k]
        return points, np.full(n, self.edge_lengths[k] / n), np.repeat(self.edge_normals[k][None], n, axis=0)

    def translate(self, shift) -> "PolygonCurve":
        return PolygonCurve(tuple((x + shift[0], y + shift[1]) for x, y in self.vertices), self.outward)


BoundaryCurve = CircleCurve | PolygonCurve


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    kind = ShapeKind.DISK

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, "Disk center"))
        if not self.radius > 0:
            raise InvalidParameterError(f"Disk radius must be positive, got {self.radius}")

    def contains(self, q, tol: float = 0.0) -> np.ndarray:
        return np.linalg.norm(_as_points(q) - self.center, axis=1) <= self.radius + tol

    def interior_contains(self, q) -> np.ndarray:
        return np.linalg.norm(_as_points(q) - self.center, axis=1) < self.radius

    def components(self) -> list[BoundaryCurve]:
        return [CircleCurve(self.center, self.radius, True)]

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return cx - self.radius, cy - self.radius, cx + self.radius, cy + self.radius

    @property
    def is_isotropic(self) -> bool:
        return self.center == (0.0, 0.0)

    def translate(self, shift) -> "Disk":
        return Disk((self.center[0] + shift[0], self.center[1] + shift[1]), self.radius)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Annulus:
    """``{a <= |q - c| <= b}``; ``inner == 0`` is the closed disk with only its outer circle as boundary."""

    center: tuple[float, float]
    inner: float
    outer: float

    kind = ShapeKind.ANNULUS

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, "Annulus center"))
        if not 0.0 <= self.inner < self.outer:
            raise InvalidParameterError(f"Annulus needs 0 <= inner < outer, got ({self.inner}, {self.outer})")

    def contains(self, q, tol: float = 0.0) -> np.ndarray:
        radius = np.linalg.norm(_as_points(q) - self.center, axis=1)
        return (radius >= self.inner - tol) & (radius <= self.outer + tol)

    def interior_contains(self, q) -> np.ndarray:
        radius = np.linalg.norm(_as_points(q) - self.center, axis=1)
        return (radius > self.inner) & (radius < self.outer)

    def components(self) -> list[BoundaryCurve]:
        curves = [CircleCurve(self.center, self.outer, True)]
        if self.inner > 0:
            curves.append(CircleCurve(self.center, self.inner, False))
        return curves

    @property
    def area(self) -> float:
        return math.pi * (self.outer**2 - self.inner**2)

    @property
    def diameter(self) -> float:
        return 2.0 * self.outer

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return cx - self.outer, cy - self.outer, cx + self.outer, cy + self.outer

    @property
    def is_isotropic(self) -> bool:
        return self.center == (0.0, 0.0)

    def translate(self, shift) -> "Annulus":
        return Annulus((self.center[0] + shift[0], self.center[1] + shift[1]), self.inner, self.outer)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "center": list(self.center), "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, vertices counter-clockwise."""

    vertices: tuple[tuple[float, float], ...]

    kind = ShapeKind.POLYGON

    def __post_init__(self):
        verts = tuple(_as_vector(v, "Polygon vertex") for v in self.vertices)
        if len(verts) < 3:
            raise InvalidParameterError(f"A polygon needs at least 3 vertices, got {len(verts)}")
        arr = np.asarray(verts)
        edges = np.roll(arr, -1, axis=0) - arr
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if np.any(cross <= 0):
            raise InvalidParameterError(
                "Polygon vertices must be strictly convex and counter-clockwise "
                f"(turn cross products {cross.tolist()})"
            )
        object.__setattr__(self, "vertices", verts)

    @property
    def curve(self) -> PolygonCurve:
        return PolygonCurve(self.vertices, True)

    def contains(self, q, tol: float = 0.0) -> np.ndarray:
        return self.curve.closed_contains(q, tol)

    def interior_contains(self, q) -> np.ndarray:
        return self.curve.interior_contains(q)

    def components(self) -> list[BoundaryCurve]:
        return [self.curve]

    @property
    def area(self) -> float:
        x, y = np.asarray(self.vertices).T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @property
    def centroid(self) -> tuple[float, float]:
        arr = np.asarray(self.vertices)
        return tuple(arr.mean(axis=0).tolist())

    @property
    def diameter(self) -> float:
        arr = np.asarray(self.vertices)
        return float(np.max(np.linalg.norm(arr[:, None] - arr[None], axis=2)))

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        arr = np.asarray(self.vertices)
        return (*arr.min(axis=0).tolist(), *arr.max(axis=0).tolist())

    @property
    def is_isotropic(self) -> bool:
        return False

    def translate(self, shift) -> "ConvexPolygon":
        return ConvexPolygon(tuple((x + shift[0], y + shift[1]) for x, y in self.vertices))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "vertices": [list(v) for v in self.vertices]}


SimpleShape = Disk | Annulus | ConvexPolygon


@dataclass(frozen=True)
class SetDifference:
    """``outer`` minus the open interiors of ``holes``."""

    outer: SimpleShape
    holes: tuple[SimpleShape, ...] = ()

    kind = ShapeKind.DIFFERENCE

    def __post_init__(self):
        object.__setattr__(self, "holes", tuple(self.holes))
        for hole in self.holes:
            if isinstance(hole, Annulus) and hole.inner > 0:
                raise InvalidParameterError("A hole must be a disk or a convex polygon")
        self._validate_holes()

    def _validate_holes(self, n_samples: int = 256):
        outer_curves = self.outer.components()
        for index, hole in enumerate(self.holes):
            samples = _boundary_samples(hole, n_samples)
            if not np.all(self.outer.interior_contains(samples)):
                raise GeometryError(f"Hole {index} is not strictly inside the outer shape")
            gap = min(float(curve.distance(samples).min()) for curve in outer_curves)
            if gap <= 0:
                raise GeometryError(f"Hole {index} touches the outer boundary")
            for other_index, other in enumerate(self.holes[index + 1 :], start=index + 1):
                if np.any(other.contains(samples)) or np.any(hole.contains(_boundary_samples(other, n_samples))):
                    raise GeometryError(f"Holes {index} and {other_index} overlap")

    def contains(self, q, tol: float = 0.0) -> np.ndarray:
        inside = self.outer.contains(q, tol)
        for hole in self.holes:
            inside &= ~_hole_interior(hole, q, tol)
        return inside

    def interior_contains(self, q) -> np.ndarray:
        inside = self.outer.interior_contains(q)
        for hole in self.holes:
            inside &= ~hole.contains(q)
        return inside

    def components(self) -> list[BoundaryCurve]:
        curves = list(self.outer.components())
        for hole in self.holes:
            for curve in hole.components():
                if isinstance(curve, CircleCurve):
                    curves.append(CircleCurve(curve.center, curve.radius, False))
                else:
                    curves.append(PolygonCurve(curve.vertices, False))
        return curves

    @property
    def area(self) -> float:
        return self.outer.area - sum(hole.area for hole in self.holes)

    @property
    def diameter(self) -> float:
        return self.outer.diameter

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return self.outer.bbox

    @property
    def is_isotropic(self) -> bool:
        return self.outer.is_isotropic and all(
            isinstance(hole, Disk) and hole.center == (0.0, 0.0) for hole in self.holes
        )

    def translate(self, shift) -> "SetDifference":
        return SetDifference(self.outer.translate(shift), tuple(hole.translate(shift) for hole in self.holes))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "outer": self.outer.to_dict(),
            "holes": [hole.to_dict() for hole in self.holes],
        }


JordanDomainSpec = Union[Disk, Annulus, ConvexPolygon, SetDifference]


def _hole_interior(hole: SimpleShape, q, tol: float) -> np.ndarray:
    if isinstance(hole, Disk):
        return np.linalg.norm(_as_points(q) - hole.center, axis=1) < hole.radius - tol
    pts = _as_points(q)
    start, direction = hole.curve.edges
    rel = pts[:, None, :] - start[None, :, :]
    cross = (direction[None, :, 0] * rel[..., 1] - direction[None, :, 1] * rel[..., 0]) / hole.curve.edge_lengths
    return np.all(cross > tol, axis=1)


def _boundary_samples(shape: SimpleShape, n: int) -> np.ndarray:
    points = []
    for curve in shape.components():
        if isinstance(curve, CircleCurve):
            points.append(curve.parametrize(n)[0])
        else:
            for k in range(len(curve.vertices)):
                points.append(curve.parametrize_edge(k, max(2, n // len(curve.vertices)))[0])
            points.append(curve.array)
    return np.concatenate(points)


def shape_from_dict(payload: dict) -> JordanDomainSpec:
    kind = ShapeKind(payload["kind"])
    match kind:
        case ShapeKind.DISK:
            return Disk(tuple(payload.get("center", (0.0, 0.0))), float(payload["radius"]))
        case ShapeKind.ANNULUS:
            return Annulus(tuple(payload.get("center", (0.0, 0.0))), float(payload["inner"]), float(payload["outer"]))
        case ShapeKind.POLYGON:
            return ConvexPolygon(tuple(tuple(v) for v in payload["vertices"]))
        case ShapeKind.DIFFERENCE:
            return SetDifference(
                shape_from_dict(payload["outer"]),
                tuple(shape_from_dict(h) for h in payload.get("holes", ())),
            )
