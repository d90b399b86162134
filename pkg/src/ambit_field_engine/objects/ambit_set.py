from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .shapes import BoundaryCurve, JordanDomainSpec

TOL_BOUNDARY_FACTOR = 1e-9


@dataclass(frozen=True)
class AmbitSet:
    """Compact set ``R = R_1 minus the holes`` with its oriented boundary components.

    Outer components run counter-clockwise, holes clockwise, and every normal
    points out of ``R``.
    """

    spec: JordanDomainSpec

    @cached_property
    def boundary_components(self) -> list[BoundaryCurve]:
        return self.spec.components()

    @property
    def tol_boundary(self) -> float:
        return TOL_BOUNDARY_FACTOR * self.diameter

    @property
    def diameter(self) -> float:
        return self.spec.diameter

    @property
    def area(self) -> float:
        return self.spec.area

    @property
    def perimeter(self) -> float:
        """``H^1`` of the boundary."""
        return float(sum(curve.length for curve in self.boundary_components))

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return self.spec.bbox

    @property
    def radius(self) -> float:
        """Largest distance of a point of ``R`` from the origin."""
        x0, y0, x1, y1 = self.bbox
        corners = np.array([[x0, y0], [x0, y1], [x1, y0], [x1, y1]])
        return float(np.max(np.linalg.norm(corners, axis=1)))

    @property
    def is_isotropic(self) -> bool:
        return self.spec.is_isotropic

    def contains(self, q) -> np.ndarray | bool:
        """Closed membership; points within ``tol_boundary`` of the boundary count as inside."""
        pts = np.asarray(q, dtype=float)
        inside = self.spec.contains(pts.reshape(-1, 2), self.tol_boundary)
        return bool(inside[0]) if pts.ndim == 1 else inside

    def boundary_distance(self, q) -> np.ndarray | float:
        pts = np.asarray(q, dtype=float)
        flat = pts.reshape(-1, 2)
        dist = np.min([curve.distance(flat) for curve in self.boundary_components], axis=0)
        return float(dist[0]) if pts.ndim == 1 else dist

    def nearest_component(self, q) -> np.ndarray:
        flat = np.asarray(q, dtype=float).reshape(-1, 2)
        return np.argmin([curve.distance(flat) for curve in self.boundary_components], axis=0)

    def translate(self, shift) -> "AmbitSet":
        return AmbitSet(self.spec.translate(tuple(float(s) for s in shift)))

    def to_dict(self) -> dict:
        return self.spec.to_dict()


@dataclass(frozen=True)
class BoundaryArc:
    midpoint: tuple[float, float]
    length: float
    normal: tuple[float, float]
    tangent: tuple[float, float]


@dataclass(frozen=True, eq=False)
class BoundaryDiscretization:
    """Arcs of the boundary, stored as arrays; ``mesh`` bounds every arc length."""

    points: np.ndarray
    lengths: np.ndarray
    normals: np.ndarray
    mesh: float
    component: np.ndarray = field(repr=False)

    @property
    def tangents(self) -> np.ndarray:
        """``u_perp = (-u_y, u_x)``, counter-clockwise on outer components."""
        return np.column_stack((-self.normals[:, 1], self.normals[:, 0]))

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def arcs(self) -> list[BoundaryArc]:
        tangents = self.tangents
        return [
            BoundaryArc(tuple(p), float(length), tuple(n), tuple(t))
            for p, length, n, t in zip(self.points.tolist(), self.lengths, self.normals.tolist(), tangents.tolist())
        ]

    def __len__(self) -> int:
        return int(self.lengths.size)
