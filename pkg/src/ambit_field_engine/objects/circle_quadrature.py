from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ambit_field_engine.constants import FunctionalMode
from ambit_field_engine.exceptions import InvalidParameterError

MIN_NODES = 16


@dataclass(frozen=True)
class CircleQuadrature:
    """Periodic trapezoid rule on the circle of radius ``radius`` around ``center``.

    Nodes sit at ``theta_k = 2 pi k / n_theta`` with weight ``2 pi / n_theta``.
    """

    center: tuple[float, float]
    radius: float
    n_theta: int = 256

    def __post_init__(self):
        if self.n_theta < MIN_NODES:
            raise InvalidParameterError(f"Circle quadrature needs at least {MIN_NODES} nodes, got {self.n_theta}")
        if not self.radius > 0:
            raise InvalidParameterError(f"Circle radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def normals(self) -> np.ndarray:
        return np.column_stack((np.cos(self.theta), np.sin(self.theta)))

    @cached_property
    def tangents(self) -> np.ndarray:
        return np.column_stack((-np.sin(self.theta), np.cos(self.theta)))

    def directions(self, mode: FunctionalMode) -> np.ndarray:
        """``u(theta)`` for the flux, ``u_perp(theta)`` for the circulation."""
        return self.normals if FunctionalMode(mode) == FunctionalMode.FLUX else self.tangents

    @cached_property
    def points(self) -> np.ndarray:
        return np.asarray(self.center) + self.radius * self.normals

    def integrate(self, values: np.ndarray, mode: FunctionalMode) -> float:
        """``r * int_0^{2 pi} v(theta) . dir(theta) d theta`` for vector samples ``values``."""
        projected = np.einsum("ij,ij->i", np.asarray(values, dtype=float).reshape(-1, 2), self.directions(mode))
        return float(self.radius * self.weight * projected.sum())
