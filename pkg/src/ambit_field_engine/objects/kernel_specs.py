import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import RectBivariateSpline

from ambit_field_engine.constants import KernelKind, ProfileKind
from ambit_field_engine.exceptions import InvalidParameterError


@dataclass(frozen=True)
class PowerLaw:
    """``f(x) = K x^p``; singular at 0 when ``p < 0``."""

    k: float
    p: float

    kind = ProfileKind.POWER

    @property
    def singular_radius(self) -> float | None:
        return 0.0 if self.p < 0 else None

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.k * rho**self.p

    def derivative(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.p == 0:
            return np.zeros_like(rho)
        return self.k * self.p * rho ** (self.p - 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "k": self.k, "p": self.p}


@dataclass(frozen=True)
class PolynomialRadial:
    """``f(x) = sum_k coeffs[k] x^k``."""

    coeffs: tuple[float, ...]

    kind = ProfileKind.POLYNOMIAL

    def __post_init__(self):
        if not self.coeffs:
            raise InvalidParameterError("A polynomial profile needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def singular_radius(self) -> float | None:
        return None

    def value(self, rho):
        return P.polyval(np.asarray(rho, dtype=float), self.coeffs)

    def derivative(self, rho):
        return P.polyval(np.asarray(rho, dtype=float), P.polyder(self.coeffs))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class BumpVanishing:
    """``f(x) = amplitude (x - a)(b - x)``, zero on the radii ``a`` and ``b``."""

    a: float
    b: float
    amplitude: float = 1.0

    kind = ProfileKind.BUMP

    def __post_init__(self):
        if not 0.0 <= self.a < self.b:
            raise InvalidParameterError(f"Bump profile needs 0 <= a < b, got ({self.a}, {self.b})")

    @property
    def singular_radius(self) -> float | None:
        return None

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.amplitude * (rho - self.a) * (self.b - rho)

    def derivative(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.amplitude * (self.a + self.b - 2.0 * rho)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "a": self.a, "b": self.b, "amplitude": self.amplitude}


RadialProfile = PowerLaw | PolynomialRadial | BumpVanishing


@dataclass(frozen=True)
class Isotropic:
    """``F(q) = R_phi q f(|q|)`` with ``R_phi`` the rotation by ``phi``."""

    phi: float
    profile: RadialProfile

    kind = KernelKind.ISOTROPIC

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise InvalidParameterError(f"Rotation angle must be finite, got {self.phi}")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.array([[c, -s], [s, c]])

    def singular_points(self) -> list[tuple[float, float]]:
        return [(0.0, 0.0)] if self.profile.singular_radius is not None else []

    def value(self, pts: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(pts, axis=1)
        return (pts @ self.rotation.T) * self.profile.value(rho)[:, None]

    def _radial_factor(self, pts: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(pts, axis=1)
        return 2.0 * self.profile.value(rho) + self.profile.derivative(rho) * rho

    def divergence(self, pts: np.ndarray) -> np.ndarray:
        return math.cos(self.phi) * self._radial_factor(pts)

    def curl(self, pts: np.ndarray) -> np.ndarray:
        return math.sin(self.phi) * self._radial_factor(pts)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(pts, axis=1)
        f = self.profile.value(rho)
        safe = np.where(rho > 0, rho, 1.0)
        df_over_rho = np.where(rho > 0, self.profile.derivative(rho) / safe, 0.0)
        inner = f[:, None, None] * np.eye(2)[None] + df_over_rho[:, None, None] * pts[:, :, None] * pts[:, None, :]
        return np.einsum("ij,njk->nik", self.rotation, inner)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "phi": self.phi, "profile": self.profile.to_dict()}


@dataclass(frozen=True)
class Polynomial:
    """Components ``F_i(x, y) = sum_jk c_i[j, k] x^j y^k``."""

    cx: tuple[tuple[float, ...], ...]
    cy: tuple[tuple[float, ...], ...]

    kind = KernelKind.POLYNOMIAL

    def __post_init__(self):
        for name in ("cx", "cy"):
            coeffs = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, tuple(tuple(row) for row in coeffs.tolist()))

    @classmethod
    def constant(cls, vx: float, vy: float) -> "Polynomial":
        return cls(((vx,),), ((vy,),))

    @classmethod
    def linear(cls, matrix) -> "Polynomial":
        """``F(q) = M q``."""
        (a, b), (c, d) = matrix
        return cls(((0.0, b), (a, 0.0)), ((0.0, d), (c, 0.0)))

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.cx, dtype=float), np.asarray(self.cy, dtype=float)

    def singular_points(self) -> list[tuple[float, float]]:
        return []

    def value(self, pts: np.ndarray) -> np.ndarray:
        cx, cy = self._arrays
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack((P.polyval2d(x, y, cx), P.polyval2d(x, y, cy)))

    def _partial(self, coeffs: np.ndarray, axis: int, pts: np.ndarray) -> np.ndarray:
        if coeffs.shape[axis] < 2:
            return np.zeros(pts.shape[0])
        return P.polyval2d(pts[:, 0], pts[:, 1], P.polyder(coeffs, axis=axis))

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        cx, cy = self._arrays
        return np.stack(
            (
                np.column_stack((self._partial(cx, 0, pts), self._partial(cx, 1, pts))),
                np.column_stack((self._partial(cy, 0, pts), self._partial(cy, 1, pts))),
            ),
            axis=1,
        )

    def divergence(self, pts: np.ndarray) -> np.ndarray:
        cx, cy = self._arrays
        return self._partial(cx, 0, pts) + self._partial(cy, 1, pts)

    def curl(self, pts: np.ndarray) -> np.ndarray:
        cx, cy = self._arrays
        return self._partial(cy, 0, pts) - self._partial(cx, 1, pts)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "cx": [list(r) for r in self.cx], "cy": [list(r) for r in self.cy]}


@dataclass(frozen=True)
class Tabulated:
    """Kernel given on a rectangular grid, interpolated bicubically.

    Derivatives are taken by central finite differences of the interpolant.
    """

    x: tuple[float, ...]
    y: tuple[float, ...]
    values_x: tuple[tuple[float, ...], ...] = field(repr=False)
    values_y: tuple[tuple[float, ...], ...] = field(repr=False)

    kind = KernelKind.TABULATED

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.size < 4 or y.size < 4 or np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise InvalidParameterError("Tabulated kernel needs strictly increasing grids of at least 4 nodes")
        for name in ("values_x", "values_y"):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.shape != (x.size, y.size):
                raise InvalidParameterError(f"{name} must have shape {(x.size, y.size)}, got {values.shape}")
            object.__setattr__(self, name, tuple(tuple(row) for row in values.tolist()))
        object.__setattr__(self, "x", tuple(x.tolist()))
        object.__setattr__(self, "y", tuple(y.tolist()))

    @classmethod
    def from_callable(cls, fn, x, y) -> "Tabulated":
        """Tabulate a vectorized ``fn(points) -> (n, 2)`` on the grid ``x`` by ``y``."""
        gx, gy = np.meshgrid(np.asarray(x, dtype=float), np.asarray(y, dtype=float), indexing="ij")
        values = np.asarray(fn(np.column_stack((gx.ravel(), gy.ravel()))), dtype=float)
        return cls(tuple(x), tuple(y), values[:, 0].reshape(gx.shape), values[:, 1].reshape(gx.shape))

    @cached_property
    def _splines(self) -> tuple[RectBivariateSpline, RectBivariateSpline]:
        x, y = np.asarray(self.x), np.asarray(self.y)
        return (
            RectBivariateSpline(x, y, np.asarray(self.values_x)),
            RectBivariateSpline(x, y, np.asarray(self.values_y)),
        )

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self.x[0], self.y[0], self.x[-1], self.y[-1]

    def singular_points(self) -> list[tuple[float, float]]:
        return []

    def value(self, pts: np.ndarray) -> np.ndarray:
        sx, sy = self._splines
        return np.column_stack((sx.ev(pts[:, 0], pts[:, 1]), sy.ev(pts[:, 0], pts[:, 1])))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "x": list(self.x),
            "y": list(self.y),
            "values_x": [list(r) for r in self.values_x],
            "values_y": [list(r) for r in self.values_y],
        }


KernelSpec = Isotropic | Polynomial | Tabulated


def profile_from_dict(payload: dict) -> RadialProfile:
    kind = ProfileKind(payload["kind"])
    match kind:
        case ProfileKind.POWER:
            return PowerLaw(float(payload["k"]), float(payload["p"]))
        case ProfileKind.POLYNOMIAL:
            return PolynomialRadial(tuple(payload["coeffs"]))
        case ProfileKind.BUMP:
            return BumpVanishing(float(payload["a"]), float(payload["b"]), float(payload.get("amplitude", 1.0)))


def kernel_from_dict(payload: dict) -> KernelSpec:
    kind = KernelKind(payload["kind"])
    match kind:
        case KernelKind.ISOTROPIC:
            return Isotropic(float(payload["phi"]), profile_from_dict(payload["profile"]))
        case KernelKind.POLYNOMIAL:
            return Polynomial(payload["cx"], payload["cy"])
        case KernelKind.TABULATED:
            return Tabulated(payload["x"], payload["y"], payload["values_x"], payload["values_y"])
