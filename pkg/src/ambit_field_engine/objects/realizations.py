import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ambit_field_engine.constants import VolatilityKind
from ambit_field_engine.exceptions import InvalidParameterError

from .triplet import CharacteristicTriplet


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` carrying the sampled noise."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InvalidParameterError(f"Empty window {self}")

    @classmethod
    def around(cls, bbox: tuple[float, float, float, float], margin: float) -> "Window":
        x0, y0, x1, y1 = bbox
        return cls(x0 - margin, y0 - margin, x1 + margin, y1 + margin)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def covers(self, bbox: tuple[float, float, float, float]) -> bool:
        x0, y0, x1, y1 = bbox
        return x0 >= self.x0 and y0 >= self.y0 and x1 <= self.x1 and y1 <= self.y1

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        return (pts[:, 0] >= self.x0) & (pts[:, 0] <= self.x1) & (pts[:, 1] >= self.y0) & (pts[:, 1] <= self.y1)

    def shape(self, h: float) -> tuple[int, int]:
        return math.ceil(self.width / h - 1e-9), math.ceil(self.height / h - 1e-9)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}


@dataclass(frozen=True, eq=False)
class GridRealization:
    """Cell values of the basis on a grid of square cells of side ``h``.

    ``values[i, j]`` is ``L`` of the cell whose center is
    ``(x0 + (i + 1/2) h, y0 + (j + 1/2) h)``.
    """

    window: Window
    h: float
    values: np.ndarray = field(repr=False)
    triplet: CharacteristicTriplet
    approximate: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidParameterError(f"Cell size must be positive, got {self.h}")
        if self.values.shape != self.window.shape(self.h):
            raise InvalidParameterError(
                f"Expected {self.window.shape(self.h)} cell values, got {self.values.shape}"
            )
        self.values.setflags(write=False)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def axis_centers(self, axis: int) -> np.ndarray:
        origin = self.window.x0 if axis == 0 else self.window.y0
        return origin + (np.arange(self.values.shape[axis]) + 0.5) * self.h

    def index_range(self, bbox: tuple[float, float, float, float]) -> tuple[slice, slice]:
        """Cells whose centers may fall inside ``bbox``."""
        x0, y0, x1, y1 = bbox
        nx, ny = self.values.shape
        i0 = max(0, math.floor((x0 - self.window.x0) / self.h - 0.5))
        i1 = min(nx, math.ceil((x1 - self.window.x0) / self.h + 0.5))
        j0 = max(0, math.floor((y0 - self.window.y0) / self.h - 0.5))
        j1 = min(ny, math.ceil((y1 - self.window.y0) / self.h + 0.5))
        return slice(i0, max(i0, i1)), slice(j0, max(j0, j1))

    def centers(self, rows: slice = slice(None), cols: slice = slice(None)) -> np.ndarray:
        gx, gy = np.meshgrid(self.axis_centers(0)[rows], self.axis_centers(1)[cols], indexing="ij")
        return np.column_stack((gx.ravel(), gy.ravel()))

    def header(self) -> dict:
        return {
            "type": "grid",
            "window": self.window.to_dict(),
            "h": self.h,
            "shape": list(self.values.shape),
            "approximate": self.approximate,
        }


@dataclass(frozen=True, eq=False)
class AtomRealization:
    """Exact compound Poisson noise: ``L(A) = drift Leb(A) + sum_{q_i in A} x_i``."""

    window: Window
    positions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    drift: float
    triplet: CharacteristicTriplet

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if positions.shape[0] != weights.size:
            raise InvalidParameterError("One jump size per atom is required")
        if not np.all(self.window.contains(positions)):
            raise InvalidParameterError("Atoms must lie inside the window")
        positions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)

    @property
    def n_atoms(self) -> int:
        return int(self.weights.size)

    def header(self) -> dict:
        return {"type": "atoms", "window": self.window.to_dict(), "drift": self.drift, "n_atoms": self.n_atoms}


LevyRealization = GridRealization | AtomRealization


@dataclass(frozen=True)
class ConstantVolatility:
    c: float = 1.0

    kind = VolatilityKind.CONSTANT

    @property
    def bound(self) -> float:
        return abs(self.c)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "c": self.c}


@dataclass(frozen=True)
class IndependentGridVolatility:
    """Stationary positive field: iid ``Uniform[low, high]`` values on cells of side ``h``."""

    low: float
    high: float

    kind = VolatilityKind.INDEPENDENT_GRID

    def __post_init__(self):
        if not 0.0 < self.low <= self.high:
            raise InvalidParameterError(f"Volatility range must satisfy 0 < low <= high, got ({self.low}, {self.high})")

    @property
    def bound(self) -> float:
        return self.high

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "low": self.low, "high": self.high}


@dataclass(frozen=True)
class LatticeVolatility:
    """User-supplied volatility on a lattice, interpolated linearly."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    values: tuple[tuple[float, ...], ...] = field(repr=False)

    kind = VolatilityKind.LATTICE

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.x), len(self.y)):
            raise InvalidParameterError(f"Lattice values must have shape {(len(self.x), len(self.y))}")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("Lattice volatility must be finite")
        object.__setattr__(self, "values", tuple(tuple(row) for row in values.tolist()))

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.values)))

    def interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator((np.asarray(self.x), np.asarray(self.y)), np.asarray(self.values))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "x": list(self.x), "y": list(self.y), "values": [list(r) for r in self.values]}


VolatilitySpec = ConstantVolatility | IndependentGridVolatility | LatticeVolatility


@dataclass(frozen=True, eq=False)
class VolatilityField:
    """A volatility realization; piecewise constant on cells when ``cell_values`` is set."""

    spec: VolatilitySpec
    window: Window | None = None
    h: float | None = None
    cell_values: np.ndarray | None = field(default=None, repr=False)

    def at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        match self.spec:
            case ConstantVolatility(c=c):
                return np.full(pts.shape[0], float(c))
            case LatticeVolatility():
                return self.spec.interpolator()(pts)
            case IndependentGridVolatility():
                i = np.clip(((pts[:, 0] - self.window.x0) / self.h).astype(int), 0, self.cell_values.shape[0] - 1)
                j = np.clip(((pts[:, 1] - self.window.y0) / self.h).astype(int), 0, self.cell_values.shape[1] - 1)
                return self.cell_values[i, j]


def volatility_from_dict(payload: dict | None) -> VolatilitySpec:
    if payload is None:
        return ConstantVolatility()
    kind = VolatilityKind(payload["kind"])
    match kind:
        case VolatilityKind.CONSTANT:
            return ConstantVolatility(float(payload.get("c", 1.0)))
        case VolatilityKind.INDEPENDENT_GRID:
            return IndependentGridVolatility(float(payload["low"]), float(payload["high"]))
        case VolatilityKind.LATTICE:
            return LatticeVolatility(tuple(payload["x"]), tuple(payload["y"]), payload["values"])
