import math
from dataclasses import dataclass, field

from ambit_field_engine.constants import FunctionalMode, ScaleStatistic
from ambit_field_engine.exceptions import InvalidParameterError

from .ambit_set import AmbitSet
from .kernel_specs import KernelSpec
from .levy_measures import StableDensity
from .realizations import VolatilitySpec
from .triplet import CharacteristicTriplet

MIN_REPLICATES = 100
MIN_RATE_POINTS = 3
CELLS_PER_RADIUS = 10
DEFAULT_R_GRID = (0.04, 0.028, 0.02, 0.014, 0.01)
DEFAULT_Z_GRID = tuple(-3.0 + 0.25 * k for k in range(25))


@dataclass(frozen=True)
class ModelOptions:
    """Knobs of the model battery: rotation, increment offset and verdict thresholds."""

    theta: float = 0.5 * math.pi
    offset: tuple[float, float] = (0.5, 0.0)
    threshold: float = 0.05
    band: float = 3.0
    negative_control: bool = False
    cell_size: float = 0.04

    def __post_init__(self):
        if not self.cell_size > 0:
            raise InvalidParameterError(f"Model cell size must be positive, got {self.cell_size}")
        if not (self.threshold > 0 and self.band > 0):
            raise InvalidParameterError("Model thresholds must be positive")
        object.__setattr__(self, "offset", tuple(float(c) for c in self.offset))

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "offset": list(self.offset),
            "threshold": self.threshold,
            "band": self.band,
            "negative_control": self.negative_control,
            "cell_size": self.cell_size,
        }


@dataclass(frozen=True)
class Experiment:
    """A fully built Monte Carlo experiment: basis, kernel, set, grids and verdict settings.

    ``r_grid`` is strictly decreasing. ``cell_size`` defaults to ``r_min / 10``
    and may not exceed it. ``claimed_exponent`` replaces the regime exponent in
    the rate verdict, which is how negative controls are run.
    """

    triplet: CharacteristicTriplet
    kernel: KernelSpec
    ambit_set: AmbitSet
    seed: int
    r_grid: tuple[float, ...] = DEFAULT_R_GRID
    replicates: int = 2000
    points: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    volatility: VolatilitySpec | None = None
    n_theta: int = 256
    cell_size: float | None = None
    statistic: ScaleStatistic = ScaleStatistic.IQR
    mode: FunctionalMode = FunctionalMode.FLUX
    z_grid: tuple[float, ...] = DEFAULT_Z_GRID
    allow_approximation: bool = False
    tolerance: float | None = None
    claimed_exponent: float | None = None
    cf_allowance: float = 0.03
    mesh: float | None = None
    model: ModelOptions = field(default_factory=ModelOptions)

    def __post_init__(self):
        r_grid = tuple(float(r) for r in self.r_grid)
        object.__setattr__(self, "r_grid", r_grid)
        object.__setattr__(self, "points", tuple(tuple(float(c) for c in p) for p in self.points))
        object.__setattr__(self, "statistic", ScaleStatistic(self.statistic))
        object.__setattr__(self, "mode", FunctionalMode(self.mode))
        if len(r_grid) < MIN_RATE_POINTS:
            raise InvalidParameterError(f"The r-grid needs at least {MIN_RATE_POINTS} points, got {len(r_grid)}")
        if any(r <= 0 for r in r_grid) or any(b >= a for a, b in zip(r_grid, r_grid[1:])):
            raise InvalidParameterError(f"The r-grid must be positive and strictly decreasing, got {r_grid}")
        if self.replicates < MIN_REPLICATES:
            raise InvalidParameterError(f"At least {MIN_REPLICATES} replicates are required, got {self.replicates}")
        if not self.points:
            raise InvalidParameterError("At least one evaluation point is required")
        if self.cell_size is not None and not 0 < self.cell_size <= self.r_min / CELLS_PER_RADIUS * (1 + 1e-12):
            raise InvalidParameterError(
                f"Cell size {self.cell_size} must lie in (0, r_min / {CELLS_PER_RADIUS}] = (0, {self.r_min / CELLS_PER_RADIUS}]"
            )
        if self.mesh is not None and not self.mesh > 0:
            raise InvalidParameterError(f"Boundary mesh must be positive, got {self.mesh}")
        if self.statistic == ScaleStatistic.STD and isinstance(self.triplet.levy_measure, StableDensity):
            raise InvalidParameterError("Stable bases have infinite variance; use the iqr or median_abs statistic")

    @property
    def r_min(self) -> float:
        return self.r_grid[-1]

    @property
    def h(self) -> float:
        return self.cell_size if self.cell_size is not None else self.r_min / CELLS_PER_RADIUS

    def to_dict(self) -> dict:
        return {
            "triplet": self.triplet.to_dict(),
            "kernel": self.kernel.to_dict(),
            "set": self.ambit_set.to_dict(),
            "seed": self.seed,
            "r_grid": list(self.r_grid),
            "replicates": self.replicates,
            "points": [list(p) for p in self.points],
            "volatility": self.volatility.to_dict() if self.volatility is not None else None,
            "n_theta": self.n_theta,
            "cell_size": self.h,
            "statistic": self.statistic.value,
            "mode": self.mode.value,
            "allow_approximation": self.allow_approximation,
            "claimed_exponent": self.claimed_exponent,
            "mesh": self.mesh,
            "model": self.model.to_dict(),
        }
