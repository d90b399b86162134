"""JSON experiment configuration: pydantic models that build the immutable domain objects."""

import json
import logging
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ambit_field_engine.constants import FunctionalMode, ModelTest, ScaleStatistic
from ambit_field_engine.exceptions import AmbitError, ConfigError
from ambit_field_engine.objects import (
    DEFAULT_R_GRID,
    DEFAULT_Z_GRID,
    AmbitSet,
    Annulus,
    BumpVanishing,
    CharacteristicTriplet,
    CompoundPoisson,
    ConstantJumps,
    ConstantVolatility,
    ConvexPolygon,
    DiscreteJumps,
    Disk,
    Experiment,
    ExponentialJumps,
    GHDensity,
    IndependentGridVolatility,
    Isotropic,
    LatticeVolatility,
    ModelOptions,
    NormalJumps,
    Polynomial,
    PolynomialRadial,
    PowerLaw,
    SetDifference,
    StableDensity,
    Tabulated,
)
from ambit_field_engine.utils import sha256_hex

logger = logging.getLogger(__name__)


class Spec(BaseModel):
    """A config node that builds one domain object; domain errors surface as validation errors."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    def build(self):
        raise NotImplementedError

    @model_validator(mode="after")
    def _buildable(self):
        try:
            self.build()
        except AmbitError as e:
            raise ValueError(str(e)) from e
        return self


# --- jumps and Levy measures ---


class ConstantJumpsConfig(Spec):
    law: Literal["constant"]
    value: float

    def build(self) -> ConstantJumps:
        return ConstantJumps(self.value)


class DiscreteJumpsConfig(Spec):
    law: Literal["discrete"]
    values: list[float]
    probabilities: list[float]

    def build(self) -> DiscreteJumps:
        return DiscreteJumps(tuple(self.values), tuple(self.probabilities))


class NormalJumpsConfig(Spec):
    law: Literal["normal"]
    mean: float = 0.0
    std: float

    def build(self) -> NormalJumps:
        return NormalJumps(self.mean, self.std)


class ExponentialJumpsConfig(Spec):
    law: Literal["exponential"]
    scale: float

    def build(self) -> ExponentialJumps:
        return ExponentialJumps(self.scale)


JumpsConfig = Annotated[
    Union[ConstantJumpsConfig, DiscreteJumpsConfig, NormalJumpsConfig, ExponentialJumpsConfig],
    Field(discriminator="law"),
]


class NoJumpsConfig(Spec):
    kind: Literal["none"]

    def build(self) -> None:
        return None


class StableConfig(Spec):
    kind: Literal["stable"]
    k_plus: float
    k_minus: float
    beta: float

    def build(self) -> StableDensity:
        return StableDensity(self.k_plus, self.k_minus, self.beta)


class CompoundPoissonConfig(Spec):
    kind: Literal["cp"]
    rate: float
    jumps: JumpsConfig

    def build(self) -> CompoundPoisson:
        return CompoundPoisson(self.rate, self.jumps.build())


class GHConfig(Spec):
    kind: Literal["gh"]
    lam: float
    alpha: float
    theta: float = 0.0
    delta: float

    def build(self) -> GHDensity:
        return GHDensity(self.lam, self.alpha, self.theta, self.delta)


MeasureConfig = Annotated[
    Union[NoJumpsConfig, StableConfig, CompoundPoissonConfig, GHConfig],
    Field(discriminator="kind"),
]


class TripletConfig(Spec):
    gamma: float = 0.0
    b: float = 0.0
    nu: MeasureConfig | None = None

    def build(self) -> CharacteristicTriplet:
        return CharacteristicTriplet(self.gamma, self.b, self.nu.build() if self.nu is not None else None)


# --- kernels ---


class PowerProfileConfig(Spec):
    kind: Literal["power"]
    k: float = 1.0
    p: float

    def build(self) -> PowerLaw:
        return PowerLaw(self.k, self.p)


class PolynomialProfileConfig(Spec):
    kind: Literal["polynomial"]
    coeffs: list[float]

    def build(self) -> PolynomialRadial:
        return PolynomialRadial(tuple(self.coeffs))


class BumpProfileConfig(Spec):
    kind: Literal["bump"]
    a: float
    b: float
    amplitude: float = 1.0

    def build(self) -> BumpVanishing:
        return BumpVanishing(self.a, self.b, self.amplitude)


ProfileConfig = Annotated[
    Union[PowerProfileConfig, PolynomialProfileConfig, BumpProfileConfig],
    Field(discriminator="kind"),
]


class IsotropicKernelConfig(Spec):
    kind: Literal["isotropic"]
    phi: float = 0.0
    profile: ProfileConfig

    def build(self) -> Isotropic:
        return Isotropic(self.phi, self.profile.build())


class PolynomialKernelConfig(Spec):
    """``cx[j][k]`` is the coefficient of ``x^j y^k`` in the first component."""

    kind: Literal["polynomial"]
    cx: list[list[float]]
    cy: list[list[float]]

    def build(self) -> Polynomial:
        return Polynomial(self.cx, self.cy)


class TabulatedKernelConfig(Spec):
    kind: Literal["tabulated"]
    x: list[float]
    y: list[float]
    values_x: list[list[float]]
    values_y: list[list[float]]

    def build(self) -> Tabulated:
        return Tabulated(tuple(self.x), tuple(self.y), self.values_x, self.values_y)


KernelConfig = Annotated[
    Union[IsotropicKernelConfig, PolynomialKernelConfig, TabulatedKernelConfig],
    Field(discriminator="kind"),
]


# --- shapes ---


class DiskConfig(Spec):
    kind: Literal["disk"]
    center: tuple[float, float] = (0.0, 0.0)
    radius: float

    def build(self) -> Disk:
        return Disk(self.center, self.radius)


class AnnulusConfig(Spec):
    kind: Literal["annulus"]
    center: tuple[float, float] = (0.0, 0.0)
    inner: float
    outer: float

    def build(self) -> Annulus:
        return Annulus(self.center, self.inner, self.outer)


class PolygonConfig(Spec):
    kind: Literal["polygon"]
    vertices: list[tuple[float, float]]

    def build(self) -> ConvexPolygon:
        return ConvexPolygon(tuple(self.vertices))


SimpleShapeConfig = Annotated[Union[DiskConfig, AnnulusConfig, PolygonConfig], Field(discriminator="kind")]


class DifferenceConfig(Spec):
    kind: Literal["difference"]
    outer: SimpleShapeConfig
    holes: list[SimpleShapeConfig] = []

    def build(self) -> SetDifference:
        return SetDifference(self.outer.build(), tuple(hole.build() for hole in self.holes))


ShapeConfig = Annotated[
    Union[DiskConfig, AnnulusConfig, PolygonConfig, DifferenceConfig],
    Field(discriminator="kind"),
]


# --- volatility ---


class ConstantVolatilityConfig(Spec):
    kind: Literal["constant"]
    c: float = 1.0

    def build(self) -> ConstantVolatility:
        return ConstantVolatility(self.c)


class IndependentGridVolatilityConfig(Spec):
    kind: Literal["independent_grid"]
    low: float
    high: float

    def build(self) -> IndependentGridVolatility:
        return IndependentGridVolatility(self.low, self.high)


class LatticeVolatilityConfig(Spec):
    kind: Literal["lattice"]
    x: list[float]
    y: list[float]
    values: list[list[float]]

    def build(self) -> LatticeVolatility:
        return LatticeVolatility(tuple(self.x), tuple(self.y), self.values)


VolatilityConfig = Annotated[
    Union[ConstantVolatilityConfig, IndependentGridVolatilityConfig, LatticeVolatilityConfig],
    Field(discriminator="kind"),
]


class ModelConfig(Spec):
    """Model battery settings; ``test`` picks what ``model-demo`` runs."""

    test: ModelTest = ModelTest.INCOMPRESSIBILITY
    theta: float = ModelOptions.theta
    offset: tuple[float, float] = ModelOptions.offset
    threshold: float = ModelOptions.threshold
    band: float = ModelOptions.band
    negative_control: bool = False
    cell_size: float = ModelOptions.cell_size

    def build(self) -> ModelOptions:
        return ModelOptions(self.theta, self.offset, self.threshold, self.band, self.negative_control, self.cell_size)


# --- experiment ---


class ExperimentConfig(BaseModel):
    """Top-level experiment file.

    ``seed`` may be left out when the command line supplies ``--seed``.
    ``mesh`` is the boundary mesh of the limit-field simulation.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    triplet: TripletConfig = TripletConfig()
    kernel: KernelConfig
    ambit_set: ShapeConfig = Field(alias="set")
    volatility: VolatilityConfig | None = None
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    r_grid: list[float] = list(DEFAULT_R_GRID)
    replicates: int = Field(default=2000, ge=100)
    n_theta: int = Field(default=256, ge=16)
    cell_size: float | None = Field(default=None, gt=0)
    statistic: ScaleStatistic = ScaleStatistic.IQR
    mode: FunctionalMode = FunctionalMode.FLUX
    z_grid: list[float] = list(DEFAULT_Z_GRID)
    allow_approximation: bool = False
    tolerance: float | None = Field(default=None, gt=0)
    claimed_exponent: float | None = None
    cf_allowance: float = Field(default=0.03, ge=0)
    mesh: float | None = Field(default=None, gt=0)
    model: ModelConfig = ModelConfig()
    seed: int | None = Field(default=None, ge=0)

    @field_validator("r_grid")
    @classmethod
    def _decreasing(cls, value: list[float]) -> list[float]:
        if len(value) < 3:
            raise ValueError(f"needs at least 3 radii, got {len(value)}")
        if any(r <= 0 for r in value) or any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("radii must be positive and strictly decreasing")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if self.cell_size is not None and self.cell_size > self.r_grid[-1] / 10 * (1 + 1e-12):
            raise ValueError(f"cell_size {self.cell_size} exceeds r_min / 10 = {self.r_grid[-1] / 10}")
        measure = self.triplet.nu
        if self.statistic == ScaleStatistic.STD and isinstance(measure, StableConfig):
            raise ValueError("stable bases have infinite variance; use statistic iqr or median_abs")
        return self

    def build(self, seed: int | None = None) -> Experiment:
        """The domain experiment; ``seed`` overrides the file's seed."""
        seed = self.seed if seed is None else seed
        if seed is None:
            raise ConfigError("seed: required for stochastic runs (set it in the file or pass --seed)")
        try:
            return Experiment(
                triplet=self.triplet.build(),
                kernel=self.kernel.build(),
                ambit_set=AmbitSet(self.ambit_set.build()),
                seed=seed,
                r_grid=tuple(self.r_grid),
                replicates=self.replicates,
                points=tuple(self.points),
                volatility=self.volatility.build() if self.volatility is not None else None,
                n_theta=self.n_theta,
                cell_size=self.cell_size,
                statistic=self.statistic,
                mode=self.mode,
                z_grid=tuple(self.z_grid),
                allow_approximation=self.allow_approximation,
                tolerance=self.tolerance,
                claimed_exponent=self.claimed_exponent,
                cf_allowance=self.cf_allowance,
                mesh=self.mesh,
                model=self.model.build(),
            )
        except AmbitError as e:
            raise ConfigError(f"experiment: {e}") from e


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    path = ".".join(str(part) for part in first["loc"]) or "<root>"
    return f"{path}: {first['msg']}"


def parse_config(payload: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e


def load_config(path: Path | str) -> ExperimentConfig:
    """Read and validate an experiment file.

    Raises
    ------
    ConfigError
        If the file is unreadable, not JSON, or invalid; the message names the field
    """
    _path = Path(path)
    try:
        payload = json.loads(_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Cannot read config {_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config {_path} is not valid JSON: {e}") from e
    config = parse_config(payload)
    logger.info(f"Loaded config {_path} ({config_hash(config)[:12]})")
    return config


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON of the validated config."""
    return sha256_hex(config.model_dump(mode="json", by_alias=True))
