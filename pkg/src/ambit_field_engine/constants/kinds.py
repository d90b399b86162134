from enum import StrEnum


class MeasureKind(StrEnum):
    """``kind`` tags of Levy measure specs in JSON configs."""

    NONE = "none"
    STABLE = "stable"
    COMPOUND_POISSON = "cp"
    GENERALIZED_HYPERBOLIC = "gh"


class JumpLawKind(StrEnum):
    CONSTANT = "constant"
    DISCRETE = "discrete"
    NORMAL = "normal"
    EXPONENTIAL = "exponential"


class ShapeKind(StrEnum):
    DISK = "disk"
    ANNULUS = "annulus"
    POLYGON = "polygon"
    DIFFERENCE = "difference"


class ProfileKind(StrEnum):
    POWER = "power"
    POLYNOMIAL = "polynomial"
    BUMP = "bump"


class KernelKind(StrEnum):
    ISOTROPIC = "isotropic"
    POLYNOMIAL = "polynomial"
    TABULATED = "tabulated"


class VolatilityKind(StrEnum):
    CONSTANT = "constant"
    INDEPENDENT_GRID = "independent_grid"
    LATTICE = "lattice"


class FunctionalMode(StrEnum):
    """Which line integral is taken over a circle: normal (flux) or tangential (circulation)."""

    FLUX = "flux"
    CIRCULATION = "circulation"


class ScaleStatistic(StrEnum):
    IQR = "iqr"
    MEDIAN_ABS = "median_abs"
    STD = "std"
