from .exit_code import ExitCode
from .kinds import (
    FunctionalMode,
    JumpLawKind,
    KernelKind,
    MeasureKind,
    ProfileKind,
    ScaleStatistic,
    ShapeKind,
    VolatilityKind,
)
from .regime_tag import RegimeTag
from .streams import StreamPurpose
from .subcommand import ModelTest, Subcommand
