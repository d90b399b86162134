from enum import StrEnum


class Subcommand(StrEnum):
    GEOMETRY = "geometry"
    SIMULATE = "simulate"
    FLUX_SCAN = "flux-scan"
    LIMIT_CHECK = "limit-check"
    MODEL_DEMO = "model-demo"
    DECOMPOSITION_AUDIT = "decomposition-audit"


class ModelTest(StrEnum):
    """Tests run by the ``model-demo`` subcommand."""

    INCOMPRESSIBILITY = "incompressibility"
    IRROTATIONALITY = "irrotationality"
    ISOTROPY = "isotropy"
