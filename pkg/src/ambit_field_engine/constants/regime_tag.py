from enum import StrEnum


class RegimeTag(StrEnum):
    """Asymptotic regime of flux and circulation on shrinking circles."""

    GAUSSIAN_ATTRACTOR = "GaussianAttractor"
    STABLE_ATTRACTOR = "StableAttractor"
    CLASSICAL = "Classical"
