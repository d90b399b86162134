from enum import IntEnum


class StreamPurpose(IntEnum):
    """Last component of a random stream key, so every consumer draws from its own stream."""

    NOISE = 0
    VOLATILITY = 1
    LIMIT_FIELD = 2
    ROTATED = 3
    REFERENCE = 4
