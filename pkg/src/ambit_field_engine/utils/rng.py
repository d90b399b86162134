import numpy as np

from ambit_field_engine.constants import StreamPurpose


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the counter-based generator addressed by ``(seed, *key)``.

    Streams are Philox generators keyed through ``SeedSequence.spawn_key``, so
    the draws of one key never depend on which other keys were consumed, or
    in which order.

    Parameters
    ----------
    seed : int
        Experiment seed
    *key : int
        Stream address, e.g. ``(r_index, replicate, StreamPurpose.NOISE)``

    Returns
    -------
    np.random.Generator
        Independent generator for this address
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def replicate_stream(
    seed: int,
    replicate: int,
    purpose: StreamPurpose = StreamPurpose.NOISE,
    *,
    group: int = 0,
) -> np.random.Generator:
    """Stream of one Monte Carlo replicate; ``group`` separates r-grid points or test arms."""
    return stream(seed, group, replicate, purpose)
