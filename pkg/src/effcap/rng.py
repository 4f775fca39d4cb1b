"""Counter-based random streams.

Every random quantity in a Monte Carlo run is addressed by
``(seed, stream, index)``: the draws for channel sample 17 are the same
whether the run uses one worker or sixteen, and regardless of how many
other samples were drawn before it.
"""

import numpy as np

# stream identifiers; keep stable, they are part of the reproducibility contract
CHANNEL = 0
NOISE = 1
SYMBOLS = 2
QUEUE = 3
ORACLE = 7

_MASK64 = (1 << 64) - 1


def stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for item ``index`` of ``stream`` under ``seed``.

    Uses Philox-4x64 with the 128-bit key ``(seed, stream)`` and the item
    index in the top counter word, so distinct items never share counter
    space.
    """
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    counter = np.array([0, 0, 0, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return np.sqrt(variance / 2.0) * (z[0] + 1j * z[1])
