"""
Counter-based random streams.

Every stochastic step is addressed by ``(seed, counter)``: bootstrap replicate
``b`` reads stream ``(seed, b)``, simulation replication ``r`` derives its seeds
from ``(master_seed, r)``. Results therefore do not depend on execution order
or on how work is split across threads.
"""

from typing import Sequence

import numpy as np
from scipy.special import ndtri

_UINT64 = 2 ** 64
_MANTISSA_BITS = 53


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(master_seed, *keys)``."""
    entropy = [int(master_seed) % _UINT64] + [int(k) % _UINT64 for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def counter_stream(seed: int, counter: int) -> np.random.Generator:
    """Generator positioned at block ``counter`` of the Philox stream keyed by ``seed``.

    The counter occupies the third 64-bit word of the Philox counter, so streams
    for different counters never overlap for any practical draw count.
    """
    bit_generator = np.random.Philox(key=int(seed) % _UINT64,
                                     counter=(int(counter) % _UINT64) << 128)
    return np.random.Generator(bit_generator)


def uniform_open(seed: int, counter: int, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1) built from 53 random bits."""
    bits = counter_stream(seed, counter).integers(0, 1 << _MANTISSA_BITS, size=size, dtype=np.int64)
    return (bits.astype(np.float64) + 0.5) * 2.0 ** -_MANTISSA_BITS


def standard_normals(seed: int, counter: int, size) -> np.ndarray:
    """Standard normal draws by inverse-CDF transform of ``uniform_open``."""
    return ndtri(uniform_open(seed, counter, size))


def normal_block(seed: int, counters: Sequence[int], size: int) -> np.ndarray:
    """Stack of ``standard_normals`` rows, one per counter."""
    block = np.empty((len(counters), size), dtype=np.float64)
    for row, counter in enumerate(counters):
        block[row] = standard_normals(seed, counter, size)
    return block
