"""Counter-based seed derivation.

Every random draw in the package gets its own 64-bit seed computed as::

    derive_seed(master, stream, draw)
        = splitmix64(splitmix64(splitmix64(master) ^ stream) ^ draw)

so draw ``d`` of stream ``s`` is the same whether draws are produced serially
or by a pool of workers in any order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream ids in use; new streams get new numbers, existing ones never change
STREAM_GENERATOR = 0
STREAM_JL_PHI = 1
STREAM_JL_SIGN = 2
STREAM_RIP_SUPPORTS = 3
STREAM_POWER_START = 4
STREAM_OMEGA = 5
STREAM_SIGNAL = 6
STREAM_OPERATOR_DRAW = 7
STREAM_DECOUPLE = 8
STREAM_CHAOS_FAMILY = 9
STREAM_POINTS = 10


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, stream: int, draw: int = 0) -> int:
    z = splitmix64(int(master) & MASK64)
    z = splitmix64(z ^ (int(stream) & MASK64))
    return splitmix64(z ^ (int(draw) & MASK64))


def rng_for(master: int, stream: int, draw: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, stream, draw))
