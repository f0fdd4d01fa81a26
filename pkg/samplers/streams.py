"""
Counter-based random streams

Every stream is a Philox generator keyed by (master seed, purpose, index),
so the numbers a particle block sees depend only on that key and never on
how blocks are scheduled across workers.
"""

from typing import List

import numpy as np

from config import STREAM_BLOCK

# Stream purposes (high bits of the key's low word)
ENSEMBLE = 1
REFERENCE = 2
COUPLING = 3
ORDER_COIN = 4
INITIAL = 5
REPLICATE = 6

SEED_MASK = (1 << 64) - 1


def stream_key(seed: int, purpose: int, index: int) -> int:
    """128-bit Philox key: seed in the high word, purpose/index in the low word"""
    return ((int(seed) & SEED_MASK) << 64) | (purpose << 48) | int(index)


def make_stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(seed, purpose, index)))


def block_slices(n: int, block_size: int = STREAM_BLOCK) -> List[slice]:
    """Fixed partition of n items into stream blocks"""
    return [slice(start, min(start + block_size, n)) for start in range(0, n, block_size)]


def block_streams(seed: int, purpose: int, n: int, block_size: int = STREAM_BLOCK) -> List[np.random.Generator]:
    return [make_stream(seed, purpose, i) for i in range(len(block_slices(n, block_size)))]


def shared_coin(seed: int, step: int) -> float:
    """Order coin shared by every particle at a given step"""
    bitgen = np.random.Philox(key=stream_key(seed, ORDER_COIN, 0), counter=int(step))
    return float(np.random.Generator(bitgen).random())


def replicate_seed(seed: int, replicate: int) -> int:
    """Derive an independent master seed for a seed replicate"""
    if replicate == 0:
        return int(seed) & SEED_MASK
    state = np.random.SeedSequence([int(seed) & SEED_MASK, REPLICATE, replicate]).generate_state(1, np.uint64)
    return int(state[0])
