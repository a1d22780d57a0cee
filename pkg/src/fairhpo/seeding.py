"""Counter-based seed derivation.

Every random stream is addressed by (master seed, stream name, index), so a
stream's contents never depend on how many draws other streams made or on the
order in which concurrent work finishes.
"""
import zlib

import numpy as np


def _sequence(seed: int, stream: str, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(stream.encode()), int(index)))


def derive_seed(seed: int, stream: str, index: int = 0) -> int:
    a, b = _sequence(seed, stream, index).generate_state(2, np.uint32)
    return (int(a) << 31) ^ int(b)


def derive_rng(seed: int, stream: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(_sequence(seed, stream, index))
