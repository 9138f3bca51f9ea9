from hashlib import blake2b
from typing import Iterable
import struct

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1

GENERATOR_NAME = "philox4x64-10"
GAUSSIAN_METHOD = "inverse-cdf (scipy.special.ndtri) of (k + 0.5) / 2^52, k uniform on [0, 2^52)"


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; the mixing function for substream seeds."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def float_bits(value: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(value)))[0]


def index_hash(indices: Iterable) -> int:
    text = ",".join(str(idx) for idx in indices)
    return int.from_bytes(blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def substream_seed(base_seed: int, replication: int, n: float, index_key: int) -> int:
    """64-bit mix of (base_seed, replication, bits of n, index hash)."""
    h = splitmix64(int(base_seed) & MASK64)
    h = splitmix64(h ^ (int(replication) & MASK64))
    h = splitmix64(h ^ float_bits(n))
    return splitmix64(h ^ (int(index_key) & MASK64))


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    k = rng.integers(0, 1 << 52, size=size, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) / float(1 << 52)


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    return ndtri(open_uniforms(rng, size))
