"""Portable random streams.

Noise must be reproducible by any implementation, so it does not go through
numpy's generator internals. The recipe:

* **uniforms** -- SplitMix64 as a counter generator. Output ``i`` (0-based) is
  ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)`` with
  ``mix(z) = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64). This is exactly
  the sequence of the reference ``splitmix64.c``. A 64-bit output becomes a
  double in [0, 1) as ``(z >> 11) * 2**-53``.
* **normals** -- Box-Muller on consecutive pairs ``(u0, u1)``:
  ``rho = sqrt(-2 ln(1 - u0))``, emitting ``rho*cos(2 pi u1)`` then
  ``rho*sin(2 pi u1)``. An odd-length request drops the final sine.
* **seed derivation** -- child seeds are the first 8 bytes (little-endian) of
  ``blake2b(f"{master}/{label}/...", digest_size=8)``.
"""
from __future__ import annotations

import hashlib

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of SplitMix64 started from state ``seed``."""
    seed &= MASK64
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(seed) + idx * np.uint64(GOLDEN)
        return _mix(state)


def uniforms(seed: int, count: int) -> np.ndarray:
    z = splitmix64(seed, count)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def standard_normals(seed: int, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u = uniforms(seed, 2 * pairs)
    rho = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    theta = 2.0 * np.pi * u[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = rho * np.cos(theta)
    out[1::2] = rho * np.sin(theta)
    return out[:count]


def derive_seed(master: int, *labels) -> int:
    text = "/".join([str(int(master))] + [str(x) for x in labels])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")
