"""Counter-based Gaussian stream: Philox4x64-10 keyed by the seed.

A block of four 64-bit words is a pure function of ``(key, counter)``, so the
normal used by path ``i`` at step ``k`` never depends on how paths are split
between workers.  The block function is bit-compatible with
``numpy.random.Philox`` (see tests), which only exposes a sequential stream.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_PI = 2.0 * math.pi
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _MASK32) + (hl & _MASK32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    lo = a * b
    return hi, lo


@njit(cache=True, nogil=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x64 on one counter block."""
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


@njit(cache=True, nogil=True, inline="always")
def _open_unit(x):
    # 53-bit uniform in (0, 1)
    return (float(x >> _S11) + 0.5) * _INV53


@njit(cache=True, nogil=True)
def normal_block(k0, k1, path, block, out):
    """Fill ``out[0:4]`` with four standard normals for (path, block)."""
    r0, r1, r2, r3 = philox4x64(uint64(block), uint64(path), uint64(0), uint64(0), k0, k1)
    u0, u1, u2, u3 = _open_unit(r0), _open_unit(r1), _open_unit(r2), _open_unit(r3)
    ra = math.sqrt(-2.0 * math.log(u0))
    rb = math.sqrt(-2.0 * math.log(u2))
    out[0] = ra * math.cos(_TWO_PI * u1)
    out[1] = ra * math.sin(_TWO_PI * u1)
    out[2] = rb * math.cos(_TWO_PI * u3)
    out[3] = rb * math.sin(_TWO_PI * u3)


def stream_key(seed: int, stream: int = 0) -> tuple[np.uint64, np.uint64]:
    """Philox key from a 64-bit seed and an experiment-level stream id."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.uint64(seed), np.uint64(stream)


@njit(cache=True)
def _normals(k0, k1, path, n):
    out = np.empty(((n + 3) // 4) * 4)
    for b in range(out.size // 4):
        normal_block(k0, k1, path, b, out[4 * b:4 * b + 4])
    return out[:n]


def path_normals(seed: int, path: int, n: int, stream: int = 0) -> np.ndarray:
    """The first ``n`` normals of one path's stream (for inspection and tests)."""
    k0, k1 = stream_key(seed, stream)
    return _normals(k0, k1, np.uint64(path), n)
