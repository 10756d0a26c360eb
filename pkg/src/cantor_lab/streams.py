"""Counter-based per-cube random streams.

Every random decision in a construction is a pure function of
(seed, level, packed cube index), obtained by chaining the splitmix64
finalizer.  Traversal order, chunking and thread count therefore cannot
change the output, and decisions attached to distinct cubes are
independent draws from a keyed hash.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SEED_SALT = np.uint64(0x243F6A8885A308D3)   # pi digits
_LEVEL_SALT = np.uint64(0x13198A2E03707344)
_INV_2_53 = 1.0 / float(1 << 53)


def _mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; bijective on uint64 (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        x = x + _GOLDEN
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def stream_key(seed: int, level: int) -> np.uint64:
    """Key shared by all cubes of one level of one construction."""
    with np.errstate(over="ignore"):
        s = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _SEED_SALT)
        return _mix64(s ^ (_LEVEL_SALT * np.uint64(level + 1)))


def cube_hash(seed: int, level: int, packed) -> np.ndarray:
    """64-bit hash per packed cube index (vectorized)."""
    key = stream_key(seed, level)
    p = np.asarray(packed, dtype=np.int64).astype(np.uint64)
    return _mix64(p ^ key)


def cube_uniform(seed: int, level: int, packed) -> np.ndarray:
    """Uniform [0,1) variate per cube, 53-bit resolution."""
    h = cube_hash(seed, level, packed)
    return (h >> np.uint64(11)).astype(np.float64) * _INV_2_53


def cube_integer(seed: int, level: int, packed, m: int) -> np.ndarray:
    """Uniform integer in [0, m) per cube."""
    u = cube_uniform(seed, level, packed)
    out = np.floor(u * m).astype(np.int64)
    # guard against u*m rounding up to m
    np.minimum(out, m - 1, out=out)
    return out


def derive_seed(seed: int, index: int) -> int:
    """Deterministic per-trial sub-seed."""
    return int(_mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _mix64(np.uint64(index))))
