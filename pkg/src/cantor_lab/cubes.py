"""Exact M-adic cube indexing.

A level-n cube is prod_i [j_i M^-n, (j_i+1) M^-n) with 0 <= j_i < M^n.
Internally cubes are stored as a single packed integer in *tree order*:
the base-M^d digit string of the cube's ancestry.  In tree order the
children of a cube occupy a contiguous block, so

    parent(p)      = p // M^d
    children(p)    = p*M^d + {0, ..., M^d - 1}
    descendants(p) at level n, for p at level m:  [p*M^(d(n-m)), (p+1)*M^(d(n-m)))

which makes membership and descendant counting binary searches on sorted
per-level arrays.  For d = 1 the packed index coincides with the interval
index j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True, order=True)
class CubeIndex:
    """User-facing cube address: subdivision level and coordinate tuple."""

    level: int
    coords: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise ParameterError(f"cube level must be >= 0, got {self.level}")

    @property
    def d(self) -> int:
        return len(self.coords)


def validate_cube(q: CubeIndex, M: int) -> None:
    top = M ** q.level
    for j in q.coords:
        if not (0 <= j < top):
            raise DomainError(f"coordinate {j} out of range [0, {top}) at level {q.level}")


def pack(q: CubeIndex, M: int) -> int:
    """Tree-order packed index (interleaved base-M digits of all axes)."""
    validate_cube(q, M)
    d = q.d
    p = 0
    for i in range(q.level - 1, -1, -1):
        t = 0
        for j in q.coords:
            t = t * M + (j // M**i) % M
        p = p * M**d + t
    return p


def unpack(p: int, level: int, M: int, d: int) -> CubeIndex:
    """Inverse of :func:`pack`."""
    coords = [0] * d
    q = p
    for i in range(level):  # digits from deepest to root
        t = q % (M**d)
        q //= M**d
        for axis in range(d - 1, -1, -1):
            coords[axis] += (t % M) * M**i
            t //= M
    if q != 0:
        raise DomainError(f"packed index {p} out of range at level {level}")
    return CubeIndex(level, tuple(coords))


def cube_children(q: CubeIndex, M: int) -> list[CubeIndex]:
    """All M^d cubes of the next level contained in q."""
    validate_cube(q, M)
    d = q.d
    out = []
    base = tuple(j * M for j in q.coords)
    for t in range(M**d):
        offs = []
        tt = t
        for _ in range(d):
            offs.append(tt % M)
            tt //= M
        offs.reverse()
        out.append(CubeIndex(q.level + 1, tuple(b + o for b, o in zip(base, offs))))
    return out


def parent(q: CubeIndex, M: int) -> CubeIndex:
    if q.level == 0:
        raise DomainError("the root cube has no parent")
    return CubeIndex(q.level - 1, tuple(j // M for j in q.coords))


def children_packed(packed: np.ndarray, M: int, d: int) -> np.ndarray:
    """Sorted packed children of a sorted packed array."""
    k = M**d
    base = packed.astype(np.int64) * k
    return (base[:, None] + np.arange(k, dtype=np.int64)[None, :]).reshape(-1)


def parents_packed(packed: np.ndarray, M: int, d: int) -> np.ndarray:
    return packed // (M**d)


def descendant_range(p: int, level: int, target_level: int, M: int, d: int) -> tuple[int, int]:
    """Half-open packed range of level-`target_level` descendants."""
    if target_level < level:
        raise DomainError("target level must be >= cube level")
    span = (M**d) ** (target_level - level)
    return p * span, (p + 1) * span


# ---------------------------------------------------------------------------
# M-adic rational points and the M-adic metric


@dataclass(frozen=True)
class MadicPoint:
    """Point with coordinates num_i * M^-level, kept exact as integers."""

    level: int
    nums: tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.nums)


def madic_point(level: int, nums: tuple[int, ...] | int, M: int) -> MadicPoint:
    if isinstance(nums, int):
        nums = (nums,)
    top = M**level
    for v in nums:
        if not (0 <= v < top):
            raise DomainError(f"numerator {v} outside [0, M^level) for level {level}")
    return MadicPoint(level, tuple(nums))


def point_coords(x: MadicPoint, M: int) -> tuple[float, ...]:
    scale = float(M) ** (-x.level)
    return tuple(v * scale for v in x.nums)


def common_cube_level(x: MadicPoint, y: MadicPoint, M: int) -> int | None:
    """Largest m with x, y in one level-m cube; None means x == y (m = infinity).

    Computed as the longest common prefix of the base-M digit strings,
    simultaneously over all coordinates; no floating point is involved.
    """
    if x.d != y.d:
        raise DomainError("points have different dimensions")
    lvl = max(x.level, y.level)
    xs = [v * M ** (lvl - x.level) for v in x.nums]
    ys = [v * M ** (lvl - y.level) for v in y.nums]
    if xs == ys:
        return None
    m = lvl
    while m > 0:
        span = M ** (lvl - m)
        if all(a // span == b // span for a, b in zip(xs, ys)):
            break
        m -= 1
    return m
