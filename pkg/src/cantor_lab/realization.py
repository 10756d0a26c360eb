"""Sparse storage of one sampled construction.

A realization holds, for each level n up to the generated depth, the
sorted packed indices of the surviving cubes A_n.  Arrays are frozen
after generation; every analysis pass is a pure read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cubes import CubeIndex, descendant_range, pack, parents_packed
from .errors import LevelError, ParameterError
from .params import ModelParams


@dataclass
class Realization:
    params: ModelParams
    levels: list[np.ndarray]
    seed: int
    generator_tag: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.levels or self.levels[0].shape != (1,) or self.levels[0][0] != 0:
            raise ParameterError("level 0 must consist of the unit cube alone")
        for arr in self.levels:
            arr.setflags(write=False)

    # -- basic accessors ----------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, n: int) -> np.ndarray:
        if not (0 <= n <= self.depth):
            raise LevelError(f"level {n} outside generated depth {self.depth}")
        return self.levels[n]

    def count(self, n: int) -> int:
        """N_n, the number of surviving level-n cubes."""
        return int(self.level(n).size)

    def counts(self) -> list[int]:
        return [int(a.size) for a in self.levels]

    def is_alive(self, n: int | None = None) -> bool:
        return self.count(self.depth if n is None else n) > 0

    def beta(self, n: int) -> float:
        return self.params.beta.value(n)

    def total_mass(self, n: int) -> float:
        """|mu_n| = beta_n * N_n * M^(-n d)."""
        M, d = self.params.M, self.params.d
        return self.beta(n) * self.count(n) * float(M) ** (-n * d)

    def contains(self, n: int, packed) -> np.ndarray:
        """Vectorized membership test against A_n."""
        arr = self.level(n)
        p = np.asarray(packed, dtype=np.int64)
        pos = np.searchsorted(arr, p)
        ok = pos < arr.size
        out = np.zeros(p.shape, dtype=bool)
        out[ok] = arr[pos[ok]] == p[ok]
        return out

    # -- contracts ----------------------------------------------------------

    def check_nesting(self) -> bool:
        """Every cube of A_{n+1} has its parent in A_n (exact set inclusion)."""
        M, d = self.params.M, self.params.d
        for n in range(self.depth):
            child = self.levels[n + 1]
            if child.size == 0:
                continue
            par = np.unique(parents_packed(child, M, d))
            if not bool(np.all(self.contains(n, par))):
                return False
        return True

    def descendant_count(self, q: CubeIndex, n: int) -> int:
        """Number of level-n survivors inside cube q (q.level <= n)."""
        M, d = self.params.M, self.params.d
        if q.d != d:
            raise ParameterError(f"cube dimension {q.d} != model dimension {d}")
        if q.level > n:
            raise LevelError(f"cube level {q.level} exceeds evaluation level {n}")
        arr = self.level(n)
        lo, hi = descendant_range(pack(q, M), q.level, n, M, d)
        return int(np.searchsorted(arr, hi) - np.searchsorted(arr, lo))

    def measure_of_cube(self, q: CubeIndex, n: int) -> float:
        """mu_n(q) = beta_n * M^(-n d) * #(level-n survivors inside q)."""
        M, d = self.params.M, self.params.d
        return self.beta(n) * float(M) ** (-n * d) * self.descendant_count(q, n)

    def ball_mass(self, n: int, center: float, radius: float) -> float:
        """mu_n((center - radius, center + radius)), d = 1 only, exact overlap."""
        if self.params.d != 1:
            raise ParameterError("ball_mass supports d = 1 only")
        M = self.params.M
        h = float(M) ** (-n)
        arr = self.level(n)
        lo, hi = center - radius, center + radius
        left = arr * h
        overlap = np.minimum(hi, left + h) - np.maximum(lo, left)
        np.clip(overlap, 0.0, None, out=overlap)
        return self.beta(n) * float(np.sum(overlap))


def measure_of_cube(r: Realization, q: CubeIndex, n: int) -> float:
    return r.measure_of_cube(q, n)


def full_realization(params: ModelParams, depth: int) -> Realization:
    """Deterministic full occupation A_n = all cubes (beta_n must be 1)."""
    if depth > params.max_packed_level():
        raise LevelError(f"depth {depth} exceeds packed-index capacity")
    k = params.M**params.d
    levels = [np.arange(k**n, dtype=np.int64) for n in range(depth + 1)]
    return Realization(params, levels, seed=0, generator_tag="full")


def log_count_expected(params: ModelParams, n: int) -> float:
    """log of the deterministic count M^(nd)/beta_n (exact for two-valued schedules)."""
    return n * params.d * math.log(params.M) - params.beta.log_value(n)
