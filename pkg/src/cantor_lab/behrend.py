"""Progression-free digit sets for the translated-digit construction.

The construction needs a set E of residues mod M with M even, every
element even, and no three pairwise-distinct a, b, c in E with
a + c = 2b (mod M).  Wraparound triples with a repeated element
(possible when the common difference is M/2) are not progressions:
three distinct elements are required, which is exactly what the
endpoint-parity argument consumes.

Searching over even residues reduces, after halving, to searching
progression-free subsets of Z_{M/2}: 2a + 2c = 2*(2b) (mod M) iff
a + c = 2b (mod M/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


def midpoints_mod(a: int, c: int, M: int) -> tuple[int, ...]:
    """All b in Z_M with 2b = a + c (mod M)."""
    t = (a + c) % M
    if M % 2 == 1:
        return ((t * pow(2, -1, M)) % M,)
    if t % 2 != 0:
        return ()
    b = (t // 2) % M
    return (b, (b + M // 2) % M)


def is_ap_free_mod(E, M: int) -> bool:
    """True iff no pairwise-distinct a, b, c in E satisfy a + c = 2b (mod M)."""
    s = set(E)
    elems = sorted(s)
    for i, a in enumerate(elems):
        for c in elems[i + 1 :]:
            for b in midpoints_mod(a, c, M):
                if b in s and b != a and b != c:
                    return False
    return True


@dataclass(frozen=True)
class BehrendConfig:
    M: int
    E: tuple[int, ...]
    epsilon: float = 1.0

    def __post_init__(self):
        if self.M < 4 or self.M % 2 != 0:
            raise ParameterError(f"M must be even and >= 4, got {self.M}")
        if not self.E:
            raise ParameterError("digit set E must be nonempty")
        if len(set(self.E)) != len(self.E):
            raise ParameterError("digit set E has repeated elements")
        for e in self.E:
            if not (0 <= e < self.M):
                raise ParameterError(f"element {e} outside Z_{self.M}")
            if e % 2 != 0:
                raise ParameterError(f"element {e} is odd")
        if not is_ap_free_mod(self.E, self.M):
            raise ParameterError("digit set E contains a 3-term progression mod M")

    @property
    def size(self) -> int:
        return len(self.E)

    def density_exponent(self) -> float:
        """Achieved epsilon: |E| = M^(1 - epsilon)."""
        return 1.0 - math.log(self.size) / math.log(self.M)


def _legal_extension(x: int, chosen: list[int], chosen_set: set[int], M: int) -> bool:
    """Would chosen + {x} stay progression-free mod M?"""
    for a in chosen:
        c = (2 * x - a) % M  # x as midpoint of (a, x, c)
        if c != a and c != x and c in chosen_set:
            return False
        c = (2 * a - x) % M  # a as midpoint of (x, a, c)
        if c != a and c != x and c in chosen_set:
            return False
        for b in midpoints_mod(a, x, M):  # b as midpoint of (a, b, x)
            if b != a and b != x and b in chosen_set:
                return False
    return True


def _max_ap_free_subset(K: int) -> list[int]:
    """Maximum-size progression-free subset of Z_K, branch and bound."""
    best: list[int] = []

    def extend(chosen: list[int], chosen_set: set[int], idx: int) -> None:
        nonlocal best
        if len(chosen) + (K - idx) <= len(best):
            return
        if idx == K:
            if len(chosen) > len(best):
                best = list(chosen)
            return
        if _legal_extension(idx, chosen, chosen_set, K):
            chosen.append(idx)
            chosen_set.add(idx)
            extend(chosen, chosen_set, idx + 1)
            chosen.pop()
            chosen_set.remove(idx)
        extend(chosen, chosen_set, idx + 1)

    extend([], set(), 0)
    return best


def _greedy_ap_free_subset(K: int) -> list[int]:
    chosen: list[int] = []
    chosen_set: set[int] = set()
    for x in range(K):
        if _legal_extension(x, chosen, chosen_set, K):
            chosen.append(x)
            chosen_set.add(x)
    return chosen


def _behrend_sphere_set(limit: int) -> list[int]:
    """Digits-on-a-sphere construction: integer-AP-free subset of [0, limit).

    Numbers sum_i x_i D^i with digits 0 <= x_i < k and D = 2k - 1 add
    without carries, so an integer progression forces digitwise midpoints;
    restricting to a sphere sum_i x_i^2 = rho rules that out by strict
    convexity.  The best (k, rho) over a small parameter range is kept.
    """
    if limit < 1:
        return []
    best = [0]
    for k in range(2, 12):
        D = 2 * k - 1
        nd = max(1, math.ceil(math.log(max(limit, 2)) / math.log(D)))
        if k**nd > 2_000_000:
            continue
        shells: dict[int, list[int]] = {}

        def rec(pos: int, value: int, norm: int) -> None:
            if pos == nd:
                shells.setdefault(norm, []).append(value)
                return
            step = D**pos
            for x in range(k):
                nv = value + x * step
                if nv >= limit:
                    break
                rec(pos + 1, nv, norm + x * x)

        rec(0, 0, 0)
        for members in shells.values():
            if len(members) > len(best):
                best = sorted(members)
    return best


def behrend_search(M: int, mode: str = "sphere", epsilon: float | None = None) -> BehrendConfig:
    """Search for a large progression-free set of even residues mod M.

    Modes: 'exhaustive' (maximum size, M <= 40), 'greedy', and 'sphere'
    (digit construction on the halved universe, lifted back by doubling).
    The returned epsilon is the achieved density exponent; a supplied
    target is only a goal to report against, never a guarantee.
    """
    if M % 2 != 0:
        raise ParameterError(f"M must be even, got {M}")
    if M < 4:
        raise ParameterError(f"M must be >= 4, got {M}")
    K = M // 2
    if mode == "exhaustive":
        if M > 40:
            raise ParameterError("exhaustive mode is limited to M <= 40")
        half = _max_ap_free_subset(K)
    elif mode == "greedy":
        half = _greedy_ap_free_subset(K)
    elif mode == "sphere":
        # integers below K/2 cannot wrap mod K: a + c - 2b lies in (-K, K)
        half = _behrend_sphere_set((K + 1) // 2)
        if len(half) < 2:
            half = _greedy_ap_free_subset(K)
    else:
        raise ParameterError(f"unknown search mode {mode!r}")
    if not half:
        half = [0]
    E = tuple(sorted(2 * x for x in half))
    cfg = BehrendConfig(M=M, E=E, epsilon=1.0)
    return BehrendConfig(M=M, E=E, epsilon=cfg.density_exponent())
