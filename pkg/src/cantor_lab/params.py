"""Model parameters and mass-density schedules.

A construction is described by the subdivision base M, the ambient
dimension d and the nondecreasing density sequence beta_n (the measure
approximant at level n is beta_n on the surviving set, 0 elsewhere).
Schedules keep an exact rational value whenever the construction provides
one (integer-power schedules), and a log-space value always, so that
quantities like beta_50 never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParameterError


class BetaSchedule:
    """Base class: beta_0 = 1, beta_n nondecreasing, beta_n <= M^(n d)."""

    def exact(self, n: int) -> Fraction | None:
        """Exact rational beta_n, or None if only log-space is available."""
        raise NotImplementedError

    def log_value(self, n: int) -> float:
        """Natural log of beta_n."""
        raise NotImplementedError

    def value(self, n: int) -> float:
        ex = self.exact(n)
        if ex is not None and ex.numerator.bit_length() < 900 and ex.denominator.bit_length() < 900:
            return float(ex)
        return math.exp(self.log_value(n))

    def ratio(self, n: int) -> float:
        """beta_{n+1} / beta_n as a float."""
        ea, eb = self.exact(n), self.exact(n + 1)
        if ea is not None and eb is not None:
            return float(eb / ea)
        return math.exp(self.log_value(n + 1) - self.log_value(n))

    def alpha_bounds(self, M: int) -> tuple[float, float]:
        """liminf / limsup of log_M(beta_n) / n."""
        raise NotImplementedError


@dataclass(frozen=True)
class PowerBeta(BetaSchedule):
    """beta_n = base^n for a fixed base >= 1 (percolation: base = 1/p)."""

    base: float | Fraction

    def __post_init__(self):
        if float(self.base) < 1.0:
            raise ParameterError(f"beta base must be >= 1, got {self.base}")

    def exact(self, n: int) -> Fraction | None:
        if isinstance(self.base, Fraction) or isinstance(self.base, int):
            return Fraction(self.base) ** n
        return Fraction(1) if n == 0 else None

    def log_value(self, n: int) -> float:
        return n * math.log(float(self.base))

    def alpha_bounds(self, M: int) -> tuple[float, float]:
        a = math.log(float(self.base)) / math.log(M)
        return a, a


@dataclass(frozen=True)
class StepBeta(BetaSchedule):
    """Greedy two-valued schedule: beta_{n+1}/beta_n in {1, M^d}.

    Tracks M^(n(d-s)) within a factor M^d: the density is multiplied by
    M^d exactly when it has fallen to or below the target envelope.
    All values are exact integers.
    """

    M: int
    d: int
    s: float
    _cache: list[int] = field(default_factory=lambda: [1], compare=False, repr=False)

    def __post_init__(self):
        if not (0.0 < self.s < self.d):
            raise ParameterError(f"dimension target s must lie in (0, d), got {self.s}")

    def _extend(self, n: int) -> None:
        c = self._cache
        while len(c) <= n:
            k = len(c) - 1  # current level
            # grow when beta_k <= M^((k+1)(d-s)): compare logs to avoid bignum pow
            if math.log(c[k]) <= (k + 1) * (self.d - self.s) * math.log(self.M) + 1e-12:
                c.append(c[k] * self.M ** self.d)
            else:
                c.append(c[k])

    def exact(self, n: int) -> Fraction | None:
        self._extend(n)
        return Fraction(self._cache[n])

    def log_value(self, n: int) -> float:
        self._extend(n)
        return math.log(self._cache[n])

    def grows_at(self, n: int) -> bool:
        """True when beta_{n+1} = M^d beta_n (the level that keeps one child)."""
        self._extend(n + 1)
        return self._cache[n + 1] != self._cache[n]

    def alpha_bounds(self, M: int) -> tuple[float, float]:
        return self.d - self.s, self.d - self.s


def unit_beta() -> PowerBeta:
    """Deterministic full-measure schedule beta_n = 1."""
    return PowerBeta(Fraction(1))


@dataclass(frozen=True)
class ModelParams:
    """Base M >= 2, dimension d in {1, 2}, density schedule, exponent bounds."""

    M: int
    d: int
    beta: BetaSchedule
    alpha_lo: float = 0.0
    alpha_hi: float = 0.0

    def __post_init__(self):
        if self.M < 2:
            raise ParameterError(f"base M must be >= 2, got {self.M}")
        if self.d not in (1, 2):
            raise ParameterError(f"dimension d must be 1 or 2, got {self.d}")
        if not (0.0 <= self.alpha_lo <= self.alpha_hi <= self.d + 1e-12):
            raise ParameterError(
                f"need 0 <= alpha_lo <= alpha_hi <= d, got ({self.alpha_lo}, {self.alpha_hi})"
            )
        if abs(self.beta.log_value(0)) > 1e-12:
            raise ParameterError("beta_0 must equal 1")
        prev = 0.0
        for n in (1, 2, 5, 10):
            lv = self.beta.log_value(n)
            if lv < prev - 1e-9:
                raise ParameterError("beta_n must be nondecreasing")
            prev = lv

    @classmethod
    def from_schedule(cls, M: int, d: int, beta: BetaSchedule) -> "ModelParams":
        # stored exponents are clamped to the analysis range [0, d]; strongly
        # subcritical schedules (raw limsup > d) remain generable, and the raw
        # bounds stay available from beta.alpha_bounds.
        lo, hi = beta.alpha_bounds(M)
        lo = min(max(lo, 0.0), float(d))
        hi = min(max(hi, 0.0), float(d))
        return cls(M=M, d=d, beta=beta, alpha_lo=lo, alpha_hi=hi)

    def max_packed_level(self) -> int:
        """Deepest level whose packed indices fit in int64."""
        return int(62 // (self.d * math.log2(self.M)))
