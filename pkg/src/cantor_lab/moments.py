"""Closed-form two-point probabilities, second moments and survival bounds.

The two-point formula is exact for constructions that retain each child
independently with probability beta_n/beta_{n+1} (fractal percolation).
For schedules that select children jointly (single-survivor steps) it is
the standard second-moment surrogate: the resulting survival bound is
still a valid lower bound, only not tight.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .cubes import MadicPoint, common_cube_level
from .errors import DomainError
from .params import ModelParams


def two_point_probability(params: ModelParams, x: MadicPoint, y: MadicPoint, n: int) -> float:
    """P(x, y both survive to level n) from the M-adic splitting level.

    With m the deepest level at which x and y share a cube:
    beta_n^-1 for n <= m, and beta_m * beta_n^-2 for n > m.
    """
    if x.d != params.d or y.d != params.d:
        raise DomainError("point dimension does not match the model")
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    m = common_cube_level(x, y, params.M)
    beta = params.beta
    if m is None or n <= m:
        return math.exp(-beta.log_value(n))
    return math.exp(beta.log_value(m) - 2.0 * beta.log_value(n))


def second_moment(params: ModelParams, n: int) -> float:
    """E(X_n^2) for X_n = total mass at level n, by separation-level sums.

    Pairs of uniform points split at level m with probability
    M^(-m d) - M^(-(m+1) d); summing the two-point formula over m gives

        E(X_n^2) = sum_{m<n} (M^(-m d) - M^(-(m+1) d)) beta_m + M^(-n d) beta_n,

    which telescopes to exactly 1 when beta == 1.
    """
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    beta = params.beta
    Md = params.M**params.d

    exact_ok = all(beta.exact(m) is not None for m in range(n + 1))
    if exact_ok:
        tot = Fraction(0)
        for m in range(n):
            cell = Fraction(1, Md**m)
            tot += (cell - cell / Md) * beta.exact(m)
        tot += Fraction(1, Md**n) * beta.exact(n)
        return float(tot)
    tot = 0.0
    for m in range(n):
        tot += (Md**-m - Md ** -(m + 1)) * math.exp(beta.log_value(m))
    tot += Md**-n * math.exp(beta.log_value(n))
    return tot


def survival_lower_bound(params: ModelParams, n: int) -> float:
    """Cauchy-Schwarz bound: P(X_n > 0) >= E(X_n)^2 / E(X_n^2) = 1/E(X_n^2)."""
    return 1.0 / second_moment(params, n)
