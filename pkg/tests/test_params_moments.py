import math
from fractions import Fraction

import numpy as np
import pytest

from cantor_lab.cubes import madic_point
from cantor_lab.errors import DomainError, ParameterError
from cantor_lab.moments import second_moment, survival_lower_bound, two_point_probability
from cantor_lab.params import ModelParams, PowerBeta, StepBeta, unit_beta


def perc_params(M=2, d=1, p=0.7):
    return ModelParams.from_schedule(M, d, PowerBeta(Fraction(1) / Fraction(p).limit_denominator()))


def test_power_beta_exactness_and_alpha():
    b = PowerBeta(Fraction(10, 7))
    assert b.exact(3) == Fraction(1000, 343)
    lo, hi = b.alpha_bounds(2)
    assert lo == hi == pytest.approx(math.log2(10 / 7))


def test_step_beta_tracks_envelope():
    M, d, s = 2, 1, 0.5
    b = StepBeta(M, d, s)
    for n in range(1, 40):
        v = float(b.exact(n))
        target = M ** (n * (d - s))
        assert target / M**d <= v <= target * M**d
        ratio = float(b.exact(n) / b.exact(n - 1))
        assert ratio in (1.0, float(M**d))


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(M=1, d=1, beta=unit_beta())
    with pytest.raises(ParameterError):
        ModelParams(M=2, d=3, beta=unit_beta())
    with pytest.raises(ParameterError):
        PowerBeta(0.5)  # decreasing schedule


def test_two_point_basic_cases():
    pp = perc_params(p=0.7)
    x = madic_point(3, 1, 2)
    # n = 0: the unit cube always survives
    assert two_point_probability(pp, x, x, 0) == pytest.approx(1.0)
    # x == y: m = infinity, beta_n^-1 = p^n
    assert two_point_probability(pp, x, x, 3) == pytest.approx(0.7**3)
    # split at m=1 (1/8 vs 3/8), n=3: beta_1 beta_3^-2 = p^(2*3-1)
    y = madic_point(3, 3, 2)
    assert two_point_probability(pp, x, y, 3) == pytest.approx(0.7**5)
    with pytest.raises(DomainError):
        two_point_probability(pp, x, y, -1)


def test_two_point_monte_carlo_oracle():
    # independent chain simulation of percolation survival along two digit paths
    p, n_level = 0.7, 3
    pp = perc_params(p=p)
    rng = np.random.default_rng(42)
    trials = 100_000
    for xk, yk in [(1, 3), (1, 5), (2, 3), (0, 7)]:
        x = madic_point(n_level, xk, 2)
        y = madic_point(n_level, yk, 2)
        m = 0
        while m < n_level and xk >> (n_level - m - 1) == yk >> (n_level - m - 1):
            m += 1
        shared = rng.random((trials, m)) < p
        solo = rng.random((trials, 2 * (n_level - m))) < p
        alive = shared.all(axis=1) & solo.all(axis=1)
        emp = alive.mean()
        se = math.sqrt(emp * (1 - emp) / trials)
        assert abs(two_point_probability(pp, x, y, n_level) - emp) < 4 * se + 1e-12


def test_second_moment_trivial_and_exact():
    pp = perc_params(p=0.7)
    assert second_moment(pp, 0) == pytest.approx(1.0)
    # closed form for n=1, M=2, d=1: 1/2 + 1/(2p)
    assert second_moment(pp, 1) == pytest.approx(0.5 + 1 / 1.4)
    full = ModelParams.from_schedule(2, 1, unit_beta())
    for n in range(6):
        assert second_moment(full, n) == pytest.approx(1.0)


def test_second_moment_monte_carlo_oracle():
    # empirical E(X_1^2) for M=2, d=1 percolation
    p = 0.7
    pp = perc_params(p=p)
    rng = np.random.default_rng(7)
    trials = 1_000_000
    keep = rng.random((trials, 2)) < p
    x1 = keep.sum(axis=1) / (2 * p)  # beta_1 * M^-1 * count
    emp = np.mean(x1**2)
    se = np.std(x1**2, ddof=1) / math.sqrt(trials)
    assert abs(second_moment(pp, 1) - emp) < 4 * se


def test_survival_lower_bound_limits():
    full = ModelParams.from_schedule(2, 2, unit_beta())
    for n in range(5):
        assert survival_lower_bound(full, n) == pytest.approx(1.0)
    pp = perc_params(M=2, d=1, p=0.7)
    assert survival_lower_bound(pp, 0) == pytest.approx(1.0)
    vals = [survival_lower_bound(pp, n) for n in range(8)]
    assert all(0 < v <= 1 for v in vals)
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))  # bound decreases
