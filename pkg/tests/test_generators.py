import math

import numpy as np
import pytest

from cantor_lab.behrend import BehrendConfig, is_ap_free_mod
from cantor_lab.cubes import CubeIndex
from cantor_lab.errors import LevelError, ParameterError
from cantor_lab.generators import (
    BehrendTranslate,
    CapacityExact,
    Custom,
    Percolation,
    behrend_generate,
    generate,
    genspec_string,
    law_params,
    node_translation,
    parse_genspec,
    resampled,
)
from cantor_lab.params import PowerBeta


def test_percolation_full_at_p_one():
    params, law = parse_genspec("perc:M=2,d=2,p=1.0")
    r = generate(params, law, 3, seed=1)
    assert r.counts() == [1, 4, 16, 64]


def test_reproducibility_and_nesting():
    params, law = parse_genspec("perc:M=3,d=1,p=0.6")
    a = generate(params, law, 7, seed=123)
    b = generate(params, law, 7, seed=123)
    for la, lb in zip(a.levels, b.levels):
        assert np.array_equal(la, lb)
    c = generate(params, law, 7, seed=124)
    assert any(not np.array_equal(x, y) for x, y in zip(a.levels, c.levels))
    assert a.check_nesting()
    for n in range(7):
        assert a.count(n + 1) <= 3 * a.count(n)


def test_capacity_exact_deterministic_counts_and_mass():
    params, law = parse_genspec("cap:M=2,d=1,s=0.5")
    r = generate(params, law, 14, seed=9)
    for n in range(15):
        beta = params.beta.exact(n)
        assert r.count(n) == 2**n / beta  # N_n = M^(nd) / beta_n, exact
        assert r.total_mass(n) == pytest.approx(1.0, abs=1e-12)
    # mass of a surviving cube stays 1/N_n from its level onward
    q_packed = int(r.level(4)[0])
    q = CubeIndex(4, (q_packed,))
    for m in range(4, 15):
        assert r.measure_of_cube(q, m) == pytest.approx(1.0 / r.count(4), rel=1e-12)


def test_capacity_param_range():
    with pytest.raises(ParameterError):
        law_params(2, 1, CapacityExact(1.0))
    with pytest.raises(ParameterError):
        law_params(2, 1, CapacityExact(0.0))


def test_behrend_generate_digit_sets_are_translates():
    cfg = BehrendConfig(M=14, E=(0, 2, 6), epsilon=0.5)
    r = behrend_generate(cfg, 4, seed=77)
    assert r.counts() == [1, 3, 9, 27, 81]
    E = np.asarray(cfg.E)
    M = cfg.M
    for n in range(4):
        parents = r.level(n)
        child = r.level(n + 1)
        for p in parents.tolist():
            digits = child[(child >= p * M) & (child < (p + 1) * M)] - p * M
            a = node_translation(r, n, p)
            expect = np.sort((E + a) % M)
            assert np.array_equal(digits, expect)
            assert is_ap_free_mod(digits.tolist(), M)


def test_behrend_beta_is_exact_rational():
    cfg = BehrendConfig(M=14, E=(0, 2, 6), epsilon=0.5)
    params = law_params(14, 1, BehrendTranslate(cfg))
    assert float(params.beta.exact(3)) == pytest.approx((14 / 3) ** 3)


def test_custom_law_runs_and_respects_slots():
    # keep child 0 always, child 1 with prob 1/2: beta ratio 4/3 per level
    beta = PowerBeta(1.5)

    def select(level, parent, u):
        return (0, 1) if u < 0.5 else (0,)

    law = Custom(beta=beta, select=select)
    r = generate(law_params(2, 1, law), law, 6, seed=5)
    assert r.check_nesting()
    assert all(c > 0 for c in r.counts())


def test_custom_law_slot_validation():
    law = Custom(beta=PowerBeta(1.0), select=lambda level, parent, u: (3,))
    with pytest.raises(ParameterError):
        generate(law_params(2, 1, law), law, 1, seed=0)


def test_depth_capacity_guard():
    params, law = parse_genspec("perc:M=2,d=2,p=0.9")
    with pytest.raises(LevelError):
        generate(params, law, 40, seed=0)


def test_resampled_preserves_prefix_and_law():
    params, law = parse_genspec("perc:M=2,d=1,p=0.8")
    r = generate(params, law, 6, seed=42)
    r2 = resampled(r, 4, seed=999)
    for n in range(5):
        assert np.array_equal(r.level(n), r2.level(n))
    assert r2.depth == 5
    assert r2.check_nesting()


def test_martingale_resampling_mean():
    # E(mu_{n+1}(Q) | A_n) = mu_n(Q) over independent redraws of level n+1
    params, law = parse_genspec("perc:M=2,d=1,p=0.7")
    r = None
    for seed in range(50):
        cand = generate(params, law, 3, seed=seed)
        if cand.count(3) > 0:
            r = cand
            break
    assert r is not None
    q = CubeIndex(2, (int(r.level(2)[0]),))
    target = r.measure_of_cube(q, 2)
    trials = 4000
    vals = np.empty(trials)
    for i in range(trials):
        vals[i] = resampled(r, 2, seed=i).measure_of_cube(q, 3)
    se = vals.std(ddof=1) / math.sqrt(trials)
    assert abs(vals.mean() - target) < 4 * se


def test_genspec_roundtrip_and_errors():
    params, law = parse_genspec("perc:M=2,d=2,p=0.7")
    assert genspec_string(law, params) == "perc:M=2,d=2,p=0.7"
    with pytest.raises(ParameterError):
        parse_genspec("perc:M=2,d=1")  # missing p
    with pytest.raises(ParameterError):
        parse_genspec("nope:M=2")
    with pytest.raises(ParameterError):
        parse_genspec("perc:M=2,d=1,p=0")
    p2, l2 = parse_genspec("behrend:M=14,E=0+2+6")
    assert l2.config.E == (0, 2, 6)
