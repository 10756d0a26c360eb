import itertools
import math

import pytest

from cantor_lab.behrend import (
    BehrendConfig,
    behrend_search,
    is_ap_free_mod,
    midpoints_mod,
)
from cantor_lab.errors import ParameterError


def brute_force_max_even_ap_free(M):
    """Reference oracle: enumerate all subsets of even residues mod M."""
    evens = list(range(0, M, 2))
    best = ()
    for size in range(len(evens), 0, -1):
        for cand in itertools.combinations(evens, size):
            if is_ap_free_mod_reference(cand, M):
                return cand
    return best


def is_ap_free_mod_reference(E, M):
    s = set(E)
    for a in s:
        for b in s:
            for c in s:
                if len({a, b, c}) == 3 and (a + c - 2 * b) % M == 0:
                    return False
    return True


def test_midpoints_mod():
    assert set(midpoints_mod(0, 2, 10)) == {1, 6}
    assert midpoints_mod(0, 1, 10) == ()
    assert midpoints_mod(0, 2, 9) == ((2 * pow(2, -1, 9)) % 9,)


def test_ap_free_matches_reference_small():
    M = 12
    for size in (1, 2, 3):
        for cand in itertools.combinations(range(M), size):
            assert is_ap_free_mod(cand, M) == is_ap_free_mod_reference(cand, M)


def test_known_progression_mod_10():
    # 8, 0, 2 is a progression with difference 2 mod 10
    assert not is_ap_free_mod((0, 2, 8), 10)
    # 0, 6, 12 = 2 is one with difference 6; every 3-subset of the evens mod 10 fails
    assert not is_ap_free_mod((0, 2, 6), 10)
    assert is_ap_free_mod((0, 2, 6), 14)


@pytest.mark.parametrize("M", [4, 8, 12, 16, 20, 24])
def test_exhaustive_search_matches_brute_force(M):
    cfg = behrend_search(M, mode="exhaustive")
    oracle = brute_force_max_even_ap_free(M)
    assert cfg.size == len(oracle)
    assert is_ap_free_mod_reference(cfg.E, M)
    assert all(e % 2 == 0 for e in cfg.E)


def test_m4_maximum_is_both_evens():
    cfg = behrend_search(4, mode="exhaustive")
    assert cfg.E == (0, 2)  # wraparound triples with repeats are not progressions


def test_greedy_and_sphere_yield_valid_configs():
    for M in (8, 20, 50, 128, 1024):
        for mode in ("greedy", "sphere"):
            cfg = behrend_search(M, mode=mode)
            assert cfg.M == M
            assert cfg.size >= 1
            assert cfg.epsilon == pytest.approx(1 - math.log(cfg.size) / math.log(M))


def test_sphere_mode_reaches_nontrivial_density_for_large_M():
    cfg = behrend_search(4096, mode="sphere")
    assert cfg.size >= 30  # epsilon clearly below 0.6
    assert cfg.epsilon < 0.6


def test_search_errors():
    with pytest.raises(ParameterError):
        behrend_search(7)
    with pytest.raises(ParameterError):
        behrend_search(2)
    with pytest.raises(ParameterError):
        behrend_search(44, mode="exhaustive")
    with pytest.raises(ParameterError):
        behrend_search(8, mode="unknown")


def test_config_invariants():
    with pytest.raises(ParameterError):
        BehrendConfig(M=10, E=(0, 3), epsilon=1.0)  # odd element
    with pytest.raises(ParameterError):
        BehrendConfig(M=10, E=(0, 2, 8), epsilon=1.0)  # progression mod 10
    with pytest.raises(ParameterError):
        BehrendConfig(M=7, E=(0, 2), epsilon=1.0)  # odd base
    cfg = BehrendConfig(M=14, E=(0, 2, 6), epsilon=0.5)
    assert cfg.density_exponent() == pytest.approx(1 - math.log(3) / math.log(14))
