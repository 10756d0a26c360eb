import math

import numpy as np
import pytest

from cantor_lab.convolution import (
    GraphSummary,
    chord_length,
    default_grid,
    dependency_graph,
    hoeffding_janson_bound,
    holder_bootstrap,
    holder_exponent_estimate,
    holder_target,
    increment_decomposition,
    knot_grid,
    line_profile_sup,
    marginal_line_profile,
    plane_section_area,
    slice_profile,
    sum3_density,
)
from cantor_lab.errors import DimensionError, LevelError, ParameterError
from cantor_lab.generators import generate, parse_genspec
from cantor_lab.params import ModelParams, unit_beta
from cantor_lab.realization import full_realization

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


def unit_full(depth=4, d=1):
    return full_realization(ModelParams.from_schedule(2, d, unit_beta()), depth)


def surviving(spec, depth, start_seed=0):
    params, law = parse_genspec(spec)
    for seed in range(start_seed, start_seed + 200):
        r = generate(params, law, depth, seed)
        if r.count(depth) > 0:
            return r
    raise RuntimeError("no surviving realization found")


# -- single-box geometry ------------------------------------------------------


def test_chord_length_knowns():
    assert chord_length(0, 0, 1, 1.0) == pytest.approx(SQRT2)
    assert chord_length(0, 0, 1, 0.0) == 0.0
    assert chord_length(0, 0, 1, 2.0) == 0.0
    assert chord_length(0, 0, 1, 0.5) == pytest.approx(SQRT2 / 2)
    # symmetric in the corner coordinates
    assert chord_length(0.25, 0.5, 0.125, 0.8) == chord_length(0.5, 0.25, 0.125, 0.8)


def test_chord_length_lipschitz_in_u():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b = rng.random(2)
        h = rng.random() * 0.5 + 0.01
        u1, u2 = rng.random(2) * 3
        lhs = abs(chord_length(a, b, h, u1) - chord_length(a, b, h, u2))
        assert lhs <= SQRT2 * abs(u1 - u2) + 1e-12


def test_plane_section_knowns():
    assert plane_section_area(0, 0, 0, 1, 1.5) == pytest.approx(3 * SQRT3 / 4)
    assert plane_section_area(0, 0, 0, 1, 0.0) == 0.0
    for t in (0.2, 0.5, 0.9):
        assert plane_section_area(0, 0, 0, 1, t) == pytest.approx(SQRT3 * t * t / 2)


def test_geometry_matches_hit_counting_oracle():
    # Monte Carlo oracle: sample the projection plane, count kernel hits
    rng = np.random.default_rng(42)
    n_samples = 200_000
    for _ in range(25):
        a, b = rng.random(2)
        h = rng.random() * 0.9 + 0.05
        u = a + b + rng.random() * 2.2 * h
        xs = a + rng.random(n_samples) * h
        frac = np.mean((u - xs >= b) & (u - xs <= b + h))
        assert chord_length(a, b, h, u) == pytest.approx(SQRT2 * h * frac, abs=4e-3)
    for _ in range(25):
        a, b, c = rng.random(3)
        h = rng.random() * 0.9 + 0.05
        u = a + b + c + rng.random() * 3.2 * h
        xs = a + rng.random(n_samples) * h
        ys = b + rng.random(n_samples) * h
        frac = np.mean((u - xs - ys >= c) & (u - xs - ys <= c + h))
        assert plane_section_area(a, b, c, h, u) == pytest.approx(SQRT3 * h * h * frac, abs=6e-3)


def test_sum3_density_normalization():
    t = np.linspace(0, 3, 3001)
    assert np.trapezoid(sum3_density(t), t) == pytest.approx(1.0, abs=1e-6)


# -- profiles -----------------------------------------------------------------


def test_profile_order2_full_measure_triangle():
    r = unit_full()
    g = knot_grid(2, 0, 2, refine=8)
    prof = slice_profile(r, 2, 0, g)
    assert np.allclose(prof.values, SQRT2 * (1 - np.abs(g - 1)), atol=1e-14)


def test_profile_order3_full_measure_density():
    r = unit_full()
    g = knot_grid(2, 0, 3, refine=8)
    prof = slice_profile(r, 3, 0, g)
    assert np.allclose(prof.values, SQRT3 * sum3_density(g), atol=1e-14)


@pytest.mark.parametrize("order", [2, 3])
def test_coarea_identity(order):
    r = surviving("perc:M=2,d=1,p=0.8", 6)
    for n in (3, 5):
        prof = slice_profile(r, order, n, knot_grid(2, n, order, refine=2))
        target = math.sqrt(order) * r.total_mass(n) ** order
        assert prof.integral() == pytest.approx(target, rel=1e-10)


def test_profile_piecewise_linear_order2():
    r = surviving("perc:M=3,d=1,p=0.7", 4)
    prof = slice_profile(r, 2, 3, knot_grid(3, 3, 2, refine=5))
    assert prof.max_affine_residual() < 1e-12


def test_apriori_lipschitz_bound_on_grid():
    r = surviving("perc:M=2,d=1,p=0.8", 6)
    for n in (2, 4, 6):
        prof = slice_profile(r, 2, n, knot_grid(2, n, 2, refine=3))
        dY = np.abs(np.diff(prof.values))
        du = np.diff(prof.grid)
        bound = 3.0 * prof.beta_n**2 * 2.0**n
        assert np.all(dY <= bound * du + 1e-12)


def test_empty_realization_profile_is_zero():
    params, law = parse_genspec("perc:M=2,d=1,p=0.3")
    for seed in range(100):
        r = generate(params, law, 6, seed)
        if r.count(6) == 0:
            prof = slice_profile(r, 2, 6, np.linspace(0, 2, 100))
            assert np.all(prof.values == 0.0)
            return
    raise RuntimeError("no extinct realization found")


def test_profile_errors():
    r = unit_full()
    with pytest.raises(ParameterError):
        slice_profile(r, 4, 2)
    r2 = full_realization(ModelParams.from_schedule(2, 2, unit_beta()), 2)
    with pytest.raises(DimensionError):
        slice_profile(r2, 2, 2)


def test_default_grid_cap_and_metadata():
    r = surviving("cap:M=2,d=1,s=0.75", 12)
    grid, meta = default_grid(r, 2, 12)
    assert meta["capped"] and grid.size == 2**20 + 1
    grid2, meta2 = default_grid(r, 2, 1)
    assert not meta2["capped"]
    assert meta2["spacing"] <= meta2["delta_target"]


# -- marginals ----------------------------------------------------------------


def test_marginal_matches_slice_for_sum_family():
    r = surviving("perc:M=2,d=1,p=0.8", 5)
    for u in (0.31, 0.77, 1.13):
        a = marginal_line_profile(r, "x+y", 4, u)
        b = slice_profile(r, 2, 4, np.asarray([u])).values[0]
        assert a == pytest.approx(b, rel=1e-12)


def test_marginal_tilted_families():
    r = unit_full()
    assert marginal_line_profile(r, "2x+y", 0, 1.5) == pytest.approx(math.sqrt(5) / 2)
    assert marginal_line_profile(r, "x+2y", 0, 1.5) == pytest.approx(math.sqrt(5) / 2)
    # segment-length oracle: length of {2x+y=u} in the unit square, u in (0,1): u*sqrt(5)/2
    for u in (0.3, 0.8):
        assert marginal_line_profile(r, "2x+y", 0, u) == pytest.approx(u * math.sqrt(5) / 2)
    with pytest.raises(ParameterError):
        marginal_line_profile(r, "3x+y", 0, 1.0)


def test_line_profile_sup_exceeds_slice_sup():
    r = surviving("perc:M=2,d=1,p=0.8", 5)
    sup = line_profile_sup(r, 4)
    prof = slice_profile(r, 2, 4, knot_grid(2, 4, 2))
    assert sup >= 1.0 + np.max(prof.values) - 1e-12


# -- dependency graphs --------------------------------------------------------


def test_dependency_degree_at_most_8_exhaustive():
    r = unit_full(depth=6)
    worst = 0
    for n in range(7):
        L = 2**n
        us = (np.arange(2 * L) + 0.5) / L
        for u in us.tolist():
            s = dependency_graph(r, u, n, 2)
            worst = max(worst, s.max_degree)
    assert worst <= 8


def test_dependency_graph_single_interval():
    params, law = parse_genspec("cap:M=2,d=1,s=0.05")
    r = generate(params, law, 5, seed=1)
    # schedule keeps one interval at most levels; find a level with N=1
    n = next(n for n in range(5, 0, -1) if r.count(n) == 1)
    j = int(r.level(n)[0])
    h = 2.0**-n
    s = dependency_graph(r, (2 * j + 1) * h, n, 2)
    assert s.vertex_count <= 1 and s.max_degree == 0


def brute_force_triple_graph(r, u, n):
    A = r.level(n).tolist()
    h = 2.0**-n
    verts = []
    for i in A:
        for j in A:
            for k in A:
                if plane_section_area(i * h, j * h, k * h, h, u) > 0:
                    verts.append((i, j, k))
    deg = {}
    for q1 in verts:
        deg[q1] = 0
        for q2 in verts:
            if q1 != q2 and set(q1) & set(q2):
                deg[q1] += 1
    semi = sum(1 for q in verts if len(set(q)) < 3)
    return len(verts), (max(deg.values()) if deg else 0), semi


def test_triple_graph_matches_brute_force():
    r = surviving("perc:M=2,d=1,p=0.85", 3)
    for u in (0.9, 1.5, 2.2):
        s = dependency_graph(r, u, 3, 3)
        v, dmax, semi = brute_force_triple_graph(r, u, 3)
        assert (s.vertex_count, s.max_degree, s.semidiagonal_count) == (v, dmax, semi)


def test_triple_graph_full_degree_bound_vs_line_sup():
    r = unit_full(depth=3)
    s = dependency_graph(r, 1.5, 3, 3)
    # the marginal-profile bound: degree <= C * sup * beta^-2 * M^n with modest C
    bound = line_profile_sup(r, 3) * 2.0**3
    assert s.max_degree <= 12 * bound


# -- increments ---------------------------------------------------------------


def test_increment_sum_matches_profile_difference():
    r = surviving("perc:M=2,d=1,p=0.8", 6)
    prof_grid = np.asarray([0.618])
    for n in (2, 3, 4):
        u = 0.618
        terms = increment_decomposition(r, u, n)
        total = math.fsum(t.value for t in terms)
        y0 = slice_profile(r, 2, n, prof_grid).values[0]
        y1 = slice_profile(r, 2, n + 1, prof_grid).values[0]
        assert total == pytest.approx(y1 - y0, abs=1e-10 * max(1.0, abs(y1) + abs(y0)))


def test_increment_deterministic_refinement_is_zero():
    r = unit_full(depth=4)
    for u in (0.3, 1.0, 1.7):
        terms = increment_decomposition(r, u, 2)
        assert all(t.value == pytest.approx(0.0, abs=1e-12) for t in terms)


def test_increment_diagonal_flag_and_bound():
    r = surviving("perc:M=2,d=1,p=0.9", 5)
    n = 4
    beta1 = r.beta(n + 1)
    found_diag = False
    for u in np.linspace(0.05, 1.95, 39):
        for t in increment_decomposition(r, float(u), n):
            if t.is_diagonal:
                found_diag = True
                assert abs(t.value) <= SQRT2 * beta1**2 * 2.0**-n + 1e-12
            # general bound via the slice length of the parent square
            assert abs(t.value) <= SQRT2 * beta1**2 * max(t.parent_chord, 1e-300) / SQRT2 + 1e-12
    assert found_diag
    with pytest.raises(LevelError):
        increment_decomposition(r, 1.0, 5)


# -- calculators --------------------------------------------------------------


def test_hoeffding_janson_values():
    assert hoeffding_janson_bound(0, 1, 1.0, 1.0) == pytest.approx(2 * math.exp(-2))
    assert hoeffding_janson_bound(0, 1, 1.0, 1e-9) == pytest.approx(2.0)
    b1 = hoeffding_janson_bound(3, 17, 0.3, 0.7)
    b2 = hoeffding_janson_bound(3, 17, 0.3, 1.4)
    assert b2 == pytest.approx(2 * (b1 / 2) ** 4)
    # monotonicity
    assert hoeffding_janson_bound(4, 17, 0.3, 0.7) > b1
    assert hoeffding_janson_bound(3, 18, 0.3, 0.7) > b1
    assert hoeffding_janson_bound(3, 17, 0.4, 0.7) > b1
    with pytest.raises(ParameterError):
        hoeffding_janson_bound(-1, 1, 1.0, 1.0)


def test_holder_bootstrap_sequence():
    assert holder_bootstrap(1.0, 3) == pytest.approx([0.0, 0.5, 2 / 3, 0.75])
    seq = holder_bootstrap(0.37, 60)
    assert all(b > a for a, b in zip(seq[:30], seq[1:31]))  # strict until float plateau
    assert all(b >= a for a, b in zip(seq, seq[1:]))
    assert seq[-1] <= 0.37 and seq[-1] == pytest.approx(0.37, abs=1e-6)
    # fixed point
    g = 0.42
    assert g / (1 + g - g) == pytest.approx(g)


def test_holder_targets():
    assert holder_target(2, 1, 0.3) == pytest.approx(0.2)
    assert holder_target(3, 1, 0.6) == pytest.approx(0.1)
    assert holder_target(3, 1, 0.4) == pytest.approx(0.3)
    with pytest.raises(ParameterError):
        holder_target(2, 1, 0.6)
    with pytest.raises(ParameterError):
        holder_target(4, 1, 0.1)


def test_holder_estimate_deterministic_sentinel():
    r = unit_full(depth=5)
    grid = np.linspace(0, 2, 257)
    profiles = [slice_profile(r, 2, n, grid) for n in range(1, 5)]
    est = holder_exponent_estimate(profiles)
    assert est.exponent == math.inf
    assert est.zero_increment_levels == (1, 2, 3)


def test_holder_estimate_requires_common_grid_and_levels():
    r = surviving("perc:M=2,d=1,p=0.8", 5)
    grid = np.linspace(0, 2, 129)
    profiles = [slice_profile(r, 2, n, grid) for n in (1, 2, 3)]
    with pytest.raises(LevelError):
        holder_exponent_estimate(profiles[:2])
    bad = [slice_profile(r, 2, 1, grid), slice_profile(r, 2, 2, np.linspace(0, 2, 65)),
           slice_profile(r, 2, 3, grid)]
    with pytest.raises(ParameterError):
        holder_exponent_estimate(bad)
