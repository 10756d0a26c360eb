import numpy as np
import pytest

from cantor_lab.cubes import (
    CubeIndex,
    children_packed,
    common_cube_level,
    cube_children,
    descendant_range,
    madic_point,
    pack,
    parent,
    parents_packed,
    unpack,
)
from cantor_lab.errors import DomainError


def test_binary_subdivision_children():
    q = CubeIndex(0, (0,))
    kids = cube_children(q, 2)
    assert [k.coords for k in kids] == [(0,), (1,)]
    assert all(k.level == 1 for k in kids)


def test_children_2d_count_and_coords():
    q = CubeIndex(1, (1, 0))
    kids = cube_children(q, 2)
    assert len(kids) == 4
    assert {k.coords for k in kids} == {(2, 0), (2, 1), (3, 0), (3, 1)}


@pytest.mark.parametrize("M,d", [(2, 1), (2, 2), (3, 1), (3, 2), (5, 1)])
def test_child_count_is_M_to_d(M, d):
    q = CubeIndex(1, tuple([M - 1] * d))
    assert len(cube_children(q, M)) == M**d


@pytest.mark.parametrize("M,d,level", [(2, 1, 5), (2, 2, 4), (3, 2, 3), (5, 1, 4)])
def test_pack_unpack_roundtrip(M, d, level):
    rng = np.random.default_rng(0)
    for _ in range(50):
        coords = tuple(int(rng.integers(0, M**level)) for _ in range(d))
        q = CubeIndex(level, coords)
        assert unpack(pack(q, M), level, M, d) == q


def test_parent_child_consistency():
    M = 3
    q = CubeIndex(2, (7, 4))
    for kid in cube_children(q, M):
        assert parent(kid, M) == q
    p = pack(q, M)
    kids = children_packed(np.asarray([p]), M, 2)
    assert np.array_equal(parents_packed(kids, M, 2), np.full(9, p))


def test_tree_order_descendant_range():
    M, d = 2, 2
    q = CubeIndex(1, (1, 0))
    p = pack(q, M)
    lo, hi = descendant_range(p, 1, 3, M, d)
    # all level-3 descendants have coords inside [2,4) x [0,2) scaled up
    for v in range(lo, hi):
        c = unpack(v, 3, M, d)
        assert 4 <= c.coords[0] < 8 and 0 <= c.coords[1] < 4


def test_coordinate_bounds_enforced():
    with pytest.raises(DomainError):
        pack(CubeIndex(1, (2,)), 2)
    with pytest.raises(DomainError):
        madic_point(2, 4, 2)


def test_madic_metric_prefix_levels():
    M = 2
    x = madic_point(3, 1, M)  # 1/8 = 0.001
    y = madic_point(3, 3, M)  # 3/8 = 0.011
    assert common_cube_level(x, y, M) == 1
    z = madic_point(3, 5, M)  # 5/8 = 0.101
    assert common_cube_level(x, z, M) == 0
    assert common_cube_level(x, x, M) is None  # same point: m = infinity


def test_madic_metric_mixed_levels_and_2d():
    M = 2
    x = madic_point(1, 1, M)  # 0.5
    y = madic_point(3, 5, M)  # 0.625
    assert common_cube_level(x, y, M) == 2
    a = madic_point(2, (1, 2), M)
    b = madic_point(2, (1, 3), M)
    assert common_cube_level(a, b, M) == 1
