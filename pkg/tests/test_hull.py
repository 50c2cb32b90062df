import numpy as np
import pytest

from moebspace.errors import SpecError
from moebspace.generators import random_point
from moebspace.hull import (SampleSpace, boundary_value, build_sample, dist_function,
                            extremal_check, flat_extremal_defect, hull_isometry_check)
from moebspace.space import MoebiusPoint


@pytest.fixture(scope="module")
def tripod_tips(tripod):
    return build_sample(tripod, rays=[(xi, 2, 1.0) for xi in range(3)], include_base=False, tips_only=True)


def test_tripod_tip_sample(tripod_tips):
    S = tripod_tips
    assert len(S) == 3
    assert np.allclose(S.dist_matrix, 4 * (1 - np.eye(3)), atol=1e-7)
    assert S.triangle_excess() <= 1e-7


def test_tripod_extremal(tripod, tripod_tips):
    f = dist_function(tripod_tips, tripod.base_point)
    assert np.allclose(f, 2, atol=1e-7)
    rep = extremal_check(tripod_tips, [2.0, 2.0, 2.0])
    assert rep.extremal and rep.in_delta and np.allclose(rep.defect_per_point, 0, atol=1e-7)
    assert not extremal_check(tripod_tips, [3.0, 3.0, 3.0]).extremal
    assert not extremal_check(tripod_tips, [1.0, 1.0, 1.0]).in_delta


def test_tripod_isometry(tripod, tripod_tips):
    gap, sup, d = hull_isometry_check(tripod_tips, tripod.base_point, MoebiusPoint(tripod, [1, -1, -1]))
    assert d == 1.0 and gap <= 1e-7


def test_tripod_boundary_value(tripod):
    S = build_sample(tripod, rays=[(0, 5, 1.0)])
    alpha = MoebiusPoint(tripod, [1, -1, -1])
    val, seq = boundary_value(S, dist_function(S, alpha), 0)
    assert np.allclose(seq, 1.0, atol=1e-7)


def test_sample_bookkeeping(circle8_sample):
    sp, S = circle8_sample
    assert len(S) == 1 + 80 + 10
    assert S.tags[0] == ("base",)
    assert [S.tags[i][2] for i in S.ray_indices(3)] == list(range(1, 11))
    T = S.truncated(4)
    assert len(T) == 1 + 32 + 10
    assert np.array_equal(T.dist_matrix, S.subset([S.tags.index(t) for t in T.tags]).dist_matrix)
    with pytest.raises(SpecError):
        SampleSpace.from_points([])


def test_circle8_hull(circle8_sample):
    sp, S = circle8_sample
    alpha, beta = random_point(sp, 900), random_point(sp, 901)
    defects = []
    for depth in (4, 7, 10):
        T = S.truncated(depth)
        rep = extremal_check(T, dist_function(T, alpha))
        assert rep.in_delta
        defects.append(rep.max_abs_defect)
    assert defects[-1] <= 0.02
    assert hull_isometry_check(S, alpha, beta)[0] <= 0.02


def test_flat_defect(spaces):
    x = random_point(spaces["circle-8"], 5)
    assert np.max(np.abs(flat_extremal_defect(x))) <= 1e-8
