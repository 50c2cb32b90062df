import itertools

import numpy as np
import pytest

from moebspace.generators import gen_circle, gen_dendrogram, gen_quasimetric, random_dendrogram, random_point
from moebspace.geometry import (boundary_gromov_limit, busemann_estimate, combine, delta_of_distances,
                                distance_matrix, extend_ray, frink_metric, geodesic, gromov_product,
                                hyperbolicity_delta, maxdiam_check, midpoint, ray_defects)
from moebspace.space import MoebiusPoint, dist

TOL = 1e-8


def brute_delta(d):
    """Four-point delta by explicit loops, as an oracle for the vectorised scan."""
    m = len(d)
    best = -np.inf
    for x, y, z, w in itertools.product(range(m), repeat=4):
        g = lambda a, b: 0.5 * (d[w, a] + d[w, b] - d[a, b])
        best = max(best, min(g(x, z), g(z, y)) - g(x, y))
    return best


def test_tripod_midpoint(tripod):
    a, b = MoebiusPoint(tripod, [2, -2, -2]), MoebiusPoint(tripod, [-2, 2, -2])
    m = midpoint(a, b)
    assert np.allclose(m.tau, 0, atol=1e-8)
    assert np.isclose(dist(a, m), 2, atol=1e-8) and np.isclose(dist(m, b), 2, atol=1e-8)


def test_combine_endpoints_and_weights(spaces):
    sp = spaces["circle-8"]
    a, b = random_point(sp, 1), random_point(sp, 2)
    assert np.allclose(combine((a, b), (1, 0)).tau, a.tau, atol=1e-8)
    with pytest.raises(ValueError):
        combine((a, b), (0.5, 0.6))


@pytest.mark.parametrize("name", ["circle-8", "dendrogram-8", "quasimetric-8"])
def test_geodesic_additivity(spaces, name):
    sp = spaces[name]
    a, b = random_point(sp, 21), random_point(sp, 22)
    pts = geodesic(a, b, 4)
    D = dist(a, b)
    for k, p in enumerate(pts):
        assert abs(dist(a, p) - k / 4 * D) <= 5 * TOL
        assert abs(dist(p, b) - (1 - k / 4) * D) <= 5 * TOL


def test_tripod_ray_coordinates(tripod):
    ray = extend_ray(tripod.base_point, 0, 1.0, 5, reverse_depth=2)
    assert ray.complete and ray.reverse_eta in (1, 2)
    for k, p in enumerate(ray.points):
        assert np.allclose(p.tau, [k, -k, -k], atol=1e-7)
    assert ray_defects(ray) <= 0
    assert len(ray.line()) == 5 + 1 + 2


def test_circle_ray_defects(circle16_rays):
    sp, rays = circle16_rays
    for xi, ray in rays.items():
        assert ray.complete and ray.depth == 12
        assert ray_defects(ray) <= 0


def test_gromov_product_bounds(tripod):
    o = tripod.base_point
    a, b = MoebiusPoint(tripod, [2, -2, -2]), MoebiusPoint(tripod, [-2, 2, -2])
    g = gromov_product(a, b, o)
    assert g.value == 0.0 and g.ok and g.bound == 0.0


def test_boundary_gromov_circle16(circle16_rays):
    from moebspace.geometry import _RayCache
    sp, rays = circle16_rays
    cache = _RayCache(sp.base_point, 1.0, None)
    cache.rays = dict(rays)
    for xi, eta in [(0, 1), (0, 8), (3, 6), (5, 13)]:
        est = boundary_gromov_limit(sp.base_point, xi, eta, depth=12, depths=[4, 8, 12], _cache=cache)
        assert np.isclose(est.reference, -np.log(sp.rho[xi, eta]))
        assert est.gaps[-1] <= 1e-6
        assert est.monotone(8 * TOL)


def test_busemann_tripod(tripod):
    est = busemann_estimate(tripod.base_point, MoebiusPoint(tripod, [1, -1, -1]), 0, depth=4, depths=[1, 2, 4])
    assert est.reference == 1.0
    assert np.allclose(est.series, 1.0, atol=1e-7)


def test_busemann_circle(spaces):
    sp = spaces["circle-8"]
    r1, r2 = random_point(sp, 3), random_point(sp, 4)
    est = busemann_estimate(r1, r2, 2, depth=10, depths=[4, 7, 10])
    assert est.gaps[-1] <= 1e-6 and est.monotone(8 * TOL)


def test_delta_matches_brute_force(spaces):
    sp = spaces["circle-8"]
    pts = [random_point(sp, s) for s in range(7)]
    d = distance_matrix(pts)
    val, wit = delta_of_distances(d)
    assert np.isclose(val, brute_delta(d), atol=1e-14)
    assert np.isclose(delta_of_distances(d, jobs=3)[0], val)


def test_tree_delta_zero():
    sp = gen_dendrogram(random_dendrogram(6, 1))
    pts = [random_point(sp, s) for s in range(12)]
    assert hyperbolicity_delta(pts).delta_hat <= 1e-6
    assert hyperbolicity_delta(pts, quadruples=50, seed=2).delta_hat <= 1e-6


def test_frink():
    c4 = gen_circle(4)
    rep = frink_metric(c4)
    assert rep.epsilon == 1.0 and rep.ok
    q = gen_quasimetric(6, 4.0, seed=1)
    rep = frink_metric(q)
    assert np.isclose(rep.epsilon, 0.5) and rep.ok
    assert rep.lower_ratio >= 0.25 and rep.upper_ratio <= 1.0 + 1e-12
    a = rep.alpha

    n = len(a)
    for i, j, k in itertools.product(range(n), repeat=3):
        assert a[i, k] <= a[i, j] + a[j, k] + 1e-12


def test_maxdiam(tripod):
    diam, bound, members, ok = maxdiam_check(tripod.base_point, MoebiusPoint(tripod, [2, -2, -2]), 1.0)
    assert list(members) == [0] and diam == 0 and ok
