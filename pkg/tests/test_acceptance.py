"""Acceptance suite: one PASS/FAIL line per criterion (run with ``pytest -s`` to see them)."""
import itertools
import time

import numpy as np
import pytest

from moebspace.config import TOL_FLOW
from moebspace.flow import antipodalize, decay_violations, discrepancy, integrate_flow, pinfest_bounds
from moebspace.generators import gen_circle, gen_dendrogram, gen_quasimetric, random_dendrogram, random_point, rng
from moebspace.geometry import (_RayCache, boundary_gromov_limit, busemann_estimate, combine, frink_metric,
                                hyperbolicity_delta, ray_defects)
from moebspace.hull import SampleSpace, dist_function, extremal_check, hull_isometry_check
from moebspace.space import AntipodalSpace, MoebiusPoint, argmax_set, dist, pushforward, quasimetric_constant
from moebspace.tangent import exactness_radius, odd_basis, random_odd_vector, tangent_line_check

LINES = []


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    print("\n" + "\n".join(LINES))


def verdict(n, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
    LINES.append(line)
    assert ok, line


def test_01_closed_forms(spaces):
    out = []
    for name, tau0, exact in (("discrete-2", [1, 0], [0.5, -0.5]), ("discrete-3", [1, 0, 0], [0.5, -0.5, -0.5])):
        t = time.perf_counter()
        p = antipodalize(spaces[name], tau0)
        el = time.perf_counter() - t
        out.append((float(np.max(np.abs(p.tau - exact))), el))
    ok = all(e <= 1e-6 and s < 1.0 for e, s in out)
    verdict(1, ok, "closed-form limits, errors " + ", ".join(f"{e:.1e} in {s:.2f}s" for e, s in out))


@pytest.fixture(scope="module")
def seeded_traces(spaces):
    traces = []
    for name in ("discrete-6", "circle-8", "dendrogram-8"):
        sp = spaces[name]
        for s in range(20):
            traces.append((sp, integrate_flow(sp, rng(1000 + s).uniform(-3, 3, sp.n))))
    return traces


def test_02_decay_envelopes(seeded_traces):
    worst = max(max(decay_violations(tr)) for _, tr in seeded_traces)
    verdict(2, worst <= 1e-6, f"decay envelopes on {len(seeded_traces)} traces, worst excess {worst:.2e} (slack 1e-6)")


def test_03_limit_certification(seeded_traces):
    worst = -np.inf
    for sp, tr in seeded_traces:
        assert tr.certified
        more = integrate_flow(sp, tr.tau_final, duration=20.0)
        moved = float(np.max(np.abs(more.tau_final - tr.tau_final)))
        worst = max(worst, moved - (4 * tr.residual + 1e-8))
    verdict(3, worst <= 0, f"+20 time units moves tau within 4*residual + 1e-8 (worst margin {worst:.2e})")


def test_04_pinfest_sandwich(spaces):
    names = sorted(spaces)
    worst = -np.inf
    for s in range(50):
        sp = spaces[names[s % len(names)]]
        tau0 = rng(2000 + s).uniform(-3, 3, sp.n)
        p = antipodalize(sp, tau0)
        lo, up = pinfest_bounds(sp, tau0)
        worst = max(worst, float(np.max(lo - p.tau)), float(np.max(p.tau - up)))
    verdict(4, worst <= 4 * TOL_FLOW, f"pinfest sandwich over 50 pairs, worst excess {worst:.2e} (<= 4e-8)")


def test_05_base_invariance(spaces):
    worst_d, worst_p, worst_idem = 0.0, 0.0, 0.0
    for s, name in enumerate(["circle-8", "dendrogram-8", "quasimetric-8", "discrete-6", "circle-16"] * 2):
        sp = spaces[name]
        sigma = random_point(sp, 3000 + s)
        shifted = AntipodalSpace(sigma.E(), renormalize=True)
        tau = rng(3100 + s).uniform(-2, 2, sp.n)
        worst_d = max(worst_d, float(np.max(np.abs(discrepancy(shifted, tau) - discrepancy(sp, sigma.tau + tau)))))
        p0, p1 = antipodalize(sp, sigma.tau + tau), antipodalize(shifted, tau)
        worst_p = max(worst_p, float(np.max(np.abs((p0.tau - sigma.tau) - p1.tau))))
        worst_idem = max(worst_idem, float(np.max(np.abs(antipodalize(sp, p0.tau).tau - p0.tau))))
    ok = max(worst_d, worst_p, worst_idem) <= 1e-6
    verdict(5, ok, f"base invariance: discrepancy {worst_d:.1e}, limit {worst_p:.1e}; idempotence {worst_idem:.1e}")


def test_06_geodesic_additivity(spaces):
    worst = -np.inf
    for k, name in enumerate(("discrete-6", "circle-8", "dendrogram-8", "quasimetric-8")):
        sp = spaces[name]
        pool = [random_point(sp, 4000 + 100 * k + i) for i in range(12)]
        pairs = list(itertools.combinations(range(12), 2))
        pick = rng(4001 + k).choice(len(pairs), size=30, replace=False)
        for j in pick:
            a, b = pool[pairs[j][0]], pool[pairs[j][1]]
            D = dist(a, b)
            for t in (0.25, 0.5, 0.75):
                worst = max(worst, abs(dist(a, combine((a, b), (1 - t, t))) - t * D))
    verdict(6, worst <= 5 * TOL_FLOW, f"geodesic additivity on 4 spaces x 30 pairs, worst {worst:.2e} (<= 5e-8)")


def test_07_rays(circle16_rays, spaces):
    rays = list(circle16_rays[1].values())
    from moebspace.geometry import extend_ray
    for name in ("discrete-3", "dendrogram-8", "quasimetric-8"):
        sp = spaces[name]
        rays.append(extend_ray(random_point(sp, 5000), 1, 0.5, 12))
    worst, argmax_ok = -np.inf, True
    for ray in rays:
        assert ray.complete and ray.depth == 12
        p = ray.points
        for k in range(1, 13):
            worst = max(worst, abs(dist(p[0], p[k]) - k * ray.step) - (k + 1) * 4 * TOL_FLOW)
            argmax_ok &= ray.direction_xi in argmax_set(p[k - 1], p[k])
        worst = max(worst, ray_defects(ray))
    verdict(7, worst <= 0 and argmax_ok, f"{len(rays)} rays to depth 12, worst margin {worst:.2e}, argmax kept: {argmax_ok}")


def _circle16_pairs():
    g = rng(6000)
    pairs = []
    while len(pairs) < 8:
        xi, eta = (int(v) for v in g.choice(16, size=2, replace=False))
        if (xi, eta) not in pairs:
            pairs.append((xi, eta))
    return pairs


def test_08_boundary_gromov(circle16_rays):
    sp, rays = circle16_rays
    cache = _RayCache(sp.base_point, 1.0, None)
    cache.rays = dict(rays)
    mono, worst = True, 0.0
    for xi, eta in _circle16_pairs():
        est = boundary_gromov_limit(sp.base_point, xi, eta, depth=12, depths=[4, 8, 12], _cache=cache)
        assert np.isclose(est.reference, -np.log(sp.rho[xi, eta]), atol=1e-14)
        mono &= est.monotone(8 * TOL_FLOW)
        worst = max(worst, est.gaps[-1])
    verdict(8, mono and worst <= 0.05, f"circle-16 Gromov products: monotone {mono}, depth-12 gap {worst:.2e} (<= 0.05)")


def test_09_busemann(circle16_rays):
    sp, _ = circle16_rays
    mono, worst = True, 0.0
    for s, (xi, _) in enumerate(_circle16_pairs()):
        r1 = sp.base_point if s % 2 == 0 else random_point(sp, 6100 + s)
        r2 = random_point(sp, 6200 + s)
        est = busemann_estimate(r1, r2, xi, depth=12, depths=[4, 8, 12])
        mono &= est.monotone(8 * TOL_FLOW)
        worst = max(worst, est.gaps[-1])
    verdict(9, mono and worst <= 0.05, f"circle-16 Busemann estimates: monotone {mono}, depth-12 gap {worst:.2e} (<= 0.05)")


def test_10_trees(spaces):
    worst_delta, worst_K = 0.0, 0.0
    for k, sp in enumerate((spaces["dendrogram-8"], gen_dendrogram(random_dendrogram(6, 11)))):
        pts = [random_point(sp, 7000 + 50 * k + i) for i in range(20)]
        worst_delta = max(worst_delta, hyperbolicity_delta(pts, quadruples=300, seed=7000 + k).delta_hat)
        for p in pts[:10]:
            worst_K = max(worst_K, quasimetric_constant(p.E())[0] - 1.0)
    ok = worst_delta <= 1e-6 and worst_K <= 1e-6
    verdict(10, ok, f"dendrograms: delta_hat {worst_delta:.1e} over 300 quadruples, K(E(tau)) - 1 = {worst_K:.1e}")


def test_11_delta_vs_K(circle16_rays, circle8_sample):
    out = []
    sp16, rays = circle16_rays
    pts16 = [sp16.base_point] + [r.points[k] for r in rays.values() for k in range(1, 11)]
    _, S8 = circle8_sample
    pts8 = [sp for sp, t in zip(S8.points, S8.tags) if t[0] in ("base", "ray")]
    ok = True
    for pts in (pts8, pts16):
        rep = hyperbolicity_delta(pts, cap=len(pts), base_only=True)
        out.append(rep.log_gap)
        ok &= rep.delta_hat >= np.log(rep.qm_constant) - 0.05
    K4 = quasimetric_constant(gen_circle(4).rho)[0]
    ok &= abs(K4 - np.sqrt(2)) <= 1e-12
    verdict(11, ok, f"delta_hat - log K on circle-8/16: {out[0]:.1e}, {out[1]:.1e}; K(circle-4) - sqrt2 = {K4 - np.sqrt(2):.1e}")


def test_12_tangent(spaces, tripod):
    g = rng(8000)
    names = ("circle-8", "dendrogram-8", "quasimetric-8", "discrete-6", "circle-16")
    worst, trials = 0.0, 0
    s = 0
    while trials < 50:
        sp = spaces[names[s % len(names)]]
        x = random_point(sp, 8000 + s)
        s += 1
        odd = odd_basis(x)
        v = random_odd_vector(odd, g)
        t_star, _ = exactness_radius(x, v, odd.graph)
        if odd.dimension == 0 or not np.isfinite(t_star):
            continue
        t = float(g.uniform(-0.9, 0.9)) * t_star
        for tt in (t, 0.9 * t_star, -0.9 * t_star):
            worst = max(worst, tangent_line_check(x, v, tt).disc_excess)
        trials += 1
    dims = (odd_basis(tripod.base_point).dimension,
            odd_basis(MoebiusPoint(tripod, [0.5, -0.5, -0.5])).dimension,
            odd_basis(gen_circle(4).base_point).dimension)
    ok = worst <= 1e-12 and dims == (0, 1, 2)
    verdict(12, ok, f"{trials} straight lines, worst discrepancy change {worst:.1e}; dimensions K3/path/matching = {dims}")


def test_13_hull(tripod, circle8_sample):
    tips = [MoebiusPoint(tripod, 2.0 * np.array(v)) for v in ([1, -1, -1], [-1, 1, -1], [-1, -1, 1])]
    T = SampleSpace.from_points(tips)
    f = dist_function(T, tripod.base_point)
    rep = extremal_check(T, f)
    gap, _, _ = hull_isometry_check(T, tripod.base_point, MoebiusPoint(tripod, [1, -1, -1]))
    tripod_ok = np.array_equal(f, [2, 2, 2]) and rep.extremal and rep.max_abs_defect == 0 and gap == 0
    sp, S = circle8_sample
    alpha, beta = random_point(sp, 9000), random_point(sp, 9001)
    defects, gaps = [], []
    for depth in (4, 7, 10):
        Sd = S.truncated(depth)
        defects.append(extremal_check(Sd, dist_function(Sd, alpha)).max_abs_defect)
        gaps.append(hull_isometry_check(Sd, alpha, beta)[0])

    def settled(series):
        return series[-1] <= 0.02 or all(b <= a + 8 * TOL_FLOW for a, b in zip(series, series[1:]))

    ok = tripod_ok and settled(defects) and settled(gaps)
    verdict(13, ok, f"tripod exact {tripod_ok}; circle-8 defects {['%.1e' % d for d in defects]}, "
                    f"gaps {['%.1e' % d for d in gaps]} at depths 4/7/10")


def test_14_frink(spaces):
    reps = [frink_metric(q, tol=1e-12) for q in (gen_circle(4), spaces["dendrogram-8"], gen_quasimetric(8, 4.0, seed=14))]
    ok = all(r.ok for r in reps) and np.isclose(reps[2].epsilon, 0.5)
    verdict(14, ok, "Frink bounds: " + ", ".join(f"eps {r.epsilon:.2f} ratios [{r.lower_ratio:.3f}, {r.upper_ratio:.3f}]" for r in reps))


def test_15_pushforward(spaces):
    names = ("circle-8", "dendrogram-8", "quasimetric-8", "discrete-6")
    exact = True
    for s in range(20):
        sp = spaces[names[s % 4]]
        perm = rng(10000 + s).permutation(sp.n)
        a, b = random_point(sp, 10100 + s), random_point(sp, 10200 + s)
        exact &= dist(pushforward(perm, a), pushforward(perm, b)) == dist(a, b)
    verdict(15, exact, f"pushforward preserves distances bit-exactly over 20 trials: {exact}")


def test_16_performance(circle8_sample):
    sp = gen_circle(64)
    t = time.perf_counter()
    p = antipodalize(sp, rng(16).uniform(-2, 2, 64))
    t_flow = time.perf_counter() - t
    pts = circle8_sample[1].points[:40]
    t = time.perf_counter()
    hyperbolicity_delta(pts, cap=40)
    t_delta = time.perf_counter() - t
    ok = p.residual <= TOL_FLOW and t_flow <= 5 and t_delta <= 10
    verdict(16, ok, f"n=64 antipodalize {t_flow:.2f}s (<= 5), delta_hat over 40 points {t_delta:.2f}s (<= 10)")
