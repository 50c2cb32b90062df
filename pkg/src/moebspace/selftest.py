"""Property suites run by ``moebspace selftest``.

Each suite returns a list of :class:`~moebspace.reports.Check`.  All
randomness derives from the suite seed, so a run is reproducible.
"""
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .config import DEFAULT_FLOW
from .flow import (antipodalize, decay_violations, discrepancy, integrate_flow,
                   pinfest_bounds)
from .generators import (DendrogramSpec, balanced_dendrogram, gen_circle, gen_dendrogram,
                         random_dendrogram, random_point, rng, zoo)
from .geometry import (extend_ray, geodesic, gromov_product, hyperbolicity_delta,
                       frink_metric, quasimetric_constant, ray_defects)
from .hull import build_sample, dist_function, extremal_check, hull_isometry_check, boundary_value
from .reports import Check
from .space import (MoebiusPoint, apply_E, compare, cross_ratio, derivative,
                    moebius_equivalent, validate_space)
from .tangent import (antipodal_graph, difference_quotient_violations, odd_basis,
                      odd_projection, random_odd_vector, tangent_line_check)

SUITES = ("generators", "space", "flow", "geometry", "tangent", "hull")


def _points(space, seed, k, cfg):
    return [random_point(space, seed * 1000 + i, 2.0, cfg) for i in range(k)]


def suite_generators(seed, cfg):
    out = []
    for name, sp in zoo().items():
        out.append(Check(f"{name}: validates", len(validate_space(sp.rho).failures), 0, "=="))
    for spec in (balanced_dendrogram(2, [1.0, 0.5]), random_dendrogram(8, seed), random_dendrogram(6, seed + 1)):
        H = DendrogramSpec.from_dict(spec).lca_heights()
        n = len(H)
        bad = sum(1 for i in range(n) for j in range(n) for k in range(n)
                  if len({i, j, k}) == 3 and H[i][j] > max(H[i][k], H[k][j]))
        out.append(Check(f"dendrogram-{n}: exact ultrametric inequality", bad, 0, "=="))
    for n in (4, 8, 16):
        r = gen_circle(n).rho
        exc = max(float(np.max(r - r[:, z][:, None] - r[z, :][None, :])) for z in range(n))
        out.append(Check(f"circle-{n}: triangle inequality", exc, 1e-12))
    return out


def suite_space(seed, cfg):
    out = []
    g = rng(seed)
    for name, sp in zoo().items():
        n = sp.n
        pts = _points(sp, seed, 4, cfg)
        worst_top, worst_row = 0.0, 0.0
        for p in pts + [sp.base_point]:
            E = p.E()
            np.fill_diagonal(E, 0.0)
            worst_top = max(worst_top, float(E.max()) - np.exp(0.5 * p.residual))
            worst_row = max(worst_row, 1.0 - float(E.max(axis=1).min()))
        out.append(Check(f"{name}: E(tau) entries <= 1 (up to residual)", worst_top, 1e-15))
        out.append(Check(f"{name}: every row of E(tau) attains 1", worst_row, sp.tol_antipode))

        if n >= 3:
            s1, s2 = g.uniform(-2, 2, n), g.uniform(-2, 2, n)
            r1, r2, r3 = sp.rho, apply_E(sp.rho, s1), apply_E(sp.rho, s1 + s2)
            worst = 0.0
            for x in range(n):
                e1, e2 = [k for k in range(n) if k != x][:2]
                lhs = derivative(r3, r1, x, e1, e2)
                rhs = derivative(r3, r2, x, e1, e2) * derivative(r2, r1, x, e1, e2)
                worst = max(worst, abs(lhs - rhs) / abs(lhs))
            out.append(Check(f"{name}: chain rule (relative)", worst, 1e-10))

        worst_bal, worst_anti, worst_e = 0.0, 0.0, 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            rep = compare(a, b)
            worst_bal = max(worst_bal, abs(rep.balance) - rep.balance_bound)
            Ea, Eb = a.E(), b.E()
            for xi in rep.argmax:
                for eta in np.flatnonzero(Ea[xi] >= 1 - sp.tol_antipode):
                    if eta == xi:
                        continue
                    worst_anti = max(worst_anti, float(eta not in rep.argmin))
                    worst_e = max(worst_e, 1 - sp.tol_antipode - Eb[xi, eta])
        out.append(Check(f"{name}: max+min of coordinate difference", worst_bal, 0.0))
        out.append(Check(f"{name}: antipode of an argmax lies in the argmin", worst_anti, 0.0))
        out.append(Check(f"{name}: E(tau2) keeps argmax antipodes at 1", worst_e, 0.0))

        if n >= 4:
            t = g.uniform(-2, 2, n)
            R = apply_E(sp.rho, t)
            dev = 0.0
            for _ in range(50):
                q = g.choice(n, 4, replace=False)
                dev = max(dev, abs(cross_ratio(R, *q) - cross_ratio(sp.rho, *q)))
            out.append(Check(f"{name}: cross-ratio invariant under E", dev, 1e-10))
            eq = moebius_equivalent(sp.rho, R)
            out.append(Check(f"{name}: E(tau) Moebius equivalent", eq.gmvt_residual, 1e-9))
    return out


def suite_flow(seed, cfg):
    out = []
    g = rng(seed + 1)
    for name, sp in zoo().items():
        n = sp.n
        L2, Ld = 0.0, 0.0
        for _ in range(20):
            t, s = g.uniform(-3, 3, n), g.uniform(-3, 3, n)
            Dt, Ds = discrepancy(sp, t), discrepancy(sp, s)
            L2 = max(L2, np.max(np.abs(Dt)) - 2 * np.max(np.abs(t)))
            Ld = max(Ld, np.max(np.abs(Dt - Ds)) - 2 * np.max(np.abs(t - s)))
        out.append(Check(f"{name}: ||D(tau)|| <= 2||tau||", float(L2), 1e-12))
        out.append(Check(f"{name}: D is 2-Lipschitz", float(Ld), 1e-12))

        env = pw = neg = sand = -np.inf
        for k in range(3):
            tau0 = g.uniform(-2, 2, n)
            tr = integrate_flow(sp, tau0, config=cfg)
            a, b, c = decay_violations(tr)
            env, pw, neg = max(env, a), max(pw, b), max(neg, c)
            lo, up = pinfest_bounds(sp, tau0)
            end = tr.tau_final
            sand = max(sand, float(np.max(lo - end)), float(np.max(end - up)))
        out.append(Check(f"{name}: norm decay envelope", env, 1e-6))
        out.append(Check(f"{name}: pointwise decay when nonnegative", pw, 1e-6))
        out.append(Check(f"{name}: negative discrepancy stays nonpositive", neg, 1e-6))
        out.append(Check(f"{name}: limit within the a-priori sandwich", sand, 4 * cfg.tol_flow))

        sigma = random_point(sp, seed + 17, 1.5, cfg)
        tau = g.uniform(-2, 2, n)
        p1 = antipodalize(sp, tau, base_tau=sigma, config=cfg)
        p2 = antipodalize(sp, tau + sigma.tau, config=cfg)
        out.append(Check(f"{name}: base invariance", float(np.max(np.abs(p1.tau - p2.tau))), 1e-6))
        p3 = antipodalize(sp, p2.tau, config=cfg)
        out.append(Check(f"{name}: idempotence", float(np.max(np.abs(p3.tau - p2.tau))), 4 * cfg.tol_flow))
        p4 = antipodalize(sp, tau + sigma.tau + g.uniform(-1e-9, 1e-9, n), config=cfg)
        out.append(Check(f"{name}: continuity (1e-9 input change)", float(np.max(np.abs(p4.tau - p2.tau))), 1e-6))
    return out


def _delta_deep(space, depth, cfg):
    o = space.base_point
    tips = [extend_ray(o, x, 1.0, depth, config=cfg).points[-1] for x in range(space.n)]
    return hyperbolicity_delta([o] + tips, base_only=True)


def suite_geometry(seed, cfg, jobs=1):
    out = []
    z = zoo()
    tol = cfg.tol_flow
    for name in ("discrete-3", "discrete-6", "circle-8", "dendrogram-8", "quasimetric-8"):
        sp = z[name]
        pts = _points(sp, seed + 2, 6, cfg)
        worst = 0.0
        for a, b in zip(pts[::2], pts[1::2]):
            d = float(np.max(np.abs(a.tau - b.tau)))
            geo = geodesic(a, b, 4, cfg)
            for j, p in enumerate(geo):
                worst = max(worst, abs(float(np.max(np.abs(p.tau - a.tau))) - j / 4 * d),
                            abs(float(np.max(np.abs(p.tau - b.tau))) - (1 - j / 4) * d))
        out.append(Check(f"{name}: geodesic additivity", worst, 5 * tol))

        ray = extend_ray(pts[0], 0, 0.75, 5, reverse_depth=2, config=cfg)
        out.append(Check(f"{name}: ray complete", ray.complete, True, "=="))
        out.append(Check(f"{name}: ray concatenation defect", ray_defects(ray, tol), 0.0))
        worst = -np.inf
        for a, b, w in zip(pts, pts[1:] + pts[:1], pts[2:] + pts[:2]):
            gp = gromov_product(a, b, w)
            worst = max(worst, gp.value - gp.bound)
        out.append(Check(f"{name}: Gromov product below the boundary bound", worst, 8 * tol))

    for name in ("dendrogram-4", "dendrogram-8"):
        sp = z[name]
        pts = _points(sp, seed + 3, 10, cfg)
        Kmax = max(quasimetric_constant(p.E())[0] for p in pts)
        out.append(Check(f"{name}: every point is an ultrametric", Kmax, 1 + 1e-6))
        rep = hyperbolicity_delta([sp.base_point] + pts, quadruples=100, seed=seed)
        out.append(Check(f"{name}: tree hyperbolicity", rep.delta_hat, 1e-6))

    for n, depth in ((8, 8), (16, 6)):
        sp = gen_circle(n)
        rep = _delta_deep(sp, depth, cfg)
        lk = float(np.log(sp.qm_constant))
        out.append(Check(f"circle-{n}: delta over deep rays vs log K", rep.delta_hat, lk - 0.05, ">="))

    out.append(Check("circle-4: K = sqrt 2", abs(z["circle-4"].qm_constant - np.sqrt(2)), 1e-12))
    for name in ("circle-4", "dendrogram-8", "quasimetric-8"):
        fr = frink_metric(z[name])
        out.append(Check(f"{name}: Frink lower bound alpha >= q^eps/4", fr.lower_ratio, 0.25 - 1e-12, ">="))
        out.append(Check(f"{name}: Frink upper bound alpha <= q^eps", fr.upper_ratio, 1 + 1e-12))
    return out


def suite_tangent(seed, cfg):
    out = []
    z = zoo()
    d3 = z["discrete-3"]
    cases = [("K3", d3.base_point, 0), ("path", MoebiusPoint(d3, [0.5, -0.5, -0.5]), 1),
             ("matching", z["circle-4"].base_point, 2)]
    for label, x, dim in cases:
        g = antipodal_graph(x)
        nb = sum(c.bipartite for c in g.components)
        out.append(Check(f"{label}: dimension", odd_basis(x, g).dimension, dim, "=="))
        out.append(Check(f"{label}: dimension = bipartite components", nb, dim, "=="))

    r = rng(seed + 4)
    for name in ("circle-4", "circle-8", "dendrogram-8", "quasimetric-8", "discrete-6"):
        sp = z[name]
        worst_exc, worst_dev, worst_odd = 0.0, 0.0, 0.0
        for p in _points(sp, seed + 5, 3, cfg) + [sp.base_point]:
            ob = odd_basis(p)
            for b in ob.basis:
                e = np.array(ob.graph.edges)
                worst_odd = max(worst_odd, float(np.max(np.abs(b[e[:, 0]] + b[e[:, 1]]))))
            v = random_odd_vector(ob, r)
            if not np.any(v):
                continue
            t_star = tangent_line_check(p, v, 0.0).t_star
            t = 0.9 * t_star * r.choice([-1, 1]) if np.isfinite(t_star) else 0.5
            lc = tangent_line_check(p, v, t, cfg)
            worst_exc = max(worst_exc, lc.disc_excess)
            q = antipodalize(sp, t * v, base_tau=p.tau, config=cfg)
            worst_dev = max(worst_dev, float(np.max(np.abs(q.tau - (p.tau + t * v)))))
        out.append(Check(f"{name}: basis vectors are odd", worst_odd, 0.0))
        out.append(Check(f"{name}: straight lines stay exact", worst_exc, 1e-12))
        out.append(Check(f"{name}: antipodalizing a short line is the identity", worst_dev, 4 * cfg.tol_flow))

        a, b = _points(sp, seed + 6, 2, cfg)
        _, viol, floors = difference_quotient_violations(a, b, 0.37, config=cfg)
        ok = viol[1] <= viol[0] / 5 or viol[1] <= floors[1]
        out.append(Check(f"{name}: difference quotients become odd", viol[1],
                         max(viol[0] / 5, floors[1]), passed=ok))

    x = z["circle-8"].base_point
    u, w = r.normal(size=8), r.normal(size=8)
    Pu, Pw = odd_projection(x, u), odd_projection(x, w)
    out.append(Check("circle-8: projection linear",
                     float(np.max(np.abs(odd_projection(x, 2 * u - w) - (2 * Pu - Pw)))), 1e-12))
    out.append(Check("circle-8: projection idempotent",
                     float(np.max(np.abs(odd_projection(x, Pu) - Pu))), 1e-12))
    return out


def suite_hull(seed, cfg):
    out = []
    sp = gen_circle(8)
    full = build_sample(sp, rays=[(x, 10, 1.0) for x in range(8)], random=(6, seed + 7, 2.0), config=cfg)
    out.append(Check("circle-8: sample triangle inequality", full.triangle_excess(), 8 * cfg.tol_flow))
    alpha, beta = random_point(sp, seed + 8, 2.0, cfg), random_point(sp, seed + 9, 2.0, cfg)
    defects, gaps = [], []
    for depth in (4, 7, 10):
        S = full.truncated(depth)
        f = dist_function(S, alpha)
        rep = extremal_check(S, f)
        defects.append(rep.max_abs_defect)
        gaps.append(hull_isometry_check(S, alpha, beta)[0])
        worst = float(np.max(S.dist_matrix - f[:, None] - f[None, :]))
        out.append(Check(f"depth {depth}: d_alpha in Delta(S)", worst, 8 * cfg.tol_flow))
    out.append(Check("extremal defect non-increasing in depth",
                     max(defects[1] - defects[0], defects[2] - defects[1]), 1e-3))
    out.append(Check("extremal defect at depth 10", defects[-1], 0.02))
    out.append(Check("hull isometry gap non-increasing", gaps[-1] - gaps[0], 1e-3))
    out.append(Check("hull isometry gap at depth 10", gaps[-1], 0.02))
    f = dist_function(full, alpha)
    worst_bv, worst_mono = 0.0, -np.inf
    for xi in range(8):
        val, seq = boundary_value(full, f, xi, 0)
        worst_bv = max(worst_bv, abs(val - (alpha.tau[xi] - full.points[0].tau[xi])))
        worst_mono = max(worst_mono, float(np.max(seq[:-1] - seq[1:])))
    out.append(Check("boundary values match alpha coordinates", worst_bv, 0.05))
    out.append(Check("boundary value sequences non-decreasing", worst_mono, 8 * cfg.tol_flow))
    return out


_RUNNERS = {
    "generators": suite_generators, "space": suite_space, "flow": suite_flow,
    "geometry": suite_geometry, "tangent": suite_tangent, "hull": suite_hull,
}


def run_suites(suite: str = "all", seed: int = 0, config=DEFAULT_FLOW, jobs: int = 1):
    """Run one suite or all of them; returns ``{suite: [Check, ...]}`` in a fixed order."""
    names = list(SUITES) if suite == "all" else [suite]
    for s in names:
        if s not in _RUNNERS:
            raise ValueError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")

    def go(s):
        return _RUNNERS[s](seed, config)

    if jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(go, names))
    else:
        results = [go(s) for s in names]
    return dict(zip(names, results))
