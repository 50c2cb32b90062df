"""Command-line interface: ``moebspace <command> ...``.

Every command prints a JSON run report (or writes it to ``--out``).  Exit
status is 0 when all checks pass, 2 when a check fails and 1 for usage or
input errors.
"""
import argparse
import sys

import numpy as np

from . import flow as fl
from . import geometry as geo
from . import hull as hl
from . import tangent as tg
from .config import FlowConfig, TOL_ANTIPODE, TOL_VALIDATE, tolerance_block
from .errors import CertificationError, MoebiusError
from .generators import (gen_circle, gen_dendrogram, gen_discrete, gen_quasimetric,
                         random_point, rng)
from .io import (InputError, digest_bytes, dumps, load_point, load_space, parse_json,
                 read_json, write_text)
from .reports import RunReport, Timer
from .selftest import SUITES, run_suites
from .space import compare, quasimetric_constant, validate_space


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = p.add_argument_group("global options")
    g.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    g.add_argument("--jobs", type=int, default=d(1), help="threads for batch scans")
    g.add_argument("--seed", type=int, default=d(0), help="seed for every random draw")
    g.add_argument("--tol-flow", type=float, default=d(1e-8), help="flow certification tolerance")
    g.add_argument("--tol-antipode", type=float, default=d(TOL_ANTIPODE))
    g.add_argument("--step-h", type=float, default=d(0.01), help="integrator step")
    g.add_argument("--max-time", type=float, default=d(80.0), help="flow time limit")
    g.add_argument("--renormalize", action="store_true", default=d(False),
                   help="divide the input matrix by its largest entry")
    g.add_argument("--no-timing", action="store_true", default=d(False),
                   help="report wall_time_ms as 0 (byte-stable output)")


# ------------------------------------------------------------------- helpers

class Ctx:
    def __init__(self, args, report):
        self.args = args
        self.report = report
        self.cfg = FlowConfig(tol_flow=args.tol_flow, step_h=args.step_h, max_time=args.max_time,
                              min_step=min(1e-6, args.step_h))
        self.space = None

    def load_space(self, path=None):
        path = path or self.args.space
        sp, dg = load_space(path, renormalize=self.args.renormalize,
                            tol_antipode=self.args.tol_antipode)
        self.report.inputs["space"] = dg
        self.space = sp
        return sp

    def load_point(self, name, path):
        p, dg = load_point(path, self.space, self.cfg.tol_flow)
        self.report.inputs[name] = dg
        return p

    def point_or_base(self, name, path):
        return self.space.base_point if path is None else self.load_point(name, path)

    def vector(self, name, value):
        """A vector given inline as JSON, or a file holding a list or a point JSON."""
        if value.lstrip().startswith("["):
            data = parse_json(value, f"--{name}")
            self.report.inputs[name] = digest_bytes(value.encode())
        else:
            data, dg = read_json(value)
            self.report.inputs[name] = dg
            if isinstance(data, dict):
                data = data.get("tau", data.get("vector"))
        try:
            v = np.array(data, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InputError(f"--{name} is not a numeric vector") from exc
        if v.shape != (self.space.n,):
            raise InputError(f"--{name} must have {self.space.n} entries")
        return v


def _point_out(ctx, p, path):
    if path:
        write_text(path, dumps(p.to_json()))


# ------------------------------------------------------------------ commands

def cmd_validate(ctx):
    a = ctx.args
    data, dg = read_json(a.space)
    ctx.report.inputs["space"] = dg
    try:
        m = np.array(data["rho"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("space JSON needs a numeric 'rho' matrix") from exc
    if a.renormalize:
        off = ~np.eye(m.shape[0], dtype=bool) if m.ndim == 2 and m.shape[0] == m.shape[1] else None
        if off is not None and np.max(m[off]) > 0:
            m = m / np.max(m[off])
    rep = validate_space(m, TOL_VALIDATE, a.tol_antipode)
    ctx.report.results = rep.as_dict()
    ctx.report.check("valid antipodal space", len(rep.failures), 0, "==")


def cmd_info(ctx):
    sp = ctx.load_space()
    K, wit = quasimetric_constant(sp.rho)
    ctx.report.results = {
        "id": sp.key, "n": sp.n, "labels": list(sp.labels),
        "diameter": sp.report.diameter, "min_offdiag": sp.report.min_offdiag,
        "antipode_count_per_row": sp.report.antipode_count_per_row,
        "qm_constant": K, "qm_witness": list(wit), "ultrametric": bool(abs(K - 1) <= 1e-9),
    }


def _initial_tau(ctx):
    a = ctx.args
    if a.random:
        return rng(a.seed).uniform(-a.amp, a.amp, ctx.space.n)
    if a.tau is None:
        raise UsageError("give --tau or --random")
    return ctx.vector("tau", a.tau)


def cmd_flow(ctx):
    sp = ctx.load_space()
    a = ctx.args
    tau0 = _initial_tau(ctx)
    base = ctx.point_or_base("base", a.base)
    tr = fl.integrate_flow(sp, tau0, base.tau, ctx.cfg)
    ctx.report.results = tr.as_dict() if a.full else {
        k: v for k, v in tr.as_dict().items()
        if k in ("times", "disc_norms", "tau_final", "residual", "stop_reason", "certified",
                 "steps", "limit_bound")}
    env, pw, neg = fl.decay_violations(tr)
    ctx.report.check("certified (residual <= tol_flow)", tr.residual, ctx.cfg.tol_flow)
    ctx.report.check("norm decay envelope excess", env, 1e-6)
    ctx.report.check("pointwise decay excess", pw, 1e-6)
    ctx.report.check("negative discrepancy stays nonpositive", neg, 1e-6)


def cmd_antipodalize(ctx):
    sp = ctx.load_space()
    a = ctx.args
    tau0 = _initial_tau(ctx)
    base = ctx.point_or_base("base", a.base)
    p = fl.antipodalize(sp, tau0, base.tau, ctx.cfg, verify_step=a.verify_step)
    lo, up = fl.pinfest_bounds(sp, tau0, base.tau)
    ctx.report.results = {"tau_final": p.tau.tolist(), "residual": p.residual, **p.meta,
                          "limit_bound": 4 * p.residual}
    ctx.report.check("residual <= tol_flow", p.residual, ctx.cfg.tol_flow)
    ctx.report.check("lower a-priori bound", float(np.max(lo - p.tau)), 4 * ctx.cfg.tol_flow)
    ctx.report.check("upper a-priori bound", float(np.max(p.tau - up)), 4 * ctx.cfg.tol_flow)
    _point_out(ctx, p, a.point_out)


def cmd_distance(ctx):
    ctx.load_space()
    x = ctx.point_or_base("a", ctx.args.a)
    y = ctx.point_or_base("b", ctx.args.b)
    rep = compare(x, y)
    ctx.report.results = rep.as_dict()
    ctx.report.check("|max + min| of the difference", abs(rep.balance), rep.balance_bound)


def _geodesic_checks(ctx, x, y, pts):
    d = geo.dist(x, y)
    k = len(pts) - 1
    worst = 0.0
    for j, p in enumerate(pts):
        worst = max(worst, abs(geo.dist(x, p) - j / k * d), abs(geo.dist(y, p) - (1 - j / k) * d))
    ctx.report.check("geodesic additivity defect", worst, 5 * ctx.cfg.tol_flow)
    return d


def cmd_midpoint(ctx):
    ctx.load_space()
    x, y = ctx.load_point("a", ctx.args.a), ctx.load_point("b", ctx.args.b)
    m = geo.midpoint(x, y, ctx.cfg)
    d = _geodesic_checks(ctx, x, y, [x, m, y])
    ctx.report.results = {"midpoint": m.to_json(), "distance": d,
                          "dist_a_mid": geo.dist(x, m), "dist_mid_b": geo.dist(m, y)}
    _point_out(ctx, m, ctx.args.point_out)


def cmd_geodesic(ctx):
    ctx.load_space()
    x, y = ctx.load_point("a", ctx.args.a), ctx.load_point("b", ctx.args.b)
    pts = geo.geodesic(x, y, ctx.args.k, ctx.cfg)
    d = _geodesic_checks(ctx, x, y, pts)
    ctx.report.results = {"distance": d, "points": [p.to_json() for p in pts]}


def cmd_ray(ctx):
    sp = ctx.load_space()
    a = ctx.args
    base = ctx.point_or_base("base", a.base)
    ray = geo.extend_ray(base, a.xi, a.step, a.depth, a.reverse_depth, ctx.cfg)
    ctx.report.results = {
        "direction_xi": ray.direction_xi, "reverse_eta": ray.reverse_eta, "step": ray.step,
        "depth": ray.depth, "complete": ray.complete, "diagnostic": ray.diagnostic,
        "points": [p.tau.tolist() for p in ray.points],
        "reverse_points": [p.tau.tolist() for p in ray.reverse_points],
        "residuals": [p.residual for p in ray.line()],
    }
    ctx.report.check("ray complete", ray.complete, True, "==")
    ctx.report.check("concatenation defect", geo.ray_defects(ray, ctx.cfg.tol_flow), 0.0)
    in_arg = all(ray.direction_xi in geo.argmax_set(base, p) for p in ray.points[1:])
    ctx.report.check("direction stays in the argmax", in_arg, True, "==")


def cmd_gromov(ctx):
    sp = ctx.load_space()
    a = ctx.args
    base = ctx.point_or_base("base", a.base)
    if a.a is not None or a.b is not None:
        x, y = ctx.point_or_base("a", a.a), ctx.point_or_base("b", a.b)
        gp = geo.gromov_product(x, y, base)
        ctx.report.results = {"product": gp.value, "bound": gp.bound, "xi": gp.xi, "eta": gp.eta}
        ctx.report.check("product <= boundary bound + 8 tol_flow", gp.value - gp.bound, 8 * ctx.cfg.tol_flow)
        return
    if a.xi is None or a.eta is None:
        raise UsageError("give --xi and --eta (or --a/--b points)")
    est = geo.boundary_gromov_limit(base, a.xi, a.eta, a.step, a.depth, config=ctx.cfg)
    ctx.report.results = {"estimate": est.estimate, "reference": est.reference,
                          "depths": est.depths, "series": est.series, "gaps": est.gaps}
    ctx.report.check("gap non-increasing over depths", max(np.diff(est.gaps), default=0.0),
                     8 * ctx.cfg.tol_flow)
    ctx.report.check("gap at final depth", est.gaps[-1], a.threshold)


def cmd_busemann(ctx):
    sp = ctx.load_space()
    a = ctx.args
    r1 = ctx.point_or_base("rho1", a.rho1)
    r2 = ctx.load_point("rho2", a.rho2) if a.rho2 else random_point(sp, a.seed, a.amp, ctx.cfg)
    est = geo.busemann_estimate(r1, r2, a.xi, a.step, a.depth, config=ctx.cfg)
    ctx.report.results = {"estimate": est.estimate, "reference": est.reference,
                          "depths": est.depths, "series": est.series, "gaps": est.gaps,
                          "rho2": r2.tau.tolist()}
    ctx.report.check("gap non-increasing over depths", max(np.diff(est.gaps), default=0.0),
                     8 * ctx.cfg.tol_flow)
    ctx.report.check("gap at final depth", est.gaps[-1], a.threshold)


def _points_file(ctx, path):
    data, dg = read_json(path)
    ctx.report.inputs["points"] = dg
    items = data.get("points", data.get("taus")) if isinstance(data, dict) else data
    if not isinstance(items, list):
        raise InputError("points file must be a list of points or tau vectors")
    from .io import point_from_json
    out = []
    for it in items:
        it = it if isinstance(it, dict) else {"tau": it}
        out.append(point_from_json(it, ctx.space, ctx.cfg.tol_flow))
    return out


def cmd_delta(ctx):
    sp = ctx.load_space()
    a = ctx.args
    if a.points:
        pts = _points_file(ctx, a.points)
    elif a.random:
        pts = [random_point(sp, a.seed * 100003 + i, a.amp, ctx.cfg) for i in range(a.random)]
    else:
        raise UsageError("give --points or --random")
    rep = geo.hyperbolicity_delta(pts, cap=a.cap, seed=a.seed, quadruples=a.quadruples, jobs=a.jobs)
    ctx.report.results = rep.as_dict()
    ctx.report.check("delta_hat >= 0", rep.delta_hat, 0.0, ">=")


def cmd_qm_constant(ctx):
    sp = ctx.load_space()
    K, wit = quasimetric_constant(sp.rho)
    ctx.report.results = {"K": K, "witness": list(wit), "ultrametric": bool(abs(K - 1) <= 1e-9),
                          "log_K": float(np.log(K))}
    ctx.report.check("K >= 1", K, 1.0, ">=")


def cmd_frink(ctx):
    sp = ctx.load_space()
    a = ctx.args
    if a.q:
        data, dg = read_json(a.q)
        ctx.report.inputs["q"] = dg
        q = np.array(data["rho"] if isinstance(data, dict) else data, dtype=float)
    else:
        q = sp.rho
    fr = geo.frink_metric(q)
    ctx.report.results = fr.as_dict()
    ctx.report.check("alpha >= q^eps / 4", fr.lower_ratio, 0.25 - 1e-12, ">=")
    ctx.report.check("alpha <= q^eps", fr.upper_ratio, 1 + 1e-12)


def cmd_tangent(ctx):
    sp = ctx.load_space()
    a = ctx.args
    x = ctx.point_or_base("point", a.point)
    ob = tg.odd_basis(x)
    res = ob.as_dict()
    ctx.report.check("dimension = bipartite components", ob.dimension,
                     sum(c.bipartite for c in ob.graph.components), "==")
    vectors = []
    if a.vector:
        vectors.append(("vector", ctx.vector("vector", a.vector)))
    if a.basis:
        vectors += [(f"basis[{i}]", b) for i, b in enumerate(ob.basis)]
    checks = []
    for name, v in vectors:
        lc = tg.tangent_line_check(x, v, a.t, ctx.cfg)
        d = {"name": name, **lc.as_dict()}
        checks.append(d)
        if lc.exact:
            ctx.report.check(f"{name}: discrepancy unchanged along the line", lc.disc_excess, 1e-12)
            ctx.report.check(f"{name}: distance moved = |t| ||v||",
                             abs(lc.distance - abs(a.t) * float(np.max(np.abs(v)))), 1e-12)
    res["line_checks"] = checks
    ctx.report.results = res


def cmd_hull(ctx):
    sp = ctx.load_space()
    a = ctx.args
    spec, dg = read_json(a.sample)
    ctx.report.inputs["sample"] = dg
    if not isinstance(spec, dict):
        raise InputError("sample spec must be a JSON object")
    rnd = spec.get("random")
    S = hl.build_sample(sp, rays=[tuple(r) for r in spec.get("rays", [])],
                        random=tuple(rnd) if rnd else None,
                        include_base=spec.get("include_base", True),
                        tips_only=spec.get("tips_only", False), config=ctx.cfg)
    res = {"size": len(S), "tags": [list(t) for t in S.tags]}
    ctx.report.check("sample triangle inequality", S.triangle_excess(), 8 * ctx.cfg.tol_flow)
    f = None
    if a.f:
        data, dgf = read_json(a.f)
        ctx.report.inputs["f"] = dgf
        f = np.array(data, dtype=float)
    elif a.alpha:
        alpha = ctx.load_point("alpha", a.alpha)
        f = hl.dist_function(S, alpha)
        if a.beta:
            beta = ctx.load_point("beta", a.beta)
            gap, sup, d = hl.hull_isometry_check(S, alpha, beta)
            res["isometry"] = {"gap": gap, "sup_diff": sup, "distance": d}
            ctx.report.check("sup difference <= distance", sup - d, 8 * ctx.cfg.tol_flow)
    if f is not None:
        rep = hl.extremal_check(S, f)
        res["extremal"] = rep.as_dict()
        rays = sorted({t[1] for t in S.tags if t[0] == "ray"})
        if "base" in [t[0] for t in S.tags] and rays:
            o = S.index_of(("base",))
            res["boundary_values"] = {str(xi): hl.boundary_value(S, f, xi, o)[1].tolist() for xi in rays}
    ctx.report.results = res


def cmd_gen(ctx):
    a = ctx.args
    kind = a.kind
    if kind == "discrete":
        obj = gen_discrete(a.n).to_json()
    elif kind == "circle":
        obj = gen_circle(a.n).to_json()
    elif kind == "quasimetric":
        obj = gen_quasimetric(a.n, a.K, a.seed).to_json()
    elif kind == "dendrogram":
        if not a.spec:
            raise UsageError("gen dendrogram needs --spec")
        data, _ = read_json(a.spec)
        obj = gen_dendrogram(data).to_json()
    else:  # random-point
        if not a.space:
            raise UsageError("gen random-point needs --space")
        sp = ctx.load_space(a.space)
        obj = random_point(sp, a.seed, a.amp, ctx.cfg).to_json()
    return obj


def cmd_selftest(ctx):
    a = ctx.args
    res = run_suites(a.suite, a.seed, ctx.cfg, a.jobs)
    summary = {}
    for name, checks in res.items():
        ctx.report.checks.extend(_prefixed(name, c) for c in checks)
        summary[name] = {"checks": len(checks), "failed": sum(not c.passed for c in checks)}
    ctx.report.results = summary


def _prefixed(suite, c):
    c.name = f"{suite}: {c.name}"
    return c


# -------------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="moebspace", description="Moebius spaces of finite antipodal spaces.")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, fn, help_, space=True):
        s = sub.add_parser(name, help=help_, parents=[common])
        if space:
            s.add_argument("space", help="space JSON file")
        s.set_defaults(fn=fn)
        return s

    add("validate", cmd_validate, "check the antipodal-space rules")
    add("info", cmd_info, "summary of a space")
    for name, fn in (("flow", cmd_flow), ("antipodalize", cmd_antipodalize)):
        s = add(name, fn, "integrate the antipodal flow" if name == "flow" else "antipodalize a vector")
        s.add_argument("--tau", help="initial vector: inline JSON list or a file")
        s.add_argument("--random", action="store_true", help="draw tau uniformly from [-amp, amp]")
        s.add_argument("--amp", type=float, default=2.0)
        s.add_argument("--base", help="base point JSON (default: rho0)")
        if name == "flow":
            s.add_argument("--full", action="store_true", help="include sampled tau vectors")
        else:
            s.add_argument("--verify-step", action="store_true", help="rerun at h/2 and compare")
            s.add_argument("--point-out", help="also write the point JSON here")
    s = add("distance", cmd_distance, "distance of two points")
    s.add_argument("--a")
    s.add_argument("--b")
    s = add("midpoint", cmd_midpoint, "midpoint of two points")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--point-out")
    s = add("geodesic", cmd_geodesic, "points along the geodesic")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--k", type=int, default=4)
    s = add("ray", cmd_ray, "geodesic ray toward a point of Z")
    s.add_argument("--xi", type=int, required=True)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--reverse-depth", type=int, default=0)
    s.add_argument("--base")
    s = add("gromov", cmd_gromov, "Gromov products (of points or toward boundary points)")
    s.add_argument("--xi", type=int)
    s.add_argument("--eta", type=int)
    s.add_argument("--a")
    s.add_argument("--b")
    s.add_argument("--base")
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--depth", type=int, default=12)
    s.add_argument("--threshold", type=float, default=0.05)
    s = add("busemann", cmd_busemann, "Busemann estimate toward a point of Z")
    s.add_argument("--xi", type=int, required=True)
    s.add_argument("--rho1")
    s.add_argument("--rho2", help="point JSON (default: seeded random point)")
    s.add_argument("--amp", type=float, default=2.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--depth", type=int, default=12)
    s.add_argument("--threshold", type=float, default=0.05)
    s = add("delta", cmd_delta, "sampled four-point hyperbolicity constant")
    s.add_argument("--points")
    s.add_argument("--random", type=int)
    s.add_argument("--amp", type=float, default=2.0)
    s.add_argument("--cap", type=int, default=40)
    s.add_argument("--quadruples", type=int)
    add("qm-constant", cmd_qm_constant, "quasi-metric constant of rho0")
    s = add("frink", cmd_frink, "Frink chain metric of a quasi-metric")
    s.add_argument("--q", help="matrix JSON (default: rho0)")
    s = add("tangent", cmd_tangent, "antipodal graph, odd basis and line checks")
    s.add_argument("--point")
    s.add_argument("--vector")
    s.add_argument("--basis", action="store_true")
    s.add_argument("--t", type=float, default=0.0)
    s = add("hull", cmd_hull, "extremal functions on a sample")
    s.add_argument("--sample", required=True)
    s.add_argument("--alpha")
    s.add_argument("--beta")
    s.add_argument("--f")
    s = add("gen", cmd_gen, "generate a space or a random point", space=False)
    s.add_argument("kind", choices=["discrete", "circle", "dendrogram", "quasimetric", "random-point"])
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--K", type=float, default=1.7)
    s.add_argument("--spec")
    s.add_argument("--space")
    s.add_argument("--amp", type=float, default=2.0)
    s = add("selftest", cmd_selftest, "run the property suites", space=False)
    s.add_argument("--suite", default="all", choices=("all",) + SUITES)
    return p


def run(argv=None):
    """Entry point; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:      # --help
        return int(exc.code or 0)
    report = RunReport(args.command)
    ctx = Ctx(args, report)
    try:
        with Timer() as tm:
            obj = args.fn(ctx)
    except UsageError as exc:
        print(f"moebspace {args.command}: {exc}", file=sys.stderr)
        return 1
    except CertificationError as exc:
        # the computation ran but could not certify its result: a failed check
        report.check("certification", str(exc), "certified", "==", passed=False)
        if exc.trace is not None:
            report.results = {"trace": exc.trace.as_dict()}
        obj, tm = None, Timer()
        tm.ms = 0
    except (MoebiusError, ValueError) as exc:
        print(f"moebspace {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.command == "gen":
        write_text(args.out, dumps(obj))
        return 0
    report.config = {**tolerance_block(ctx.cfg, args.tol_antipode), "seed": args.seed,
                     "jobs": args.jobs, "renormalize": args.renormalize}
    report.wall_time_ms = 0 if args.no_timing else tm.ms
    try:
        write_text(args.out, report.to_json())
    except InputError as exc:
        print(f"moebspace: {exc}", file=sys.stderr)
        return 1
    for c in report.failures:
        print(f"check failed: {c.name}: {c.observed} {c.relation} {c.bound}", file=sys.stderr)
    return 0 if report.ok else 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
