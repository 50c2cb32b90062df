"""Geodesics, rays, Gromov products and hyperbolicity of M(Z)."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_FLOW, FlowConfig
from .errors import CertificationError
from .flow import antipodalize
from .generators import rng
from .space import (AntipodalSpace, MoebiusPoint, argmax_set, dist,
                    quasimetric_constant)

__all__ = [
    "combine", "midpoint", "geodesic", "GeodesicRay", "extend_ray", "GromovProduct",
    "gromov_product", "boundary_gromov_limit", "busemann_estimate", "quasimetric_constant",
    "HyperbolicityReport", "hyperbolicity_delta", "delta_of_distances", "FrinkReport",
    "frink_metric", "maxdiam_check", "distance_matrix",
]


# ----------------------------------------------------------------- geodesics

def combine(points: Sequence[MoebiusPoint], weights: Sequence[float],
            config: FlowConfig = DEFAULT_FLOW) -> MoebiusPoint:
    """Convex combination: antipodalize the weighted sum of coordinates."""
    if len(points) == 0:
        raise ValueError("need at least one point")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(points),) or np.any(w < 0):
        raise ValueError("need one nonnegative weight per point")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {w.sum()!r}, not 1")
    space = points[0].space
    for p in points[1:]:
        if p.space.key != space.key:
            raise ValueError("points live in different spaces")
    tau = np.zeros(space.n)
    for wi, p in zip(w, points):
        tau = tau + wi * p.tau
    return antipodalize(space, tau, config=config)


def midpoint(a: MoebiusPoint, b: MoebiusPoint, config: FlowConfig = DEFAULT_FLOW) -> MoebiusPoint:
    return combine((a, b), (0.5, 0.5), config)


def geodesic(a: MoebiusPoint, b: MoebiusPoint, k: int,
             config: FlowConfig = DEFAULT_FLOW) -> List[MoebiusPoint]:
    """``k + 1`` equally spaced points from ``a`` to ``b``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [combine((a, b), (1.0 - j / k, j / k), config) for j in range(k + 1)]


# ---------------------------------------------------------------------- rays

@dataclass
class GeodesicRay:
    """Points at parameters ``0, r, 2r, ...`` along a ray from ``base`` toward ``direction_xi``.

    ``reverse_points`` (if built) continue the line backwards toward
    ``reverse_eta``; ``reverse_points[k]`` sits at parameter ``-(k+1) r``.
    """
    base: MoebiusPoint
    direction_xi: int
    step: float
    points: List[MoebiusPoint]
    depth: int
    reverse_eta: Optional[int] = None
    reverse_points: List[MoebiusPoint] = field(default_factory=list)
    complete: bool = True
    diagnostic: str = ""

    def line(self) -> List[MoebiusPoint]:
        """All points ordered by parameter, reverse part first."""
        return self.reverse_points[::-1] + self.points


def _step_toward(p: MoebiusPoint, xi: int, r: float, config: FlowConfig):
    bump = np.zeros(p.space.n)
    bump[xi] = 2.0 * r
    return antipodalize(p.space, bump, base_tau=p.tau, config=config)


def antipode_of(p: MoebiusPoint, xi: int) -> int:
    """Antipode of ``xi`` under ``E(p.tau)`` with the largest entry (lowest index on ties)."""
    row = p.E()[xi].copy()
    row[xi] = -np.inf
    return int(np.argmax(row))


def _grow(start: MoebiusPoint, xi: int, r: float, depth: int, config: FlowConfig):
    pts = [start]
    tol = 4.0 * config.tol_flow
    for k in range(depth):
        try:
            nxt = _step_toward(pts[-1], xi, r, config)
        except CertificationError as exc:
            return pts, f"step {k + 1}: {exc}"
        d = dist(pts[-1], nxt)
        if abs(d - r) > tol:
            return pts, f"step {k + 1}: increment {d!r} differs from {r!r} by more than {tol:g}"
        if xi not in argmax_set(pts[-1], nxt):
            return pts, f"step {k + 1}: direction left the argmax of the increment"
        pts.append(nxt)
    return pts, ""


def extend_ray(base: MoebiusPoint, xi: int, step: float, depth: int, reverse_depth: int = 0,
               config: FlowConfig = DEFAULT_FLOW) -> GeodesicRay:
    """Ray from ``base`` toward ``xi`` built by repeated bump-and-antipodalize steps.

    Each step antipodalizes ``2 r 1_xi`` relative to the current point, which
    moves exactly ``r`` with ``xi`` in the argmax of the increment.  A failing
    step returns the partial ray with ``complete=False`` and a diagnostic.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    pts, diag = _grow(base, xi, step, depth, config)
    ray = GeodesicRay(base, int(xi), float(step), pts, len(pts) - 1,
                      complete=not diag, diagnostic=diag)
    if reverse_depth:
        eta = antipode_of(base, xi)
        back, diag2 = _grow(base, eta, step, reverse_depth, config)
        ray.reverse_eta = eta
        ray.reverse_points = back[1:]
        if diag2:
            ray.complete = False
            ray.diagnostic = (ray.diagnostic + "; " if ray.diagnostic else "") + "reverse " + diag2
    return ray


def ray_defects(ray: GeodesicRay, tol_flow: float = DEFAULT_FLOW.tol_flow):
    """Largest ``|d(p_i, p_j) - |i-j| r| - (|i-j|+1) 4 tol`` over all pairs on the line (<= 0 is good)."""
    pts = ray.line()
    m = len(pts)
    worst = -np.inf
    for i in range(m):
        for j in range(i + 1, m):
            k = j - i
            worst = max(worst, abs(dist(pts[i], pts[j]) - k * ray.step) - (k + 1) * 4 * tol_flow)
    return worst


# ------------------------------------------------------------ Gromov products

@dataclass
class GromovProduct:
    value: float
    bound: float
    xi: int
    eta: int
    ok: bool

    def __float__(self):
        return self.value


def gromov_product(a: MoebiusPoint, b: MoebiusPoint, w: MoebiusPoint,
                   slack: Optional[float] = None) -> GromovProduct:
    """``(a|b)_w`` with the upper bound ``-log E(w)(xi, eta)`` over argmax directions.

    ``xi`` ranges over the argmax of ``a - w`` and ``eta`` over that of
    ``b - w``; every such pair bounds the product, so the smallest bound is
    reported.  ``ok`` records ``value <= bound + slack`` (default
    ``8 tol_flow``).
    """
    if slack is None:
        slack = 8.0 * DEFAULT_FLOW.tol_flow
    val = 0.5 * (dist(w, a) + dist(w, b) - dist(a, b))
    A, B = argmax_set(w, a), argmax_set(w, b)
    L = w.space.log2rho
    sub = w.tau[A][:, None] + w.tau[B][None, :] + L[np.ix_(A, B)]
    eq = A[:, None] == B[None, :]
    bounds = np.where(eq, np.inf, -0.5 * sub)
    k = int(np.argmin(bounds))
    i, j = divmod(k, len(B))
    bound = float(bounds[i, j])
    return GromovProduct(float(val), bound, int(A[i]), int(B[j]), bool(val <= bound + slack))


class _RayCache:
    def __init__(self, base, step, config):
        self.base, self.step, self.config = base, step, config
        self.rays = {}

    def get(self, xi, depth):
        ray = self.rays.get(xi)
        if ray is None or ray.depth < depth:
            ray = extend_ray(self.base, xi, self.step, depth, config=self.config)
            if not ray.complete:
                raise CertificationError(f"ray toward {xi} failed: {ray.diagnostic}")
            self.rays[xi] = ray
        return ray


@dataclass
class BoundaryEstimate:
    estimate: float
    reference: float
    depths: List[int]
    series: List[float]

    @property
    def gaps(self) -> List[float]:
        return [abs(s - self.reference) for s in self.series]

    def monotone(self, slack: float) -> bool:
        g = self.gaps
        return all(g[i + 1] <= g[i] + slack for i in range(len(g) - 1))

    def __iter__(self):
        return iter((self.estimate, self.reference))


def _schedule(depth, depths):
    if depths is None:
        depths = [d for d in (depth - 4, depth - 2, depth) if d >= 1]
    return sorted(set(int(d) for d in depths) | {int(depth)})


def boundary_gromov_limit(base: MoebiusPoint, xi: int, eta: int, step: float = 1.0,
                          depth: int = 12, depths: Optional[Sequence[int]] = None,
                          config: FlowConfig = DEFAULT_FLOW, _cache=None) -> BoundaryEstimate:
    """Gromov product of ray points toward ``xi`` and ``eta`` against ``-log E(base)(xi, eta)``.

    The series is evaluated at ``depths`` (default ``depth-4, depth-2, depth``).
    """
    if xi == eta:
        raise ValueError("xi and eta must differ")
    ds = _schedule(depth, depths)
    cache = _cache or _RayCache(base, step, config)
    rx, ry = cache.get(xi, ds[-1]), cache.get(eta, ds[-1])
    series = [gromov_product(rx.points[d], ry.points[d], base).value for d in ds]
    ref = float(-0.5 * (base.tau[xi] + base.tau[eta] + base.space.log2rho[xi, eta]))
    return BoundaryEstimate(series[-1], ref, ds, series)


def busemann_estimate(rho1: MoebiusPoint, rho2: MoebiusPoint, xi: int, step: float = 1.0,
                      depth: int = 12, depths: Optional[Sequence[int]] = None,
                      config: FlowConfig = DEFAULT_FLOW) -> BoundaryEstimate:
    """``d(rho1, tip) - d(rho2, tip)`` along a ray from ``rho1`` toward ``xi``."""
    ds = _schedule(depth, depths)
    ray = extend_ray(rho1, xi, step, ds[-1], config=config)
    if not ray.complete:
        raise CertificationError(f"ray toward {xi} failed: {ray.diagnostic}")
    series = [dist(rho1, ray.points[d]) - dist(rho2, ray.points[d]) for d in ds]
    ref = float(rho2.tau[xi] - rho1.tau[xi])
    return BoundaryEstimate(series[-1], ref, ds, series)


# -------------------------------------------------------------- hyperbolicity

def distance_matrix(points: Sequence[MoebiusPoint]) -> np.ndarray:
    T = np.array([p.tau for p in points])
    for p in points[1:]:
        if p.space.key != points[0].space.key:
            raise ValueError("points live in different spaces")
    return np.max(np.abs(T[:, None, :] - T[None, :, :]), axis=2)


def _delta_at(d: np.ndarray, w: int):
    """Max over (x, y, z) of ``min((x|z)_w, (z|y)_w) - (x|y)_w`` and its argmax."""
    G = 0.5 * (d[w][:, None] + d[w][None, :] - d)
    A = np.minimum(G[:, None, :], G[None, :, :]) - G[:, :, None]
    k = int(np.argmax(A))
    return float(A.flat[k]), np.unravel_index(k, A.shape)


def delta_of_distances(d: np.ndarray, jobs: int = 1, ws: Optional[Sequence[int]] = None):
    """Four-point delta of a distance matrix over all ordered quadruples.

    Returns ``(delta, (x, y, z, w))``, unclamped.  ``ws`` restricts the
    base point.  With ``jobs > 1`` base points are scanned in threads; max
    is exact so the result does not depend on the split.
    """
    m = d.shape[0]
    ws = list(range(m)) if ws is None else list(ws)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            res = list(ex.map(lambda w: _delta_at(d, w), ws))
    else:
        res = [_delta_at(d, w) for w in ws]
    best = max(range(len(ws)), key=lambda i: (res[i][0], -i))
    x, y, z = res[best][1]
    return res[best][0], (int(x), int(y), int(z), int(ws[best]))


@dataclass
class HyperbolicityReport:
    delta_hat: float
    witness: Tuple[int, int, int, int]
    sample_size: int
    qm_constant: float
    log_gap: float
    subsampled: Optional[List[int]] = None

    def as_dict(self):
        return {"delta_hat": self.delta_hat, "witness": list(self.witness),
                "sample_size": self.sample_size, "qm_constant": self.qm_constant,
                "log_gap": self.log_gap, "subsample": self.subsampled}


def hyperbolicity_delta(points: Sequence[MoebiusPoint], cap: int = 40, seed: int = 0,
                        quadruples: Optional[int] = None, base_only: bool = False,
                        jobs: int = 1) -> HyperbolicityReport:
    """Sampled lower bound for the hyperbolicity constant of M(Z).

    If ``quadruples`` is given, that many seeded random quadruples are
    scanned (all 4! orderings each); otherwise all ordered quadruples of the
    sample, subsampled to ``cap`` points with a seeded draw when larger.
    ``base_only`` fixes ``w`` to the first point.  Witness indices refer to
    the input list.
    """
    pts = list(points)
    if len(pts) < 4:
        raise ValueError("need at least four points")
    K = pts[0].space.qm_constant
    idx = np.arange(len(pts))
    sub = None
    if quadruples is None and len(pts) > cap:
        keep = np.sort(rng(seed).choice(len(pts), size=cap, replace=False))
        if base_only and 0 not in keep:
            keep[0] = 0
            keep = np.sort(keep)
        idx, sub = keep, keep.tolist()
    d = distance_matrix([pts[i] for i in idx])
    if quadruples is not None:
        g = rng(seed)
        best, wit = -np.inf, (0, 1, 2, 3)
        for _ in range(int(quadruples)):
            q = g.choice(len(pts), size=4, replace=False)
            val, (x, y, z, w) = delta_of_distances(d[np.ix_(q, q)])
            if val > best:
                best, wit = val, (int(q[x]), int(q[y]), int(q[z]), int(q[w]))
    else:
        ws = [int(np.flatnonzero(idx == 0)[0])] if base_only else None
        best, (x, y, z, w) = delta_of_distances(d, jobs=jobs, ws=ws)
        wit = (int(idx[x]), int(idx[y]), int(idx[z]), int(idx[w]))
    delta = max(0.0, float(best))
    return HyperbolicityReport(delta, wit, len(idx) if quadruples is None else len(pts),
                               float(K), delta - float(np.log(K)), sub)


# ---------------------------------------------------------------------- Frink

@dataclass
class FrinkReport:
    alpha: np.ndarray
    epsilon: float
    K: float
    lower_ratio: float      # min alpha / q^eps over pairs (>= 1/4 required)
    upper_ratio: float      # max alpha / q^eps over pairs (<= 1 required)
    ok: bool

    def as_dict(self):
        return {"alpha": self.alpha.tolist(), "epsilon": self.epsilon, "K": self.K,
                "min_alpha_over_q_eps": self.lower_ratio, "max_alpha_over_q_eps": self.upper_ratio,
                "ok": self.ok}


def frink_metric(q, tol: float = 1e-12) -> FrinkReport:
    """Chain metric of ``q**eps`` with ``eps = min(1, log 2 / log K)``.

    The chain infimum over finite Z is the all-pairs shortest path of the
    complete graph weighted by ``q**eps``.
    """
    from scipy.sparse.csgraph import floyd_warshall

    q = q.rho if isinstance(q, AntipodalSpace) else np.asarray(q, dtype=float)
    try:
        K, _ = quasimetric_constant(q)
    except ValueError as exc:
        raise ValueError(f"cannot compute the quasi-metric constant: {exc}") from exc
    eps = 1.0 if K <= 2.0 else float(min(1.0, np.log(2.0) / np.log(K)))
    qe = q ** eps
    np.fill_diagonal(qe, 0.0)
    alpha = floyd_warshall(qe, directed=False)
    alpha = np.minimum(alpha, qe)
    off = ~np.eye(q.shape[0], dtype=bool)
    ratio = alpha[off] / qe[off]
    lo, hi = float(ratio.min()), float(ratio.max())
    ok = bool(np.all(qe[off] / 4.0 <= alpha[off] + tol) and np.all(alpha[off] <= qe[off] + tol))
    return FrinkReport(alpha, eps, float(K), lo, hi, ok)


# ------------------------------------------------------------------- maxdiam

def maxdiam_check(a: MoebiusPoint, b: MoebiusPoint, R: float):
    """E(a)-diameter of ``{xi : (b - a)(xi) >= R}`` against ``exp(-R)``.

    Returns ``(diameter, bound, members, ok)`` with ``ok`` meaning
    ``diameter <= bound + 8 tol_flow``.
    """
    d = b.tau - a.tau
    S = np.flatnonzero(d >= R)
    bound = float(np.exp(-R))
    if len(S) < 2:
        diam = 0.0
    else:
        Ea = a.E()[np.ix_(S, S)]
        diam = float(Ea.max())
    return diam, bound, S.tolist(), bool(diam <= bound + 8 * DEFAULT_FLOW.tol_flow)
