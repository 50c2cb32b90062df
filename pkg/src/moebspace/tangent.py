"""Odd functions, the antipodal graph and tangent spaces of M(Z)."""
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .config import DEFAULT_FLOW, FlowConfig
from .errors import CertificationError, UnsupportedStructureError
from .flow import antipodalize, discrepancy
from .space import MoebiusPoint


@dataclass
class Component:
    vertices: List[int]
    bipartite: bool
    coloring: Optional[dict] = None          # vertex -> 0/1 on bipartite components
    odd_cycle: Optional[List[int]] = None    # closed walk v0 .. vk (v0 == vk) of odd length

    def as_dict(self):
        return {"vertices": self.vertices, "bipartite": self.bipartite,
                "coloring": None if self.coloring is None else {str(k): v for k, v in sorted(self.coloring.items())},
                "odd_cycle": self.odd_cycle}


@dataclass
class AntipodalGraph:
    vertices: List[int]
    edges: List[Tuple[int, int]]
    components: List[Component]
    near_threshold: List[Tuple[int, int, float]] = field(default_factory=list)

    def adjacency(self):
        adj = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    @property
    def is_perfect_matching(self) -> bool:
        deg = np.zeros(len(self.vertices), dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return bool(np.all(deg == 1))

    def as_dict(self):
        return {"edges": [list(e) for e in self.edges],
                "components": [c.as_dict() for c in self.components],
                "near_threshold": [{"pair": [a, b], "value": v} for a, b, v in self.near_threshold]}


def _components(n, adj) -> List[Component]:
    color = [-1] * n
    parent = [-1] * n
    depth = [0] * n
    comps = []
    for s in range(n):
        if color[s] >= 0:
            continue
        color[s] = 0
        order = [s]
        q = deque([s])
        conflict = None
        while q:
            u = q.popleft()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    order.append(v)
                    q.append(v)
                elif color[v] == color[u] and conflict is None:
                    conflict = (u, v)
        verts = sorted(order)
        if conflict is None:
            comps.append(Component(verts, True, {v: color[v] for v in verts}))
            continue
        # odd cycle: climb the BFS tree from both ends of the monochromatic edge
        u, v = conflict
        pu, pv = [u], [v]
        while pu[-1] != pv[-1]:
            if depth[pu[-1]] >= depth[pv[-1]]:
                pu.append(parent[pu[-1]])
            else:
                pv.append(parent[pv[-1]])
        cycle = pu + pv[:-1][::-1] + [u]
        comps.append(Component(verts, False, None, cycle))
    return comps


def antipodal_graph(x: MoebiusPoint, tol_antipode: Optional[float] = None) -> AntipodalGraph:
    """Pairs where ``E(x)`` is within ``tol_antipode`` of one, with a bipartition analysis.

    Entries within a factor ten of the cutoff on either side are listed in
    ``near_threshold``, since the graph (and hence the tangent dimension) can
    flip there.
    """
    sp = x.space
    tol = sp.tol_antipode if tol_antipode is None else tol_antipode
    n = sp.n
    E = x.E()
    iu, ju = np.triu_indices(n, 1)
    vals = E[iu, ju]
    is_edge = vals >= 1.0 - tol
    edges = [(int(a), int(b)) for a, b in zip(iu[is_edge], ju[is_edge])]
    adj = {v: [] for v in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    lonely = [v for v in range(n) if not adj[v]]
    if lonely:
        row = E[lonely[0]].copy()
        row[lonely[0]] = -np.inf
        raise CertificationError(f"point {lonely[0]} has no antipode within {tol:g} "
                                 f"(largest entry {row.max():.12g}); not a member of M(Z)")
    gap = 1.0 - vals
    near = (gap >= tol / 10.0) & (gap <= 10.0 * tol)
    flagged = [(int(a), int(b), float(v)) for a, b, v in zip(iu[near], ju[near], vals[near])]
    return AntipodalGraph(list(range(n)), edges, _components(n, adj), flagged)


@dataclass
class OddSpace:
    basis: List[np.ndarray]
    dimension: int
    graph: AntipodalGraph

    def as_dict(self):
        return {"dimension": self.dimension, "basis": [b.tolist() for b in self.basis],
                "graph": self.graph.as_dict()}


def odd_basis(x: MoebiusPoint, graph: Optional[AntipodalGraph] = None) -> OddSpace:
    """One +-1 vector per bipartite component of the antipodal graph."""
    g = antipodal_graph(x) if graph is None else graph
    basis = []
    for c in g.components:
        if not c.bipartite:
            continue
        v = np.zeros(x.space.n)
        for vert, col in c.coloring.items():
            v[vert] = 1.0 if col == c.coloring[c.vertices[0]] else -1.0
        basis.append(v)
    return OddSpace(basis, len(basis), g)


def is_odd(x: MoebiusPoint, v, tol: float = 1e-12, graph: Optional[AntipodalGraph] = None):
    """Check ``|v(a) + v(b)| <= tol`` on all edges; returns ``(ok, worst violation)``."""
    g = antipodal_graph(x) if graph is None else graph
    v = np.asarray(v, dtype=float)
    if not g.edges:
        return True, 0.0
    e = np.array(g.edges)
    worst = float(np.max(np.abs(v[e[:, 0]] + v[e[:, 1]])))
    return worst <= tol, worst


def random_odd_vector(space_odd: OddSpace, rng, scale: float = 1.0) -> np.ndarray:
    """Random combination of basis vectors (edge sums cancel exactly)."""
    n = space_odd.graph.vertices[-1] + 1
    v = np.zeros(n)
    for b in space_odd.basis:
        v = v + rng.uniform(-scale, scale) * b
    return v


def exactness_radius(x: MoebiusPoint, v, graph: Optional[AntipodalGraph] = None) -> Tuple[float, float]:
    """``(t_star, gap)``: straight lines ``x + t v`` stay exact for ``|t| < t_star``.

    ``gap`` is the smallest ``-(x(a) + x(b) + L0(a, b))`` over non-edges;
    ``t_star = gap / (2 ||v||)``, infinite when every pair is an edge or
    ``v = 0``.
    """
    g = antipodal_graph(x) if graph is None else graph
    n = x.space.n
    S = x.tau[:, None] + x.tau[None, :] + x.space.log2rho
    mask = ~np.eye(n, dtype=bool)
    for a, b in g.edges:
        mask[a, b] = mask[b, a] = False
    gap = float(np.min(-S[mask])) if mask.any() else np.inf
    vn = float(np.max(np.abs(v))) if len(v) else 0.0
    if vn == 0.0 or not np.isfinite(gap):
        return np.inf, gap
    return gap / (2.0 * vn), gap


@dataclass
class LineCheck:
    t: float
    t_star: float
    gap: float
    exact: bool              # |t| < t_star
    disc_norm: float         # ||D(x + t v)||
    disc_excess: float       # ||D(x + t v) - D(x)||, zero on exact lines
    distance: float          # d(x, x + t v) along the line or to the antipodalized point
    deviation: Optional[float] = None   # || P(t v at base x) - (x + t v) ||
    point: Optional[MoebiusPoint] = None

    def as_dict(self):
        return {"t": self.t, "t_star": self.t_star if np.isfinite(self.t_star) else "inf",
                "gap": self.gap if np.isfinite(self.gap) else "inf", "exact": self.exact,
                "disc_norm": self.disc_norm, "disc_excess": self.disc_excess,
                "distance": self.distance, "deviation": self.deviation}


def tangent_line_check(x: MoebiusPoint, v, t: float, config: FlowConfig = DEFAULT_FLOW,
                       odd_tol: float = 1e-12) -> LineCheck:
    """Follow the straight line ``x + t v`` for an odd ``v``.

    Inside ``|t| < t_star`` the discrepancy along the line equals that of
    ``x`` (identically zero for exact members) and the distance moved is
    ``|t| ||v||``.  Outside, the line is antipodalized relative to ``x`` and
    its deviation from the straight segment reported.
    """
    g = antipodal_graph(x)
    v = np.asarray(v, dtype=float)
    ok, worst = is_odd(x, v, odd_tol, g)
    if not ok:
        raise ValueError(f"vector is not odd: edge-sum violation {worst:.3e}")
    t_star, gap = exactness_radius(x, v, g)
    y = x.tau + t * v
    D0 = discrepancy(x.space, x.tau)
    D = discrepancy(x.space, y)
    res = LineCheck(float(t), t_star, gap, bool(abs(t) < t_star),
                    float(np.max(np.abs(D))), float(np.max(np.abs(D - D0))),
                    float(np.max(np.abs(t * v))))
    if not res.exact:
        p = antipodalize(x.space, t * v, base_tau=x.tau, config=config)
        res.point = p
        res.deviation = float(np.max(np.abs(p.tau - y)))
        res.distance = float(np.max(np.abs(p.tau - x.tau)))
    return res


def matching_involution(x: MoebiusPoint, graph: Optional[AntipodalGraph] = None) -> np.ndarray:
    """The antipodal map of a uniquely antipodal point, as an index array."""
    g = antipodal_graph(x) if graph is None else graph
    adj = g.adjacency()
    for v in g.vertices:
        if len(adj[v]) != 1:
            raise UnsupportedStructureError(
                f"antipodal graph is not a perfect matching: vertex {v} has degree {len(adj[v])}")
    return np.array([adj[v][0] for v in g.vertices])


def odd_projection(x: MoebiusPoint, u, graph: Optional[AntipodalGraph] = None) -> np.ndarray:
    """``(u - u o i) / 2`` for the antipodal involution ``i`` of ``x``."""
    inv = matching_involution(x, graph)
    u = np.asarray(u, dtype=float)
    return 0.5 * (u - u[inv])


def edge_sum_violation(x: MoebiusPoint, v, graph: Optional[AntipodalGraph] = None) -> float:
    """Largest ``|v(a) + v(b)|`` over edges of the antipodal graph of ``x``."""
    return is_odd(x, v, np.inf, graph)[1]


def difference_quotient_violations(a: MoebiusPoint, b: MoebiusPoint, s: float,
                                   meshes=(0.1, 0.01), config: FlowConfig = DEFAULT_FLOW):
    """Edge-sum violations of one-sided difference quotients along a geodesic.

    The curve is ``c(u) = combine((a, b), (1-u, u))`` and the base point is
    ``x = c(s)``.  For each mesh ``h`` the quotient ``(c(s+h) - x) / h`` is
    tested against the antipodal graph of ``x``.  Returns ``(x, violations,
    noise_floors)`` where the floor ``8 tol_flow / h`` is the size of
    violation explainable by the certification error of the points alone.
    """
    from .geometry import combine

    x = combine((a, b), (1.0 - s, s), config)
    g = antipodal_graph(x)
    viol, floors = [], []
    for h in meshes:
        y = combine((a, b), (1.0 - s - h, s + h), config)
        viol.append(edge_sum_violation(x, (y.tau - x.tau) / h, g))
        floors.append(8.0 * config.tol_flow / h)
    return x, viol, floors
