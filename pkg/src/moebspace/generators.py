"""Test spaces and seeded random points.

Random draws use numpy's ``Generator(PCG64(seed))`` so a seed gives the same
stream on every platform.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Union

import numpy as np

from .config import DEFAULT_FLOW, FlowConfig
from .errors import SpecError
from .flow import antipodalize
from .space import AntipodalSpace, MoebiusPoint, quasimetric_constant


def rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_discrete(n: int) -> AntipodalSpace:
    """All off-diagonal entries equal to one."""
    if n < 2:
        raise ValueError("discrete space needs n >= 2")
    return AntipodalSpace(1.0 - np.eye(n), [f"d{i}" for i in range(n)])


def circle_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    d = np.abs(j[:, None] - j[None, :])
    d = np.minimum(d, n - d)
    rho = np.sin(np.pi * d / n)
    # sin(pi/2) is exactly 1 in IEEE arithmetic, but keep the antipodes exact
    # regardless of libm.
    rho[d == n // 2] = 1.0
    return rho


def gen_circle(n: int) -> AntipodalSpace:
    """``n`` equally spaced points on the circle with the half-angle chord metric."""
    if n < 4 or n % 2:
        raise ValueError("circle space needs an even n >= 4")
    return AntipodalSpace(circle_matrix(n), [f"c{i}" for i in range(n)])


# ------------------------------------------------------------- dendrograms

@dataclass
class DendrogramSpec:
    """Rooted tree given as nested dicts.

    Internal nodes are ``{"height": h, "children": [...]}`` and leaves are
    ``{"label": name}`` (a bare string is accepted as a leaf too).  The
    root has height 1 and heights strictly decrease towards the leaves.
    Heights may be given as strings such as ``"1/2"`` and are then compared
    as exact rationals.
    """
    tree: dict

    @classmethod
    def from_dict(cls, d: dict) -> "DendrogramSpec":
        spec = cls(d)
        spec.leaves()
        return spec

    def _walk(self):
        """Yield (leaf label, path of (node id, height)) and validate along the way."""
        out = []

        def rec(node, path, bound):
            if isinstance(node, str):
                out.append((node, path))
                return
            if not isinstance(node, dict):
                raise SpecError(f"tree node must be a dict or a label, got {node!r}")
            if "children" not in node:
                if "label" not in node:
                    raise SpecError("leaf needs a 'label'")
                out.append((str(node["label"]), path))
                return
            try:
                h = Fraction(node["height"]) if isinstance(node["height"], str) else Fraction(float(node["height"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise SpecError(f"internal node needs a numeric height: {exc}") from exc
            if not 0 < h <= 1:
                raise SpecError(f"height {float(h)} outside (0, 1]")
            if bound is not None and not h < bound:
                raise SpecError(f"heights must strictly decrease towards the leaves ({float(h)} >= {float(bound)})")
            kids = node["children"]
            if len(kids) < 2:
                raise SpecError("internal nodes need at least two children")
            nid = len(seen)
            seen.append(h)
            for c in kids:
                rec(c, path + [(nid, h)], h)

        seen: List[Fraction] = []
        root = self.tree
        if isinstance(root, dict) and "children" in root:
            rh = root.get("height")
            rh = Fraction(rh) if isinstance(rh, str) else Fraction(float(rh)) if rh is not None else None
            if rh != 1:
                raise SpecError("root height must be 1")
        rec(root, [], None)
        if len(out) < 2:
            raise SpecError("dendrogram needs at least two leaves")
        labels = [lab for lab, _ in out]
        if len(set(labels)) != len(labels):
            raise SpecError("leaf labels must be distinct")
        return out

    def leaves(self) -> List[str]:
        return [lab for lab, _ in self._walk()]

    def lca_heights(self):
        """Exact rational matrix of lowest-common-ancestor heights."""
        items = self._walk()
        n = len(items)
        H = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                pi, pj = items[i][1], items[j][1]
                k = 0
                while k < min(len(pi), len(pj)) and pi[k][0] == pj[k][0]:
                    k += 1
                H[i][j] = H[j][i] = pi[k - 1][1]
        return H


def gen_dendrogram(spec: Union[DendrogramSpec, dict]) -> AntipodalSpace:
    """Ultrametric space ``rho(x, y) = height of the lowest common ancestor``."""
    if not isinstance(spec, DendrogramSpec):
        spec = DendrogramSpec.from_dict(spec)
    H = spec.lca_heights()
    n = len(H)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3 and H[i][j] > max(H[i][k], H[k][j]):
                    raise SpecError(f"LCA table is not ultrametric at {(i, j, k)}")
    rho = np.array([[float(h) for h in row] for row in H])
    return AntipodalSpace(rho, spec.leaves())


def balanced_dendrogram(depth: int, heights: Optional[Sequence[float]] = None) -> dict:
    """Binary tree spec with ``2**depth`` leaves; level ``k`` has ``heights[k]``."""
    if heights is None:
        heights = [2.0 ** -k for k in range(depth)]
    if len(heights) != depth:
        raise SpecError("need one height per level")
    counter = iter(range(2 ** depth))

    def rec(k):
        if k == depth:
            return {"label": f"l{next(counter)}"}
        return {"height": heights[k], "children": [rec(k + 1), rec(k + 1)]}

    return rec(0)


def random_dendrogram(n_leaves: int, seed: int) -> dict:
    """Seeded random tree spec (binary merges, uniform heights below the parent)."""
    g = rng(seed)
    nodes = [{"label": f"l{i}"} for i in range(n_leaves)]
    heights = np.sort(g.uniform(0.1, 0.95, size=n_leaves - 2))[::-1].tolist() + [1.0]
    heights = sorted(heights)
    # merge random pairs bottom-up; heights increase with every merge
    subs = [(node, 0.0) for node in nodes]
    for h in heights:
        i, j = sorted(g.choice(len(subs), size=2, replace=False))
        b, a = subs.pop(j), subs.pop(i)
        subs.append(({"height": float(h), "children": [a[0], b[0]]}, h))
    return subs[0][0]


# --------------------------------------------------------- quasi-metrics

def random_symmetric(n: int, seed: int, low: float = 0.2, high: float = 0.95) -> np.ndarray:
    """Seeded symmetric positive kernel on n points with a perfect matching of ones."""
    if n < 4 or n % 2:
        raise ValueError("need an even n >= 4")
    g = rng(seed)
    q = g.uniform(low, high, size=(n, n))
    q = np.triu(q, 1)
    q = q + q.T
    perm = g.permutation(n)
    for a, b in zip(perm[::2], perm[1::2]):
        q[a, b] = q[b, a] = 1.0
    np.fill_diagonal(q, 0.0)
    return q


def gen_quasimetric(n: int, K: float, seed: int) -> AntipodalSpace:
    """Antipodal kernel whose quasi-metric constant is exactly ``K`` (up to rounding).

    A random kernel with constant ``K0`` is raised to the power
    ``log K / log K0``, which keeps the ones (so antipodality) and maps the
    constant to ``K``.
    """
    if not K > 1:
        raise ValueError("K must exceed 1")
    q = random_symmetric(n, seed)
    K0, _ = quasimetric_constant(q)
    q = q ** (np.log(K) / np.log(K0))
    return AntipodalSpace(q, [f"q{i}" for i in range(n)])


# ------------------------------------------------------------ random points

def random_point(space: AntipodalSpace, seed: int, amplitude: float = 2.0,
                 config: FlowConfig = DEFAULT_FLOW) -> MoebiusPoint:
    """Antipodalization of a seeded uniform vector in ``[-amplitude, amplitude]^n``."""
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    g = rng(seed).uniform(-amplitude, amplitude, size=space.n)
    p = antipodalize(space, g, config=config)
    p.meta.update(seed=seed, amplitude=amplitude)
    return p


def zoo():
    """The standard collection of test spaces, keyed by name."""
    return {
        "discrete-2": gen_discrete(2),
        "discrete-3": gen_discrete(3),
        "discrete-6": gen_discrete(6),
        "circle-4": gen_circle(4),
        "circle-8": gen_circle(8),
        "circle-16": gen_circle(16),
        "dendrogram-4": gen_dendrogram(balanced_dendrogram(2, [1.0, 0.5])),
        "dendrogram-8": gen_dendrogram(random_dendrogram(8, seed=3)),
        "quasimetric-8": gen_quasimetric(8, 1.7, seed=5),
    }
