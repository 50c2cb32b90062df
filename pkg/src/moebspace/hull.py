"""Extremal functions on finite samples of M(Z).

A :class:`SampleSpace` is a finite set of points of M(Z) with its distance
matrix.  Functions on the sample are plain vectors indexed like
``sample.points``.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_FLOW, FlowConfig
from .flow import discrepancy
from .generators import random_point
from .geometry import distance_matrix, extend_ray
from .errors import CertificationError, SpecError
from .space import AntipodalSpace, MoebiusPoint


@dataclass
class SampleSpace:
    """Points of M(Z) with pairwise distances and per-point tags.

    Tags are tuples: ``("base",)``, ``("ray", xi, k)`` for the k-th point on
    the ray toward ``xi`` (k = 1 .. depth), ``("random", seed)`` or
    ``("constructed", i)``.
    """
    points: List[MoebiusPoint]
    dist_matrix: np.ndarray
    tags: List[tuple]

    @classmethod
    def from_points(cls, points: Sequence[MoebiusPoint], tags: Optional[Sequence[tuple]] = None):
        pts = list(points)
        if not pts:
            raise SpecError("sample needs at least one point")
        tags = list(tags) if tags is not None else [("constructed", i) for i in range(len(pts))]
        if len(tags) != len(pts):
            raise SpecError("one tag per point")
        return cls(pts, distance_matrix(pts), tags)

    def __len__(self):
        return len(self.points)

    @property
    def space(self) -> AntipodalSpace:
        return self.points[0].space

    def index_of(self, tag) -> int:
        return self.tags.index(tuple(tag))

    def ray_indices(self, xi: int) -> List[int]:
        """Sample indices of the ray toward ``xi``, ordered by depth."""
        hits = sorted((t[2], i) for i, t in enumerate(self.tags) if t[0] == "ray" and t[1] == xi)
        return [i for _, i in hits]

    def subset(self, indices: Sequence[int]) -> "SampleSpace":
        idx = list(indices)
        return SampleSpace([self.points[i] for i in idx],
                           self.dist_matrix[np.ix_(idx, idx)], [self.tags[i] for i in idx])

    def truncated(self, depth: int) -> "SampleSpace":
        """Same sample with ray points deeper than ``depth`` dropped."""
        keep = [i for i, t in enumerate(self.tags) if t[0] != "ray" or t[2] <= depth]
        return self.subset(keep)

    def triangle_excess(self) -> float:
        """Largest ``d(x, z) - d(x, y) - d(y, z)`` over all triples."""
        d = self.dist_matrix
        worst = -np.inf
        for y in range(len(d)):
            worst = max(worst, float(np.max(d - d[:, y][:, None] - d[y, :][None, :])))
        return worst


def build_sample(space: AntipodalSpace, rays: Sequence[Tuple[int, int, float]] = (),
                 random: Optional[Tuple[int, int, float]] = None, include_base: bool = True,
                 tips_only: bool = False, base: Optional[MoebiusPoint] = None,
                 config: FlowConfig = DEFAULT_FLOW) -> SampleSpace:
    """Base point, ray points ``(xi, depth, step)`` and ``count`` random points.

    ``random = (count, seed, amplitude)`` draws points with seeds
    ``seed, seed+1, ...``.  ``tips_only`` keeps only the deepest point of each
    ray.
    """
    o = space.base_point if base is None else base
    pts, tags = [], []
    if include_base:
        pts.append(o)
        tags.append(("base",))
    for spec in rays:
        try:
            xi, depth, step = spec
        except (TypeError, ValueError) as exc:
            raise SpecError(f"ray spec must be (xi, depth, step), got {spec!r}") from exc
        ray = extend_ray(o, int(xi), float(step), int(depth), config=config)
        if not ray.complete:
            raise CertificationError(f"ray toward {xi} failed: {ray.diagnostic}")
        ks = [ray.depth] if tips_only else range(1, ray.depth + 1)
        for k in ks:
            pts.append(ray.points[k])
            tags.append(("ray", int(xi), int(k)))
    if random is not None:
        count, seed, amp = random
        for i in range(int(count)):
            pts.append(random_point(space, int(seed) + i, float(amp), config))
            tags.append(("random", int(seed) + i))
    return SampleSpace.from_points(pts, tags)


@dataclass
class ExtremalReport:
    in_delta: bool
    defect_per_point: np.ndarray
    max_abs_defect: float
    extremal: bool
    worst_pair: Tuple[int, int] = (0, 0)

    def as_dict(self):
        return {"in_delta": self.in_delta, "defect_per_point": self.defect_per_point.tolist(),
                "max_abs_defect": self.max_abs_defect, "extremal": self.extremal,
                "worst_pair": list(self.worst_pair)}


def extremal_check(sample: SampleSpace, f, tol: float = 8 * DEFAULT_FLOW.tol_flow) -> ExtremalReport:
    """Membership of ``f`` in Delta(S) and its extremal defect.

    The defect at ``x`` is ``sup_y d(x, y) - f(x) - f(y)`` (``y = x``
    included).  ``f`` is in Delta(S) when every defect is <= ``tol`` and
    extremal when moreover every defect is >= ``-tol``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (len(sample),):
        raise ValueError(f"f must have one value per sample point ({len(sample)})")
    M = sample.dist_matrix - f[:, None] - f[None, :]
    defects = M.max(axis=1)
    k = int(np.argmax(M))
    in_delta = bool(defects.max() <= tol)
    mad = float(np.max(np.abs(defects)))
    return ExtremalReport(in_delta, defects, mad, bool(in_delta and defects.min() >= -tol),
                          divmod(k, len(f)))


def dist_function(sample: SampleSpace, alpha: MoebiusPoint) -> np.ndarray:
    """``(d(alpha, s))_s`` over the sample."""
    T = np.array([p.tau for p in sample.points])
    if alpha.space.key != sample.space.key:
        raise ValueError("point lives in a different space")
    return np.max(np.abs(T - alpha.tau[None, :]), axis=1)


def hull_isometry_check(sample: SampleSpace, alpha: MoebiusPoint, beta: MoebiusPoint):
    """``(gap, sup_diff, distance)`` with ``gap = | ||d_alpha - d_beta|| - d(alpha, beta) |``.

    The sup difference never exceeds the distance (triangle inequality), so
    the signed value ``sup_diff - distance`` is <= 0 up to rounding.
    """
    da, db = dist_function(sample, alpha), dist_function(sample, beta)
    sup = float(np.max(np.abs(da - db)))
    d = float(np.max(np.abs(alpha.tau - beta.tau)))
    return abs(sup - d), sup, d


def boundary_value(sample: SampleSpace, f, xi: int, o: int = 0):
    """``d(o, tip) - f(tip)`` at the deepest tip toward ``xi`` and along the whole ray."""
    idx = sample.ray_indices(xi)
    if not idx:
        raise ValueError(f"sample has no ray toward {xi}")
    f = np.asarray(f, dtype=float)
    seq = sample.dist_matrix[o, idx] - f[idx]
    return float(seq[-1]), seq


def flat_extremal_defect(x: MoebiusPoint) -> np.ndarray:
    """Per-point defect of ``x.tau`` as an extremal function for the log-distance on Z.

    This is the discrepancy: ``max_{eta != xi} tau(xi) + tau(eta) - log(1/rho0^2)``,
    zero everywhere exactly on M(Z).  The diagonal pair is excluded.
    """
    return discrepancy(x.space, x.tau)
