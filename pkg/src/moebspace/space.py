"""Finite antipodal spaces and points of their Moebius space.

A space is stored through its base matrix ``rho`` (symmetric, zero diagonal,
positive off the diagonal, diameter one, every row attaining one) together
with the log-matrix ``L0 = log rho**2``.  A point of M(Z) is a coordinate
vector ``tau = log d(rho)/d(rho0)``; the corresponding antipodal function is
``E(tau)(i, j) = exp(tau_i/2) exp(tau_j/2) rho0(i, j)``.
"""
import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import MAX_POINTS, TOL_ANTIPODE, TOL_FLOW, TOL_VALIDATE
from .errors import (CertificationError, SpaceValidationError, StructuralError,
                     UnsupportedSizeError)

# Stand-in for log(0) on the diagonal of L0: finite, so sums stay finite and
# never win a max against a real entry.
SENTINEL = np.finfo(float).min


def _as_square(matrix) -> np.ndarray:
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"matrix must be square, got shape {m.shape}")
    if m.shape[0] < 2:
        raise StructuralError("need at least two points")
    return m


def log2_matrix(rho: np.ndarray) -> np.ndarray:
    """``2 log rho`` off the diagonal, :data:`SENTINEL` on it."""
    with np.errstate(divide="ignore"):
        L = 2.0 * np.log(rho)
    np.fill_diagonal(L, SENTINEL)
    return L


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    ok: bool
    failures: List[Tuple[str, Tuple[int, ...], float]]
    diameter: float
    min_offdiag: float
    antipode_count_per_row: List[int]

    def as_dict(self):
        return {
            "ok": self.ok,
            "failures": [{"rule": r, "witness": list(w), "value": v} for r, w, v in self.failures],
            "diameter": self.diameter,
            "min_offdiag": self.min_offdiag,
            "antipode_count_per_row": self.antipode_count_per_row,
        }


def validate_space(matrix, tol_validate: float = TOL_VALIDATE,
                   tol_antipode: float = TOL_ANTIPODE) -> ValidationReport:
    """Check every antipodal-space rule and report all violations.

    Raises :class:`StructuralError` for non-square input or n < 2; everything
    else ends up in ``failures`` as ``(rule, indices, value)``.
    """
    m = _as_square(matrix)
    n = m.shape[0]
    failures = []
    off = ~np.eye(n, dtype=bool)

    bad = np.argwhere(~np.isfinite(m))
    for i, j in bad:
        failures.append(("finite", (int(i), int(j)), float(m[i, j])))
    mf = np.where(np.isfinite(m), m, 0.0)

    asym = np.abs(mf - mf.T)
    for i, j in np.argwhere(np.triu(asym > tol_validate, 1)):
        failures.append(("symmetry", (int(i), int(j)), float(asym[i, j])))

    for i in np.flatnonzero(np.diag(mf) != 0.0):
        failures.append(("zero_diagonal", (int(i), int(i)), float(mf[i, i])))

    for i, j in np.argwhere(off & (mf <= 0.0)):
        if i < j or asym[i, j] > tol_validate:
            failures.append(("positivity", (int(i), int(j)), float(mf[i, j])))

    offvals = mf[off]
    diameter = float(offvals.max())
    min_off = float(offvals.min())
    if abs(diameter - 1.0) > tol_validate:
        i, j = np.unravel_index(np.argmax(np.where(off, mf, -np.inf)), mf.shape)
        failures.append(("diameter_one", (int(i), int(j)), diameter))
    for i, j in np.argwhere(off & (mf > 1.0 + tol_validate)):
        if i < j:
            failures.append(("diameter_one", (int(i), int(j)), float(mf[i, j])))

    counts = ((mf >= 1.0 - tol_antipode) & off).sum(axis=1)
    for i in np.flatnonzero(counts == 0):
        failures.append(("antipodality", (int(i),), float(np.where(off[i], mf[i], -np.inf).max())))

    return ValidationReport(ok=not failures, failures=failures, diameter=diameter,
                            min_offdiag=min_off,
                            antipode_count_per_row=[int(c) for c in counts])


# -------------------------------------------------------------------- spaces

class AntipodalSpace:
    """Immutable finite antipodal space (Z, rho0).

    Parameters
    ----------
    rho : array_like, (n, n)
        Base antipodal matrix.  Validated on construction.
    labels : sequence of str, optional
        Point names; defaults to ``"0" .. "n-1"``.
    renormalize : bool
        Divide ``rho`` by its largest entry before validation.  Never applied
        unless asked for.
    """

    def __init__(self, rho, labels: Optional[Sequence[str]] = None, *,
                 tol_antipode: float = TOL_ANTIPODE, tol_validate: float = TOL_VALIDATE,
                 max_points: int = MAX_POINTS, renormalize: bool = False):
        m = _as_square(rho)
        n = m.shape[0]
        if n > max_points:
            raise StructuralError(f"n={n} exceeds the configured cap {max_points}")
        if renormalize:
            top = np.max(m[~np.eye(n, dtype=bool)])
            if not top > 0:
                raise StructuralError("cannot renormalize a matrix with no positive entry")
            m = m / top
        report = validate_space(m, tol_validate, tol_antipode)
        if not report.ok:
            rule, wit, val = report.failures[0]
            raise SpaceValidationError(
                f"{len(report.failures)} rule violation(s); first: {rule} at {wit} (value {val!r})",
                report)
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = [str(s) for s in labels]
        if len(labels) != n or len(set(labels)) != n:
            raise StructuralError("labels must be n distinct strings")

        # symmetrize exactly so every later computation sees a symmetric matrix
        m = 0.5 * (m + m.T)
        np.fill_diagonal(m, 0.0)
        m.setflags(write=False)
        self._rho = m
        L = log2_matrix(m)
        L.setflags(write=False)
        self._L = L
        self.labels = tuple(labels)
        self.tol_antipode = float(tol_antipode)
        self.tol_validate = float(tol_validate)
        self.report = report
        self._qm = None
        h = hashlib.sha256()
        h.update(json.dumps(list(self.labels)).encode())
        h.update(np.ascontiguousarray(m, dtype="<f8").tobytes())
        self.key = "sha256:" + h.hexdigest()[:16]

    @property
    def n(self) -> int:
        return self._rho.shape[0]

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    @property
    def log2rho(self) -> np.ndarray:
        return self._L

    @property
    def qm_constant(self) -> float:
        if self._qm is None:
            self._qm = quasimetric_constant(self._rho)[0]
        return self._qm

    @property
    def base_point(self) -> "MoebiusPoint":
        return MoebiusPoint(self, np.zeros(self.n), 0.0)

    def E(self, tau) -> np.ndarray:
        """Antipodal function of the coordinates ``tau``."""
        return apply_E(self._rho, tau)

    def point(self, tau, residual: Optional[float] = None, tol_flow: float = TOL_FLOW) -> "MoebiusPoint":
        """Wrap ``tau`` as a point, certifying it against ``tol_flow``.

        When ``residual`` is omitted it is computed as the sup norm of the
        discrepancy.
        """
        from .flow import discrepancy
        tau = np.array(tau, dtype=float)
        if tau.shape != (self.n,):
            raise StructuralError(f"tau must have length {self.n}")
        if residual is None:
            residual = float(np.max(np.abs(discrepancy(self, tau))))
        if not residual <= tol_flow:
            raise CertificationError(f"residual {residual:.3e} exceeds tol_flow {tol_flow:.1e}")
        return MoebiusPoint(self, tau, float(residual))

    def __eq__(self, other):
        return isinstance(other, AntipodalSpace) and other.key == self.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"AntipodalSpace(n={self.n}, key={self.key})"

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "rho": self._rho.tolist()}


@dataclass(frozen=True, eq=False)
class MoebiusPoint:
    """Point of M(Z) in rho0-coordinates with its discrepancy certificate."""
    space: AntipodalSpace
    tau: np.ndarray
    residual: float = 0.0
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        t = np.array(self.tau, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "tau", t)

    @property
    def space_id(self) -> str:
        return self.space.key

    def E(self) -> np.ndarray:
        return self.space.E(self.tau)

    def to_json(self, space_ref: Optional[str] = None) -> dict:
        return {"space": space_ref or self.space.key, "tau": self.tau.tolist(),
                "residual": self.residual}


def _rho_of(obj) -> np.ndarray:
    if isinstance(obj, AntipodalSpace):
        return obj.rho
    return np.asarray(obj, dtype=float)


# ------------------------------------------------------ Moebius calculus

def apply_E(rho, tau, base_tau=None) -> np.ndarray:
    """``exp(tau_i/2) exp(tau_j/2) rho_base(i, j)`` with ``rho_base = E(base_tau)``."""
    rho = _rho_of(rho)
    tau = np.asarray(tau, dtype=float)
    if base_tau is not None:
        rho = apply_E(rho, base_tau)
    w = np.exp(0.5 * tau)
    return w[:, None] * rho * w[None, :]


def cross_ratio(rho, xi: int, xi2: int, eta: int, eta2: int) -> float:
    """``rho(xi,eta) rho(xi2,eta2) / (rho(xi,eta2) rho(xi2,eta))``."""
    m = _rho_of(rho)
    if m.shape[0] < 4:
        raise UnsupportedSizeError("cross-ratios need at least four points")
    idx = (xi, xi2, eta, eta2)
    if len(set(idx)) != 4:
        raise ValueError(f"cross-ratio indices must be pairwise distinct, got {idx}")
    return float(m[xi, eta] * m[xi2, eta2] / (m[xi, eta2] * m[xi2, eta]))


def derivative(rho2, rho1, xi: int, eta: int, eta2: int) -> float:
    """Three-point formula for ``d(rho2)/d(rho1)`` at ``xi`` using aux pair ``(eta, eta2)``."""
    r2, r1 = _rho_of(rho2), _rho_of(rho1)
    if r1.shape[0] < 3:
        raise UnsupportedSizeError("the three-point derivative needs n >= 3")
    if len({xi, eta, eta2}) != 3:
        raise ValueError(f"aux indices must be distinct and differ from xi, got {(xi, eta, eta2)}")
    return float(r2[xi, eta] * r2[xi, eta2] * r1[eta, eta2]
                 / (r1[xi, eta] * r1[xi, eta2] * r2[eta, eta2]))


def log_derivative(rho2, rho1) -> np.ndarray:
    """``log d(rho2)/d(rho1)`` at every point, aux pair = two lowest other indices.

    For n = 2 the log-derivative is only determined up to its sum; the
    symmetric split ``f = (g/2, g/2)`` with ``g = log(rho2/rho1)^2`` is used.
    """
    r2, r1 = _rho_of(rho2), _rho_of(rho1)
    n = r1.shape[0]
    if n == 2:
        g = 2.0 * np.log(r2[0, 1] / r1[0, 1])
        return np.array([0.5 * g, 0.5 * g])
    out = np.empty(n)
    for x in range(n):
        e1, e2 = [k for k in range(n) if k != x][:2]
        out[x] = (np.log(r2[x, e1]) + np.log(r2[x, e2]) + np.log(r1[e1, e2])
                  - np.log(r1[x, e1]) - np.log(r1[x, e2]) - np.log(r2[e1, e2]))
    return out


@dataclass
class EquivalenceReport:
    equivalent: bool
    gmvt_residual: float
    cross_ratio_deviation: Optional[float]
    log_derivative: np.ndarray

    def __bool__(self):
        return self.equivalent


def gmvt_residual(rho2, rho1, f) -> float:
    """``max |log rho2^2 - f_i - f_j - log rho1^2|`` over pairs i != j."""
    r2, r1 = _rho_of(rho2), _rho_of(rho1)
    n = r1.shape[0]
    off = ~np.eye(n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = 2 * np.log(r2) - f[:, None] - f[None, :] - 2 * np.log(r1)
    return float(np.max(np.abs(r[off])))


def max_cross_ratio_deviation(rho1, rho2, max_quadruples: int = 20000, seed: int = 0) -> float:
    """Largest relative change of a cross-ratio between two kernels.

    Exhaustive when n**4 is small, otherwise a seeded sample of quadruples.
    """
    r1, r2 = _rho_of(rho1), _rho_of(rho2)
    n = r1.shape[0]
    if n < 4:
        raise UnsupportedSizeError("cross-ratios need at least four points")
    if n ** 4 <= max_quadruples:
        q = np.array(np.meshgrid(*[np.arange(n)] * 4, indexing="ij")).reshape(4, -1).T
    else:
        rng = np.random.default_rng(seed)
        q = rng.integers(0, n, size=(max_quadruples, 4))
    distinct = np.array([len(set(row)) == 4 for row in q])
    q = q[distinct]
    a, b, c, d = q.T

    def cr(m):
        return m[a, c] * m[b, d] / (m[a, d] * m[b, c])

    c1, c2 = cr(r1), cr(r2)
    return float(np.max(np.abs(c2 / c1 - 1.0)))


def moebius_equivalent(rho1, rho2, tol: float = 1e-9) -> EquivalenceReport:
    """Test Moebius equivalence through the geometric mean-value relation.

    Fits ``f = log d(rho2)/d(rho1)`` from one aux pair per point and checks
    ``log rho2^2 = f_i + f_j + log rho1^2`` on every pair.  For n >= 4 the
    largest relative cross-ratio change is reported as well.
    """
    r1, r2 = _rho_of(rho1), _rho_of(rho2)
    if r1.shape != r2.shape:
        raise StructuralError("matrices must have the same shape")
    f = log_derivative(r2, r1)
    res = gmvt_residual(r2, r1, f)
    dev = max_cross_ratio_deviation(r1, r2) if r1.shape[0] >= 4 else None
    return EquivalenceReport(bool(res <= tol), res, dev, f)


# ------------------------------------------------------------------ metric

def _check_same(a: MoebiusPoint, b: MoebiusPoint):
    if a.space.key != b.space.key:
        raise ValueError("points live in different spaces")


def dist(a: MoebiusPoint, b: MoebiusPoint) -> float:
    """Sup-norm distance ``||a.tau - b.tau||``."""
    _check_same(a, b)
    return float(np.max(np.abs(b.tau - a.tau)))


def default_slack(a: MoebiusPoint, b: MoebiusPoint) -> float:
    return 8.0 * (a.residual + b.residual) + 1e-9


def argmax_set(a: MoebiusPoint, b: MoebiusPoint, slack: Optional[float] = None) -> np.ndarray:
    """Indices where ``b.tau - a.tau`` is within ``slack`` of its maximum."""
    _check_same(a, b)
    if slack is None:
        slack = default_slack(a, b)
    d = b.tau - a.tau
    return np.flatnonzero(d >= d.max() - slack)


def argmin_set(a: MoebiusPoint, b: MoebiusPoint, slack: Optional[float] = None) -> np.ndarray:
    """Indices where ``b.tau - a.tau`` is within ``slack`` of its minimum."""
    _check_same(a, b)
    if slack is None:
        slack = default_slack(a, b)
    d = b.tau - a.tau
    return np.flatnonzero(d <= d.min() + slack)


@dataclass
class DistanceReport:
    value: float
    argmax: np.ndarray
    argmin: np.ndarray
    balance: float      # max + min of b - a, zero for exact members
    balance_bound: float

    @property
    def balanced(self) -> bool:
        return abs(self.balance) <= self.balance_bound

    def as_dict(self):
        return {"distance": self.value, "argmax": self.argmax.tolist(),
                "argmin": self.argmin.tolist(), "max_plus_min": self.balance,
                "max_plus_min_bound": self.balance_bound}


def compare(a: MoebiusPoint, b: MoebiusPoint, slack: Optional[float] = None) -> DistanceReport:
    """Distance with the argmax/argmin sets of ``b.tau - a.tau`` and the max+min balance."""
    _check_same(a, b)
    d = b.tau - a.tau
    bound = 8.0 * (a.residual + b.residual) + 1e-12 * (1.0 + float(np.max(np.abs(d))))
    return DistanceReport(float(np.max(np.abs(d))), argmax_set(a, b, slack),
                          argmin_set(a, b, slack), float(d.max() + d.min()), bound)


# ------------------------------------------------------------ pushforwards

def _perm(perm, n) -> np.ndarray:
    p = np.asarray(perm)
    if p.shape != (n,) or not np.issubdtype(p.dtype, np.integer):
        raise ValueError(f"permutation must be {n} integers")
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise ValueError("map is not a bijection of the index set")
    return p


def pushforward(perm, obj):
    """Push a space or point forward along the index map ``i -> perm[i]``.

    A point is sent into the pushed-forward space, where its coordinate at
    ``perm[i]`` is the old coordinate at ``i``.  Distances are unchanged
    bit for bit since only coordinates are permuted.
    """
    if isinstance(obj, AntipodalSpace):
        p = _perm(perm, obj.n)
        if np.array_equal(p, np.arange(obj.n)):
            return obj
        rho = np.empty_like(obj.rho)
        rho[np.ix_(p, p)] = obj.rho
        labels = [None] * obj.n
        for i, q in enumerate(p):
            labels[q] = obj.labels[i]
        return _cached_push(obj, p, rho, labels)
    if isinstance(obj, MoebiusPoint):
        p = _perm(perm, obj.space.n)
        if np.array_equal(p, np.arange(obj.space.n)):
            return obj
        tau = np.empty_like(obj.tau)
        tau[p] = obj.tau
        return MoebiusPoint(pushforward(p, obj.space), tau, obj.residual)
    raise TypeError(f"cannot push forward {type(obj).__name__}")


_PUSH_CACHE = {}


def _cached_push(space, p, rho, labels):
    key = (space.key, p.tobytes())
    hit = _PUSH_CACHE.get(key)
    if hit is None:
        hit = AntipodalSpace(rho, labels, tol_antipode=space.tol_antipode,
                             tol_validate=space.tol_validate)
        if len(_PUSH_CACHE) > 256:
            _PUSH_CACHE.clear()
        _PUSH_CACHE[key] = hit
    return hit


# ------------------------------------------------------- quasi-metric constant

def quasimetric_constant(rho) -> Tuple[float, Tuple[int, int, int]]:
    """Smallest K with ``rho(x,y) <= K max(rho(x,z), rho(z,y))``, and a witness ``(x, y, z)``.

    Scans all ordered triples of pairwise distinct indices, one ``z`` slice
    at a time.
    """
    m = _rho_of(rho)
    n = m.shape[0]
    if n < 3:
        return 1.0, (0, 1, 0)
    off = ~np.eye(n, dtype=bool)
    if np.any(m[off] <= 0):
        raise ValueError("quasi-metric constant needs a separating (positive) kernel")
    best, wit = -np.inf, (0, 1, 2)
    for z in range(n):
        denom = np.maximum(m[:, z][:, None], m[z, :][None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = m / denom
        mask = off.copy()
        mask[z, :] = False
        mask[:, z] = False
        ratio = np.where(mask, ratio, -np.inf)
        k = int(np.argmax(ratio))
        if ratio.flat[k] > best:
            best = float(ratio.flat[k])
            wit = (k // n, k % n, z)
    return best, wit
