"""Discrepancy, the antipodal flow and the antipodalization map.

Everything is computed in rho0-coordinates.  A base point ``sigma`` only
shifts the coordinates: the discrepancy relative to ``E(sigma)`` of ``tau`` is
the rho0-discrepancy of ``tau + sigma``, and the flows correspond under the
same shift.  So a flow "at base sigma started from tau0" is integrated from
``tau0 + sigma`` and its end point is already in rho0-coordinates.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import DEFAULT_FLOW, FlowConfig
from .errors import CertificationError
from .space import AntipodalSpace, MoebiusPoint, log_derivative, moebius_equivalent


def _base_vec(space, base_tau):
    if base_tau is None:
        return None
    if isinstance(base_tau, MoebiusPoint):
        if base_tau.space.key != space.key:
            raise ValueError("base point lives in a different space")
        return base_tau.tau
    return np.asarray(base_tau, dtype=float)


_MAX = np.maximum.reduce


def _disc(L, tau):
    """rho0-discrepancy for log-matrix ``L`` (diagonal excluded through the sentinel)."""
    return tau + (tau[None, :] + L).max(axis=1)


def discrepancy(space: AntipodalSpace, tau, base_tau=None) -> np.ndarray:
    """``D(xi) = max_{eta != xi} tau(xi) + tau(eta) + L_base(xi, eta)``.

    ``L_base(xi, eta) = base(xi) + base(eta) + L0(xi, eta)``; evaluated as
    the rho0-discrepancy of ``tau + base`` so the base-shift identity holds
    with identical floating point operations.
    """
    tau = np.asarray(tau, dtype=float)
    b = _base_vec(space, base_tau)
    if b is not None:
        tau = tau + b
    return _disc(space.log2rho, tau)


def argmax_partners(space: AntipodalSpace, tau) -> np.ndarray:
    """For each xi, an eta attaining the max in the discrepancy (lowest index on ties)."""
    tau = np.asarray(tau, dtype=float)
    return (tau[None, :] + space.log2rho).argmax(axis=1)


# -------------------------------------------------------------- integration

@dataclass
class FlowTrace:
    """Samples of one antipodal-flow run.

    ``taus`` and ``discs`` are in rho0-coordinates.  ``certified`` is false
    when the run hit ``max_time`` before reaching the tolerance.
    """
    times: List[float]
    taus: List[np.ndarray]
    disc_norms: List[float]
    discs: List[np.ndarray]
    stop_reason: str
    certified: bool
    steps: int = 0
    refinements: int = 0
    config: FlowConfig = field(default=DEFAULT_FLOW, repr=False)

    @property
    def tau_final(self) -> np.ndarray:
        return self.taus[-1]

    @property
    def residual(self) -> float:
        return self.disc_norms[-1]

    @property
    def limit_bound(self) -> float:
        """A-posteriori bound on the distance from the final sample to the flow limit."""
        return 4.0 * self.residual

    def as_dict(self):
        return {"times": list(self.times), "disc_norms": list(self.disc_norms),
                "tau_final": self.tau_final.tolist(), "residual": self.residual,
                "stop_reason": self.stop_reason, "certified": self.certified,
                "steps": self.steps, "refinements": self.refinements,
                "limit_bound": self.limit_bound}


class _Stepper:
    """RK4 / Euler stepping with optional kink refinement.

    The state carried between steps is ``(tau, D(tau), partners)``; the
    discrepancy computed at the end of a step doubles as the next step's first
    stage, its kink check and its stopping test.
    """

    def __init__(self, L, cfg: FlowConfig):
        self.L = L
        self.cfg = cfg
        self.idx = np.arange(L.shape[0])
        self.refinements = 0
        self.rk4 = cfg.method == "rk4"

    def eval(self, t):
        S = t + self.L
        p = S.argmax(axis=1)
        return t + S[self.idx, p], p

    def advance(self, t, d0, h):
        if not self.rk4:
            return t - h * d0
        L = self.L
        mx = _MAX
        k1 = d0
        u = t - (0.5 * h) * k1
        k2 = u + mx(u + L, axis=1)
        u = t - (0.5 * h) * k2
        k3 = u + mx(u + L, axis=1)
        u = t - h * k3
        k4 = u + mx(u + L, axis=1)
        return t - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def step(self, t, d0, p0, h):
        """One step of size ``h``; returns the new ``(tau, D, partners)``."""
        t1 = self.advance(t, d0, h)
        d1, p1 = self.eval(t1)
        if not self.cfg.refine_kinks or h <= self.cfg.min_step:
            return t1, d1, p1
        pred = t1 + t1[p0] + self.L[self.idx, p0]
        if _MAX(d1 - pred) <= 1e-13 * (1.0 + _MAX(np.abs(t1))):
            return t1, d1, p1
        # the argmax pattern changed inside the step: redo it in two halves
        self.refinements += 1
        tm, dm, pm = self.step(t, d0, p0, 0.5 * h)
        return self.step(tm, dm, pm, 0.5 * h)


def integrate_flow(space: AntipodalSpace, tau0, base_tau=None,
                   config: FlowConfig = DEFAULT_FLOW,
                   duration: Optional[float] = None) -> FlowTrace:
    """Integrate ``d tau/dt = -D(tau)`` from ``tau0`` (relative to ``base_tau``).

    Stops once ``||D||`` drops to ``tol_flow/4`` (the end point is then within
    ``tol_flow`` of the flow limit) or at ``max_time``.  With ``duration``
    set the run ignores the tolerance and integrates for exactly that long.
    Samples are stored every ``sample_every`` time units plus the end point.
    """
    cfg = config
    t = np.array(tau0, dtype=float)
    b = _base_vec(space, base_tau)
    if b is not None:
        t = t + b
    L = space.log2rho
    target = cfg.tol_flow / 4.0
    stepper = _Stepper(L, cfg)
    d, p = stepper.eval(t)
    norm = float(np.max(np.abs(d)))
    times, taus, norms, discs = [0.0], [t.copy()], [norm], [d]
    if duration is None and norm <= target:
        return FlowTrace(times, taus, norms, discs, "stationary", True, 0, 0, cfg)

    h = cfg.step_h
    t_end = cfg.max_time if duration is None else float(duration)
    n_steps = int(np.ceil(t_end / h - 1e-9))
    every = max(1, int(round(cfg.sample_every / h)))
    k = 0
    reason = "max-time"
    while k < n_steps:
        hk = min(h, t_end - k * h)
        t, d, p = stepper.step(t, d, p, hk)
        k += 1
        norm = float(_MAX(np.abs(d)))
        done = duration is None and norm <= target
        if done or k % every == 0 or k == n_steps:
            times.append(min(k * h, t_end))
            taus.append(t)
            norms.append(norm)
            discs.append(d)
        if done:
            reason = "tolerance-reached"
            break
    if duration is not None:
        reason = "tolerance-reached" if norms[-1] <= target else "max-time"
    certified = norms[-1] <= cfg.tol_flow
    return FlowTrace(times, taus, norms, discs, reason, certified, k,
                     stepper.refinements, cfg)


def antipodalize(space: AntipodalSpace, tau0, base_tau=None,
                 config: FlowConfig = DEFAULT_FLOW, verify_step: bool = False) -> MoebiusPoint:
    """Flow limit ``P(tau0)`` relative to ``base_tau``, returned in rho0-coordinates.

    Raises :class:`CertificationError` if the flow does not reach the
    tolerance within ``max_time``.  With ``verify_step`` the run is repeated at
    half the step size and the two limits must agree within ``10 tol_flow``.
    """
    tr = integrate_flow(space, tau0, base_tau, config)
    if not tr.certified:
        raise CertificationError(
            f"flow stopped at t={tr.times[-1]:g} with ||D||={tr.residual:.3e} > tol_flow", tr)
    meta = {"stop_reason": tr.stop_reason, "flow_time": tr.times[-1], "steps": tr.steps}
    if verify_step:
        tr2 = integrate_flow(space, tau0, base_tau, config.with_(step_h=config.step_h / 2,
                                                                  min_step=min(config.min_step, config.step_h / 2)))
        gap = float(np.max(np.abs(tr2.tau_final - tr.tau_final)))
        meta["verify_step_gap"] = gap
        if not (tr2.certified and gap <= 10 * config.tol_flow):
            raise CertificationError(f"step-halving check failed: limits differ by {gap:.3e}", tr2)
    return MoebiusPoint(space, tr.tau_final, tr.residual, meta)


def retract(space: AntipodalSpace, rho, tol: float = 1e-9,
            config: FlowConfig = DEFAULT_FLOW) -> MoebiusPoint:
    """Retraction of a kernel Moebius equivalent to rho0 onto M(Z)."""
    rep = moebius_equivalent(space.rho, rho, tol=tol)
    if not rep.equivalent:
        raise ValueError(f"kernel is not Moebius equivalent to rho0 (GMVT residual {rep.gmvt_residual:.3e})")
    return antipodalize(space, rep.log_derivative, config=config)


def homotopy_point(x: MoebiusPoint, t: float, config: FlowConfig = DEFAULT_FLOW) -> MoebiusPoint:
    """Contraction ``H(x, t) = P(t x.tau)`` of M(Z) onto the base point."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        return x.space.base_point
    return antipodalize(x.space, t * x.tau, config=config)


# ----------------------------------------------------- a-priori estimates

def pinfest_bounds(space: AntipodalSpace, tau0, base_tau=None):
    """Lower and upper bounds for the flow limit from ``tau0``.

    Lower: ``tau0 - D/2``.  Upper: ``tau0 - D(xi) + D(eta)/2`` with ``eta`` an
    argmax partner of ``xi``; the smallest such value over tied partners is
    returned.  Both are in rho0-coordinates.
    """
    t = np.array(tau0, dtype=float)
    b = _base_vec(space, base_tau)
    if b is not None:
        t = t + b
    L = space.log2rho
    S = t[None, :] + L
    d = t + S.max(axis=1)
    lower = t - 0.5 * d
    ties = S >= S.max(axis=1, keepdims=True) - 1e-12 * (1 + np.abs(t).max())
    cand = np.where(ties, 0.5 * d[None, :], np.inf)
    upper = t - d + cand.min(axis=1)
    return lower, upper


def decay_violations(trace: FlowTrace, slack: float = 1e-6):
    """Worst excess over the restarted envelopes along a trace.

    Returns ``(norm_excess, pointwise_excess, once_negative_excess)``; each is
    ``max(observed - bound)`` over sample pairs ``j <= k`` and is <= slack when
    the trace obeys the decay estimates.
    """
    times = np.asarray(trace.times)
    norms = np.asarray(trace.disc_norms)
    D = np.asarray(trace.discs)
    dt = times[None, :] - times[:, None]          # [j, k] = t_k - t_j
    upper = np.triu(np.ones_like(dt, dtype=bool))
    env = 2.0 * norms[:, None] * np.exp(-dt / 2.0)
    norm_excess = float(np.max(np.where(upper, norms[None, :] - env, -np.inf)))

    point_excess = -np.inf
    neg_excess = -np.inf
    for j in range(len(times)):
        later = D[j:]
        fac = np.exp(-2.0 * (times[j:] - times[j]))[:, None]
        pos = D[j] >= 0
        if pos.any():
            point_excess = max(point_excess,
                               float(np.max((later - D[j][None, :] * fac)[:, pos])))
        neg = D[j] <= 0
        if neg.any():
            neg_excess = max(neg_excess, float(np.max(later[:, neg])))
    return norm_excess, point_excess, neg_excess
