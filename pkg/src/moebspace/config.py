"""Tolerance block and flow settings shared by all modules."""
from dataclasses import dataclass, asdict, replace

TOL_VALIDATE = 1e-12
TOL_FLOW = 1e-8
TOL_ANTIPODE = 1e-6
MAX_POINTS = 4096


@dataclass(frozen=True)
class FlowConfig:
    """Settings for integrating the antipodal flow.

    ``refine_kinks`` halves a step recursively (down to ``min_step``) whenever
    the argmax pattern of the discrepancy changes inside it, so RK4 never
    straddles a kink of the piecewise-affine right-hand side.  With it off the
    integrator is plain fixed-step RK4 / Euler.
    """
    tol_flow: float = TOL_FLOW
    step_h: float = 0.01
    max_time: float = 80.0
    sample_every: float = 0.5
    method: str = "rk4"
    refine_kinks: bool = True
    min_step: float = 1e-6

    def __post_init__(self):
        if not self.tol_flow > 0:
            raise ValueError("tol_flow must be positive")
        if not self.step_h > 0:
            raise ValueError("step_h must be positive")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")
        if not self.sample_every > 0:
            raise ValueError("sample_every must be positive")
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.min_step <= self.step_h:
            raise ValueError("min_step must lie in (0, step_h]")

    def with_(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return asdict(self)


DEFAULT_FLOW = FlowConfig()


def tolerance_block(flow=DEFAULT_FLOW, tol_antipode=TOL_ANTIPODE, tol_validate=TOL_VALIDATE):
    """Flat dict of every tolerance in force, for echoing in reports."""
    return {
        "tol_validate": tol_validate,
        "tol_flow": flow.tol_flow,
        "tol_antipode": tol_antipode,
        "flow": flow.as_dict(),
        "slack": {
            "point_certificate": "4*tol_flow",
            "geodesic": "5*tol_flow",
            "ray": "(k+1)*4*tol_flow",
            "gromov_bound": "8*tol_flow",
            "maxmin": "8*(residual_a+residual_b)",
        },
    }
