"""Run reports: a JSON record of inputs, tolerances, results and checks."""
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .io import dumps


@dataclass
class Check:
    """One numeric property check: ``observed`` compared against ``bound``.

    ``relation`` is ``"<="`` (default), ``">="`` or ``"=="`` (exact).
    """
    name: str
    observed: Any
    bound: Any
    relation: str = "<="
    passed: Optional[bool] = None

    def __post_init__(self):
        if self.passed is None:
            o, b = self.observed, self.bound
            if self.relation == "<=":
                self.passed = bool(o <= b)
            elif self.relation == ">=":
                self.passed = bool(o >= b)
            elif self.relation == "==":
                self.passed = bool(o == b)
            else:
                raise ValueError(f"unknown relation {self.relation!r}")
        self.passed = bool(self.passed)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "observed": self.observed,
                "relation": self.relation, "bound": self.bound}


@dataclass
class RunReport:
    command: str
    inputs: Dict[str, str] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    wall_time_ms: int = 0

    def check(self, name, observed, bound, relation="<=", passed=None) -> Check:
        c = Check(name, observed, bound, relation, passed)
        self.checks.append(c)
        return c

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self):
        return {"command": self.command, "inputs": self.inputs, "config": self.config,
                "results": self.results, "checks": [c.as_dict() for c in self.checks],
                "ok": self.ok, "wall_time_ms": self.wall_time_ms}

    def to_json(self) -> str:
        return dumps(self.as_dict())


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = int(round(1000 * (time.perf_counter() - self.t0)))
        return False
