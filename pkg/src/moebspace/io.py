"""JSON formats for spaces, points and reports."""
import hashlib
import json
import math
import os
from typing import Optional

import numpy as np

from .config import TOL_FLOW
from .errors import CertificationError, MoebiusError
from .space import AntipodalSpace, MoebiusPoint


class InputError(MoebiusError):
    """Unreadable or malformed input file."""


def jsonable(obj):
    """Convert numpy values, tuples and non-finite floats to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2) + "\n"


def parse_json(text: str, what: str = "input"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {what}: {exc.msg} at line {exc.lineno}, column {exc.colno}") from exc


def read_json(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_json(raw.decode("utf-8"), path), digest_bytes(raw)


def digest_bytes(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def space_from_json(data, renormalize: bool = False, **kw) -> AntipodalSpace:
    if not isinstance(data, dict) or "rho" not in data:
        raise InputError("space JSON needs a 'rho' matrix")
    try:
        rho = np.array(data["rho"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"'rho' is not a numeric matrix: {exc}") from exc
    return AntipodalSpace(rho, data.get("labels"), renormalize=renormalize, **kw)


def load_space(path: str, renormalize: bool = False, **kw):
    data, dg = read_json(path)
    return space_from_json(data, renormalize, **kw), dg


def point_from_json(data, space: AntipodalSpace, tol_flow: float = TOL_FLOW) -> MoebiusPoint:
    if not isinstance(data, dict) or "tau" not in data:
        raise InputError("point JSON needs a 'tau' vector")
    ref = data.get("space")
    if isinstance(ref, str) and ref.startswith("sha256:") and ref != space.key:
        raise InputError(f"point belongs to space {ref}, not {space.key}")
    tau = np.array(data["tau"], dtype=float)
    if tau.shape != (space.n,):
        raise InputError(f"tau has length {tau.size}, space has {space.n} points")
    try:
        return space.point(tau, tol_flow=tol_flow)
    except CertificationError as exc:
        raise InputError(f"point is not certified: {exc}") from exc


def load_point(path: str, space: AntipodalSpace, tol_flow: float = TOL_FLOW):
    data, dg = read_json(path)
    return point_from_json(data, space, tol_flow), dg


def write_text(path: Optional[str], text: str):
    if path is None or path == "-":
        import sys
        sys.stdout.write(text)
        return
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc
