"""JSON files for periodic systems and solutions."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dpare import PeriodicRiccatiSolution
from .errors import DimensionMismatch
from .lifted_dare import LiftedRiccatiSolution
from .model import PeriodicSystem

__all__ = ["SystemFileError", "system_to_dict", "system_from_dict", "load_system", "dump_system", "solution_to_dict", "dump_solution"]


class SystemFileError(ValueError):
    """Malformed system document (missing fields, wrong sizes, bad numbers)."""


def system_to_dict(sys: PeriodicSystem) -> dict:
    return {
        "p": sys.p,
        "n": sys.n,
        "m": sys.m,
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "Q": sys.Q.tolist(),
        "R": sys.R.tolist(),
    }


def _field(doc, name, shape):
    if name not in doc:
        raise SystemFileError(f"missing field {name!r}")
    try:
        arr = np.asarray(doc[name], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SystemFileError(f"field {name!r} is not a numeric array: {exc}") from None
    if arr.shape != shape:
        raise SystemFileError(f"field {name!r} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise SystemFileError(f"field {name!r} contains non-finite numbers")
    return arr


def system_from_dict(doc: dict) -> PeriodicSystem:
    if not isinstance(doc, dict):
        raise SystemFileError("system document must be a JSON object")
    try:
        p, n, m = (int(doc[k]) for k in ("p", "n", "m"))
    except KeyError as exc:
        raise SystemFileError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise SystemFileError("p, n, m must be integers") from None
    if p < 1 or n < 1 or m < 1:
        raise SystemFileError(f"p, n, m must be positive, got {(p, n, m)}")
    A = _field(doc, "A", (p, n, n))
    B = _field(doc, "B", (p, n, m))
    Q = _field(doc, "Q", (p, n, n))
    R = _field(doc, "R", (p, m, m))
    try:
        return PeriodicSystem(A, B, Q, R)
    except DimensionMismatch as exc:
        raise SystemFileError(str(exc)) from None


def load_system(path) -> PeriodicSystem:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemFileError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{path}: invalid JSON ({exc})") from None
    return system_from_dict(doc)


def dump_system(sys: PeriodicSystem, path=None) -> str:
    text = json.dumps(system_to_dict(sys))
    if path is not None:
        Path(path).write_text(text)
    return text


def solution_to_dict(sol, include_gain: bool = False) -> dict:
    """``{"P": ...}`` for periodic solutions, ``{"Phat", "Qbar1_diag"}`` for lifted ones.

    Lifted solutions with non-diagonal weights store ``Qbar1_blocks`` instead
    of the diagonal.
    """
    if isinstance(sol, PeriodicRiccatiSolution):
        return {"P": np.asarray(sol.P).tolist()}
    if isinstance(sol, LiftedRiccatiSolution):
        out = {"Phat": np.asarray(sol.Phat).tolist()}
        blocks = sol.qbar1_blocks
        diag = np.array([np.diag(b) for b in blocks]).reshape(-1)
        if all(np.array_equal(b, np.diag(np.diag(b))) for b in blocks):
            out["Qbar1_diag"] = diag.tolist()
        else:
            out["Qbar1_blocks"] = blocks.tolist()
        if include_gain:
            out["Kbar_active"] = np.asarray(sol.Kbar_active).tolist()
        return out
    raise TypeError(f"cannot serialize {type(sol).__name__}")


def dump_solution(sol, path, include_gain: bool = False) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(sol, include_gain)))
