"""Timing harness comparing the lifted solver with the two classical DPARE solvers."""
from __future__ import annotations

import csv
import io
import json
import platform
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .dpare import solve_hench_laub, solve_yang
from .errors import LiftLQRError
from .lifted_dare import algorithm_3_1
from .linalg import DEFAULT_MARGIN
from .model import PeriodicSystem, random_stabilizable
from .spacecraft import SpacecraftParams, gen_magnetic_attitude, gen_wheels_magnetic

__all__ = [
    "SOLVERS",
    "CSV_COLUMNS",
    "ProblemSpec",
    "BenchmarkRecord",
    "BenchmarkReport",
    "build_problem",
    "run_solver",
    "run_benchmark",
]

RESIDUAL_GATE = 1e-8
CSV_COLUMNS = ("solver", "p", "n", "m", "trials", "median_s", "iqr_s", "residual_max", "success")
KIND_ALIASES = {
    "random": "random",
    "magnetic": "magnetic-attitude",
    "magnetic-attitude": "magnetic-attitude",
    "wheels": "wheels-magnetic",
    "wheels-magnetic": "wheels-magnetic",
}


def _alg31(sys, margin):
    sol = algorithm_3_1(sys, margin=margin)
    return sol, sol.residual, sol.Phat


def _yang(sys, margin):
    sol = solve_yang(sys, margin=margin)
    return sol, sol.residual_max, sol.P


def _hench_laub(sys, margin):
    sol = solve_hench_laub(sys, margin=margin)
    return sol, sol.residual_max, sol.P


SOLVERS: dict[str, Callable] = {
    "algorithm31": _alg31,
    "yang": _yang,
    "hench_laub": _hench_laub,
}


@dataclass(frozen=True)
class ProblemSpec:
    source: str = "generator"        # "generator" or "file"
    kind: str = "random"             # random | magnetic-attitude | wheels-magnetic
    p: int = 10
    n: Optional[int] = None
    m: Optional[int] = None
    seed: int = 0
    path: Optional[str] = None
    params: dict = field(default_factory=dict)  # SpacecraftParams overrides

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        fixed = {"magnetic-attitude": (6, 3), "wheels-magnetic": (9, 6)}.get(kind)
        if self.source == "generator" and fixed:
            for name, given, want in (("n", self.n, fixed[0]), ("m", self.m, fixed[1])):
                if given is not None and given != want:
                    raise ValueError(f"{kind} model has {name}={want}, got {given}")
            object.__setattr__(self, "n", fixed[0])
            object.__setattr__(self, "m", fixed[1])


def build_problem(spec: ProblemSpec) -> PeriodicSystem:
    if spec.source == "file":
        from .io import load_system

        return load_system(spec.path)
    if spec.kind == "random":
        return random_stabilizable(spec.p, spec.n or 2, spec.m or 1, spec.seed)
    params = SpacecraftParams(p=spec.p, **spec.params)
    if spec.kind == "magnetic-attitude":
        return gen_magnetic_attitude(params)
    return gen_wheels_magnetic(params)


@dataclass
class BenchmarkRecord:
    solver: str
    p: int
    n: int
    m: int
    trials: int
    median_s: float
    iqr_s: float
    residual_max: float
    success: bool
    deterministic: bool = True
    error: str = ""
    times: list = field(default_factory=list)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


@dataclass
class BenchmarkReport:
    records: list
    environment: str = ""
    problem: dict = field(default_factory=dict)

    def record(self, solver: str) -> BenchmarkRecord:
        for r in self.records:
            if r.solver == solver:
                return r
        raise KeyError(solver)

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if header:
            w.writeheader()
        for r in self.records:
            row = r.row()
            row["median_s"] = f"{r.median_s:.6g}"
            row["iqr_s"] = f"{r.iqr_s:.3g}"
            row["residual_max"] = f"{r.residual_max:.3e}"
            row["success"] = str(r.success).lower()
            w.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "environment": self.environment,
            "problem": self.problem,
            "records": [asdict(r) for r in self.records],
        }
        return json.dumps(payload, indent=2, default=float)


def _environment_note() -> str:
    return f"python {platform.python_version()} numpy {np.__version__} on {platform.machine()}; single BLAS thread"


def run_solver(name: str, sys: PeriodicSystem, margin: float = DEFAULT_MARGIN):
    """Run one solver and return ``(solution, residual, primary_matrix)``."""
    try:
        fn = SOLVERS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
    return fn(sys, margin)


def run_benchmark(
    spec_or_system,
    solvers=("algorithm31", "yang", "hench_laub"),
    trials: int = 5,
    warmup: int = 1,
    tolerance: float = RESIDUAL_GATE,
    margin: float = DEFAULT_MARGIN,
) -> BenchmarkReport:
    """Time each solver ``trials`` times after ``warmup`` untimed runs.

    Solver failures become records with ``success=False``; the report is
    always produced. Timing runs with BLAS limited to one thread.
    """
    if trials < 3:
        raise ValueError("trials must be >= 3")
    if isinstance(spec_or_system, PeriodicSystem):
        sys, problem = spec_or_system, {"source": "system"}
    else:
        sys, problem = build_problem(spec_or_system), asdict(spec_or_system)
    problem.update(p=sys.p, n=sys.n, m=sys.m)
    records = []
    with threadpool_limits(limits=1):
        for name in solvers:
            records.append(_bench_one(name, sys, trials, warmup, tolerance, margin))
    return BenchmarkReport(records, _environment_note(), problem)


def _bench_one(name, sys, trials, warmup, tolerance, margin):
    rec = BenchmarkRecord(name, sys.p, sys.n, sys.m, trials, float("nan"), float("nan"), float("inf"), False)
    try:
        for _ in range(warmup):
            run_solver(name, sys, margin)
        times, residuals, first = [], [], None
        for _ in range(trials):
            t0 = time.perf_counter()
            _, res, X = run_solver(name, sys, margin)
            times.append(time.perf_counter() - t0)
            residuals.append(res)
            if first is None:
                first = X
            elif not np.array_equal(first, X):
                rec.deterministic = False
    except LiftLQRError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    q1, med, q3 = np.percentile(times, [25, 50, 75])
    rec.times = times
    rec.median_s = float(med)
    rec.iqr_s = float(q3 - q1)
    rec.residual_max = float(max(residuals))
    rec.success = rec.residual_max <= tolerance
    if not rec.success:
        rec.error = f"residual {rec.residual_max:.3e} exceeds {tolerance:.1e}"
    return rec
