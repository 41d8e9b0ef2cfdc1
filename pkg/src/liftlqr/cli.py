"""Command-line interface: solve, bench, simulate, gen, flops.

Exit status is 0 on success, 1 when a solver fails (or misses the residual
gate) and 2 for bad input, including systems that fail validation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys as _sys

import numpy as np

from .bench import RESIDUAL_GATE, SOLVERS, ProblemSpec, build_problem, run_benchmark, run_solver
from .control import (
    closed_loop_monodromy,
    controller_from_lifted,
    gains_from_periodic,
    lifted_closed_loop,
    periods_to_decay,
    simulate_lifted,
)
from .errors import DimensionMismatch, GenerationFailed, LiftLQRError, ValidationError
from .io import SystemFileError, dump_solution, dump_system
from .lifted_dare import flop_estimate
from .linalg import DEFAULT_MARGIN
from .model import simulate

EXIT_OK, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2
LARGE_SIZES = (100, 500, 1000)


class InputError(Exception):
    pass


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _problem_parser() -> argparse.ArgumentParser:
    pp = argparse.ArgumentParser(add_help=False)
    g = pp.add_argument_group("problem")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--input", help="system JSON file")
    src.add_argument(
        "--gen",
        choices=["random", "magnetic", "magnetic-attitude", "wheels", "wheels-magnetic"],
        help="generate the system instead of reading it",
    )
    g.add_argument("--p", type=int, default=None, help="period (default 10; 100 for spacecraft kinds)")
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--inertia", type=_floats, help="principal inertias J1,J2,J3 (kg m^2)")
    g.add_argument("--inclination", type=float, help="orbit inclination (rad)")
    g.add_argument("--orbital-rate", type=float, help="orbital rate (rad/s)")
    g.add_argument("--field-strength", type=float, help="dipole field strength (T)")
    g.add_argument("--dipole-scale", type=float, help="magnetic dipole per unit input (A m^2)")
    g.add_argument("--wheel-torque-scale", type=float, help="wheel torque per unit input (N m)")
    g.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="unit-circle classification margin")
    return pp


def _spec(args, p=None) -> ProblemSpec:
    if args.input:
        return ProblemSpec(source="file", path=args.input)
    kind = args.gen or "random"
    params = {}
    for name in ("inclination", "orbital_rate", "field_strength", "dipole_scale", "wheel_torque_scale"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    if getattr(args, "inertia", None) is not None:
        if len(args.inertia) != 3:
            raise InputError("--inertia needs three values")
        params["inertia"] = tuple(args.inertia)
    if p is None:
        p = args.p if args.p is not None else (10 if kind == "random" else 100)
    if kind == "random" and params:
        raise InputError("physical parameters apply only to the spacecraft generators")
    try:
        return ProblemSpec(kind=kind, p=p, n=args.n, m=args.m, seed=args.seed, params=params)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _system(args, p=None):
    spec = _spec(args, p)
    if spec.source == "generator" and spec.p < 1:
        raise InputError("--p must be positive")
    return build_problem(spec)


def _out(args, text: str):
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def _closed_loop(system, name, sol):
    if name == "algorithm31":
        ctrl = controller_from_lifted(system, sol)
        return ctrl, lifted_closed_loop(system, ctrl)[1]
    gains = gains_from_periodic(system, sol)
    return gains, closed_loop_monodromy(system, gains)[1]


def cmd_solve(args) -> int:
    system = _system(args)
    sol, residual, _ = run_solver(args.solver, system, args.margin)
    _, radius = _closed_loop(system, args.solver, sol)
    ok = residual <= args.tolerance
    print(f"solver: {args.solver}")
    print(f"p={system.p} n={system.n} m={system.m}")
    print(f"residual: {residual:.3e}")
    print(f"monodromy radius: {radius:.6f}")
    if args.dump:
        dump_solution(sol, args.dump, include_gain=args.include_gain)
    if not ok:
        print(f"error: residual exceeds tolerance {args.tolerance:.1e}", file=_sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.solvers == "all":
        solvers = list(SOLVERS)
    else:
        solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
        unknown = [s for s in solvers if s not in SOLVERS]
        if unknown or not solvers:
            raise InputError(f"unknown solver(s) {unknown}; choose from {sorted(SOLVERS)} or 'all'")
    if args.trials < 3:
        raise InputError("--trials must be at least 3")
    if args.input and (args.sweep or args.large_sizes):
        raise InputError("p sweeps need a generator")
    ps = list(LARGE_SIZES) if args.large_sizes else (args.sweep or [None])
    reports = [
        run_benchmark(_spec(args, p), solvers, args.trials, args.warmup, args.tolerance, args.margin) for p in ps
    ]
    if args.format == "csv":
        text = "".join(r.to_csv(header=i == 0) for i, r in enumerate(reports))
    else:
        payload = [json.loads(r.to_json()) for r in reports]
        doc = {"reports": payload}
        if "algorithm31" in solvers and "yang" in solvers:
            doc["ratio_algorithm31_over_yang"] = [
                {"p": r.problem["p"], "ratio": r.record("algorithm31").median_s / r.record("yang").median_s}
                for r in reports
            ]
        text = json.dumps(doc, indent=2) + "\n"
    _out(args, text)
    failed = [f"{r.solver}@p={r.p}: {r.error}" for rep in reports for r in rep.records if not r.success]
    for line in failed:
        print(f"error: {line}", file=_sys.stderr)
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_simulate(args) -> int:
    system = _system(args)
    if args.x0 is not None:
        x0 = np.asarray(args.x0, dtype=float)
        if x0.shape != (system.n,):
            raise InputError(f"--x0 needs {system.n} values, got {x0.size}")
    else:
        x0 = np.random.default_rng(args.seed).standard_normal(system.n)
    sol, residual, _ = run_solver(args.solver, system, args.margin)
    if residual > args.tolerance:
        print(f"error: residual {residual:.3e} exceeds tolerance {args.tolerance:.1e}", file=_sys.stderr)
        return EXIT_SOLVER
    if args.solver == "algorithm31":
        ctrl = controller_from_lifted(system, sol)
        periods = args.periods or periods_to_decay(lifted_closed_loop(system, ctrl)[0], x0)
        traj = simulate_lifted(system, ctrl, x0, periods)
    else:
        gains = gains_from_periodic(system, sol)
        periods = args.periods or periods_to_decay(closed_loop_monodromy(system, gains)[0], x0)
        traj = simulate(system, x0, periods * system.p, gains=gains)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "phase"] + [f"x{i}" for i in range(system.n)] + [f"u{i}" for i in range(system.m)] + ["cost"])
    cost = 0.0
    for k in range(len(traj.states)):
        x = traj.states[k]
        if k < len(traj.controls):
            u = traj.controls[k]
            row_u = [repr(float(v)) for v in u]
        else:
            u, row_u = None, [""] * system.m
        w.writerow([k, k % system.p] + [repr(float(v)) for v in x] + row_u + [repr(cost)])
        if u is not None:
            ph = k % system.p
            cost += 0.5 * float(x @ system.Q[ph] @ x + u @ system.R[ph] @ u)
    _out(args, buf.getvalue())
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.input:
        raise InputError("gen needs --gen")
    _out(args, dump_system(_system(args)) + "\n")
    return EXIT_OK


def cmd_flops(args) -> int:
    if args.p is None or args.n is None or args.m is None:
        raise InputError("flops needs --p, --n and --m")
    methods = ["direct", "structured"] if args.method == "both" else [args.method]
    try:
        counts = {meth: flop_estimate(args.p, args.n, args.m, meth) for meth in methods}
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.format == "json":
        text = json.dumps({"p": args.p, "n": args.n, "m": args.m, "counts": counts}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "quantity", "flops"])
        for meth, c in counts.items():
            for key, value in c.items():
                w.writerow([meth, key, f"{value:.6g}"])
        text = buf.getvalue()
    _out(args, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liftlqr", description="Periodic LQR via a no-overlap lifting.")
    sub = parser.add_subparsers(dest="command", required=True)
    problem = _problem_parser()
    solver_choices = sorted(SOLVERS)

    s = sub.add_parser("solve", parents=[problem], help="solve one problem and summarize")
    s.add_argument("--solver", choices=solver_choices, default="algorithm31")
    s.add_argument("--tolerance", type=float, default=RESIDUAL_GATE)
    s.add_argument("--dump", help="write the solution as JSON")
    s.add_argument("--include-gain", action="store_true", help="add Kbar_active to a lifted solution dump")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", parents=[problem], help="time solvers on one problem")
    b.add_argument("--solvers", default="all", help="'all' or a comma list of " + ",".join(solver_choices))
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--tolerance", type=float, default=RESIDUAL_GATE)
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--output")
    b.add_argument("--sweep", type=_ints, help="comma list of periods to run in turn")
    b.add_argument("--large-sizes", action="store_true", help=f"sweep p over {LARGE_SIZES} (slow)")
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("simulate", parents=[problem], help="closed-loop trajectory as CSV")
    m.add_argument("--solver", choices=solver_choices, default="algorithm31")
    m.add_argument("--periods", type=int, default=None, help="default: until ||x|| < 1e-8 ||x0||, at most 100")
    m.add_argument("--x0", type=_floats, help="initial state (default: seeded normal draw)")
    m.add_argument("--tolerance", type=float, default=RESIDUAL_GATE)
    m.add_argument("--output")
    m.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gen", parents=[problem], help="write a generated system as JSON")
    g.add_argument("--output")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("flops", help="predicted leading-order flop counts")
    f.add_argument("--p", type=int)
    f.add_argument("--n", type=int)
    f.add_argument("--m", type=int)
    f.add_argument("--method", choices=["direct", "structured", "both"], default="both")
    f.add_argument("--format", choices=["csv", "json"], default="csv")
    f.add_argument("--output")
    f.set_defaults(func=cmd_flops)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SystemFileError, ValidationError, DimensionMismatch, GenerationFailed) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except LiftLQRError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_SOLVER
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
