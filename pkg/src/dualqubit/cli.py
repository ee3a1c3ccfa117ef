"""Command-line interface.

Exit codes: 0 on success, 2 when the task is infeasible, 1 on input errors.
The resolved configuration of every run is echoed to stderr as one JSON line;
results go to stdout (or to ``--out``) as JSON or CSV.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .accounting import DivergentHeatWarning, LEDGER_CSV_COLUMNS, protocol_ledger
from .bounds import bound_chain_diagnostics, clausius_bound, dissipation_term, final_bound, lag_bound
from .experiments import (
    CensusConfig,
    SWEEP_COLUMNS,
    SweepResult,
    feasibility_census,
    gamma_sweep,
    nscan_sweep,
    parse_grid,
    save_sweep,
    work_heatmap,
    write_rows_csv,
)
from .optimize import OptimizationConfig, optimize_protocol, single_input_reference
from .qubit import bloch_from_density
from .synthesis import (
    FinalStepInfeasibleError,
    ImpossibleTaskError,
    InfeasibleTaskError,
    TaskFormatError,
    TaskSpec,
    canonical_protocol,
    canonical_solve,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2

# inputs used when a sweep is run without a task file
DEFAULT_SWEEP_STATES = ((0.249, 0.183, 0.494), (-0.044, -0.640, 0.508))


class InputError(Exception):
    pass


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _dump_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _load_task(args) -> TaskSpec:
    if args.task is None:
        raise InputError("--task is required for this subcommand")
    try:
        text = Path(args.task).read_text()
    except OSError as exc:
        raise InputError(f"cannot read task file: {exc}") from None
    task = TaskSpec.from_json(text)
    if args.kt is not None:
        task = TaskSpec(**{**asdict(task), "kT": args.kt})
    return task


def _opt_config(args) -> OptimizationConfig:
    return OptimizationConfig(
        n_steps=args.n, seed=args.seed, max_evals=args.max_evals, restarts=args.restarts
    )


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    write_rows_csv(rows, buf, columns)
    return buf.getvalue()


def _unitary_json(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


# --- subcommands -------------------------------------------------------------


def cmd_solve(args) -> int:
    task = _load_task(args)
    sol = canonical_solve(task)
    report: dict[str, Any] = {
        "status": sol.status.value,
        "lam": sol.lam,
        "witness": sol.witness,
        "unitary": _unitary_json(sol.unitary),
        "tau": None if sol.tau is None else bloch_from_density(sol.tau).tolist(),
        "boundary": sol.boundary,
        "residual": sol.residual,
    }
    if sol.feasible:
        proto = canonical_protocol(sol)
        report["protocol"] = proto.to_dict()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DivergentHeatWarning)
            report["mean_work"] = protocol_ledger(proto).mean_work
    if args.format == "csv":
        cols = ("status", "lam", "witness", "tau_x", "tau_y", "tau_z", "mean_work")
        tau = report["tau"] or [math.nan] * 3
        row = dict(report, tau_x=tau[0], tau_y=tau[1], tau_z=tau[2])
        row.setdefault("mean_work", math.nan)
        row["witness"] = math.nan if row["witness"] is None else row["witness"]
        _emit(args, _csv_text([row], cols))
    else:
        _emit(args, _dump_json(report))
    return EXIT_OK if sol.feasible else EXIT_INFEASIBLE


def cmd_optimize(args) -> int:
    task = _load_task(args)
    res = optimize_protocol(task, _opt_config(args))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergentHeatWarning)
        ledger = protocol_ledger(res.protocol)
    if args.format == "csv":
        row = dict(ledger.csv_row(), n=res.protocol.n_steps)
        _emit(args, _csv_text([row], ("n",) + LEDGER_CSV_COLUMNS))
    else:
        out = res.to_dict()
        out["ledger"] = ledger.to_dict()
        _emit(args, _dump_json(out))
    return EXIT_OK


def cmd_bounds(args) -> int:
    task = _load_task(args)
    sol = canonical_solve(task)
    if not sol.feasible:
        raise InfeasibleTaskError(sol.status, sol.witness)
    dissipation, zero = dissipation_term(task)
    out: dict[str, Any] = {
        "clausius": clausius_bound(task),
        "final_bound": final_bound(task),
        "dissipation": dissipation,
        "dissipation_vanishes": zero,
    }
    res = optimize_protocol(task, _opt_config(args))
    out["mean_work"] = res.mean_work
    out["lag_bound"] = lag_bound(res.protocol)
    if res.protocol.n_steps > 0 and np.all(res.protocol.lambdas < 1.0):
        report = bound_chain_diagnostics(res.protocol)
        out["chain"] = report.chain
        out["power_mean_terms"] = report.power_mean_terms
        out["orderings"] = [
            {"relation": label, "larger": a, "smaller": b, "holds": bool(a >= b - 1e-10)}
            for label, a, b in report.orderings()
        ]
    if args.format == "csv":
        cols = ("clausius", "final_bound", "lag_bound", "mean_work", "dissipation")
        _emit(args, _csv_text([out], cols))
    else:
        _emit(args, _dump_json(out))
    return EXIT_OK


def _emit_sweep(args, result: SweepResult, echo: dict) -> None:
    if args.out:
        save_sweep(result, args.out)
        return
    if args.format == "csv":
        sys.stdout.write(_csv_text(result.rows, SWEEP_COLUMNS))
    else:
        sys.stdout.write(_dump_json({"config": echo, "rows": result.rows}))


def cmd_nscan(args) -> int:
    task = _load_task(args)
    n_values = [int(v) for v in args.n_values.split(",")] if args.n_values else list(range(1, args.n + 1))
    result = nscan_sweep(task, n_values, _opt_config(args))
    _emit_sweep(args, result, result.config)
    return EXIT_OK


def _sweep_inputs(args):
    if args.task is None:
        r1, r2 = DEFAULT_SWEEP_STATES
        return r1, r2, 0.5, None, args.kt or 1.0
    task = _load_task(args)
    return task.r1, task.r2, task.p1, task.H0, task.kT


def cmd_gamma_sweep(args) -> int:
    r1, r2, p1, h0, kT = _sweep_inputs(args)
    grid = parse_grid(args.gamma_grid)
    result = gamma_sweep(r1, r2, grid, p1=p1, h0=h0, kT=kT, config=_opt_config(args), threads=args.threads)
    _emit_sweep(args, result, result.config)
    return EXIT_OK


def cmd_heatmap(args) -> int:
    if args.task is None:
        kwargs: dict[str, Any] = {"kT": args.kt or 1.0}
    else:
        r1, _, p1, h0, kT = _sweep_inputs(args)
        kwargs = {"rho1": r1, "p1": p1, "h0": h0, "kT": kT}
    result = work_heatmap(
        resolution=args.grid, n=args.n, gamma=args.gamma, config=_opt_config(args),
        threads=args.threads, **kwargs,
    )
    _emit_sweep(args, result, result.config)
    return EXIT_OK


def cmd_census(args) -> int:
    cfg = CensusConfig(
        n_samples=args.samples,
        sampling=args.sampling,
        seed=args.seed,
        p1=args.p1,
        gamma=args.gamma,
        optimize_n=args.n,
        work_samples=args.work_samples,
        max_evals=args.max_evals,
        threads=args.threads,
    )
    res = feasibility_census(cfg)
    summary = res.summary()
    if args.format == "csv":
        cols = ("feasible_fraction", "feasible_se", "positive_work_fraction", "positive_work_se")
        _emit(args, _csv_text([summary], cols))
    else:
        _emit(args, _dump_json(summary))
    return EXIT_OK


def cmd_baseline(args) -> int:
    task = _load_task(args)
    rho, eta = (task.rho1, task.eta1) if args.input == 1 else (task.rho2, task.eta2)
    work, limit = single_input_reference(rho, eta, task.H0, task.kT, n=args.n, eps=args.eps)
    out = {"n": args.n, "work": work, "limit": limit, "gap": limit - work}
    if args.format == "csv":
        _emit(args, _csv_text([out], ("n", "work", "limit", "gap")))
    else:
        _emit(args, _dump_json(out))
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--task", help="task JSON file")
    common.add_argument("--n", type=int, default=20, help="number of thermalization steps")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--out", help="output path (sweeps write .csv, .protocols.jsonl, .manifest.json)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--kt", type=_positive_float, help="temperature scale kT overriding the task file")
    common.add_argument("--max-evals", type=int, default=200_000)
    common.add_argument("--restarts", type=int, default=1)

    parser = argparse.ArgumentParser(prog="dualqubit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="canonical single-step protocol and feasibility")
    sub.add_parser("optimize", parents=[common], help="best N-step protocol")
    sub.add_parser("bounds", parents=[common], help="Clausius, final and lag bounds with the inequality chain")
    p = sub.add_parser("nscan", parents=[common], help="optimized work against the number of steps")
    p.add_argument("--n-values", help="comma-separated step counts (default 1..N)")
    p = sub.add_parser("gamma-sweep", parents=[common], help="work against dephasing strength")
    p.add_argument("--gamma-grid", default="0:1:51", help="start:stop:count")
    p = sub.add_parser("heatmap", parents=[common], help="work as the second input ranges over a plane")
    p.add_argument("--grid", type=int, default=101, help="points per axis")
    p.add_argument("--gamma", type=float, default=1.0)
    p = sub.add_parser("census", parents=[common], help="feasible and positive-work fractions")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--sampling", choices=("ball", "sphere"), default="ball")
    p.add_argument("--work-samples", type=int, default=1000)
    p.add_argument("--p1", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p = sub.add_parser("baseline", parents=[common], help="single-input quasistatic reference")
    p.add_argument("--input", type=int, choices=(1, 2), default=1)
    p.add_argument("--eps", type=float, help="mixing used to regularize pure endpoints")
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "optimize": cmd_optimize,
    "bounds": cmd_bounds,
    "nscan": cmd_nscan,
    "gamma-sweep": cmd_gamma_sweep,
    "heatmap": cmd_heatmap,
    "census": cmd_census,
    "baseline": cmd_baseline,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    echo = {k: v for k, v in sorted(vars(args).items())}
    echo["version"] = __version__
    sys.stderr.write("config: " + json.dumps(echo, sort_keys=True) + "\n")
    try:
        return COMMANDS[args.command](args)
    except (InfeasibleTaskError, FinalStepInfeasibleError, ImpossibleTaskError) as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (InputError, TaskFormatError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())
