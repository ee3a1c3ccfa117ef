"""Feasibility census, dephasing sweeps and work maps, with CSV/JSON persistence.

Every sweep returns a :class:`SweepResult` whose rows share the fixed column
order :data:`SWEEP_COLUMNS`.  ``save_sweep`` writes the rows as CSV, the
optimized protocols as JSON lines, and a manifest holding the configuration
and package version, which is enough to replay any row exactly.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Literal, Sequence

import numpy as np

from .accounting import DivergentHeatWarning, protocol_ledger
from .bounds import clausius_bound, final_bound
from .optimize import OptimizationConfig, optimize_protocol
from .qubit import bloch_from_density, bloch_from_traceless, validate_hamiltonian
from .synthesis import Feasibility, Protocol, TaskSpec, canonical_protocol, canonical_solve

SCHEMA_VERSION = 1

SWEEP_COLUMNS = (
    "index", "gamma", "n", "x", "y",
    "r1_x", "r1_y", "r1_z", "r2_x", "r2_y", "r2_z",
    "status", "witness", "lam",
    "W_opt", "W_single", "clausius", "final_bound",
)

Sampling = Literal["ball", "sphere"]


def _as_bloch(state) -> np.ndarray:
    a = np.asarray(state)
    if a.shape == (3,):
        return a.astype(float)
    return bloch_from_density(a)


def _axis_of(h0) -> tuple[float, np.ndarray]:
    if h0 is None:
        return 1.0, np.array([0.0, 0.0, 1.0])
    c = bloch_from_traceless(validate_hamiltonian(np.asarray(h0)))
    e0 = float(np.linalg.norm(c))
    if e0 == 0.0:
        return 0.0, np.array([0.0, 0.0, 1.0])
    return e0, c / e0


def dephase(r: np.ndarray, gamma: float, axis: np.ndarray) -> np.ndarray:
    """Scale the Bloch components perpendicular to ``axis`` by ``1 - gamma``."""
    along = (r @ axis) * axis
    return along + (1.0 - gamma) * (r - along)


def dephasing_task(
    rho1, rho2, gamma: float, p1: float = 0.5, h0=None, kT: float = 1.0
) -> TaskSpec:
    """Task removing a fraction ``gamma`` of the coherences in the ``H0`` eigenbasis.

    States may be density matrices or Bloch vectors; ``h0`` defaults to ``sigma_z``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    e0, axis = _axis_of(h0)
    r1, r2 = _as_bloch(rho1), _as_bloch(rho2)
    return TaskSpec(
        r1, r2, dephase(r1, gamma, axis), dephase(r2, gamma, axis),
        p1=p1, e0=e0, axis=tuple(axis), kT=kT,
    )


def sample_bloch(rng: np.random.Generator, n: int, sampling: Sampling = "ball") -> np.ndarray:
    """``n`` Bloch vectors, uniform in the ball (all mixed states) or on the sphere (pure)."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    if sampling == "sphere":
        return v
    if sampling != "ball":
        raise ValueError(f"unknown sampling {sampling!r}")
    return v * rng.random(n)[:, None] ** (1.0 / 3.0)


# --- census -----------------------------------------------------------------


@dataclass(frozen=True)
class CensusConfig:
    n_samples: int = 100_000
    sampling: Sampling = "ball"
    seed: int = 0
    p1: float = 0.5
    gamma: float = 1.0
    optimize_n: int = 20
    # feasible pairs whose work sign is classified; None classifies all of them
    work_samples: int | None = 1000
    max_evals: int = 200_000
    threads: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.sampling not in ("ball", "sphere"):
            raise ValueError(f"unknown sampling {self.sampling!r}")


@dataclass
class CensusResult:
    config: CensusConfig
    counts: dict[str, int]
    feasible_fraction: float
    feasible_se: float
    positive_work_fraction: float
    positive_work_se: float
    # how each work sign was settled: single_step, bound, optimized
    work_methods: dict[str, int] = field(default_factory=dict)
    rows: list[dict[str, Any]] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("rows")
        return out


def _binomial(k: int, n: int) -> tuple[float, float]:
    if n == 0:
        return math.nan, math.nan
    p = k / n
    return p, math.sqrt(p * (1 - p) / n)


def sample_pairs(config: CensusConfig) -> tuple[np.ndarray, np.ndarray]:
    """Input pairs for the census; coincident pairs are redrawn."""
    rng = np.random.default_rng(config.seed)
    a = sample_bloch(rng, config.n_samples, config.sampling)
    b = sample_bloch(rng, config.n_samples, config.sampling)
    same = np.linalg.norm(a - b, axis=1) == 0
    while np.any(same):
        b[same] = sample_bloch(rng, int(same.sum()), config.sampling)
        same = np.linalg.norm(a - b, axis=1) == 0
    return a, b


def classify_work_sign(task: TaskSpec, n: int = 20, max_evals: int = 200_000) -> tuple[bool, str, float]:
    """Whether the best ``n``-step protocol extracts positive work.

    Returns ``(positive, method, value)``.  Two certified shortcuts avoid a
    search: a positive single-step protocol settles ``True`` (more steps never
    do worse), and a non-positive final bound settles ``False``.  Otherwise
    the search stops at the first protocol with positive work.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergentHeatWarning)
        single = protocol_ledger(canonical_protocol(task)).mean_work
    if single > 0:
        return True, "single_step", single
    bound = final_bound(task)
    if bound <= 0:
        return False, "bound", bound
    cfg = OptimizationConfig(n_steps=n, max_evals=max_evals, stop_above=0.0)
    res = optimize_protocol(task, cfg)
    return res.mean_work > 0, "optimized", res.mean_work


def _census_item(args) -> tuple[bool, str, float]:
    task, n, max_evals = args
    return classify_work_sign(task, n, max_evals)


def feasibility_census(config: CensusConfig = CensusConfig()) -> CensusResult:
    """Fraction of random input pairs whose dephasing task is feasible, and of those with positive work."""
    a, b = sample_pairs(config)
    counts: dict[str, int] = {s.value: 0 for s in Feasibility}
    rows = []
    work_queue = []
    for i, (r1, r2) in enumerate(zip(a, b)):
        task = dephasing_task(r1, r2, config.gamma, p1=config.p1)
        sol = canonical_solve(task)
        counts[sol.status.value] += 1
        rows.append({"index": i, "r1": r1.tolist(), "r2": r2.tolist(), "status": sol.status.value})
        if sol.feasible and (config.work_samples is None or len(work_queue) < config.work_samples):
            work_queue.append(i)

    n_feasible = sum(v for k, v in counts.items() if Feasibility(k).implementable)
    items = [
        (dephasing_task(a[i], b[i], config.gamma, p1=config.p1), config.optimize_n, config.max_evals)
        for i in work_queue
    ]
    outcomes = _map(_census_item, items, config.threads)
    methods: dict[str, int] = {}
    positive = 0
    for i, (pos, method, value) in zip(work_queue, outcomes):
        rows[i].update(positive_work=pos, work_method=method, work_value=value)
        methods[method] = methods.get(method, 0) + 1
        positive += pos
    counts["positive_work"] = positive
    counts["work_classified"] = len(work_queue)
    ff, fse = _binomial(n_feasible, config.n_samples)
    pf, pse = _binomial(positive, len(work_queue))
    return CensusResult(config, counts, ff, fse, pf, pse, methods, rows)


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


# --- sweeps -----------------------------------------------------------------


@dataclass
class SweepResult:
    """Rows in :data:`SWEEP_COLUMNS` order plus the protocol behind each ``W_opt``."""

    kind: str
    rows: list[dict[str, Any]]
    protocols: dict[int, Protocol] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def feasible_rows(self) -> list[dict[str, Any]]:
        return [r for r in self.rows if Feasibility(r["status"]).implementable]


def evaluate_task(task: TaskSpec, n: int, opt: OptimizationConfig) -> tuple[dict[str, Any], Protocol | None]:
    """One sweep row (without coordinates) and the optimized protocol, if feasible."""
    sol = canonical_solve(task)
    row: dict[str, Any] = {
        "n": n,
        "r1_x": task.r1[0], "r1_y": task.r1[1], "r1_z": task.r1[2],
        "r2_x": task.r2[0], "r2_y": task.r2[1], "r2_z": task.r2[2],
        "status": sol.status.value,
        "witness": math.nan if sol.witness is None else sol.witness,
        "lam": sol.lam,
        "clausius": clausius_bound(task),
        "W_opt": math.nan,
        "W_single": math.nan,
        "final_bound": math.nan,
    }
    if not sol.feasible:
        return row, None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergentHeatWarning)
        row["W_single"] = protocol_ledger(canonical_protocol(sol)).mean_work
        res = optimize_protocol(task, opt.with_steps(n))
    row["W_opt"] = res.mean_work
    row["final_bound"] = final_bound(task)
    return row, res.protocol


def _evaluate_item(args):
    task, n, opt = args
    return evaluate_task(task, n, opt)


def parse_grid(text: str) -> np.ndarray:
    """``"start:stop:count"`` to an inclusive linear grid."""
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise ValueError(f"grid must look like start:stop:count, got {text!r}") from None


def gamma_sweep(
    rho1,
    rho2,
    gamma_grid: Iterable[float],
    p1: float = 0.5,
    h0=None,
    kT: float = 1.0,
    config: OptimizationConfig = OptimizationConfig(),
    threads: int = 1,
) -> SweepResult:
    """Optimized work, single-step work and both bounds along a dephasing-strength grid."""
    gammas = [float(g) for g in gamma_grid]
    tasks = [dephasing_task(rho1, rho2, g, p1=p1, h0=h0, kT=kT) for g in gammas]
    out = _map(_evaluate_item, [(t, config.n_steps, config) for t in tasks], threads)
    rows, protocols = [], {}
    for i, (g, (row, proto)) in enumerate(zip(gammas, out)):
        row.update(index=i, gamma=g, x=math.nan, y=math.nan)
        rows.append(row)
        if proto is not None:
            protocols[i] = proto
    cfg = {"kind": "gamma_sweep", "gamma_grid": gammas, "p1": p1, "kT": kT,
           "optimization": asdict(config)}
    return SweepResult("gamma_sweep", rows, protocols, cfg)


# rho1 default of the work map: a representative input rotated into the x-z plane
HEATMAP_RHO1 = (math.hypot(0.249, 0.183), 0.0, 0.494)


def heatmap_plane(rho1, axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane directions ``(u, axis)`` spanning ``rho1`` and the ``H0`` axis."""
    r1 = _as_bloch(rho1)
    perp = r1 - (r1 @ axis) * axis
    if np.linalg.norm(perp) < 1e-12:
        trial = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        perp = trial - (trial @ axis) * axis
    return perp / np.linalg.norm(perp), axis


def work_heatmap(
    rho1=HEATMAP_RHO1,
    resolution: int = 101,
    n: int = 20,
    p1: float = 0.5,
    h0=None,
    kT: float = 1.0,
    gamma: float = 1.0,
    config: OptimizationConfig = OptimizationConfig(),
    threads: int = 1,
) -> SweepResult:
    """Optimized work as ``rho2`` ranges over the disk through ``rho1`` and the ``H0`` axis.

    Coordinates ``(x, y)`` are the components of ``rho2`` along the in-plane
    direction perpendicular to the axis and along the axis.  Points outside
    the unit disk and the point ``rho2 = rho1`` are skipped.
    """
    _, axis = _axis_of(h0)
    u, w = heatmap_plane(rho1, axis)
    r1 = _as_bloch(rho1)
    coords = np.linspace(-1.0, 1.0, resolution)
    items, where = [], []
    for y in coords[::-1]:
        for x in coords:
            if x * x + y * y > 1.0 + 1e-12:
                continue
            r2 = x * u + y * w
            r2 = r2 / max(1.0, float(np.linalg.norm(r2)))
            if np.linalg.norm(r2 - r1) < 1e-12:
                continue
            items.append((dephasing_task(r1, r2, gamma, p1=p1, h0=h0, kT=kT), n, config))
            where.append((float(x), float(y)))
    out = _map(_evaluate_item, items, threads)
    rows, protocols = [], {}
    for i, ((x, y), (row, proto)) in enumerate(zip(where, out)):
        row.update(index=i, gamma=gamma, x=x, y=y)
        rows.append(row)
        if proto is not None:
            protocols[i] = proto
    cfg = {"kind": "heatmap", "rho1": r1.tolist(), "resolution": resolution, "n": n,
           "gamma": gamma, "p1": p1, "kT": kT, "optimization": asdict(config)}
    return SweepResult("heatmap", rows, protocols, cfg)


def nscan_sweep(task: TaskSpec, n_values: Sequence[int], config: OptimizationConfig = OptimizationConfig()) -> SweepResult:
    """Optimized work per step count, with the task's bounds on every row."""
    from .optimize import n_scan

    results = n_scan(task, list(n_values), config)
    base, _ = evaluate_task(task, 1, config)
    rows, protocols = [], {}
    for i, (n, res) in enumerate(zip(n_values, results)):
        row = dict(base, index=i, n=n, gamma=math.nan, x=math.nan, y=math.nan, W_opt=res.mean_work)
        rows.append(row)
        protocols[i] = res.protocol
    cfg = {"kind": "nscan", "task": task.to_dict(), "n_values": list(n_values),
           "optimization": asdict(config)}
    return SweepResult("nscan", rows, protocols, cfg)


# --- persistence --------------------------------------------------------------


def _csv_value(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows_csv(rows: Sequence[dict[str, Any]], stream, columns: Sequence[str] = SWEEP_COLUMNS) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_csv_value(r[c]) for c in columns])


def save_sweep(result: SweepResult, path: str | Path) -> dict[str, Path]:
    """Write ``<path>.csv``, ``<path>.protocols.jsonl`` and ``<path>.manifest.json``."""
    from . import __version__

    base = Path(path)
    base = base.with_suffix("") if base.suffix in (".csv", ".json") else base
    base.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": base.with_name(base.name + ".csv"),
        "protocols": base.with_name(base.name + ".protocols.jsonl"),
        "manifest": base.with_name(base.name + ".manifest.json"),
    }
    with open(paths["csv"], "w", newline="") as fh:
        write_rows_csv(result.rows, fh)
    with open(paths["protocols"], "w") as fh:
        for i in sorted(result.protocols):
            fh.write(json.dumps({"index": i, "protocol": result.protocols[i].to_dict()}) + "\n")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "kind": result.kind,
        "columns": list(SWEEP_COLUMNS),
        "config": result.config,
        "files": {k: p.name for k, p in paths.items() if k != "manifest"},
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


def load_sweep(manifest_path: str | Path) -> SweepResult:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    folder = manifest_path.parent
    rows = []
    with open(folder / manifest["files"]["csv"], newline="") as fh:
        for rec in csv.DictReader(fh):
            row: dict[str, Any] = {}
            for k, v in rec.items():
                if k == "status":
                    row[k] = v
                elif k in ("index", "n"):
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    protocols = {}
    with open(folder / manifest["files"]["protocols"]) as fh:
        for line in fh:
            rec = json.loads(line)
            protocols[rec["index"]] = Protocol.from_dict(rec["protocol"])
    return SweepResult(manifest["kind"], rows, protocols, manifest["config"])


def replay_errors(result: SweepResult) -> dict[int, float]:
    """``|W_opt - W(replayed protocol)|`` for every row that carries a protocol."""
    errors = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergentHeatWarning)
        for row in result.rows:
            proto = result.protocols.get(row["index"])
            if proto is not None:
                errors[row["index"]] = abs(protocol_ledger(proto).mean_work - row["W_opt"])
    return errors
