"""Maximize the mean work of N-step protocols.

The mixing schedule is uniform, ``lam_i = lam ** (1/N)``.  The free variables
are the thermal targets ``tau_1 .. tau_{N-1}``; the last one is solved from
the composition constraint so every candidate implements the task exactly.
Targets are searched in an unconstrained space ``v -> tanh(|v|) v/|v|``
mapping R^3 onto the open Bloch ball.

The objective is evaluated in Bloch coordinates: for a thermal target with
Bloch vector ``t`` and average state ``r`` before the step,
``ln tau = c I + artanh|t| t.sigma/|t|``, so the heat of the step is
``kT (1-lam) artanh|t| (r.t/|t| - |t|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import minimize

from .accounting import protocol_ledger
from .qubit import (
    EPS_PSD,
    RankDeficientError,
    bloch_from_density,
    density_from_bloch,
    free_energy,
    gibbs_state,
    herm_log,
)
from .synthesis import (
    CanonicalSolution,
    Feasibility,
    InfeasibleTaskError,
    Protocol,
    TaskSpec,
    canonical_protocol,
    canonical_solve,
    expand_to_n_steps,
)

# tanh saturates to exactly 1 near here, so cap the radial coordinate
_MAX_RADIUS = 18.0
# Bloch radius treated as a pure (divergent) thermal target
_EDGE = 1.0 - 2e-12


@dataclass(frozen=True)
class OptimizationConfig:
    n_steps: int = 20
    max_evals: int = 200_000
    xtol: float = 1e-8
    ftol: float = 1e-6
    seed: int = 0
    init_policy: Literal["canonical", "perturbed"] = "canonical"
    perturb_scale: float = 0.1
    restarts: int = 1
    method: Literal["powell", "nelder-mead"] = "powell"
    penalty: float = 1e3
    # stop as soon as a protocol beats this value (used for sign classification)
    stop_above: float | None = None

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.xtol <= 0 or self.ftol <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")

    def with_steps(self, n: int) -> "OptimizationConfig":
        return OptimizationConfig(**{**self.__dict__, "n_steps": n})


@dataclass
class OptimizationResult:
    protocol: Protocol
    mean_work: float
    history: list[tuple[int, float]] = field(default_factory=list)
    converged: bool = True
    infeasible_penalty_hits: int = 0
    n_evals: int = 0

    def to_dict(self) -> dict:
        return {
            "mean_work": self.mean_work,
            "n_steps": self.protocol.n_steps,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "infeasible_penalty_hits": self.infeasible_penalty_hits,
            "history": [[int(k), float(v)] for k, v in self.history],
            "protocol": self.protocol.to_dict(),
        }


class WorkObjective:
    """Mean work of a uniform-schedule N-step protocol as a function of its free targets."""

    def __init__(self, canonical: CanonicalSolution, n: int):
        task = canonical.task
        self.task = task
        self.n = n
        self.lam = canonical.lam
        self.step_lam = canonical.lam ** (1.0 / n)
        self.tau = bloch_from_density(canonical.tau)
        self.rho_bar = task.p1 * np.asarray(task.r1) + task.p2 * np.asarray(task.r2)
        eta_bar = task.p1 * np.asarray(task.e1) + task.p2 * np.asarray(task.e2)
        # tr[H0 (eta_bar - rho_bar)] for H0 = e0 n.sigma
        axis = np.asarray(task.axis) / np.linalg.norm(task.axis)
        self.boundary = task.e0 * float(axis @ (eta_bar - self.rho_bar))
        l = self.step_lam
        i = np.arange(n)
        expo = i[:, None] - 1 - i[None, :]
        # rho_bar_i = l^i rho_bar + sum_{j<i} l^(i-1-j) (1-l) t_j
        self.transfer = np.where(expo >= 0, (1 - l) * l ** np.maximum(expo, 0), 0.0)
        self.decay = l**i
        # (1 - lam) tau = sum_j (1-l) l^(n-1-j) t_j over all n steps
        self.head = (1 - l) * l ** (n - 1 - i[:-1])
        self._head = self.head.tolist()
        self._tau = self.tau.tolist()
        self._rho_bar = self.rho_bar.tolist()

    def full_targets(self, free: np.ndarray) -> np.ndarray:
        """All ``n`` target Bloch vectors given the ``n - 1`` free ones."""
        free = np.asarray(free, dtype=float).reshape(-1, 3)
        last = ((1 - self.lam) * self.tau - self.head @ free) / (1 - self.step_lam)
        return np.vstack([free, last])

    def work(self, targets: np.ndarray) -> float:
        """Mean work for all ``n`` target Bloch vectors; ``-inf`` outside the open ball.

        Vectorized form, used for cross-checks; the search calls :meth:`value`.
        """
        norms = np.linalg.norm(targets, axis=1)
        if np.any(norms >= _EDGE):
            return -math.inf
        traj = self.decay[:, None] * self.rho_bar + self.transfer @ targets
        safe = np.where(norms > 0, norms, 1.0)
        proj = np.einsum("ij,ij->i", traj, targets) / safe
        terms = np.where(norms > 0, np.arctanh(norms) * (proj - norms), 0.0)
        return self.task.kT * (1 - self.step_lam) * float(terms.sum()) - self.boundary

    def value(self, x: Sequence[float]) -> tuple[float, float]:
        """Mean work at unconstrained coordinates ``x`` and the norm of the solved last target.

        Plain float arithmetic: with 3-vectors, numpy call overhead would
        dominate the search.  The work is ``nan`` when the last target leaves
        the Bloch ball.
        """
        xs = x.tolist() if isinstance(x, np.ndarray) else list(x)
        l = self.step_lam
        head = self._head
        free = []
        sx = sy = sz = 0.0
        for j in range(self.n - 1):
            vx, vy, vz = xs[3 * j], xs[3 * j + 1], xs[3 * j + 2]
            r = math.sqrt(vx * vx + vy * vy + vz * vz)
            f = math.tanh(min(r, _MAX_RADIUS)) / r if r > 0 else 0.0
            tx, ty, tz = vx * f, vy * f, vz * f
            free.append((tx, ty, tz))
            c = head[j]
            sx += c * tx
            sy += c * ty
            sz += c * tz
        a = 1.0 - self.lam
        b = 1.0 - l
        tau = self._tau
        last = ((a * tau[0] - sx) / b, (a * tau[1] - sy) / b, (a * tau[2] - sz) / b)
        last_norm = math.sqrt(last[0] ** 2 + last[1] ** 2 + last[2] ** 2)
        if last_norm >= _EDGE:
            return math.nan, last_norm
        free.append(last)
        px, py, pz = self._rho_bar
        total = 0.0
        for tx, ty, tz in free:
            nt = math.sqrt(tx * tx + ty * ty + tz * tz)
            if nt >= _EDGE:
                return -math.inf, last_norm
            if nt > 0:
                total += math.atanh(nt) * ((px * tx + py * ty + pz * tz) / nt - nt)
            px = l * px + b * tx
            py = l * py + b * ty
            pz = l * pz + b * tz
        return self.task.kT * b * total - self.boundary, last_norm

    @staticmethod
    def to_free(v: np.ndarray) -> np.ndarray:
        v = v.reshape(-1, 3)
        r = np.linalg.norm(v, axis=1)
        scale = np.where(r > 0, np.tanh(np.minimum(r, _MAX_RADIUS)) / np.where(r > 0, r, 1), 0.0)
        return v * scale[:, None]

    @staticmethod
    def from_free(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float).reshape(-1, 3)
        r = np.minimum(np.linalg.norm(t, axis=1), math.tanh(_MAX_RADIUS))
        scale = np.where(r > 0, np.arctanh(r) / np.where(r > 0, r, 1), 0.0)
        return (t * scale[:, None]).ravel()


class _TargetReached(Exception):
    pass


class _Search:
    def __init__(self, objective: WorkObjective, config: OptimizationConfig):
        self.obj = objective
        self.config = config
        self.evals = 0
        self.penalty_hits = 0
        self.best_value = -math.inf
        self.best_free: np.ndarray | None = None
        self.history: list[tuple[int, float]] = []
        self.floor = 0.0

    def value(self, x: np.ndarray) -> float:
        self.evals += 1
        w, last_norm = self.obj.value(x)
        if math.isnan(w):
            self.penalty_hits += 1
            # min eigenvalue of the solved target is (1 - |t_N|)/2
            return self.floor - self.config.penalty * 0.5 * (last_norm - 1.0)
        if w > self.best_value:
            self.best_value = w
            self.best_free = WorkObjective.to_free(x)
            self.history.append((self.evals, w))
            if self.config.stop_above is not None and w > self.config.stop_above:
                raise _TargetReached
        return w

    def run(self, x0: np.ndarray) -> None:
        """One local search; raises ``_TargetReached`` once ``stop_above`` is beaten."""
        cfg = self.config
        budget = max(cfg.max_evals - self.evals, 1)
        if cfg.method == "powell":
            # relative line-search tolerance; an order below the absolute ftol in kT
            options = {"maxfev": budget, "xtol": cfg.xtol, "ftol": 0.1 * cfg.ftol}
        else:
            options = {"maxfev": budget, "xatol": cfg.xtol, "fatol": 0.1 * cfg.ftol, "adaptive": True}
        minimize(
            lambda x: -self.value(x),
            x0,
            method="Powell" if cfg.method == "powell" else "Nelder-Mead",
            options=options,
        )


def _canonical_for(task: TaskSpec) -> CanonicalSolution:
    sol = canonical_solve(task)
    if not sol.feasible:
        raise InfeasibleTaskError(sol.status, sol.witness)
    return sol


def optimize_protocol(
    task: TaskSpec,
    config: OptimizationConfig = OptimizationConfig(),
    warm_start: Sequence[Sequence[float]] | None = None,
) -> OptimizationResult:
    """Best protocol found for ``task`` with ``config.n_steps`` thermalizations.

    ``warm_start`` optionally gives Bloch vectors for the ``n - 1`` free
    targets; the canonical split (every target equal to the canonical one)
    is always evaluated too and the search starts from the better of the two.
    """
    sol = _canonical_for(task)
    if sol.tau is None or sol.status is Feasibility.IDENTITY_TASK:
        proto = canonical_protocol(sol)
        return OptimizationResult(proto, protocol_ledger(proto).mean_work)
    n = config.n_steps
    if n == 1:
        proto = canonical_protocol(sol)
        w = protocol_ledger(proto).mean_work
        return OptimizationResult(proto, w, history=[(1, w)], n_evals=1)

    obj = WorkObjective(sol, n)
    search = _Search(obj, config)
    starts = [np.tile(obj.tau, n - 1)]
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float).reshape(-1, 3)
        if ws.shape[0] != n - 1:
            raise ValueError(f"warm start needs {n - 1} targets, got {ws.shape[0]}")
        starts.append(ws.ravel())
    rng = np.random.default_rng(config.seed)
    converged = False
    try:
        start_values = [search.value(WorkObjective.from_free(s)) for s in starts]
        finite = [v for v in start_values if np.isfinite(v)]
        search.floor = min(finite) - 1.0 if finite else -1e3
        x = WorkObjective.from_free(starts[int(np.argmax(start_values))])
        if config.init_policy == "perturbed":
            x = x + config.perturb_scale * rng.standard_normal(x.shape)
        for k in range(config.restarts):
            before = search.best_value
            if k > 0:
                noise = np.random.default_rng(config.seed ^ k).standard_normal(x.shape)
                x = x + config.perturb_scale * noise
            search.run(x)
            x = WorkObjective.from_free(search.best_free)
            if search.evals >= config.max_evals:
                break
            if config.restarts == 1 or (k > 0 and search.best_value - before < config.ftol):
                converged = True
                break
    except _TargetReached:
        converged = True

    if search.best_free is None:
        raise RuntimeError("no feasible candidate was evaluated")
    taus = [density_from_bloch(t) for t in search.best_free]
    proto = expand_to_n_steps(sol, n, taus)
    ledger = protocol_ledger(proto)
    return OptimizationResult(
        proto,
        ledger.mean_work,
        history=search.history,
        converged=converged,
        infeasible_penalty_hits=search.penalty_hits,
        n_evals=search.evals,
    )


def _resample(targets: np.ndarray, n: int) -> np.ndarray:
    """Stretch a list of target Bloch vectors to length ``n`` by repeating entries."""
    m = targets.shape[0]
    idx = np.minimum((np.arange(n) * m) // n, m - 1)
    return targets[idx]


def n_scan(
    task: TaskSpec, n_values: Sequence[int], config: OptimizationConfig = OptimizationConfig()
) -> list[OptimizationResult]:
    """Optimize for each step count, warm-starting each run from the previous one."""
    results = []
    previous: np.ndarray | None = None
    for n in n_values:
        warm = None
        if previous is not None and n > 1:
            warm = _resample(previous, n)[: n - 1]
        res = optimize_protocol(task, config.with_steps(n), warm_start=warm)
        if res.protocol.n_steps > 0:
            previous = np.array([bloch_from_density(t) for t in res.protocol.taus])
        results.append(res)
    return results


def split_step(protocol: Protocol, index: int) -> Protocol:
    """Replace step ``index`` by two steps with mixing ``sqrt(lam)`` and the same target."""
    from .channels import PartialThermalization

    steps = list(protocol.steps)
    s = steps[index]
    half = PartialThermalization(math.sqrt(s.lam), s.tau)
    steps[index : index + 1] = [half, half]
    return Protocol(tuple(steps), protocol.unitary, protocol.task)


def single_input_reference(
    rho: np.ndarray,
    eta: np.ndarray,
    h0: np.ndarray,
    kT: float = 1.0,
    n: int = 64,
    eps: float | None = None,
) -> tuple[float, float]:
    """Work of the discretized quasistatic protocol for a single known input.

    Quench ``H0 -> -kT ln rho``, step the Hamiltonian in ``n`` equal increments
    to ``-kT ln eta`` with a full thermalization after each increment, then
    quench back to ``H0``.  Returns ``(work, F(rho) - F(eta))``; the gap closes
    as ``O(1/n)``.  Pure endpoints need ``eps``, which mixes them with
    ``eps * I/2``.
    """
    rho = np.asarray(rho, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    h0 = np.asarray(h0, dtype=complex)
    if eps is not None:
        rho = (1 - eps) * rho + eps * np.eye(2) / 2
        eta = (1 - eps) * eta + eps * np.eye(2) / 2
    for m in (rho, eta):
        lowest = float(np.linalg.eigvalsh(m)[0])
        if lowest <= EPS_PSD:
            raise RankDeficientError(lowest)
    limit = free_energy(rho, h0, kT) - free_energy(eta, h0, kT)
    h_start = -kT * herm_log(rho)
    h_end = -kT * herm_log(eta)
    work = float(np.trace((h0 - h_start) @ rho).real)
    state, h_prev = rho, h_start
    for k in range(1, n + 1):
        s = k / n
        h = (1 - s) * h_start + s * h_end
        work += float(np.trace((h_prev - h) @ state).real)
        state = gibbs_state(0.5 * (h + h.conj().T), kT)
        h_prev = h
    work += float(np.trace((h_prev - h0) @ state).real)
    return work, limit
