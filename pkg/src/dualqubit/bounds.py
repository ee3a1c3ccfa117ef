"""Upper bounds on mean work extraction.

Three bounds, from loosest to tightest for a given protocol:

* the Clausius bound ``F(rho_bar) - F(eta_bar)``;
* the closed-form dual-purpose bound, which subtracts an unavoidable
  dissipation ``(kT/2) ||U^dag eta_bar U - rho_bar||_1^2 / ln(||rho1-rho2||_1/||eta1-eta2||_1)``;
* the per-protocol lag bound, which subtracts ``kT sum (1-lam_i) S(rho_bar_i||tau_i)``.

:func:`bound_chain_diagnostics` evaluates every intermediate quantity linking
the entropy production of a protocol to the closed-form dissipation term.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .accounting import free_energy_change, protocol_ledger
from .channels import apply_thermalization
from .qubit import relative_entropy, trace_distance, trace_norm
from .synthesis import Protocol, TaskSpec, canonical_solve


def clausius_bound(task: TaskSpec) -> float:
    return -free_energy_change(task)


def dissipation_term(task: TaskSpec) -> tuple[float, bool]:
    """Unavoidable dissipated work and whether it is identically zero.

    Zero for erasure tasks (equal outputs) and for tasks with no thermal
    contact (``lam = 1``).
    """
    n_rho = trace_norm(task.rho1 - task.rho2)
    n_eta = trace_norm(task.eta1 - task.eta2)
    if n_eta == 0.0:
        return 0.0, True
    sol = canonical_solve(task)
    if sol.tau is None or sol.lam >= 1.0:
        if sol.lam > 1.0:
            raise ValueError("task is infeasible (lam > 1); the bound is undefined")
        return 0.0, True
    u = sol.unitary
    moved = trace_distance(u.conj().T @ task.eta_bar @ u, task.rho_bar)
    return 0.5 * task.kT * moved**2 / math.log(n_rho / n_eta), False


def final_bound(task: TaskSpec) -> float:
    """Clausius bound minus the unavoidable dissipation."""
    value, _ = dissipation_term(task)
    return clausius_bound(task) - value


def _average_trajectory(protocol: Protocol) -> list[np.ndarray]:
    state = protocol.task.rho_bar
    traj = [state]
    for step in protocol.steps:
        state = apply_thermalization(state, step)
        traj.append(state)
    return traj


def lag_terms(protocol: Protocol) -> list[float]:
    """``S(rho_bar_i || tau_i)`` before each step; ``inf`` for singular targets."""
    traj = _average_trajectory(protocol)
    return [relative_entropy(traj[i], s.tau) for i, s in enumerate(protocol.steps)]


def lag_sum(protocol: Protocol) -> float:
    total = 0.0
    for s, rel in zip(protocol.steps, lag_terms(protocol)):
        if s.lam < 1.0:
            total += (1 - s.lam) * rel
    return total


def lag_bound(protocol: Protocol) -> float:
    """``-dF_bar - kT sum (1-lam_i) S(rho_bar_i||tau_i)``; ``-inf`` if a lag term diverges."""
    task = protocol.task
    return clausius_bound(task) - task.kT * lag_sum(protocol)


# order in which the chain members should decrease
CHAIN_ORDER = (
    "sigma",
    "lag_sum",
    "pinsker_rhs",
    "cauchy_schwarz_rhs",
    "power_mean_rhs",
    "quartic_rhs",
    "square_sum_rhs",
    "triangle_rhs",
)


@dataclass
class BoundReport:
    """Bounds for one protocol.  Works in units of energy, chain members in nats."""

    clausius: float
    final_bound: float
    lag_bound: float
    mean_work: float
    lag_terms: list[float]
    trace_lags: list[float]
    chain: dict[str, float]
    power_mean_terms: dict[str, float]
    reverse_cauchy_schwarz_rhs: float
    final_rhs: float
    pinsker_slack: list[float] = field(default_factory=list)

    def orderings(self) -> list[tuple[str, float, float]]:
        """``(label, larger, smaller)`` pairs asserted by the derivation."""
        c = self.chain
        pairs = [
            (f"{a} >= {b}", c[a], c[b]) for a, b in zip(CHAIN_ORDER, CHAIN_ORDER[1:])
        ]
        pm = self.power_mean_terms
        pairs += [
            ("mean(1-lam) >= power mean", pm["mean_one_minus_lam"], pm["power_mean_m2"]),
            ("1-geomean(lam) >= mean(1-lam)", pm["one_minus_geomean"], pm["mean_one_minus_lam"]),
            ("-ln(prod lam)/N >= 1-geomean(lam)", pm["neg_log_mean"], pm["one_minus_geomean"]),
        ]
        return pairs

    def to_dict(self) -> dict:
        return asdict(self)


def bound_chain_diagnostics(protocol: Protocol) -> BoundReport:
    """Evaluate every bound and every intermediate inequality for ``protocol``.

    With ``d_i = ||rho_bar_{i+1} - rho_bar_i||_1`` and ``L = -ln prod lam_i``
    the chain members are::

        sigma       entropy production of the protocol
        lag_sum     sum (1-lam_i) S(rho_bar_i||tau_i)
        pinsker     1/2 sum d_i^2 / (1-lam_i)
        cauchy      1/2 sqrt(sum (1-lam_i)^-2) sqrt(sum d_i^4)
        power_mean  1/2 N sqrt(N) / L * sqrt(sum d_i^4)
        quartic     1/2 N / L * sum d_i^2
        square_sum  1/2 (sum d_i)^2 / L
        triangle    1/2 ||rho_bar_{N+1} - rho_bar_1||^2 / L

    ``reverse_cauchy_schwarz_rhs = 1/2 (sum d_i)^2 / sum (1-lam_i)`` is the
    Cauchy-Schwarz step taken in the direction that always holds: it lies
    between ``pinsker`` and ``square_sum``.
    """
    task = protocol.task
    lams = protocol.lambdas
    if protocol.n_steps == 0 or np.any(lams >= 1.0):
        raise ValueError("chain diagnostics need at least one step and every lam < 1")
    n = protocol.n_steps
    traj = _average_trajectory(protocol)
    rels = lag_terms(protocol)
    lags = [trace_distance(traj[i], s.tau) for i, s in enumerate(protocol.steps)]
    d = np.array([trace_distance(traj[i + 1], traj[i]) for i in range(n)])
    one_minus = 1.0 - lams
    log_total = -float(np.sum(np.log(lams)))

    ledger = protocol_ledger(protocol)
    sum_d4 = math.sqrt(float(np.sum(d**4)))
    chain = {
        "sigma": ledger.entropy_production,
        "lag_sum": float(np.sum(one_minus * np.array(rels))),
        "pinsker_rhs": 0.5 * float(np.sum(d**2 / one_minus)),
        "cauchy_schwarz_rhs": 0.5 * math.sqrt(float(np.sum(one_minus**-2.0))) * sum_d4,
        "power_mean_rhs": 0.5 * n * math.sqrt(n) / log_total * sum_d4,
        "quartic_rhs": 0.5 * n / log_total * float(np.sum(d**2)),
        "square_sum_rhs": 0.5 * float(np.sum(d)) ** 2 / log_total,
        "triangle_rhs": 0.5 * trace_distance(traj[-1], traj[0]) ** 2 / log_total,
    }
    power_mean_terms = {
        "power_mean_m2": float(np.mean(one_minus**-2.0)) ** -0.5,
        "mean_one_minus_lam": float(np.mean(one_minus)),
        "one_minus_geomean": 1.0 - math.exp(-log_total / n),
        "neg_log_mean": log_total / n,
    }
    dissipation, _ = dissipation_term(task)
    return BoundReport(
        clausius=clausius_bound(task),
        final_bound=clausius_bound(task) - dissipation,
        lag_bound=lag_bound(protocol),
        mean_work=ledger.mean_work,
        lag_terms=rels,
        trace_lags=lags,
        chain=chain,
        power_mean_terms=power_mean_terms,
        reverse_cauchy_schwarz_rhs=0.5 * float(np.sum(d)) ** 2 / float(np.sum(one_minus)),
        final_rhs=dissipation / task.kT,
        pinsker_slack=[r - 0.5 * l**2 for r, l in zip(rels, lags)],
    )
