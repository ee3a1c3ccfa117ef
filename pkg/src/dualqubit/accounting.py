"""Heat and work bookkeeping for thermalization protocols.

Heat is absorbed only during thermalization steps.  Work is whatever the
first law leaves over once the change in internal energy under the fixed
Hamiltonian ``H0`` is subtracted, so quenches never need to be enumerated.
A quench-by-quench work route is kept for cross-checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .channels import PartialThermalization, apply_thermalization, apply_unitary
from .qubit import (
    free_energy,
    herm_log,
    relative_entropy,
    trace_norm,
    vn_entropy,
)
from .synthesis import Protocol, TaskSpec, run_protocol

# eigenvalue floor used when taking ln(tau)
LOG_FLOOR = 1e-300
# thermal targets with an eigenvalue below this are flagged as divergent
DIVERGENCE_EIG = 1e-12


class DivergentHeatWarning(RuntimeWarning):
    """A thermal target is (nearly) pure, so the heat of its step diverges."""


def _is_divergent(tau: np.ndarray) -> bool:
    return float(np.linalg.eigvalsh(tau)[0]) < DIVERGENCE_EIG


def _step_log(step: PartialThermalization) -> np.ndarray:
    if _is_divergent(step.tau):
        warnings.warn(
            "thermal target is nearly pure; heat is clamped", DivergentHeatWarning, stacklevel=3
        )
    return herm_log(step.tau, floor=LOG_FLOOR)


def step_heat(rho: np.ndarray, step: PartialThermalization, kT: float = 1.0) -> float:
    """Heat absorbed during one partial thermalization, ``-kT (1-lam) tr[(tau-rho) ln tau]``."""
    if step.lam == 1.0:
        return 0.0
    diff = step.tau - np.asarray(rho)
    return float(-kT * (1 - step.lam) * np.trace(diff @ _step_log(step)).real)


def step_heat_explicit(
    rho: np.ndarray, step: PartialThermalization, kT: float = 1.0, offset: float = 0.0
) -> float:
    """The same heat as an energy difference under ``H = -kT ln tau + offset``."""
    h = -kT * _step_log(step) + offset * np.eye(2)
    after = apply_thermalization(rho, step)
    return float(np.trace(h @ after).real - np.trace(h @ np.asarray(rho)).real)


def quench_work(
    protocol: Protocol, rho: np.ndarray, offsets: Sequence[float] | None = None
) -> float:
    """Work done by the system summed over every quench of the protocol.

    The Hamiltonian starts at ``H0``, is quenched to ``-kT ln tau_i`` before
    step ``i``, and is returned to ``H0`` together with the closing unitary.
    """
    task = protocol.task
    kT = task.kT
    offsets = [0.0] * protocol.n_steps if offsets is None else offsets
    h_prev = task.H0
    state = np.asarray(rho, dtype=complex)
    work = 0.0
    for step, c in zip(protocol.steps, offsets):
        h = -kT * _step_log(step) + c * np.eye(2)
        work += np.trace((h_prev - h) @ state).real
        state = apply_thermalization(state, step)
        h_prev = h
    final = apply_unitary(state, protocol.unitary)
    work += np.trace(h_prev @ state).real - np.trace(task.H0 @ final).real
    return float(work)


@dataclass(frozen=True)
class EnergyLedger:
    """Energy bookkeeping of one protocol; energies in units of ``kT`` scale of the task."""

    per_step_heat: tuple[tuple[float, ...], tuple[float, ...]]
    heat_per_input: tuple[float, float]
    delta_internal_per_input: tuple[float, float]
    work_per_input: tuple[float, float]
    mean_work: float
    mean_heat: float
    delta_internal: float
    entropy_production: float
    mean_work_entropy_form: float
    divergent: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        """Flattened form; per-step heats are ``;``-joined strings."""
        return {
            "heat_steps_1": ";".join(repr(q) for q in self.per_step_heat[0]),
            "heat_steps_2": ";".join(repr(q) for q in self.per_step_heat[1]),
            "Q1": self.heat_per_input[0],
            "Q2": self.heat_per_input[1],
            "dU1": self.delta_internal_per_input[0],
            "dU2": self.delta_internal_per_input[1],
            "W1": self.work_per_input[0],
            "W2": self.work_per_input[1],
            "W_mean": self.mean_work,
            "Q_mean": self.mean_heat,
            "dU_mean": self.delta_internal,
            "Sigma": self.entropy_production,
            "W_mean_entropy_form": self.mean_work_entropy_form,
            "divergent": int(self.divergent),
        }


LEDGER_CSV_COLUMNS = (
    "heat_steps_1", "heat_steps_2", "Q1", "Q2", "dU1", "dU2", "W1", "W2",
    "W_mean", "Q_mean", "dU_mean", "Sigma", "W_mean_entropy_form", "divergent",
)


def _entropy_form_work(protocol: Protocol, rho_bar: np.ndarray, eta_bar: np.ndarray) -> float:
    task = protocol.task
    state = rho_bar
    total = 0.0
    for step in protocol.steps:
        if step.lam < 1.0:
            rel = relative_entropy(state, step.tau)
            total += (1 - step.lam) * (vn_entropy(step.tau) - vn_entropy(state) - rel)
        state = apply_thermalization(state, step)
    return task.kT * total - float(np.trace(task.H0 @ (eta_bar - rho_bar)).real)


def free_energy_change(task: TaskSpec) -> float:
    """``F(eta_bar) - F(rho_bar)`` under ``H0``."""
    return free_energy(task.eta_bar, task.H0, task.kT) - free_energy(task.rho_bar, task.H0, task.kT)


def protocol_ledger(protocol: Protocol, offsets: Sequence[float] | None = None) -> EnergyLedger:
    """Heat, work and entropy production of ``protocol`` on both inputs of its task.

    With ``offsets`` the heats are evaluated as energy differences under
    Hamiltonians shifted by ``offsets[i] * I``; no field should change.
    """
    task = protocol.task
    if task is None:
        raise ValueError("protocol has no task attached")
    kT = task.kT
    divergent = any(_is_divergent(s.tau) for s in protocol.steps if s.lam < 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergentHeatWarning)
        heats, d_u, finals = [], [], []
        for rho in (task.rho1, task.rho2):
            traj = run_protocol(protocol, rho)
            if offsets is None:
                q = [step_heat(traj[i], s, kT) for i, s in enumerate(protocol.steps)]
            else:
                q = [
                    step_heat_explicit(traj[i], s, kT, c)
                    for i, (s, c) in enumerate(zip(protocol.steps, offsets))
                ]
            heats.append(tuple(q))
            d_u.append(float(np.trace(task.H0 @ (traj[-1] - rho)).real))
            finals.append(traj[-1])
        eta_bar = task.p1 * finals[0] + task.p2 * finals[1]
        w_entropy = _entropy_form_work(protocol, task.rho_bar, eta_bar)
    if divergent:
        warnings.warn("ledger contains a divergent step", DivergentHeatWarning, stacklevel=2)
    q_in = (math.fsum(heats[0]), math.fsum(heats[1]))
    work = (q_in[0] - d_u[0], q_in[1] - d_u[1])
    mean_work = task.p1 * work[0] + task.p2 * work[1]
    sigma = (-free_energy_change(task) - mean_work) / kT
    return EnergyLedger(
        per_step_heat=(heats[0], heats[1]),
        heat_per_input=q_in,
        delta_internal_per_input=(d_u[0], d_u[1]),
        work_per_input=work,
        mean_work=mean_work,
        mean_heat=task.p1 * q_in[0] + task.p2 * q_in[1],
        delta_internal=task.p1 * d_u[0] + task.p2 * d_u[1],
        entropy_production=sigma,
        mean_work_entropy_form=w_entropy,
        divergent=divergent,
    )


def entropy_production(ledger: EnergyLedger, task: TaskSpec) -> float:
    """Dissipated free energy in units of ``kT``: ``(-dF_bar - W_bar) / kT``."""
    return (-free_energy_change(task) - ledger.mean_work) / task.kT


def contact_time(task: TaskSpec) -> float:
    """Total thermal contact in units of the thermalization time, ``-ln lam``."""
    n_rho = trace_norm(task.rho1 - task.rho2)
    n_eta = trace_norm(task.eta1 - task.eta2)
    if n_eta == 0.0:
        return math.inf
    if n_eta > n_rho * (1 + 1e-12):
        raise ValueError("outputs are further apart than inputs; no protocol exists")
    return max(math.log(n_rho / n_eta), 0.0)


def step_durations(lambdas: Sequence[float]) -> np.ndarray:
    """Per-step contact times ``t_i / t_th = -ln lam_i``."""
    with np.errstate(divide="ignore"):
        return -np.log(np.asarray(lambdas, dtype=float))
