"""Partial thermalizations, unitaries, and the composition calculus.

A partial thermalization ``(lam, tau)`` maps ``rho -> lam rho + (1 - lam) tau``.
Conjugating by a unitary gives another partial thermalization, and any run of
consecutive thermalizations collapses into a single effective one, so every
protocol reduces to ``U T_N ... T_1`` and further to ``U T_eff``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .qubit import IDENTITY, is_unitary, validate_state


@dataclass(frozen=True, eq=False)
class PartialThermalization:
    lam: float
    tau: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"mixing parameter must lie in [0, 1], got {self.lam}")
        object.__setattr__(self, "tau", validate_state(self.tau))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_thermalization(rho, self)


@dataclass(frozen=True, eq=False)
class StepSequence:
    """Thermalization steps applied in order, followed by one closing unitary."""

    steps: tuple[PartialThermalization, ...]
    unitary: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not is_unitary(self.unitary):
            raise ValueError("closing gate is not unitary")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        for step in self.steps:
            rho = apply_thermalization(rho, step)
        return apply_unitary(rho, self.unitary)


def apply_thermalization(rho: np.ndarray, step: PartialThermalization) -> np.ndarray:
    return step.lam * np.asarray(rho) + (1 - step.lam) * step.tau


def apply_unitary(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    return u @ np.asarray(rho) @ u.conj().T


def conjugate_step(step: PartialThermalization, u: np.ndarray) -> PartialThermalization:
    """The step equivalent to applying ``u``, then ``step``, then ``u^dag``."""
    u = np.asarray(u)
    tau = u.conj().T @ step.tau @ u
    return PartialThermalization(step.lam, 0.5 * (tau + tau.conj().T))


def compose_pair(
    first: PartialThermalization, second: PartialThermalization
) -> PartialThermalization:
    """Single step equal to ``second`` after ``first``.

    When both steps are the identity (``lam = 1``) the effective target is
    arbitrary and ``second.tau`` is returned.
    """
    lam = second.lam * first.lam
    if lam >= 1.0:
        return PartialThermalization(1.0, second.tau)
    tau = (second.lam * (1 - first.lam) * first.tau + (1 - second.lam) * second.tau) / (1 - lam)
    return PartialThermalization(lam, tau)


def compose_sequence(steps: Sequence[PartialThermalization]) -> PartialThermalization:
    if len(steps) == 0:
        raise ValueError("cannot compose an empty step sequence")
    out = reduce(compose_pair, steps)
    # the fold can round the product differently; pin it to the exact product
    lam = float(np.prod([s.lam for s in steps]))
    return PartialThermalization(lam, out.tau)


def normal_form(
    alternating: Iterable[tuple[np.ndarray, PartialThermalization]],
) -> StepSequence:
    """Rewrite ``T_N U_N ... T_1 U_1`` as ``U' T'_N ... T'_1``.

    ``alternating`` lists ``(U_i, T_i)`` in application order.  Each step is
    conjugated by the accumulated unitary ``U'_i = U_i ... U_1``, which leaves
    both the action on states and the heat of every step unchanged.
    """
    acc = IDENTITY.copy()
    steps = []
    for u, step in alternating:
        acc = np.asarray(u) @ acc
        steps.append(conjugate_step(step, acc))
    return StepSequence(tuple(steps), acc)


def generalized_angle(rho1: np.ndarray, rho2: np.ndarray, rho3: np.ndarray) -> float:
    """Hilbert-Schmidt cosine between ``rho1 - rho2`` and ``rho1 - rho3``.

    Unchanged when the same unitary or partial thermalization acts on all
    three states.
    """
    a = np.asarray(rho1) - np.asarray(rho2)
    b = np.asarray(rho1) - np.asarray(rho3)
    num = np.trace(a @ b).real
    den = np.sqrt(np.trace(a @ a).real * np.trace(b @ b).real)
    return float(num / den)
