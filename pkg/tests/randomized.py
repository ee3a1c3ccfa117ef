"""Random states, gates, steps and tasks shared by the test modules."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from dualqubit.channels import PartialThermalization
from dualqubit.qubit import density_from_bloch, unitary_from_axis_angle
from dualqubit.synthesis import Protocol, TaskSpec, canonical_solve


def random_bloch(rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    v = rng.standard_normal(3)
    return radius * v / np.linalg.norm(v) * rng.random() ** (1 / 3)


def random_state(rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    return density_from_bloch(random_bloch(rng, radius))


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    axis = rng.standard_normal(3)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    return phase * unitary_from_axis_angle(axis, rng.uniform(0, 2 * np.pi))


def random_step(rng: np.random.Generator, radius: float = 0.99) -> PartialThermalization:
    return PartialThermalization(float(rng.random()), random_state(rng, radius))


def random_task_candidate(rng: np.random.Generator) -> TaskSpec:
    """Outputs produced by a random single-step protocol, with a random ``H0`` and ``p1``."""
    r1, r2 = random_bloch(rng), random_bloch(rng)
    step = random_step(rng)
    u = random_unitary(rng)
    eta = [u @ step(density_from_bloch(r)) @ u.conj().T for r in (r1, r2)]
    from dualqubit.qubit import bloch_from_density

    return TaskSpec(
        r1, r2, bloch_from_density(eta[0]), bloch_from_density(eta[1]),
        p1=float(rng.uniform(0.05, 0.95)),
        e0=float(rng.uniform(0.1, 2.0)),
        axis=tuple(rng.standard_normal(3)),
    )


def random_feasible_task(rng: np.random.Generator) -> TaskSpec:
    """A random task that the canonical solver accepts with ``lam < 1``."""
    while True:
        task = random_task_candidate(rng)
        sol = canonical_solve(task)
        if sol.feasible and sol.tau is not None and sol.lam < 1.0:
            return task


def random_protocol(rng: np.random.Generator, task: TaskSpec | None = None, n: int | None = None) -> Protocol:
    """Random steps with ``lam < 1`` and a random closing gate (not tied to a task's outputs)."""
    n = int(rng.integers(1, 8)) if n is None else n
    steps = tuple(PartialThermalization(float(rng.uniform(0.01, 0.99)), random_state(rng, 0.95)) for _ in range(n))
    if task is None:
        task = TaskSpec(random_bloch(rng), random_bloch(rng), (0, 0, 0), (0, 0, 0), p1=float(rng.uniform(0.05, 0.95)))
    return Protocol(steps, random_unitary(rng), task)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def bloch_vectors(draw, max_radius: float = 1.0):
    v = draw(
        st.tuples(*[st.floats(-1, 1, allow_nan=False) for _ in range(3)]).filter(
            lambda t: 1e-3 < np.linalg.norm(t)
        )
    )
    v = np.asarray(v)
    r = draw(st.floats(0, max_radius))
    return r * v / np.linalg.norm(v)
