"""Protocol synthesis for dual-purpose qubit operations.

Given two inputs ``rho1, rho2`` and their required outputs ``eta1, eta2``, a
protocol ``U T`` (one partial thermalization, one unitary) exists iff the
mixing parameter ``||eta1 - eta2||_1 / ||rho1 - rho2||_1`` is at most one and
the resulting thermal target is positive.  The same mapping can be split into
any number of thermalization steps; the last target is always solved for so
the mapping stays exact.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .channels import (
    PartialThermalization,
    apply_thermalization,
    apply_unitary,
    compose_sequence,
)
from .qubit import (
    EPS_PSD,
    IDENTITY,
    InvalidStateError,
    bloch_from_density,
    bloch_from_traceless,
    density_from_bloch,
    eigh_sorted,
    hamiltonian_from_axis,
    is_unitary,
    rotation_from_unitary,
    trace_distance,
    trace_norm,
    unitary_from_axis_angle,
    validate_hamiltonian,
)

# distances below this count as zero when detecting degenerate tasks
DEGENERACY_TOL = 1e-12


class ImpossibleTaskError(ValueError):
    """Equal inputs with distinct outputs: no channel is one-to-many."""


class InfeasibleTaskError(ValueError):
    def __init__(self, status: "Feasibility", witness: float | None):
        super().__init__(f"task is infeasible: {status.value} (witness {witness})")
        self.status = status
        self.witness = witness


class FinalStepInfeasibleError(ValueError):
    """The solved last thermal target of an N-step expansion is not PSD."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"solved final thermal target has eigenvalue {min_eigenvalue:.3e}")
        self.min_eigenvalue = min_eigenvalue


class TaskFormatError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"task field {field_name!r}: {message}")
        self.field = field_name


class Feasibility(enum.Enum):
    FEASIBLE = "Feasible"
    LAMBDA_EXCEEDS_ONE = "LambdaExceedsOne"
    TAU_NOT_POSITIVE = "TauNotPositive"
    DEGENERATE_ERASURE = "DegenerateErasure"
    DEGENERATE_UNITARY = "DegenerateUnitary"
    IDENTITY_TASK = "IdentityTask"

    @property
    def implementable(self) -> bool:
        return self not in (Feasibility.LAMBDA_EXCEEDS_ONE, Feasibility.TAU_NOT_POSITIVE)


def _bloch_tuple(r) -> tuple[float, float, float]:
    return tuple(float(c) for c in r)


@dataclass(frozen=True)
class TaskSpec:
    """Two inputs, their outputs, input probabilities, ``H0 = E0 n.sigma`` and ``kT``.

    States are held as Bloch vectors so that JSON round trips are exact.
    """

    r1: tuple[float, float, float]
    r2: tuple[float, float, float]
    e1: tuple[float, float, float]
    e2: tuple[float, float, float]
    p1: float = 0.5
    e0: float = 1.0
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    kT: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2", "e1", "e2", "axis"):
            object.__setattr__(self, name, _bloch_tuple(getattr(self, name)))
        for name, label in (("r1", "rho1"), ("r2", "rho2"), ("e1", "eta1"), ("e2", "eta2")):
            try:
                density_from_bloch(getattr(self, name))
            except InvalidStateError as exc:
                raise TaskFormatError(label, str(exc)) from None
        if not 0.0 <= self.p1 <= 1.0:
            raise TaskFormatError("p1", f"probability {self.p1} outside [0, 1]")
        if not self.kT > 0:
            raise TaskFormatError("kT", f"temperature scale must be positive, got {self.kT}")
        if np.linalg.norm(self.axis) == 0:
            raise TaskFormatError("H0", "axis must be nonzero")

    @classmethod
    def from_states(cls, rho1, rho2, eta1, eta2, p1=0.5, h0=None, kT=1.0) -> "TaskSpec":
        """Build a task from density matrices; ``h0`` defaults to ``sigma_z``.

        The identity part of ``h0`` is dropped: it never changes a work value.
        """
        if h0 is None:
            e0, axis = 1.0, (0.0, 0.0, 1.0)
        else:
            c = bloch_from_traceless(validate_hamiltonian(h0))
            e0 = float(np.linalg.norm(c))
            axis = tuple(c / e0) if e0 > 0 else (0.0, 0.0, 1.0)
        return cls(
            *(bloch_from_density(m) for m in (rho1, rho2, eta1, eta2)),
            p1=p1, e0=e0, axis=axis, kT=kT,
        )

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    @property
    def rho1(self) -> np.ndarray:
        return density_from_bloch(self.r1)

    @property
    def rho2(self) -> np.ndarray:
        return density_from_bloch(self.r2)

    @property
    def eta1(self) -> np.ndarray:
        return density_from_bloch(self.e1)

    @property
    def eta2(self) -> np.ndarray:
        return density_from_bloch(self.e2)

    @property
    def rho_bar(self) -> np.ndarray:
        return self.p1 * self.rho1 + self.p2 * self.rho2

    @property
    def eta_bar(self) -> np.ndarray:
        return self.p1 * self.eta1 + self.p2 * self.eta2

    @property
    def H0(self) -> np.ndarray:
        return hamiltonian_from_axis(self.e0, self.axis)

    def with_p1(self, p1: float) -> "TaskSpec":
        return TaskSpec(self.r1, self.r2, self.e1, self.e2, p1, self.e0, self.axis, self.kT)

    def rotated(self, u: np.ndarray) -> "TaskSpec":
        """The same task with all four states (and ``H0``) conjugated by ``u``."""
        rot = rotation_from_unitary(u)
        return TaskSpec(
            *(rot @ np.asarray(v) for v in (self.r1, self.r2, self.e1, self.e2)),
            p1=self.p1, e0=self.e0, axis=rot @ np.asarray(self.axis), kT=self.kT,
        )

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "rho1": list(self.r1),
            "rho2": list(self.r2),
            "eta1": list(self.e1),
            "eta2": list(self.e2),
            "p1": self.p1,
            "H0": {"E0": self.e0, "axis": list(self.axis)},
            "kT": self.kT,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TaskSpec":
        if not isinstance(data, dict):
            raise TaskFormatError("<root>", "expected a JSON object")
        encoding = data.get("encoding", "bloch")
        if encoding not in ("bloch", "matrix"):
            raise TaskFormatError("encoding", f"unknown encoding {encoding!r}")
        states = [_parse_state(data, name, encoding) for name in ("rho1", "rho2", "eta1", "eta2")]
        p1 = _parse_float(data, "p1", 0.5)
        if "p2" in data and abs(_parse_float(data, "p2", 0.0) - (1 - p1)) > 1e-12:
            raise TaskFormatError("p2", "p1 + p2 must equal 1")
        kT = _parse_float(data, "kT", 1.0)
        e0, axis = 1.0, [0.0, 0.0, 1.0]
        if "H0" in data:
            h0 = data["H0"]
            if isinstance(h0, dict):
                e0 = _parse_float(h0, "E0", 1.0, label="H0.E0")
                axis = _parse_vector(h0, "axis", label="H0.axis") if "axis" in h0 else axis
            elif isinstance(h0, (list, tuple)) and len(h0) == 2:
                try:
                    e0 = float(h0[0])
                    axis = [float(c) for c in h0[1]]
                except (TypeError, ValueError):
                    raise TaskFormatError("H0", "expected [E0, [nx, ny, nz]]") from None
            else:
                raise TaskFormatError("H0", "expected {'E0': .., 'axis': [..]} or [E0, axis]")
            if len(axis) != 3:
                raise TaskFormatError("H0.axis", "expected three components")
        return cls(*states, p1=p1, e0=e0, axis=tuple(axis), kT=kT)

    @classmethod
    def from_json(cls, text: str) -> "TaskSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TaskFormatError("<root>", f"invalid JSON ({exc})") from None
        return cls.from_dict(data)


def _parse_float(data, key, default, label=None):
    if key not in data:
        return default
    try:
        return float(data[key])
    except (TypeError, ValueError):
        raise TaskFormatError(label or key, f"expected a number, got {data[key]!r}") from None


def _parse_vector(data, key, label=None):
    try:
        vec = [float(c) for c in data[key]]
    except (TypeError, ValueError):
        raise TaskFormatError(label or key, "expected a list of three numbers") from None
    if len(vec) != 3:
        raise TaskFormatError(label or key, f"expected three components, got {len(vec)}")
    return vec


def _parse_state(data, key, encoding):
    if key not in data:
        raise TaskFormatError(key, "missing")
    if encoding == "bloch":
        return _parse_vector(data, key)
    try:
        arr = np.asarray(data[key], dtype=float)
        if arr.shape == (2, 2, 2):
            arr = arr[..., 0] + 1j * arr[..., 1]
        elif arr.shape != (2, 2):
            raise ValueError
    except (TypeError, ValueError):
        raise TaskFormatError(key, "expected a 2x2 matrix of numbers or [re, im] pairs") from None
    if np.max(np.abs(arr - arr.conj().T)) > 1e-12 or abs(np.trace(arr) - 1) > 1e-12:
        raise TaskFormatError(key, "matrix is not a Hermitian unit-trace state")
    return bloch_from_density(arr)


@dataclass(frozen=True, eq=False)
class CanonicalSolution:
    """The unique single-step protocol ``(lam, U, tau)`` for a task, if any.

    ``tau`` is Hermitian with unit trace but may fail to be positive; it is
    ``None`` when no thermalization is involved (``lam = 1``).
    """

    task: TaskSpec
    lam: float
    unitary: np.ndarray
    tau: np.ndarray | None
    status: Feasibility
    witness: float | None = None
    boundary: bool = False
    residual: float = 0.0
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status.implementable


def _rotation_about(axis: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Angle of the rotation about ``axis`` carrying the perpendicular part of a to b."""
    a_perp = a - (a @ axis) * axis
    b_perp = b - (b @ axis) * axis
    return float(np.arctan2(axis @ np.cross(a_perp, b_perp), a_perp @ b_perp))


def canonical_solve(task: TaskSpec, phase: float = 0.0) -> CanonicalSolution:
    """Solve for the mixing parameter, unitary and thermal target of a task.

    The unitary maps the eigenbasis of ``rho1 - rho2`` onto that of
    ``eta1 - eta2``.  Its relative phase is free; ``phase`` sets it on top of
    the fixed eigenvector gauge of :func:`eigh_sorted`.
    """
    rho1, rho2, eta1, eta2 = task.rho1, task.rho2, task.eta1, task.eta2
    n_rho = trace_norm(rho1 - rho2)
    n_eta = trace_norm(eta1 - eta2)

    if trace_distance(rho1, eta1) <= DEGENERACY_TOL and trace_distance(rho2, eta2) <= DEGENERACY_TOL:
        return CanonicalSolution(task, 1.0, IDENTITY.copy(), None, Feasibility.IDENTITY_TASK)
    if n_eta <= DEGENERACY_TOL:
        # both outputs equal: thermalize fully to the common output
        return CanonicalSolution(
            task, 0.0, IDENTITY.copy(), eta1.copy(), Feasibility.DEGENERATE_ERASURE
        )
    if n_rho <= DEGENERACY_TOL:
        raise ImpossibleTaskError("equal inputs cannot be mapped to distinct outputs")

    lam = n_eta / n_rho
    w_p, psi = eigh_sorted(rho1 - rho2)
    w_q, phi = eigh_sorted(eta1 - eta2)
    u = phi @ np.diag([1.0, np.exp(1j * phase)]) @ psi.conj().T
    diagnostics = {"p": float(w_p[0]), "psi": psi, "q": float(w_q[0]), "phi": phi}

    if abs(lam - 1.0) <= DEGENERACY_TOL:
        # no thermal contact: the unitary alone must do the job, so fix its
        # free phase to carry rho1 onto eta1
        axis = np.subtract(task.e1, task.e2)
        axis = axis / np.linalg.norm(axis)
        rot = rotation_from_unitary(u)
        angle = _rotation_about(axis, rot @ np.asarray(task.r1), np.asarray(task.e1))
        u = unitary_from_axis_angle(axis, angle) @ u
        residual = max(
            trace_distance(apply_unitary(rho1, u), eta1),
            trace_distance(apply_unitary(rho2, u), eta2),
        )
        if residual <= 1e-9:
            return CanonicalSolution(
                task, 1.0, u, None, Feasibility.DEGENERATE_UNITARY,
                residual=residual, diagnostics=diagnostics,
            )
        return CanonicalSolution(
            task, 1.0, u, None, Feasibility.TAU_NOT_POSITIVE, witness=-math.inf,
            residual=residual, diagnostics=diagnostics,
        )

    tau = (u.conj().T @ eta1 @ u - lam * rho1) / (1 - lam)
    tau = 0.5 * (tau + tau.conj().T)
    if lam > 1.0:
        return CanonicalSolution(
            task, lam, u, tau, Feasibility.LAMBDA_EXCEEDS_ONE, witness=lam,
            diagnostics=diagnostics,
        )
    min_eig = float(np.linalg.eigvalsh(tau)[0])
    if min_eig < -EPS_PSD:
        return CanonicalSolution(
            task, lam, u, tau, Feasibility.TAU_NOT_POSITIVE, witness=min_eig,
            diagnostics=diagnostics,
        )
    residual = max(
        trace_distance(apply_unitary(lam * rho + (1 - lam) * tau, u), eta)
        for rho, eta in ((rho1, eta1), (rho2, eta2))
    )
    return CanonicalSolution(
        task, lam, u, tau, Feasibility.FEASIBLE, witness=min_eig,
        boundary=min_eig < 0, residual=residual, diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class Classification:
    status: Feasibility
    witness: float | None


def feasibility_classify(task: TaskSpec) -> Classification:
    """Status plus the offending value (``lam`` or the least eigenvalue of ``tau``)."""
    sol = canonical_solve(task)
    return Classification(sol.status, sol.witness)


@dataclass(frozen=True, eq=False)
class Protocol:
    """Thermalization steps then a closing unitary, for a given task."""

    steps: tuple[PartialThermalization, ...]
    unitary: np.ndarray
    task: TaskSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not is_unitary(self.unitary, atol=1e-10):
            raise ValueError("closing gate is not unitary")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.steps])

    @property
    def taus(self) -> list[np.ndarray]:
        return [s.tau for s in self.steps]

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambdas": [float(s.lam) for s in self.steps],
            "taus": [list(bloch_from_density(s.tau)) for s in self.steps],
            "unitary": [[[float(z.real), float(z.imag)] for z in row] for row in self.unitary],
            "task": self.task.to_dict() if self.task is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Protocol":
        u = np.asarray(data["unitary"], dtype=float)
        steps = tuple(
            PartialThermalization(lam, density_from_bloch(t))
            for lam, t in zip(data["lambdas"], data["taus"])
        )
        task = TaskSpec.from_dict(data["task"]) if data.get("task") else None
        return cls(steps, u[..., 0] + 1j * u[..., 1], task)


def canonical_protocol(task_or_solution) -> Protocol:
    """Single-step protocol (or no-step protocol when ``lam = 1``)."""
    sol = (
        task_or_solution
        if isinstance(task_or_solution, CanonicalSolution)
        else canonical_solve(task_or_solution)
    )
    if not sol.feasible:
        raise InfeasibleTaskError(sol.status, sol.witness)
    if sol.tau is None:
        return Protocol((), sol.unitary, sol.task)
    return Protocol((PartialThermalization(sol.lam, sol.tau),), sol.unitary, sol.task)


def solve_final_target(
    lam: float, tau: np.ndarray, lambdas: Sequence[float], taus: Sequence[np.ndarray]
) -> np.ndarray:
    """Last thermal target making the whole sequence compose to ``(lam, tau)``.

    ``lambdas`` has one more entry than ``taus``.  The result is Hermitian with
    unit trace but is not checked for positivity.
    """
    lam_n = lambdas[-1]
    if len(taus) == 0:
        head_lam, head_tau = 1.0, np.zeros((2, 2), dtype=complex)
    else:
        head = compose_sequence(
            [PartialThermalization(l, t) for l, t in zip(lambdas[:-1], taus)]
        )
        head_lam, head_tau = float(np.prod(lambdas[:-1])), head.tau
    total = head_lam * lam_n
    out = ((1 - total) * tau - lam_n * (1 - head_lam) * head_tau) / (1 - lam_n)
    return 0.5 * (out + out.conj().T)


def expand_to_n_steps(
    canonical: CanonicalSolution,
    n: int,
    taus: Sequence[np.ndarray] | None = None,
    lambdas: Sequence[float] | None = None,
) -> Protocol:
    """Split the canonical thermalization into ``n`` steps.

    Steps 1..n-1 use ``taus`` (default: the canonical target) and the last
    target is solved from the composition rule.  The schedule is uniform,
    ``lam ** (1/n)``, unless ``lambdas`` is given; their product must equal
    the canonical ``lam``.
    """
    if not canonical.feasible:
        raise InfeasibleTaskError(canonical.status, canonical.witness)
    if canonical.tau is None or canonical.lam >= 1.0:
        raise ValueError("the task needs no thermalization; use canonical_protocol")
    if n < 1:
        raise ValueError("n must be at least 1")
    lam, tau = canonical.lam, canonical.tau
    if lambdas is None:
        lambdas = [lam ** (1.0 / n)] * n
    else:
        lambdas = [float(l) for l in lambdas]
        if len(lambdas) != n:
            raise ValueError(f"expected {n} mixing parameters, got {len(lambdas)}")
        if abs(np.prod(lambdas) - lam) > 1e-12 or max(lambdas) >= 1.0:
            raise ValueError("mixing parameters must lie below 1 and multiply to lam")
    if taus is None:
        taus = [tau] * (n - 1)
    if len(taus) != n - 1:
        raise ValueError(f"expected {n - 1} free thermal targets, got {len(taus)}")
    last = solve_final_target(lam, tau, lambdas, taus)
    min_eig = float(np.linalg.eigvalsh(last)[0])
    if min_eig < -EPS_PSD:
        raise FinalStepInfeasibleError(min_eig)
    steps = [PartialThermalization(l, t) for l, t in zip(lambdas[:-1], taus)]
    steps.append(PartialThermalization(lambdas[-1], last))
    return Protocol(tuple(steps), canonical.unitary, canonical.task)


def run_protocol(protocol: Protocol, rho: np.ndarray) -> list[np.ndarray]:
    """States before each step, after the last step, and after the unitary."""
    traj = [np.asarray(rho, dtype=complex)]
    for step in protocol.steps:
        traj.append(apply_thermalization(traj[-1], step))
    traj.append(apply_unitary(traj[-1], protocol.unitary))
    return traj
