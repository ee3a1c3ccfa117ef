"""Exact 2x2 algebra for qubit states, Hamiltonians and entropies.

States are plain ``(2, 2)`` complex numpy arrays and Bloch vectors are
length-3 float arrays, with ``rho = (I + r.sigma) / 2``.  Energies are in
units where ``k_B = 1``; ``kT`` is passed explicitly.
"""

from __future__ import annotations

import numpy as np

EPS_PSD = 1e-9
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class InvalidStateError(ValueError):
    """Raised when a matrix or Bloch vector is not a valid qubit state."""


class RankDeficientError(ValueError):
    """Raised when a full-rank state is required but an eigenvalue vanishes."""

    def __init__(self, eigenvalue: float):
        super().__init__(f"state is rank deficient (eigenvalue {eigenvalue:.3e})")
        self.eigenvalue = eigenvalue


def _check_kt(kT: float) -> None:
    if not kT > 0:
        raise ValueError(f"kT must be positive, got {kT}")


def density_from_bloch(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise InvalidStateError(f"Bloch vector must have shape (3,), got {r.shape}")
    norm = np.linalg.norm(r)
    if not norm <= 1 + EPS_PSD:
        raise InvalidStateError(f"Bloch vector has length {norm:.12g} > 1")
    x, y, z = r
    return np.array(
        [[0.5 * (1 + z), 0.5 * (x - 1j * y)], [0.5 * (x + 1j * y), 0.5 * (1 - z)]]
    )


def bloch_from_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    return np.array(
        [2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real]
    )


def bloch_from_traceless(a: np.ndarray) -> np.ndarray:
    """Coefficient vector ``c`` of a Hermitian matrix ``a = c0 I + c.sigma``."""
    return 0.5 * bloch_from_density(a)


def validate_state(rho: np.ndarray) -> np.ndarray:
    """Check that ``rho`` is a density matrix within tolerance and return it as an array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidStateError(f"density matrix must be 2x2, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        raise InvalidStateError(f"density matrix has trace {np.trace(rho).real:.15g}")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -EPS_PSD or w[-1] > 1 + EPS_PSD:
        raise InvalidStateError(f"eigenvalues {w} outside [0, 1]")
    return rho


def validate_hamiltonian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2) or np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
        raise ValueError("Hamiltonian must be a 2x2 Hermitian matrix")
    return h


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return u.shape == (2, 2) and np.allclose(u.conj().T @ u, IDENTITY, atol=atol, rtol=0)


def eigh_sorted(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with a fixed gauge.

    Eigenvalues come out in descending order and each eigenvector is scaled so
    that its first component with magnitude above 1e-12 is real and positive.
    This makes unitaries assembled from eigenvectors deterministic.
    """
    w, v = np.linalg.eigh(np.asarray(a, dtype=complex))
    w = w[::-1]
    v = v[:, ::-1].copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        j = np.flatnonzero(np.abs(col) > 1e-12)[0]
        v[:, k] = col * np.exp(-1j * np.angle(col[j]))
    return w, v


def clamped_eigvals(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues of a validated state, clipped to [0, 1]."""
    return np.clip(np.linalg.eigvalsh(rho), 0.0, 1.0)


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log(p[mask])
    return out


def vn_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats, with ``0 ln 0 = 0``."""
    return float(-_xlogx(clamped_eigvals(rho)).sum())


def bloch_entropy(r) -> float:
    """Entropy of the state with Bloch vector ``r``; eigenvalues are ``(1 +- |r|)/2``."""
    n = min(float(np.linalg.norm(r)), 1.0)
    return float(-_xlogx(np.array([(1 + n) / 2, (1 - n) / 2])).sum())


def herm_log(rho: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Matrix logarithm of a PSD matrix, eigenvalues floored at ``floor``."""
    w, v = np.linalg.eigh(rho)
    w = np.maximum(w, floor)
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    return (v * lw) @ v.conj().T


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``S(rho||sigma) = tr[rho ln rho - rho ln sigma]``; ``inf`` if supports mismatch."""
    w_s, v_s = np.linalg.eigh(sigma)
    w_s = np.clip(w_s, 0.0, 1.0)
    # populations of rho in sigma's eigenbasis
    pops = np.real(np.einsum("ik,ij,jk->k", v_s.conj(), rho, v_s))
    cross = 0.0
    for p, s in zip(pops, w_s):
        if p <= 1e-15:
            continue
        if s <= 0:
            return np.inf
        cross += p * np.log(s)
    value = -vn_entropy(rho) - cross
    return max(float(value), 0.0)


def trace_norm(a: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(np.asarray(a, dtype=complex))).sum())


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``||rho - sigma||_1`` (no factor 1/2); equals the Bloch-vector distance."""
    return trace_norm(np.asarray(rho) - np.asarray(sigma))


def gibbs_state(h: np.ndarray, kT: float = 1.0) -> np.ndarray:
    _check_kt(kT)
    w, v = np.linalg.eigh(validate_hamiltonian(h))
    boltz = np.exp(-(w - w.min()) / kT)
    boltz /= boltz.sum()
    return (v * boltz) @ v.conj().T


def state_hamiltonian(tau: np.ndarray, kT: float = 1.0) -> np.ndarray:
    """Hamiltonian ``-kT ln tau`` whose Gibbs state is ``tau`` (gauge ``Z = 1``)."""
    _check_kt(kT)
    w, v = np.linalg.eigh(tau)
    if w[0] <= EPS_PSD:
        raise RankDeficientError(float(w[0]))
    return (v * (-kT * np.log(w))) @ v.conj().T


def free_energy(rho: np.ndarray, h: np.ndarray, kT: float = 1.0) -> float:
    _check_kt(kT)
    return float(np.trace(h @ rho).real) - kT * vn_entropy(rho)


def rotation_from_unitary(u: np.ndarray) -> np.ndarray:
    """SO(3) matrix ``R`` with ``bloch(U rho U^dag) = R bloch(rho)``."""
    u = np.asarray(u)
    return np.array(
        [[0.5 * np.trace(si @ u @ sj @ u.conj().T).real for sj in PAULIS] for si in PAULIS]
    )


def unitary_from_axis_angle(axis, angle: float) -> np.ndarray:
    """``exp(-i angle n.sigma / 2)``: a Bloch rotation by ``angle`` about ``axis``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    ns = sum(c * p for c, p in zip(n, PAULIS))
    return np.cos(angle / 2) * IDENTITY - 1j * np.sin(angle / 2) * ns


def hamiltonian_from_axis(e0: float, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """``E0 n.sigma`` for a unit axis ``n``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    return e0 * sum(c * p for c, p in zip(n, PAULIS))
