from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from numpy.testing import assert_allclose

from dualqubit.qubit import (
    IDENTITY,
    PAULIS,
    SIGMA_X,
    SIGMA_Z,
    InvalidStateError,
    RankDeficientError,
    bloch_entropy,
    bloch_from_density,
    density_from_bloch,
    eigh_sorted,
    free_energy,
    gibbs_state,
    relative_entropy,
    rotation_from_unitary,
    state_hamiltonian,
    trace_distance,
    unitary_from_axis_angle,
    validate_state,
    vn_entropy,
)
from randomized import bloch_vectors, random_state, seeds

DEPHASED_PAIR_R1 = (0.735, 0.273, -0.286)
DEPHASED_PAIR_R2 = (-0.496, -0.470, -0.294)


def test_density_from_bloch_basics():
    assert_allclose(density_from_bloch((0, 0, 0)), IDENTITY / 2)
    assert_allclose(density_from_bloch((0, 0, 1)), np.diag([1, 0]))
    x, y, z = DEPHASED_PAIR_R1
    expected = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
    assert_allclose(density_from_bloch(DEPHASED_PAIR_R1), expected, atol=1e-15)


def test_density_from_bloch_rejects_outside_ball():
    with pytest.raises(InvalidStateError):
        density_from_bloch((0.8, 0.8, 0.0))
    # the PSD tolerance admits tiny overshoot
    density_from_bloch((0, 0, 1 + 1e-10))


def test_bloch_from_density_basics():
    assert_allclose(bloch_from_density(IDENTITY / 2), (0, 0, 0), atol=1e-15)
    assert_allclose(bloch_from_density(np.diag([0, 1])), (0, 0, -1))


@given(seeds)
def test_bloch_components_are_pauli_traces(seed):
    rho = random_state(np.random.default_rng(seed))
    direct = [np.trace(rho @ p).real for p in PAULIS]
    assert_allclose(bloch_from_density(rho), direct, atol=1e-14)


@given(bloch_vectors())
def test_bloch_round_trip(r):
    assert_allclose(bloch_from_density(density_from_bloch(r)), r, atol=1e-14)


def test_validate_state_rejects_non_hermitian_and_bad_trace():
    with pytest.raises(InvalidStateError):
        validate_state(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(InvalidStateError):
        validate_state(np.diag([0.6, 0.6]))


def test_trace_distance_values():
    rho = density_from_bloch(DEPHASED_PAIR_R1)
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-15)
    assert trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(2)
    d = trace_distance(rho, density_from_bloch(DEPHASED_PAIR_R2))
    assert d == pytest.approx(np.linalg.norm(np.subtract(DEPHASED_PAIR_R1, DEPHASED_PAIR_R2)), abs=1e-13)
    assert d == pytest.approx(1.43787, abs=5e-6)


def test_entropy_values():
    assert vn_entropy(IDENTITY / 2) == pytest.approx(math.log(2))
    assert vn_entropy(density_from_bloch((0.6, 0, 0.8))) == pytest.approx(0, abs=1e-12)
    rho = density_from_bloch((0, 0.3, 0.4))
    assert vn_entropy(rho) == pytest.approx(0.562335, abs=5e-7)
    assert bloch_entropy((0, 0.3, 0.4)) == pytest.approx(vn_entropy(rho), abs=1e-14)


def test_relative_entropy_values():
    rho = density_from_bloch((0.1, -0.2, 0.3))
    assert relative_entropy(rho, rho) == pytest.approx(0, abs=1e-14)
    assert relative_entropy(density_from_bloch((0, 0, 1)), IDENTITY / 2) == pytest.approx(math.log(2))
    assert relative_entropy(IDENTITY / 2, np.diag([1.0, 0.0])) == math.inf


@given(seeds)
def test_relative_entropy_matches_spectral_evaluation(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(rng, 0.99), random_state(rng, 0.99)
    w_r, v_r = np.linalg.eigh(rho)
    w_s, v_s = np.linalg.eigh(sigma)
    log_rho = v_r @ np.diag(np.log(w_r)) @ v_r.conj().T
    log_sigma = v_s @ np.diag(np.log(w_s)) @ v_s.conj().T
    direct = np.trace(rho @ (log_rho - log_sigma)).real
    assert relative_entropy(rho, sigma) == pytest.approx(direct, abs=1e-11)
    assert relative_entropy(rho, sigma) >= 0


def test_gibbs_state_values():
    assert_allclose(gibbs_state(np.zeros((2, 2))), IDENTITY / 2)
    assert_allclose(bloch_from_density(gibbs_state(SIGMA_Z)), (0, 0, -math.tanh(1)), atol=1e-15)
    assert bloch_from_density(gibbs_state(SIGMA_Z))[2] == pytest.approx(-0.76159, abs=5e-6)
    assert_allclose(gibbs_state(1e4 * SIGMA_Z), np.diag([0, 1]), atol=1e-12)
    assert_allclose(gibbs_state(SIGMA_Z, kT=2.0), gibbs_state(0.5 * SIGMA_Z))


def test_state_hamiltonian_values():
    assert_allclose(state_hamiltonian(IDENTITY / 2), math.log(2) * IDENTITY, atol=1e-15)
    h = state_hamiltonian(gibbs_state(0.7 * SIGMA_Z, kT=1.3), kT=1.3)
    traceless = h - np.trace(h) / 2 * IDENTITY
    assert_allclose(traceless, 0.7 * SIGMA_Z, atol=1e-12)
    near_pure = np.diag([1 - 1e-6, 1e-6])
    w = np.linalg.eigvalsh(state_hamiltonian(near_pure))
    assert w[1] - w[0] == pytest.approx(math.log((1 - 1e-6) / 1e-6), rel=1e-9)
    with pytest.raises(RankDeficientError):
        state_hamiltonian(np.diag([1.0, 0.0]))


def test_free_energy_values():
    assert free_energy(IDENTITY / 2, np.zeros((2, 2))) == pytest.approx(-math.log(2))
    assert free_energy(np.diag([0, 1]), 0.4 * SIGMA_Z) == pytest.approx(-0.4)


@given(seeds)
def test_free_energy_excess_is_relative_entropy(seed):
    rng = np.random.default_rng(seed)
    h = 0.8 * SIGMA_X + 0.3 * SIGMA_Z
    kT = float(rng.uniform(0.3, 3.0))
    rho = random_state(rng)
    g = gibbs_state(h, kT)
    lhs = free_energy(rho, h, kT) - free_energy(g, h, kT)
    assert lhs == pytest.approx(kT * relative_entropy(rho, g), abs=1e-11)


@given(seeds)
@settings(max_examples=50)
def test_rotation_matches_conjugation(seed):
    rng = np.random.default_rng(seed)
    u = unitary_from_axis_angle(rng.standard_normal(3), rng.uniform(0, 6.3))
    rho = random_state(rng)
    lhs = bloch_from_density(u @ rho @ u.conj().T)
    assert_allclose(lhs, rotation_from_unitary(u) @ bloch_from_density(rho), atol=1e-13)
    assert_allclose(np.linalg.det(rotation_from_unitary(u)), 1.0, atol=1e-12)


def test_eigh_sorted_gauge():
    a = density_from_bloch((0.3, -0.4, 0.1)) - IDENTITY / 2
    w, v = eigh_sorted(a)
    assert w[0] >= w[1]
    for k in range(2):
        col = v[:, k]
        first = col[np.argmax(np.abs(col) > 1e-12)]
        assert abs(first.imag) < 1e-14 and first.real > 0
    assert_allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-14)
