import json

import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import dims, seeds
from skewcoh import channels as ch
from skewcoh import measures as ms
from skewcoh.errors import DimensionMismatch, IncompleteKraus, NonIncoherentEnvironment, TooFewFlagStates
from skewcoh.qmat import HADAMARD, PAULI_Z, DensityMatrix, observable_from_spectrum, tensor, unitary_exp
from skewcoh.randlab import hs_random_density, random_observable, random_unitary

PLUS = DensityMatrix.from_vector([1, 1])


def test_identity_and_completeness():
    rho = hs_random_density(3, 3, 0)
    assert np.allclose(ch.apply(ch.unitary_channel(np.eye(3)), rho).matrix, rho.matrix)
    with pytest.raises(IncompleteKraus):
        ch.KrausChannel((np.eye(2) * 0.9,))
    with pytest.raises(DimensionMismatch):
        ch.apply(ch.unitary_channel(np.eye(2)), rho)


def test_dephasing_and_selective_measurement():
    assert np.allclose(ch.apply(ch.dephasing(PAULI_Z), PLUS).matrix, np.eye(2) / 2)
    branches = ch.apply_selective(ch.dephasing(PAULI_Z), PLUS)
    assert [p for p, _, _ in branches] == pytest.approx([0.5, 0.5])
    outs = sorted(np.real(np.diag(r.matrix)).tolist() for _, r, _ in branches)
    assert outs == [[0.0, 1.0], [1.0, 0.0]]


def test_selective_drops_impossible_branches():
    # outcomes follow ascending eigenvalues: outcome 1 of sigma_z is |0>
    branches = ch.apply_selective(ch.dephasing(PAULI_Z), np.diag([1.0, 0.0]))
    assert len(branches) == 1 and branches[0][2] == 1


def test_is_incoherent_examples():
    perm_phase = np.array([[0, 1j], [-1, 0]])
    assert ch.is_incoherent(ch.unitary_channel(perm_phase))
    assert not ch.is_incoherent(ch.unitary_channel(HADAMARD))


@given(seeds, dims)
def test_generated_incoherent_channels_are_incoherent(seed, d):
    rng = np.random.default_rng(seed)
    w = random_unitary(d, rng)
    for injective in (True, False):
        channel = ch.random_incoherent(d, 3, rng, basis=w, injective=injective)
        assert ch.is_incoherent(channel, basis=w)
        diag_in = w @ np.diag(rng.dirichlet(np.ones(d))) @ w.conj().T
        out = w.conj().T @ ch.apply(channel, diag_in).matrix @ w
        assert np.allclose(out, np.diag(np.diag(out)), atol=1e-10)


def test_single_kraus_incoherent_is_permutation_phase_unitary():
    k = ch.random_incoherent(4, 1, 5).kraus[0]
    assert np.allclose(k.conj().T @ k, np.eye(4))
    assert np.allclose(np.abs(k), np.abs(k) ** 2)


def test_qubit_incoherent_channels_are_monotone(rng):
    k = observable_from_spectrum([0.3, -1.1])
    for _ in range(200):
        channel = ch.random_incoherent(2, int(rng.integers(1, 4)), rng, injective=bool(rng.integers(0, 2)))
        rho = oracles.random_state(2, rng)
        assert ms.skew_information(ch.apply(channel, rho), k) <= ms.skew_information(rho, k) + 1e-9


def test_incoherent_permutation_can_raise_skew_information_for_qutrits():
    # a permutation of K-eigenvectors is incoherent, but moves coherence onto a
    # pair of levels with a larger spectral gap, so the skew information grows
    k = np.diag([0.0, 1.0, 10.0])
    psi = np.array([1, 1, 0]) / np.sqrt(2)
    rho = np.outer(psi, psi)
    perm = np.zeros((3, 3))
    perm[0, 0] = perm[2, 1] = perm[1, 2] = 1
    channel = ch.unitary_channel(perm)
    assert ch.is_incoherent(channel)
    before = ms.skew_information(rho, k)
    after = ms.skew_information(ch.apply(channel, rho), k)
    assert before == pytest.approx(0.25)
    assert after == pytest.approx(25.0)


def test_invariant_unitary_commutes():
    k_tot = tensor(np.diag([0.0, 1.0, 2.0]), np.eye(2)) + tensor(np.eye(3), np.diag([0.0, 1.0]))
    v = ch.invariant_unitary(k_tot, 3)
    assert np.max(np.abs(v @ k_tot - k_tot @ v)) <= 1e-9
    assert np.allclose(v.conj().T @ v, np.eye(6))


def test_trivial_dilation_is_identity():
    channel = ch.dilation_channel(np.eye(6), np.diag([0.3, 0.7]), 3)
    rho = hs_random_density(3, 3, 1)
    assert np.allclose(ch.apply(channel, rho).matrix, rho.matrix)


@given(seeds)
def test_k_invariant_channels_are_monotone_and_covariant(seed):
    rng = np.random.default_rng(seed)
    k_a = observable_from_spectrum(rng.integers(0, 3, size=3).astype(float) + [0, 0, 0.5], random_unitary(3, rng))
    k_b = np.diag([0.0, 1.0])
    channel, v = ch.k_invariant_channel(k_a, k_b, np.diag([0.6, 0.4]), rng)
    rho = hs_random_density(3, 3, rng)
    assert ms.skew_information(ch.apply(channel, rho), k_a) <= ms.skew_information(rho, k_a) + 1e-9
    us = [unitary_exp(k_a, t) for t in (0.3, 1.7)]
    assert ch.covariance_deviation(channel, us, rho) <= 1e-9


def test_k_invariant_rejects_coherent_environment():
    with pytest.raises(NonIncoherentEnvironment):
        ch.k_invariant_channel(np.diag([0.0, 1.0]), PAULI_Z, PLUS, 0)


def test_classical_encoding_examples():
    rho = hs_random_density(2, 2, 4)
    enc = ch.classical_encoding(ch.unitary_channel(np.eye(2)), rho, 1)
    assert np.allclose(enc.matrix, rho.matrix)
    enc = ch.classical_encoding(ch.dephasing(np.diag([0.0, 1.0])), PLUS, 2)
    expected = 0.5 * (tensor(np.diag([1, 0]), np.diag([1, 0])) + tensor(np.diag([0, 1]), np.diag([0, 1])))
    assert np.allclose(enc.matrix, expected)
    assert ms.local_coherence(enc, [2, 2], 0, PAULI_Z) == pytest.approx(0, abs=1e-12)
    with pytest.raises(TooFewFlagStates):
        ch.classical_encoding(ch.dephasing(PAULI_Z), PLUS, 1)


def test_von_neumann_average_is_monotone(rng):
    k = random_observable(4, rng)
    proj = ch.spectral_projectors(k.eigenvectors @ np.diag([0, 0, 1, 1]) @ k.eigenvectors.conj().T)
    assert len(proj) == 2
    channel = ch.projective_measurement(proj)
    for _ in range(50):
        rho = oracles.random_state(4, rng)
        avg = sum(p * ms.skew_information(r, k) for p, r, _ in ch.apply_selective(channel, rho))
        assert avg <= ms.skew_information(rho, k) + 1e-9


def test_kraus_json_round_trip():
    channel = ch.random_incoherent(3, 2, 8)
    back = ch.kraus_from_json(json.loads(json.dumps(ch.kraus_to_json(channel))))
    for a, b in zip(channel.kraus, back.kraus):
        assert np.array_equal(a, b)
