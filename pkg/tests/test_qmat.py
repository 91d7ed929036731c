import json

import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import dims, seeds
from skewcoh.errors import DimensionMismatch, NotHermitian, NotPositive, NotUnitary, NotUnitTrace, QuantumInputError
from skewcoh.qmat import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    bloch_vector,
    controlled,
    embed,
    fourier_matrix,
    gell_mann,
    linear_entropy,
    make_density,
    make_observable,
    matrix_from_json,
    matrix_sqrt,
    matrix_to_json,
    overlap,
    partial_trace,
    purity,
    state_from_bloch,
    swap_from_gell_mann,
    swap_operator,
    symmetric_projectors,
    tensor,
    unitary_exp,
    von_neumann_entropy,
)
from skewcoh.randlab import haar_pure, hs_random_density


def test_maximally_mixed_qubit_spectrum():
    rho = make_density(np.eye(2) / 2)
    assert np.allclose(rho.eigenvalues, [0.5, 0.5])


def test_pure_projector_spectrum():
    rho = make_density([[1, 0], [0, 0]])
    assert np.allclose(rho.eigenvalues, [0, 1])


def test_not_positive_reports_min_eigenvalue():
    with pytest.raises(NotPositive, match=r"-0\.0099"):
        make_density([[0.6, 0.5], [0.5, 0.4]])


def test_validation_errors():
    with pytest.raises(NotHermitian):
        make_density([[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(NotUnitTrace):
        make_density(np.eye(2))
    with pytest.raises(DimensionMismatch):
        make_density(np.ones((2, 3)) / 2)
    assert issubclass(NotPositive, ValueError)


def test_eigen_noise_floor_gives_exact_zeros():
    psi = np.array([1, 1j, 2]) / np.sqrt(6)
    rho = make_density(np.outer(psi, psi.conj()))
    assert np.count_nonzero(rho.eigenvalues) == 1


def test_eigenvalues_are_read_only():
    rho = make_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.eigenvalues[0] = 1


def test_matrix_sqrt_examples():
    assert np.allclose(matrix_sqrt(np.eye(2) / 2), np.eye(2) / np.sqrt(2))
    p0 = np.diag([1.0, 0.0])
    assert np.allclose(matrix_sqrt(p0), p0)
    assert np.allclose(matrix_sqrt(np.diag([0.75, 0.25])), np.diag([np.sqrt(0.75), 0.5]))


@given(seeds, dims)
def test_matrix_sqrt_matches_scipy(seed, d):
    rho = hs_random_density(d, d, seed)
    assert np.allclose(matrix_sqrt(rho), oracles.sqrtm(rho.matrix), atol=1e-10)


def test_partial_trace_examples(rng):
    rho, tau = oracles.random_state(2, rng), oracles.random_state(3, rng)
    assert np.allclose(partial_trace(tensor(rho, tau), [2, 3], [0]).matrix, rho)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(bell, bell), [2, 2], [0]).matrix, np.eye(2) / 2)
    assert np.allclose(tensor(np.eye(2), np.eye(3)), np.eye(6))


@given(seeds)
def test_partial_trace_matches_loops(seed):
    rng = np.random.default_rng(seed)
    m = oracles.random_state(6, rng)
    assert np.allclose(partial_trace(m, [3, 2], [0]).matrix, oracles.partial_trace_keep_first(m, 3, 2))


def test_partial_trace_keeps_order_of_sites(rng):
    a, b, c = (oracles.random_state(k, rng) for k in (2, 3, 2))
    out = partial_trace(tensor(a, b, c), [2, 3, 2], [2, 0]).matrix
    assert np.allclose(out, tensor(a, c))


def test_embed_pads_identities():
    assert np.allclose(embed(PAULI_Z, [3, 2, 2], 1), tensor(np.eye(3), PAULI_Z, np.eye(2)))


def test_gell_mann_qubit_is_pauli():
    gm = gell_mann(2)
    assert gm.scale == pytest.approx(1.0)
    assert np.allclose(gm.tau, [PAULI_X, PAULI_Y, PAULI_Z])


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_gell_mann_orthogonality_and_traces(d):
    gm = gell_mann(d)
    s = gm.normalized
    assert len(s) == d * d - 1
    gram = np.einsum("aij,bji->ab", s, s)
    assert np.allclose(gram, 2 * np.eye(d * d - 1))
    assert np.allclose(np.einsum("aii->a", gm.tau), 0)
    for g in s:
        assert np.allclose(g, g.conj().T)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_structure_constants_reproduce_commutators(d):
    gm = gell_mann(d)
    s, f = gm.normalized, gm.structure_constants
    for i in range(len(s)):
        for j in range(len(s)):
            comm = s[i] @ s[j] - s[j] @ s[i]
            assert np.allclose(comm, 2j * np.einsum("k,kab->ab", f[i, j], s))
    assert np.allclose(f, -np.transpose(f, (1, 0, 2)))
    assert np.allclose(f, -np.transpose(f, (0, 2, 1)))


def test_su2_structure_constants_are_levi_civita():
    f = gell_mann(2).structure_constants
    eps = np.zeros((3, 3, 3))
    for (i, j, k), sgn in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (0, 2, 1): -1, (2, 1, 0): -1}.items():
        eps[i, j, k] = sgn
    assert np.allclose(f, eps)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_swap_matches_expansion_and_brute_force(d):
    assert np.allclose(swap_operator(d), oracles.swap(d))
    assert np.allclose(swap_from_gell_mann(d), oracles.swap(d), atol=1e-12)


def test_swap_examples():
    v = swap_operator(2)
    ket01 = np.kron([1, 0], [0, 1])
    assert np.allclose(v @ ket01, np.kron([0, 1], [1, 0]))
    _, p_minus = symmetric_projectors(3)
    assert np.linalg.matrix_rank(p_minus) == 3


def test_swap_trace_gives_purity(rng):
    for _ in range(50):
        rho = oracles.random_state(3, rng)
        assert np.trace(swap_operator(3) @ np.kron(rho, rho)).real == pytest.approx(np.trace(rho @ rho).real, abs=1e-12)


@given(seeds, dims)
def test_pure_bloch_vectors_have_unit_length(seed, d):
    x = bloch_vector(haar_pure(d, seed))
    assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-10)


@given(seeds, dims)
def test_bloch_round_trip(seed, d):
    rho = hs_random_density(d, d, seed)
    assert np.allclose(state_from_bloch(bloch_vector(rho), d).matrix, rho.matrix)


def test_unitary_exp_examples():
    assert np.allclose(unitary_exp(PAULI_Z, 0), np.eye(2))
    assert np.allclose(unitary_exp(PAULI_Z, np.pi / 2), 1j * PAULI_Z)


@given(seeds, dims)
def test_unitary_exp_matches_expm(seed, d):
    rng = np.random.default_rng(seed)
    k = oracles.random_hermitian(d, rng)
    t = float(rng.normal())
    assert np.allclose(unitary_exp(make_observable(k), t), oracles.u_exp(k, t), atol=1e-10)


def test_controlled():
    assert np.allclose(controlled(np.eye(3)), np.eye(6))
    cx = controlled(PAULI_X)
    assert np.allclose(cx @ np.kron([0, 1], [1, 0]), np.kron([0, 1], [0, 1]))
    with pytest.raises(NotUnitary):
        controlled(np.diag([1.0, 2.0]))


def test_fourier_is_hadamard_for_qubits():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(fourier_matrix(2), h)
    f5 = fourier_matrix(5)
    assert np.allclose(f5.conj().T @ f5, np.eye(5))


def test_scalar_functionals():
    a = DensityMatrix.from_vector([1, 0])
    b = DensityMatrix.from_vector([0, 1])
    assert overlap(a, b) == 0
    rho = oracles.rho_p(0.5)
    assert purity(rho) == pytest.approx(0.625, abs=1e-14)
    assert linear_entropy(rho) == pytest.approx(0.75, abs=1e-14)
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2))
    assert von_neumann_entropy(a) == 0


def test_json_round_trip_and_errors(rng):
    m = oracles.random_state(3, rng)
    back = matrix_from_json(json.loads(json.dumps(matrix_to_json(m))))
    assert np.array_equal(back, m)
    with pytest.raises(QuantumInputError, match="'re'"):
        matrix_from_json({"dim": 2, "im": [[0, 0], [0, 0]]})
    with pytest.raises(QuantumInputError, match="dim"):
        matrix_from_json({"dim": 3, "re": [[1, 0], [0, 0]]})
