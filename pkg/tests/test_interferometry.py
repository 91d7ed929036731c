import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import seeds
from skewcoh import interferometry as itf
from skewcoh import measures as ms
from skewcoh.errors import AncillaNotBasisElement, NotUnitVector, ZeroPhase, ZeroSensitivityAncilla
from skewcoh.qmat import PAULI_Z, DensityMatrix, bloch_vector, make_observable, pauli_observable
from skewcoh.randlab import haar_pure, hs_random_density, random_observable, random_unitary

ZERO = DensityMatrix.basis_state(2, 0)
PLUS = DensityMatrix.from_vector([1, 1])


def _cfg(rho, K=PAULI_Z, t=0.1, ancilla=ZERO):
    return itf.Scheme1Config(ancilla, K, t, rho)


def test_scheme1_examples():
    assert itf.scheme1_polarization(_cfg(haar_pure(3, 1), np.diag([1.0, 2, 3]))) == pytest.approx(1.0)
    assert itf.scheme1_polarization(_cfg(np.eye(4) / 4, np.diag([1.0, 2, 3, 4]))) == pytest.approx(0.25)
    assert itf.scheme1_polarization(_cfg(PLUS, t=np.pi / 2), rotated=True) == pytest.approx(0, abs=1e-12)


def test_scheme1_zero_sensitivity():
    with pytest.raises(ZeroSensitivityAncilla):
        itf.scheme1_polarization(_cfg(PLUS, ancilla=np.eye(2) / 2))


@given(seeds)
def test_swap_test_matches_brute_force_with_mixed_ancilla(seed):
    rng = np.random.default_rng(seed)
    alpha = oracles.random_state(2, rng)
    r1, r2 = oracles.random_state(3, rng), oracles.random_state(3, rng)
    m = itf.swap_test_polarization(alpha, r1, r2)
    assert m == pytest.approx(oracles.swap_test(alpha, r1, r2), abs=1e-12)
    a = np.real(alpha[0, 0] - alpha[1, 1])
    assert m == pytest.approx(a * np.real(np.trace(r1 @ r2)), abs=1e-10)


def test_taylor_examples():
    assert itf.estimate_lower_bound_taylor(oracles.rho_p(0.5), PAULI_Z, 1e-3) == pytest.approx(0.125, abs=1e-4)
    k = random_observable(3, 2)
    rho = DensityMatrix.from_vector(k.eigenvectors[:, 0])
    assert itf.estimate_lower_bound_taylor(rho, k, 0.3) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ZeroPhase):
        itf.estimate_lower_bound_taylor(rho, k, 0)


def test_default_phase_scales_with_norm():
    assert itf.default_phase(np.diag([0.0, 4.0])) == pytest.approx(2.5e-4)


@given(seeds)
def test_taylor_error_is_quadratic_for_qutrits(seed):
    rho = hs_random_density(3, 3, seed)
    k = random_observable(3, seed + 1)
    k = make_observable(k.matrix / k.spectral_norm)
    exact = ms.lower_bound(rho, k)
    for t in (0.2, 0.1, 0.05):
        e1 = abs(itf.estimate_lower_bound_taylor(rho, k, t) - exact)
        e2 = abs(itf.estimate_lower_bound_taylor(rho, k, t / 2) - exact)
        if e1 > 1e-9:
            assert e2 / e1 <= 0.75
    assert abs(itf.estimate_lower_bound_taylor(rho, k, 1e-4) - exact) <= 1e-7


def test_qubit_exact_examples():
    for p in (0.0, 0.3, 0.5, 1.0):
        assert itf.qubit_exact_lower_bound(oracles.rho_p(p), [0, 0, 1]) == pytest.approx(p * p / 2, abs=1e-14)
    assert itf.qubit_exact_lower_bound(np.eye(2) / 2, [0.6, 0, 0.8]) == pytest.approx(0, abs=1e-15)
    with pytest.raises(NotUnitVector):
        itf.qubit_exact_lower_bound(PLUS, [1, 1, 0])


@given(seeds)
def test_qubit_exact_equals_lower_bound(seed):
    rng = np.random.default_rng(seed)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    rho = hs_random_density(2, 2, rng)
    assert abs(itf.qubit_exact_lower_bound(rho, n) - ms.lower_bound(rho, pauli_observable(n))) <= 1e-12


def test_budgets():
    for d in range(2, 7):
        assert itf.measurement_budget(d) == 5 * d
        assert itf.measurement_budget(d, interacting=True) == 4 * d
        assert itf.tomography_count(d) == d * d - 1
    assert itf.SCHEME1_BUDGET == 2
    assert itf.scheme2_run(np.eye(3) / 3, np.eye(3) / 3, interacting=True).measurement_count == 12


@given(seeds)
def test_half_swap_marginals_match_full_matrices(seed):
    rng = np.random.default_rng(seed)
    a, b = oracles.random_state(3, rng), oracles.random_state(3, rng)
    beta = np.diag([0, 1.0, 0])
    mid, out = oracles.half_swap_marginals(a, beta, b)
    assert np.allclose(itf.half_swap_ancilla(a, b, beta, "int"), mid, atol=1e-12)
    assert np.allclose(itf.half_swap_ancilla(a, b, beta, "out"), out, atol=1e-12)
    c = beta @ a - a @ beta
    assert np.allclose(mid, (a + beta + 1j * c) / 2, atol=1e-12)


def test_svalue_table_examples():
    beta = DensityMatrix.basis_state(3, 1)
    t = itf.scheme2_run(beta, beta, beta=1)
    assert t.S_A[1] == pytest.approx(2) and t.S_B[1] == pytest.approx(2)
    t2 = itf.scheme2_run(hs_random_density(2, 2, 3), hs_random_density(2, 2, 4))
    assert abs(t2.S_AB.sum()) <= 1e-12
    with pytest.raises(AncillaNotBasisElement):
        itf.scheme2_run(beta, beta, beta=haar_pure(3, 0))


def test_single_run_closed_form_is_constant():
    # each S-vector sums to zero, so the closed form cannot depend on the inputs
    for d in (2, 3, 4):
        for seed in range(3):
            t = itf.scheme2_run(hs_random_density(d, d, seed), hs_random_density(d, d, seed + 10))
            assert itf.scheme2_reconstruct(t) == pytest.approx((2 - d) / d, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_overlap_examples(d):
    psi = haar_pure(d, 5)
    assert itf.scheme2_overlap(psi, psi).overlap == pytest.approx(1.0, abs=1e-10)
    e0, e1 = DensityMatrix.basis_state(d, 0), DensityMatrix.basis_state(d, 1)
    assert itf.scheme2_overlap(e0, e1).overlap == pytest.approx(0.0, abs=1e-10)


@given(seeds)
def test_sweep_reconstruction_is_exact(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    a, b = hs_random_density(d, d, rng), hs_random_density(d, d, rng)
    rep = itf.scheme2_overlap(a, b)
    assert rep.formula_mismatch and rep.flags == ["FORMULA_MISMATCH"]
    assert abs(rep.sweep_overlap - np.real(np.trace(a.matrix @ b.matrix))) <= 1e-10
    assert rep.budget == 5 * d and rep.sweep_budget == 2 * d * d + 2 * d


def test_sweep_in_rotated_basis():
    w = random_unitary(3, 4)
    a, b = hs_random_density(3, 3, 1), hs_random_density(3, 3, 2)
    swept = itf.sweep_reconstruct(itf.scheme2_sweep(a, b, basis=w))
    assert swept == pytest.approx(np.real(np.trace(a.matrix @ b.matrix)), abs=1e-10)


def test_scheme2_lower_bound_matches_taylor():
    rho = oracles.rho_p(0.5)
    res = itf.scheme2_lower_bound(rho, PAULI_Z, 1e-2)
    assert res["estimate"] == pytest.approx(itf.estimate_lower_bound_taylor(rho, PAULI_Z, 1e-2), abs=1e-6)


def test_wedge_examples(rng):
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(itf.bloch_wedge(a, b), np.cross(a, b))
    x = rng.normal(size=8)
    assert np.allclose(itf.bloch_wedge(x, x), 0)
    assert itf.wedge_scale(2) == 1.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_fitted_wedge_scale_matches_closed_form(d):
    assert itf.fit_wedge_scale(d, samples=5, seed=1) == pytest.approx(itf.wedge_scale(d), rel=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_bloch_update_rules(d):
    chk = itf.intermediate_bloch_check(hs_random_density(d, d, 3), haar_pure(d, 4), hs_random_density(d, d, 5))
    assert not chk.flagged
    assert chk.output_deviation_xb_wedge_y <= 1e-10
    assert chk.output_deviation_y_wedge_xb > 1e-3
    assert np.allclose(chk.y_simulated, bloch_vector(itf.half_swap_ancilla(hs_random_density(d, d, 3), np.eye(d) / d, haar_pure(d, 4), "int")))
