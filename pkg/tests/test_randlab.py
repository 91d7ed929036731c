import json

import numpy as np
import pytest

from skewcoh import randlab as rl
from skewcoh.errors import QuantumInputError, RankOutOfRange, UnknownSuite
from skewcoh.qmat import purity


def test_rank_one_is_pure():
    for seed in range(20):
        assert purity(rl.hs_random_density(4, 1, seed)) == pytest.approx(1.0, abs=1e-10)


def test_mean_purity_band():
    # the Hilbert-Schmidt mean purity for d = rank = 4 is 8/17
    mean = np.mean([purity(rl.hs_random_density(4, 4, s)) for s in range(10_000)])
    assert 0.3 <= mean <= 0.55
    assert mean == pytest.approx(8 / 17, abs=5e-3)


def test_random_unitary_is_unitary():
    for seed in range(20):
        u = rl.random_unitary(5, seed)
        assert np.max(np.abs(u.conj().T @ u - np.eye(5))) <= 1e-10


def test_observable_with_spectrum():
    k = rl.random_observable(3, 1, spectrum=[1, 2, 5])
    assert np.allclose(k.eigenvalues, [1, 2, 5])
    with pytest.raises(QuantumInputError):
        rl.random_observable(3, 1, spectrum=[1, 2])


def test_rank_out_of_range():
    with pytest.raises(RankOutOfRange):
        rl.hs_random_density(3, 4, 0)
    with pytest.raises(RankOutOfRange):
        rl.hs_random_density(3, 0, 0)


def test_ensembles_are_seeded():
    assert np.array_equal(rl.haar_pure(3, 4).matrix, rl.haar_pure(3, 4).matrix)
    assert not np.array_equal(rl.haar_pure(3, 4).matrix, rl.haar_pure(3, 5).matrix)


def test_registry_is_enumerable_and_covers_every_suite():
    names = list(rl.REGISTRY)
    assert len(names) == len(set(names))
    suites = {p.suite for p in rl.REGISTRY.values()}
    assert suites == set(rl.SUITES) | {"negative-control"}
    expected = {
        "inequality_chain", "dual_form_equality", "faithfulness", "lower_bound_faithfulness",
        "pure_state_equalities", "qubit_bound", "convexity", "ensemble_bound", "superadditivity",
        "additivity", "symmetry_breaking_transfer", "twirl_idempotence", "twirl_removes_asymmetry",
        "rel_entropy_asymmetry_nonnegative", "monotonicity_incoherent", "monotonicity_k_invariant",
        "monotonicity_classical_encoding", "monotonicity_von_neumann_average", "scheme1_identity",
        "taylor_convergence", "taylor_error_ratio", "qubit_exact_form", "scheme2_overlap",
        "measurement_budgets", "bloch_intermediate_stage",
    }
    assert expected <= set(names)
    for p in rl.REGISTRY.values():
        assert p.tol >= 0 and p.anchor


def test_negative_controls_exist_and_are_excluded_from_default():
    neg = rl.properties_in("negative-control")
    assert {p.name for p in neg} == {"negative_control_fourier_monotonicity", "negative_control_fourier_incoherence"}
    assert not any(p.negative_control for p in rl.properties_in("all"))


def test_bad_arguments():
    with pytest.raises(QuantumInputError):
        rl.run_property_suite("core", trials=0)
    with pytest.raises(UnknownSuite):
        rl.run_property_suite("nope", trials=1)


def test_inequalities_suite_passes():
    reports = rl.run_property_suite("inequalities", trials=30, dims=(2, 3, 4, 5), seed=1)
    assert all(r.passed for r in reports)
    assert max(r.max_violation for r in reports if r.tol > 0) <= 1e-9


def test_negative_control_fails_with_replayable_counterexample():
    reports = rl.run_property_suite("negative-control", trials=3, dims=(2, 3), seed=2)
    assert not any(r.passed for r in reports)
    for r in reports:
        seed, dim, violation = r.failures[0]
        assert rl.replay(r.name, dim, seed) == violation


def test_reports_merge_associatively():
    a = rl.PropertyReport("x", 3, [(1, 2, 0.5)], 0.5, 1e-9)
    b = rl.PropertyReport("x", 2, [], 0.0, 1e-9)
    c = rl.PropertyReport("x", 4, [(7, 3, 0.9)], 0.9, 1e-9)
    left, right = a.merge(b).merge(c), a.merge(b.merge(c))
    assert left.to_dict() == right.to_dict()
    assert left.trials == 9 and not left.passed


def test_parallel_run_matches_serial():
    serial = rl.run_property_suite("core", trials=4, dims=(2, 3), seed=5, jobs=1)
    parallel = rl.run_property_suite("core", trials=4, dims=(2, 3), seed=5, jobs=2)
    assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]


def test_serialization():
    reports = rl.run_property_suite("core", trials=2, dims=(2,), seed=0)
    doc = json.loads(json.dumps([r.to_dict() for r in reports]))
    assert doc[0]["pass"] is True
    assert rl.reports_to_text(reports).splitlines()[0].startswith("property")
    assert rl.reports_to_csv(reports).splitlines()[0].startswith("property,trials,pass")
