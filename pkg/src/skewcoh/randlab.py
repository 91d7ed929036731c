"""Random ensembles and the falsification suite.

Every invariant claimed by the other modules is registered here once as a
:class:`Property`: a function of ``(dim, rng)`` returning a nonnegative
violation magnitude, plus the tolerance owned by the claim. Each trial runs
with its own 64-bit seed derived from ``(suite seed, property name, dim,
trial)``; failing seeds are reported and :func:`replay` reruns them.
"""

from __future__ import annotations

import csv
import io
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import channels as ch
from . import interferometry as itf
from . import measures as ms
from . import shots as sh
from .errors import QuantumInputError, RankOutOfRange, UnknownSuite
from .qmat import (
    DensityMatrix,
    Observable,
    commutator,
    dagger,
    fourier_matrix,
    make_density,
    make_observable,
    observable_from_spectrum,
    partial_trace_matrix,
    purity,
    swap_from_gell_mann,
    swap_operator,
    tensor,
    unitary_exp,
)

# -- ensembles ------------------------------------------------------------------------


def _ginibre(rng, rows, cols):
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar unitary from the phase-corrected QR of a Ginibre matrix."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_pure(d: int, seed) -> DensityMatrix:
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return DensityMatrix.from_vector(psi)


def hs_random_density(d: int, rank: int, seed) -> DensityMatrix:
    """``G G^dag / Tr[G G^dag]`` with ``G`` a ``d x rank`` Ginibre matrix."""
    if not 1 <= rank <= d:
        raise RankOutOfRange(f"rank must lie in [1, {d}], got {rank}")
    rng = np.random.default_rng(seed)
    g = _ginibre(rng, d, rank)
    m = g @ dagger(g)
    m = m / np.trace(m).real
    if rank == 1:
        # rank-one matrices are exactly pure; avoid spurious purity drift
        return DensityMatrix.from_vector(g[:, 0])
    return make_density(m)


def random_observable(d: int, seed, spectrum=None) -> Observable:
    rng = np.random.default_rng(seed)
    if spectrum is not None:
        spectrum = np.asarray(spectrum, dtype=float)
        if spectrum.shape != (d,):
            raise QuantumInputError(f"spectrum needs {d} entries")
        return observable_from_spectrum(spectrum, random_unitary(d, rng))
    g = _ginibre(rng, d, d)
    return make_observable((g + dagger(g)) / 2)


def random_state(d: int, rng) -> DensityMatrix:
    return hs_random_density(d, int(rng.integers(1, d + 1)), rng)


def _integer_observable(d: int, rng, span: int = 3) -> Observable:
    spec = rng.integers(0, span, size=d).astype(float)
    if np.ptp(spec) == 0:
        spec[0] += 1
    return observable_from_spectrum(spec, random_unitary(d, rng))


def _normalized_observable(d: int, rng) -> Observable:
    k = random_observable(d, rng)
    return make_observable(k.matrix / k.spectral_norm)


# -- registry ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Property:
    name: str
    suite: str
    tol: float
    anchor: str
    check: Callable[[int, np.random.Generator], float]
    fixed_dims: tuple | None = None
    max_dim: int | None = None
    max_trials: int | None = None
    negative_control: bool = False


REGISTRY: dict[str, Property] = {}


def register(name, suite, tol, anchor, fixed_dims=None, max_dim=None, max_trials=None, negative_control=False):
    def deco(fn):
        if name in REGISTRY:
            raise ValueError(f"property {name} registered twice")
        REGISTRY[name] = Property(name, suite, tol, anchor, fn, fixed_dims, max_dim, max_trials, negative_control)
        return fn

    return deco


# qmat-core


@register("clamp_trace_change", "core", 1e-9, "qmat: eigenvalue clamping changes Tr by <= 1e-9")
def _p_clamp(d, rng):
    rho = random_state(d, rng)
    return abs(float(np.sum(rho.eigenvalues)) - float(np.trace(rho.matrix).real))


@register("swap_gell_mann_expansion", "core", 1e-10, "qmat: SWAP equals its Gell-Mann expansion", max_dim=6)
def _p_swap_expansion(d, rng):
    return float(np.max(np.abs(swap_operator(d) - swap_from_gell_mann(d))))


@register("swap_trace_identity", "core", 1e-12, "qmat: Tr[V (rho (x) rho)] = Tr[rho^2]")
def _p_swap_trace(d, rng):
    rho = random_state(d, rng)
    return abs(float(np.real(np.trace(swap_operator(d) @ tensor(rho.matrix, rho.matrix)))) - purity(rho))


@register("partial_trace_product", "core", 1e-12, "qmat: partial_trace(rho (x) tau) = rho")
def _p_ptrace(d, rng):
    rho, tau = random_state(d, rng), random_state(3, rng)
    back = partial_trace_matrix(tensor(rho.matrix, tau.matrix), [d, 3], [0])
    return float(np.max(np.abs(back - rho.matrix)))


@register("unitary_exp_inverse", "core", 1e-10, "qmat: U_K(t) U_K(-t) = I")
def _p_uexp(d, rng):
    K = random_observable(d, rng)
    t = float(rng.normal())
    return float(np.max(np.abs(unitary_exp(K, t) @ unitary_exp(K, -t) - np.eye(d))))


# coherence measures


@register("inequality_chain", "inequalities", 1e-9, "measures: 0 <= I_L <= I <= V")
def _p_chain(d, rng):
    rho, K = random_state(d, rng), random_observable(d, rng)
    il, i, v = ms.lower_bound(rho, K), ms.skew_information(rho, K), ms.variance(rho, K)
    return max(-il, il - i, i - v, 0.0)


@register("dual_form_equality", "inequalities", 1e-10, "measures: commutator form = spectral form for I and I_L")
def _p_dual(d, rng):
    rho, K = random_state(d, rng), random_observable(d, rng)
    return max(
        abs(ms.skew_information(rho, K) - ms.skew_information_spectral(rho, K)),
        abs(ms.lower_bound(rho, K) - ms.lower_bound_spectral(rho, K)),
    )


def _commuting_pair(d, rng):
    w = random_unitary(d, rng)
    p = rng.dirichlet(np.ones(d))
    rho = make_density(w @ np.diag(p) @ dagger(w))
    return rho, observable_from_spectrum(rng.normal(size=d), w)


@register("faithfulness", "inequalities", 0.0, "measures: I <= 1e-10 iff max|[rho, K]| <= 1e-8")
def _p_faithful(d, rng):
    bad = 0
    for rho, K in (_commuting_pair(d, rng), (random_state(d, rng), random_observable(d, rng))):
        zero_i = ms.skew_information(rho, K) <= 1e-10
        zero_c = float(np.max(np.abs(commutator(rho.matrix, K.matrix)))) <= 1e-8
        bad += zero_i != zero_c
    return float(bad)


@register("lower_bound_faithfulness", "inequalities", 0.0, "measures: I_L = 0 iff I = 0")
def _p_lb_faithful(d, rng):
    bad = 0
    for rho, K in (_commuting_pair(d, rng), (random_state(d, rng), random_observable(d, rng))):
        # I <= sqrt(I_L) ||K||_F, so I_L <= 1e-20 / ||K||_F^2 certifies I <= 1e-10
        scale = float(np.linalg.norm(K.matrix)) ** 2
        bad += (ms.skew_information(rho, K) <= 1e-10) != (ms.lower_bound(rho, K) * scale <= 1e-20)
    return float(bad)


@register("pure_state_equalities", "inequalities", 1e-9, "measures: pure states have V = I = 2 I_L")
def _p_pure(d, rng):
    rho, K = haar_pure(d, rng), random_observable(d, rng)
    v, i, il = ms.variance(rho, K), ms.skew_information(rho, K), ms.lower_bound(rho, K)
    return max(abs(v - i), abs(i - 2 * il))


@register("pure_variance_populations", "inequalities", 1e-9, "measures: pure-state variance from eigenbasis populations")
def _p_pure_pop(d, rng):
    rho, K = haar_pure(d, rng), random_observable(d, rng)
    psi = rho.eigenvectors[:, -1]
    return abs(ms.variance(rho, K) - ms.pure_variance_from_populations(psi, K))


@register("qubit_bound", "inequalities", 1e-10, "measures: qubits satisfy 2 I_L >= I", fixed_dims=(2,))
def _p_qubit(d, rng):
    rho, K = random_state(2, rng), random_observable(2, rng)
    return max(ms.skew_information(rho, K) - 2 * ms.lower_bound(rho, K), 0.0)


@register("convexity", "inequalities", 1e-9, "measures: I is convex in the state")
def _p_convex(d, rng):
    K = random_observable(d, rng)
    m = int(rng.integers(2, 5))
    q = rng.dirichlet(np.ones(m))
    states = [random_state(d, rng) for _ in range(m)]
    mix = make_density(sum(qi * s.matrix for qi, s in zip(q, states)))
    return max(ms.skew_information(mix, K) - sum(qi * ms.skew_information(s, K) for qi, s in zip(q, states)), 0.0)


@register("ensemble_bound", "inequalities", 1e-9, "measures: I <= sum_i p_i V(phi_i) for every pure decomposition")
def _p_ensemble(d, rng):
    rho, K = random_state(d, rng), random_observable(d, rng)
    i = ms.skew_information(rho, K)
    worst = 0.0
    # eigen-decomposition
    eig = sum(l * ms.variance(DensityMatrix.from_vector(v), K) for l, v in rho.spectrum if l > 1e-14)
    worst = max(worst, i - eig)
    # random decomposition: columns of sqrt(rho) W for an isometry W
    m = d + int(rng.integers(0, 3))
    w = random_unitary(m, rng)[:, :d]
    vecs = (rho.eigenvectors * np.sqrt(rho.eigenvalues)) @ w.T
    total = 0.0
    for j in range(m):
        p = float(np.linalg.norm(vecs[:, j]) ** 2)
        if p > 1e-14:
            total += p * ms.variance(DensityMatrix.from_vector(vecs[:, j]), K)
    return max(worst, i - total, 0.0)


@register("superadditivity", "inequalities", 1e-9, "measures: I(rho_AB, K_A (x) I) >= I(rho_A, K_A); residual coherence >= 0")
def _p_superadd(d, rng):
    rho = random_state(2 * d, rng)
    K = random_observable(d, rng)
    return max(-ms.residual_coherence(rho, [d, 2], 0, K), 0.0)


@register("residual_block_diagonal", "inequalities", 1e-9, "measures: residual coherence vanishes on states block-diagonal in the K eigenbasis")
def _p_residual_zero(d, rng):
    K = random_observable(d, rng)
    p = rng.dirichlet(np.ones(d))
    v = K.eigenvectors
    rho = sum(p[i] * tensor(np.outer(v[:, i], v[:, i].conj()), random_state(2, rng).matrix) for i in range(d))
    return abs(ms.residual_coherence(rho, [d, 2], 0, K))


@register("additivity", "asymmetry", 1e-9, "asymmetry: I(rho (x) tau, Q_S + Q_R) = I(rho, Q_S) + I(tau, Q_R)")
def _p_additive(d, rng):
    rho, tau = random_state(d, rng), random_state(2, rng)
    qs, qr = random_observable(d, rng), random_observable(2, rng)
    qtot = tensor(qs.matrix, np.eye(2)) + tensor(np.eye(d), qr.matrix)
    both = ms.skew_information(tensor(rho.matrix, tau.matrix), qtot)
    return abs(both - ms.skew_information(rho, qs) - ms.skew_information(tau, qr))


@register("symmetry_breaking_transfer", "asymmetry", 1e-9, "asymmetry: invariant coupling preserves total-charge asymmetry")
def _p_sym_break(d, rng):
    qs, qr = _integer_observable(d, rng), _integer_observable(2, rng)
    qtot = tensor(qs.matrix, np.eye(2)) + tensor(np.eye(d), qr.matrix)
    rho_s = ms.g_twirl(random_state(d, rng), ms.GroupRep.phase_group(qs, 16))
    tau = random_state(2, rng)
    v = ch.invariant_unitary(qtot, rng)
    prod = tensor(rho_s.matrix, tau.matrix)
    coupled = v @ prod @ dagger(v)
    i_coupled = ms.skew_information(coupled, qtot)
    i_prod = ms.skew_information(prod, qtot)
    return max(abs(i_coupled - i_prod), abs(i_prod - ms.skew_information(tau, qr)))


@register("twirl_idempotence", "asymmetry", 1e-9, "asymmetry: G[G[rho]] = G[rho]")
def _p_twirl_idem(d, rng):
    group = ms.GroupRep.phase_group(_integer_observable(d, rng), 16)
    once = ms.g_twirl(random_state(d, rng), group)
    return float(np.max(np.abs(ms.g_twirl(once, group).matrix - once.matrix)))


@register("twirl_removes_asymmetry", "asymmetry", 1e-9, "asymmetry: I(G[rho], Q) = 0 for the phase group of Q")
def _p_twirl_zero(d, rng):
    q = _integer_observable(d, rng)
    return abs(ms.asymmetry(ms.g_twirl(random_state(d, rng), ms.GroupRep.phase_group(q, 16)), q))


@register("rel_entropy_asymmetry_nonnegative", "asymmetry", 1e-9, "asymmetry: S(G[rho]) - S(rho) >= 0")
def _p_rel_ent(d, rng):
    rho = random_state(d, rng)
    groups = [
        ms.GroupRep.phase_group(_integer_observable(d, rng), 16),
        ms.GroupRep([random_unitary(d, rng) for _ in range(int(rng.integers(1, 5)))]),
    ]
    return max(max(-ms.rel_entropy_asymmetry(rho, g) for g in groups), 0.0)


# channels


def _random_incoherent(d, rng):
    return ch.random_incoherent(d, int(rng.integers(1, 4)), rng, injective=bool(rng.integers(0, 2)))


@register("monotonicity_incoherent", "monotonicity", 1e-9, "channels: I(E(rho), K) <= I(rho, K) for incoherent E")
def _p_mono_inc(d, rng):
    K = observable_from_spectrum(rng.normal(size=d))
    channel = _random_incoherent(d, rng)
    rho = random_state(d, rng)
    return max(ms.skew_information(ch.apply(channel, rho), K) - ms.skew_information(rho, K), 0.0)


@register("incoherent_generator_valid", "monotonicity", 0.0, "channels: generated incoherent channels pass is_incoherent")
def _p_inc_valid(d, rng):
    w = random_unitary(d, rng)
    return 0.0 if ch.is_incoherent(ch.random_incoherent(d, int(rng.integers(1, 4)), rng, basis=w), basis=w) else 1.0


def _k_invariant_setup(d, rng):
    k_a = _integer_observable(d, rng)
    k_b = _integer_observable(2, rng)
    tau = observable_from_spectrum(rng.dirichlet(np.ones(2)), k_b.eigenvectors).matrix
    channel, v = ch.k_invariant_channel(k_a, k_b, tau, rng)
    return k_a, channel


@register("monotonicity_k_invariant", "monotonicity", 1e-9, "channels: I does not increase under K-invariant channels")
def _p_mono_kinv(d, rng):
    k_a, channel = _k_invariant_setup(d, rng)
    rho = random_state(d, rng)
    return max(ms.skew_information(ch.apply(channel, rho), k_a) - ms.skew_information(rho, k_a), 0.0)


@register("monotonicity_classical_encoding", "monotonicity", 1e-9, "channels: I(sum p_n rho_n (x) |n><n|, K (x) I) <= I(rho, K)")
def _p_mono_enc(d, rng):
    K = observable_from_spectrum(rng.normal(size=d))
    channel = _random_incoherent(d, rng)
    rho = random_state(d, rng)
    enc = ch.classical_encoding(channel, rho, len(channel))
    return max(ms.local_coherence(enc, [d, len(channel)], 0, K) - ms.skew_information(rho, K), 0.0)


@register("monotonicity_von_neumann_average", "monotonicity", 1e-9, "channels: sum_n p_n I(rho_n, K) <= I(rho, K) for measurements commuting with K")
def _p_mono_vn(d, rng):
    K = random_observable(d, rng)
    labels = rng.integers(0, max(1, d - 1), size=d)
    m = make_observable(K.eigenvectors @ np.diag(labels.astype(float)) @ dagger(K.eigenvectors))
    channel = ch.projective_measurement(ch.spectral_projectors(m))
    rho = random_state(d, rng)
    avg = sum(p * ms.skew_information(r, K) for p, r, _ in ch.apply_selective(channel, rho))
    return max(avg - ms.skew_information(rho, K), 0.0)


@register("cptp_preservation", "monotonicity", 1e-10, "channels: every apply() output is a valid state")
def _p_cptp(d, rng):
    rho = random_state(d, rng)
    worst = 0.0
    for channel in (_random_incoherent(d, rng), _k_invariant_setup(d, rng)[1]):
        out = ch.apply(channel, rho)
        worst = max(worst, abs(float(np.trace(out.matrix).real) - 1), max(-float(out.eigenvalues.min()), 0.0))
    return worst


@register("k_invariant_covariance", "monotonicity", 1e-9, "channels: K-invariant channels are covariant under exp(i K_A t)")
def _p_covariant(d, rng):
    k_a, channel = _k_invariant_setup(d, rng)
    us = [unitary_exp(k_a, float(t)) for t in rng.uniform(0, 2 * np.pi, size=3)]
    return ch.covariance_deviation(channel, us, random_state(d, rng))


# interferometry


@register("scheme1_identity", "schemes", 1e-10, "interferometry: <sigma_z> = Tr[alpha sigma_z] Tr[rho_1 rho_2]", max_dim=5)
def _p_s1_identity(d, rng):
    alpha = random_state(2, rng)
    rho = random_state(d, rng)
    K = random_observable(d, rng)
    u = unitary_exp(K, float(rng.uniform(0, np.pi)))
    a = float(np.real(np.trace(alpha.matrix @ np.diag([1, -1]))))
    worst = 0.0
    for second in (rho.matrix, u @ rho.matrix @ dagger(u)):
        m = itf.swap_test_polarization(alpha.matrix, rho.matrix, second)
        worst = max(worst, abs(m - a * float(np.real(np.vdot(rho.matrix, second)))))
    return worst


@register("scheme1_factorization", "schemes", 1e-9, "interferometry: polarization / Tr[alpha sigma_z] does not depend on alpha", max_dim=5)
def _p_s1_factor(d, rng):
    rho, sigma = random_state(d, rng), random_state(d, rng)
    ratios = []
    while len(ratios) < 3:
        alpha = random_state(2, rng)
        a = float(np.real(alpha.matrix[0, 0] - alpha.matrix[1, 1]))
        if abs(a) > 1e-3:
            ratios.append(itf.swap_test_polarization(alpha.matrix, rho.matrix, sigma.matrix) / a)
    return float(np.ptp(ratios))


@register("taylor_convergence", "schemes", 1e-7, "interferometry: Taylor estimate at t = 1e-4 is within 1e-7 of I_L for ||K|| <= 1")
def _p_taylor_conv(d, rng):
    rho, K = random_state(d, rng), _normalized_observable(d, rng)
    return abs(itf.estimate_lower_bound_taylor(rho, K, 1e-4) - ms.lower_bound(rho, K))


@register("taylor_error_ratio", "schemes", 0.0, "interferometry: halving t shrinks the Taylor error by <= 0.75 while it exceeds 1e-9")
def _p_taylor_ratio(d, rng):
    rho, K = random_state(d, rng), _normalized_observable(d, rng)
    exact = ms.lower_bound(rho, K)
    worst = 0.0
    for t in (0.2, 0.05, 1e-2):
        e1 = abs(itf.estimate_lower_bound_taylor(rho, K, t) - exact)
        e2 = abs(itf.estimate_lower_bound_taylor(rho, K, t / 2) - exact)
        if e1 > 1e-9:
            worst = max(worst, e2 / e1 - 0.75)
    return max(worst, 0.0)


@register("qubit_exact_form", "schemes", 1e-12, "interferometry: the pi/2 qubit form equals I_L", fixed_dims=(2,))
def _p_qubit_exact(d, rng):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    rho = random_state(2, rng)
    from .qmat import pauli_observable

    return abs(itf.qubit_exact_lower_bound(rho, n) - ms.lower_bound(rho, pauli_observable(n)))


@register("scheme2_overlap", "schemes", 0.0, "interferometry: half-SWAP overlap within 1e-8 (closed form) or, if flagged, 1e-10 (sweep)", max_dim=4)
def _p_s2_overlap(d, rng):
    rep = itf.scheme2_overlap(random_state(d, rng), random_state(d, rng), beta=int(rng.integers(0, d)))
    if rep.formula_mismatch:
        return max(abs(rep.sweep_overlap - rep.exact_overlap) - 1e-10, 0.0)
    return max(abs(rep.formula_overlap - rep.exact_overlap) - 1e-8, 0.0)


@register("scheme2_svalue_sums", "schemes", 1e-8, "interferometry: S-vectors sum to zero; reported overlap in [0, 1]", max_dim=4)
def _p_s2_sums(d, rng):
    rep = itf.scheme2_overlap(random_state(d, rng), random_state(d, rng))
    t = rep.table
    sums = max(abs(s.sum()) for s in (t.S_AB, t.S_BA, t.S_A, t.S_B))
    return max(sums, -rep.overlap, rep.overlap - 1, 0.0)


@register("bloch_intermediate_stage", "schemes", 1e-10, "interferometry: y_beta = (x_A + x_beta + (d-1) x_A ^ x_beta)/2", max_dim=4)
def _p_bloch(d, rng):
    return itf.intermediate_bloch_check(random_state(d, rng), haar_pure(d, rng)).intermediate_deviation


@register("measurement_budgets", "schemes", 0.0, "interferometry: budgets 5d / 4d / 2 / d^2-1")
def _p_budgets(d, rng):
    ok = (
        itf.measurement_budget(d) == 5 * d
        and itf.measurement_budget(d, interacting=True) == 4 * d
        and itf.SCHEME1_BUDGET == 2
        and itf.tomography_count(d) == d * d - 1
        and itf.scheme2_run(random_state(d, rng), random_state(d, rng)).measurement_count == 5 * d
    )
    return 0.0 if ok else 1.0


# shots


@register("seeded_determinism", "shots", 0.0, "shots: identical inputs and seed give identical batches", max_trials=20)
def _p_determinism(d, rng):
    p, seed = float(rng.uniform()), int(rng.integers(2**63))
    a, b = sh.sample_polarization(p, 10_000, seed), sh.sample_polarization(p, 10_000, seed)
    q = rng.dirichlet(np.ones(d))
    c, e = sh.sample_projective(q, 1000, seed), sh.sample_projective(q, 1000, seed)
    return 0.0 if (a == b and c.outcomes == e.outcomes) else 1.0


@register("partition_merge", "shots", 0.0, "shots: split sampling merges to the serial run over the same sub-streams", max_trials=20)
def _p_partition(d, rng):
    p, seed, parts = float(rng.uniform()), int(rng.integers(2**63)), int(rng.integers(2, 6))
    n = 100_003
    whole = sh.sample_polarization(p, n, seed, parts=parts)
    sizes = [n // parts + (1 if i < n % parts else 0) for i in range(parts)]
    pieces = [sh.sample_polarization(p, k, sh.derive_seed(seed, i)) for i, k in enumerate(sizes)]
    return 0.0 if sh.merge_polarization(pieces, seed).outcomes == whole.outcomes else 1.0


@register("polarization_unbiased", "shots", 0.0, "shots: mean over 1000 seeds within 3 combined stderr of the exact value", max_trials=3)
def _p_unbiased(d, rng):
    p = float(rng.uniform(0.05, 0.95))
    base = int(rng.integers(2**63))
    ests, errs = [], []
    for j in range(1000):
        b = sh.sample_polarization(p, 1000, sh.derive_seed(base, j))
        ests.append(b.estimate)
        errs.append(b.stderr)
    combined = float(np.sqrt(np.sum(np.square(errs)))) / len(errs)
    return max(abs(float(np.mean(ests)) - (2 * p - 1)) - 3 * combined, 0.0)


@register("two_sigma_coverage", "shots", 0.0, "shots: 2-sigma intervals cover the exact value in 93-97% of seeds (n >= 1e4)", max_trials=2)
def _p_coverage(d, rng):
    p = float(rng.uniform(0.1, 0.9))
    base = int(rng.integers(2**63))
    hits = 0
    runs = 2000
    for j in range(runs):
        b = sh.sample_polarization(p, 10_000, sh.derive_seed(base, j))
        hits += abs(b.estimate - (2 * p - 1)) <= 2 * b.stderr
    frac = hits / runs
    return max(0.93 - frac, frac - 0.97, 0.0)


# negative controls: each must fail


@register("negative_control_fourier_monotonicity", "negative-control", 1e-9, "channels: a coherent (Hadamard/Fourier) unitary must violate monotonicity", negative_control=True)
def _p_neg_mono(d, rng):
    K = observable_from_spectrum(rng.normal(size=d))
    rho = make_density(np.diag(rng.dirichlet(np.ones(d) * 0.3) * 0.5 + np.eye(d)[0] * 0.5))
    out = ch.apply(ch.unitary_channel(fourier_matrix(d)), rho)
    return max(ms.skew_information(out, K) - ms.skew_information(rho, K), 0.0)


@register("negative_control_fourier_incoherence", "negative-control", 0.0, "channels: is_incoherent must reject the Hadamard/Fourier channel", negative_control=True)
def _p_neg_inc(d, rng):
    return 0.0 if ch.is_incoherent(ch.unitary_channel(fourier_matrix(d))) else 1.0


# -- runner -----------------------------------------------------------------------------

SUITES = ("core", "inequalities", "asymmetry", "monotonicity", "schemes", "shots")


def suite_names() -> list[str]:
    return ["all", *SUITES, "negative-control"]


def properties_in(suite: str) -> list[Property]:
    if suite == "all":
        return [p for p in REGISTRY.values() if not p.negative_control]
    if suite not in suite_names():
        raise UnknownSuite(f"unknown suite {suite!r}; choose from {', '.join(suite_names())}")
    return [p for p in REGISTRY.values() if p.suite == suite]


@dataclass
class PropertyReport:
    name: str
    trials: int
    failures: list = field(default_factory=list)
    max_violation: float = 0.0
    tol: float = 0.0
    anchor: str = ""

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        if other.name != self.name:
            raise ValueError("cannot merge reports of different properties")
        return PropertyReport(
            self.name,
            self.trials + other.trials,
            self.failures + other.failures,
            max(self.max_violation, other.max_violation),
            self.tol,
            self.anchor,
        )

    def to_dict(self) -> dict:
        return {
            "property": self.name,
            "trials": self.trials,
            "pass": self.passed,
            "max_violation": self.max_violation,
            "tolerance": self.tol,
            "failures": [{"seed": s, "dim": d, "violation": v} for s, d, v in self.failures],
            "anchor": self.anchor,
        }


def trial_seed(seed: int, name: str, dim: int, trial: int) -> int:
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode()), int(dim), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def replay(name: str, dim: int, seed: int) -> float:
    """Violation of property ``name`` for one recorded trial seed."""
    return float(REGISTRY[name].check(dim, np.random.default_rng(seed)))


def _dims_for(prop: Property, dims: Sequence[int]) -> list[int]:
    ds = list(prop.fixed_dims) if prop.fixed_dims else [int(d) for d in dims]
    if prop.max_dim is not None:
        ds = [d for d in ds if d <= prop.max_dim]
    return ds


def _run_unit(args) -> PropertyReport:
    name, dim, trials, seed = args
    prop = REGISTRY[name]
    report = PropertyReport(name, 0, tol=prop.tol, anchor=prop.anchor)
    for k in range(trials):
        s = trial_seed(seed, name, dim, k)
        v = float(prop.check(dim, np.random.default_rng(s)))
        report.trials += 1
        report.max_violation = max(report.max_violation, v)
        if not v <= prop.tol:
            report.failures.append((s, dim, v))
    return report


def run_properties(props: Sequence[Property], trials: int, dims: Sequence[int] = (2, 3, 4), seed: int = 0, jobs: int = 1) -> list[PropertyReport]:
    """Run the given properties for ``trials`` trials per dimension.

    Properties with ``max_trials`` are capped; those with ``fixed_dims`` run
    on their own dimensions only.
    """
    if trials < 1:
        raise QuantumInputError("trials must be >= 1")
    if any(int(d) < 2 for d in dims):
        raise QuantumInputError("dimensions must be >= 2")
    units = []
    for p in props:
        n = trials if p.max_trials is None else min(trials, p.max_trials)
        units.extend((p.name, d, n, seed) for d in _dims_for(p, dims))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_unit, units))
    else:
        parts = [_run_unit(u) for u in units]
    merged: dict[str, PropertyReport] = {p.name: PropertyReport(p.name, 0, tol=p.tol, anchor=p.anchor) for p in props}
    for part in parts:
        merged[part.name] = merged[part.name].merge(part)
    return list(merged.values())


def run_property_suite(suite: str = "all", trials: int = 100, dims: Sequence[int] = (2, 3, 4), seed: int = 0, jobs: int = 1) -> list[PropertyReport]:
    """Run every property of the named ``suite``."""
    return run_properties(properties_in(suite), trials, dims, seed, jobs)


def reports_to_text(reports: Sequence[PropertyReport]) -> str:
    width = max([len(r.name) for r in reports] + [8])
    lines = [f"{'property':<{width}}  {'trials':>6}  {'max_violation':>13}  {'tol':>7}  result"]
    for r in reports:
        lines.append(f"{r.name:<{width}}  {r.trials:>6}  {r.max_violation:>13.3e}  {r.tol:>7.0e}  {'PASS' if r.passed else 'FAIL'}")
        for s, d, v in r.failures[:5]:
            lines.append(f"{'':<{width}}    counterexample: dim={d} seed={s} violation={v:.3e}")
        if len(r.failures) > 5:
            lines.append(f"{'':<{width}}    ... {len(r.failures) - 5} more")
    return "\n".join(lines) + "\n"


def reports_to_csv(reports: Sequence[PropertyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["property", "trials", "pass", "max_violation", "tolerance", "n_failures", "first_failure_seed", "first_failure_dim"])
    for r in reports:
        first = r.failures[0] if r.failures else ("", "", "")
        w.writerow([r.name, r.trials, r.passed, repr(r.max_violation), repr(r.tol), len(r.failures), first[0], first[1]])
    return buf.getvalue()
