"""Finite-statistics versions of both protocols.

Randomness comes from numpy's counter-based ``Philox`` generator. Every
measurement setting gets its own stream: a parent 64-bit seed is expanded
with ``SeedSequence(seed, spawn_key=(index,))``, and the derived 64-bit seed
is stored in the resulting :class:`ShotBatch` so any batch can be replayed on
its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidProbability, QuantumInputError
from .interferometry import (
    SCHEME1_BUDGET,
    Scheme1Config,
    SValueTable,
    default_phase,
    scheme1_polarization,
    scheme2_probabilities,
    sweep_budget,
    sweep_reconstruct,
    table_from_probabilities,
)
from .qmat import DensityMatrix, as_density, as_observable

RNG_NAME = "numpy.random.Philox (SeedSequence stream per setting)"


def derive_seed(seed: int, index: int) -> int:
    """64-bit seed of stream ``index`` below ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class ShotBatch:
    """Counts from ``n_shots`` repetitions of one measurement setting.

    For a polarization batch ``estimate`` is the mean of the +-1 outcomes
    and ``stderr`` its sample standard error. For a projective batch both are
    arrays: per-outcome frequencies and their binomial standard errors.
    """

    n_shots: int
    seed: int
    outcomes: dict
    estimate: float | np.ndarray
    stderr: float | np.ndarray

    def to_dict(self) -> dict:
        est = self.estimate.tolist() if isinstance(self.estimate, np.ndarray) else self.estimate
        err = self.stderr.tolist() if isinstance(self.stderr, np.ndarray) else self.stderr
        return {"n_shots": self.n_shots, "seed": self.seed, "counts": dict(self.outcomes), "estimate": est, "stderr": err}


def _check_probability(p: float) -> float:
    p = float(p)
    if not (-1e-12 <= p <= 1 + 1e-12) or not np.isfinite(p):
        raise InvalidProbability(f"probability {p!r} is outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def _check_shots(n_shots: int) -> int:
    if int(n_shots) != n_shots or n_shots < 1:
        raise QuantumInputError(f"n_shots must be a positive integer, got {n_shots!r}")
    return int(n_shots)


def polarization_batch(n_plus: int, n_shots: int, seed: int) -> ShotBatch:
    m = 2 * n_plus / n_shots - 1
    if n_shots > 1:
        var = (1 - m * m) * n_shots / (n_shots - 1)
        stderr = float(np.sqrt(max(var, 0.0) / n_shots))
    else:
        stderr = 0.0
    return ShotBatch(n_shots, int(seed), {"+1": int(n_plus), "-1": int(n_shots - n_plus)}, float(m), stderr)


def sample_polarization(p_plus: float, n_shots: int, seed: int, parts: int = 1) -> ShotBatch:
    """Bernoulli readout of an ancilla with ``P(+1) = p_plus``.

    ``parts > 1`` splits the shots across derived sub-streams; the merged
    counts equal a serial run over the same sub-streams.
    """
    p = _check_probability(p_plus)
    n = _check_shots(n_shots)
    if parts <= 1:
        return polarization_batch(int(make_rng(seed).binomial(n, p)), n, seed)
    sizes = [n // parts + (1 if i < n % parts else 0) for i in range(parts)]
    n_plus = sum(int(make_rng(derive_seed(seed, i)).binomial(k, p)) for i, k in enumerate(sizes) if k)
    return polarization_batch(n_plus, n, seed)


def merge_polarization(batches: Sequence[ShotBatch], seed: int) -> ShotBatch:
    n = sum(b.n_shots for b in batches)
    return polarization_batch(sum(b.outcomes["+1"] for b in batches), n, seed)


def sample_projective(probs, n_shots: int, seed: int) -> ShotBatch:
    """Multinomial readout of a ``d``-outcome projective measurement."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-10:
        raise InvalidProbability(f"probabilities must be nonnegative and sum to 1 (sum = {p.sum()!r})")
    p = np.clip(p, 0, None)
    p = p / p.sum()
    n = _check_shots(n_shots)
    counts = make_rng(seed).multinomial(n, p)
    freq = counts / n
    stderr = np.sqrt(freq * (1 - freq) / n)
    return ShotBatch(n, int(seed), {str(i): int(c) for i, c in enumerate(counts)}, freq, stderr)


@dataclass(frozen=True)
class ExperimentEstimate:
    estimate: float
    stderr: float
    purity_batch: ShotBatch
    overlap_batch: ShotBatch
    exact_polarizations: tuple[float, float]
    exact_value: float
    t: float
    qubit_exact: bool
    budget: int = SCHEME1_BUDGET

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "exact_value": self.exact_value,
            "t": self.t,
            "qubit_exact": self.qubit_exact,
            "budget": self.budget,
            "exact_polarizations": list(self.exact_polarizations),
            "purity_batch": self.purity_batch.to_dict(),
            "overlap_batch": self.overlap_batch.to_dict(),
            "rng": RNG_NAME,
        }


def exact_polarizations(rho, K, t: float, ancilla=None) -> tuple[float, float, float]:
    """``(m_purity, m_overlap, Tr[alpha sigma_z])`` from the simulated interferometer."""
    alpha = DensityMatrix.basis_state(2, 0) if ancilla is None else as_density(ancilla)
    cfg = Scheme1Config(alpha, K, t, rho)
    return scheme1_polarization(cfg, rotated=False), scheme1_polarization(cfg, rotated=True), cfg.sensitivity


def estimate_coherence_experiment(
    rho,
    K,
    t: float | None,
    n_shots_per_setting: int,
    seed: int,
    ancilla=None,
    qubit_exact: bool = False,
) -> ExperimentEstimate:
    """Shot-noise estimate of the lower bound from the two interferometer settings.

    ``qubit_exact`` uses the single phase ``pi/2`` with prefactor 1/2, which
    is exact for qubit observables ``n.sigma``; otherwise the finite-difference
    estimate at phase ``t`` is returned and ``exact_value`` is its
    infinite-shot limit.
    """
    rho, K = as_density(rho), as_observable(K)
    n = _check_shots(n_shots_per_setting)
    if n < 100:
        raise QuantumInputError("use at least 100 shots per setting")
    if qubit_exact:
        if rho.dim != 2:
            raise QuantumInputError("the qubit-exact variant needs a qubit state")
        t = np.pi / 2
        scale = 0.5
    else:
        t = default_phase(K) if t is None else float(t)
        scale = 1 / (2 * t * t)
    m_p, m_o, a = exact_polarizations(rho, K, t, ancilla)
    bp = sample_polarization((1 + m_p) / 2, n, derive_seed(seed, 0))
    bo = sample_polarization((1 + m_o) / 2, n, derive_seed(seed, 1))
    est = scale * (bp.estimate - bo.estimate) / a
    err = scale * float(np.hypot(bp.stderr, bo.stderr)) / abs(a)
    exact = scale * (m_p - m_o) / a
    return ExperimentEstimate(float(est), err, bp, bo, (m_p, m_o), float(exact), float(t), qubit_exact)


# -- noisy half-SWAP tables --------------------------------------------------------------

_SETTINGS = ("AB", "BA", "A", "B")


def noisy_table(rho_A, rho_B, i_beta: int, n_shots: int, seed: int, basis=None, interacting: bool = False) -> SValueTable:
    """S-value table assembled from multinomial readouts of the four settings."""
    a = as_density(rho_A)
    d = a.dim
    w = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    probs = scheme2_probabilities(rho_A, rho_B, i_beta, w)
    noisy = {k: sample_projective(probs[k], n_shots, derive_seed(seed, j)).estimate for j, k in enumerate(_SETTINGS)}
    return table_from_probabilities(noisy, d, w, i_beta, interacting, shots=n_shots)


def noisy_sweep_overlap(rho_A, rho_B, n_shots: int, seed: int, basis=None) -> dict:
    """Overlap from a shot-noisy ancilla sweep; each table uses its own stream."""
    d = as_density(rho_A).dim
    tables = [noisy_table(rho_A, rho_B, b, n_shots, derive_seed(seed, b), basis) for b in range(d)]
    return {
        "overlap": sweep_reconstruct(tables),
        "shots_per_setting": n_shots,
        "budget": sweep_budget(d),
        "total_shots": n_shots * 4 * d,
    }
