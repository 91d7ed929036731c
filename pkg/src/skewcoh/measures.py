"""Scalar coherence and asymmetry functionals.

The skew information ``I(rho, K) = -1/2 Tr[[sqrt(rho), K]^2]`` is the
coherence measure; ``I_L(rho, K) = -1/4 Tr[[rho, K]^2]`` is its lower bound,
which is a quadratic functional of ``rho`` and therefore measurable with two
copies of the state. Both have a commutator form (used in production) and a
spectral form (kept as an independent cross-check).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .errors import DegenerateSpectrum, DimensionMismatch, EmptyGroup, NotUnitary, QuantumInputError
from .qmat import (
    DensityMatrix,
    Observable,
    as_density,
    as_observable,
    commutator,
    dagger,
    embed,
    gell_mann,
    is_unitary,
    make_density,
    make_observable,
    matrix_power,
    matrix_sqrt,
    partial_trace,
    purity,
    unitary_exp,
    von_neumann_entropy,
)


def _pair(rho, K) -> tuple[DensityMatrix, Observable]:
    rho, K = as_density(rho), as_observable(K)
    if rho.dim != K.dim:
        raise DimensionMismatch(f"state has dimension {rho.dim} but observable has dimension {K.dim}")
    return rho, K


def _real_trace(m: np.ndarray, what: str, tol: float = 1e-10) -> float:
    tr = complex(np.trace(m))
    if abs(tr.imag) > tol * max(1.0, abs(tr.real)):
        raise ArithmeticError(f"{what}: trace has imaginary residue {tr.imag:.3e}")
    return tr.real


def variance(rho, K) -> float:
    """``Tr[rho K^2] - Tr[rho K]^2``."""
    rho, K = _pair(rho, K)
    k = K.matrix
    mean = _real_trace(rho.matrix @ k, "variance")
    return _real_trace(rho.matrix @ k @ k, "variance") - mean**2


def pure_variance_from_populations(phi, K) -> float:
    """Variance of a pure state written through the populations ``|<phi|k_i>|^2``.

    Only used to cross-check :func:`variance`; it spells out how the pure-state
    uncertainty depends on the weights of ``phi`` on the eigenvectors of ``K``.
    """
    K = as_observable(K)
    phi = np.asarray(phi, dtype=complex).ravel()
    phi = phi / np.linalg.norm(phi)
    pops = np.abs(dagger(K.eigenvectors) @ phi) ** 2
    k = K.eigenvalues
    diag = np.sum(k**2 * (pops - pops**2))
    cross = np.outer(k * pops, k * pops)
    np.fill_diagonal(cross, 0.0)
    return float(diag - cross.sum())


def skew_information_p(rho, K, p: float) -> float:
    """Wigner-Yanase-Dyson skew information ``-1/2 Tr[[rho^p, K][rho^(1-p), K]]``."""
    if not 0 < p < 1:
        raise QuantumInputError(f"skew information exponent must lie in (0, 1), got {p}")
    rho, K = _pair(rho, K)
    a = commutator(matrix_power(rho, p), K.matrix)
    b = commutator(matrix_power(rho, 1 - p), K.matrix)
    return -0.5 * _real_trace(a @ b, "skew_information_p")


def skew_information(rho, K) -> float:
    """``-1/2 Tr[[sqrt(rho), K]^2]``, the K-coherence of ``rho``."""
    rho, K = _pair(rho, K)
    c = commutator(matrix_sqrt(rho), K.matrix)
    return -0.5 * _real_trace(c @ c, "skew_information") + 0.0  # no -0.0


def _k_in_state_basis(rho: DensityMatrix, K: Observable) -> np.ndarray:
    v = rho.eigenvectors
    return np.abs(dagger(v) @ K.matrix @ v) ** 2


def skew_information_spectral(rho, K) -> float:
    """``1/2 sum_ij (sqrt(l_i) - sqrt(l_j))^2 |<psi_i|K|psi_j>|^2``."""
    rho, K = _pair(rho, K)
    s = np.sqrt(rho.eigenvalues)
    gap = (s[:, None] - s[None, :]) ** 2
    return float(0.5 * np.sum(gap * _k_in_state_basis(rho, K)))


def lower_bound(rho, K) -> float:
    """``-1/4 Tr[[rho, K]^2]``."""
    rho, K = _pair(rho, K)
    c = commutator(rho.matrix, K.matrix)
    return -0.25 * _real_trace(c @ c, "lower_bound") + 0.0


def lower_bound_spectral(rho, K) -> float:
    rho, K = _pair(rho, K)
    lam = rho.eigenvalues
    gap = (lam[:, None] - lam[None, :]) ** 2
    return float(0.25 * np.sum(gap * _k_in_state_basis(rho, K)))


@dataclass(frozen=True)
class CoherenceReport:
    skew: float
    lower_bound: float
    variance: float
    classical_variance: float
    purity: float
    degenerate_observable: bool

    def to_dict(self) -> dict:
        return asdict(self)


def coherence_report(rho, K) -> CoherenceReport:
    rho, K = _pair(rho, K)
    v = variance(rho, K)
    i = skew_information(rho, K)
    return CoherenceReport(
        skew=i,
        lower_bound=lower_bound(rho, K),
        variance=v,
        classical_variance=v - i,
        purity=purity(rho),
        degenerate_observable=K.degenerate,
    )


# -- multipartite -----------------------------------------------------------------


def local_coherence(rho_multi, dims: Sequence[int], site: int, K) -> float:
    """Skew information of the global state with ``K`` acting on subsystem ``site``."""
    rho = as_density(rho_multi)
    K = as_observable(K)
    return skew_information(rho, embed(K.matrix, dims, site))


def residual_coherence(rho_multi, dims: Sequence[int], site: int, K) -> float:
    """Global minus marginal K-coherence at ``site``; nonnegative by superadditivity."""
    rho = as_density(rho_multi)
    marginal = partial_trace(rho, dims, [site])
    return local_coherence(rho, dims, site, K) - skew_information(marginal, K)


def _su_unitary(theta: np.ndarray, generators: np.ndarray) -> np.ndarray:
    return expm(1j * np.einsum("a,aij->ij", theta, generators))


def discord_min(
    rho_AB,
    dims: tuple[int, int],
    spectrum: Sequence[float],
    restarts: int = 20,
    seed: int = 0,
    rtol: float = 1e-6,
) -> tuple[float, Observable]:
    """Minimize ``I(rho_AB, K_A (x) I)`` over ``K_A = U diag(spectrum) U^dag``.

    Random-restart Nelder-Mead over the chart ``U = exp(i sum theta_j s_j)``
    (normalized Gell-Mann generators of ``su(d_A)``). Returns the best value
    and the observable achieving it.
    """
    rho = as_density(rho_AB)
    d_a, d_b = (int(x) for x in dims)
    if d_a * d_b != rho.dim:
        raise DimensionMismatch(f"dims {dims} do not match state dimension {rho.dim}")
    lam = np.asarray(spectrum, dtype=float)
    if lam.shape != (d_a,):
        raise DimensionMismatch(f"spectrum needs {d_a} entries, got {lam.shape}")
    if np.ptp(lam) <= 1e-12:
        raise DegenerateSpectrum("all spectrum entries are equal; the minimum is trivially 0")
    if restarts < 1:
        raise QuantumInputError("discord_min needs at least one restart")

    sq = matrix_sqrt(rho)
    m = rho.matrix
    gens = gell_mann(d_a).normalized if d_a > 1 else np.zeros((0, 1, 1))
    eye_b = np.eye(d_b)

    def observable(theta):
        u = _su_unitary(theta, gens)
        return (u * lam) @ dagger(u)

    def objective(theta):
        k = np.kron(observable(theta), eye_b)
        # I = Tr[rho K^2] - Tr[sqrt(rho) K sqrt(rho) K]
        return float(np.real(np.trace(m @ k @ k) - np.trace(sq @ k @ sq @ k)))

    rng = np.random.default_rng(seed)
    n = len(gens)
    best_val, best_theta = np.inf, np.zeros(n)
    for _ in range(restarts):
        theta0 = rng.uniform(-np.pi, np.pi, size=n)
        prev = np.inf
        # restart the simplex from its own optimum until the value stalls
        for _ in range(20):
            res = minimize(
                objective,
                theta0,
                method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000 * max(n, 1), "adaptive": n > 4},
            )
            theta0 = res.x
            if abs(prev - res.fun) <= rtol * max(abs(res.fun), 1e-12) or res.fun < 1e-14:
                break
            prev = res.fun
        if res.fun < best_val:
            best_val, best_theta = float(res.fun), res.x
    return max(best_val, 0.0), make_observable(observable(best_theta))


# -- asymmetry ---------------------------------------------------------------------


class GroupRep:
    """A finite list of unitaries ``U(g)`` acting on one system.

    Closure is not checked: twirling averages the list exactly as given.
    """

    def __init__(self, elements: Sequence[np.ndarray]):
        elements = [np.asarray(u, dtype=complex) for u in elements]
        if not elements:
            raise EmptyGroup("group representation has no elements")
        d = elements[0].shape[0]
        for idx, u in enumerate(elements):
            if u.shape != (d, d):
                raise DimensionMismatch(f"group element {idx} has shape {u.shape}, expected {(d, d)}")
            if not is_unitary(u):
                raise NotUnitary(f"group element {idx} is not unitary")
        self.elements = elements
        self.dim = d

    @classmethod
    def phase_group(cls, Q, m: int = 64) -> "GroupRep":
        """``exp(i 2 pi j Q / m)`` for ``j = 0..m-1``.

        For ``Q`` with integer spectrum this is the exact U(1) twirl as soon
        as ``m`` exceeds the spread of the spectrum.
        """
        Q = as_observable(Q)
        return cls([unitary_exp(Q, 2 * np.pi * j / m) for j in range(m)])

    def __len__(self) -> int:
        return len(self.elements)


def g_twirl(rho, group: GroupRep) -> DensityMatrix:
    rho = as_density(rho)
    if group.dim != rho.dim:
        raise DimensionMismatch(f"group acts on dimension {group.dim}, state has {rho.dim}")
    acc = sum(u @ rho.matrix @ dagger(u) for u in group.elements)
    return make_density(acc / len(group))


def asymmetry(rho, Q) -> float:
    """Skew information with respect to the supercharge ``Q``."""
    return skew_information(rho, Q)


def rel_entropy_asymmetry(rho, group: GroupRep) -> float:
    """``S(G[rho]) - S(rho)`` in nats."""
    rho = as_density(rho)
    return von_neumann_entropy(g_twirl(rho, group)) - von_neumann_entropy(rho)
