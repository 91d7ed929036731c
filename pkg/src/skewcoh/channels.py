"""CPTP maps in Kraus form and generators for the channel classes that the
monotonicity arguments use: incoherent maps, von Neumann measurements,
K-invariant (covariant) dilations and classical encodings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DimensionMismatch, IncompleteKraus, NonIncoherentEnvironment, TooFewFlagStates
from .qmat import (
    DensityMatrix,
    as_density,
    as_observable,
    commutator,
    dagger,
    make_density,
    matrix_from_json,
    matrix_to_json,
    tensor,
)

COMPLETENESS_TOL = 1e-10
BRANCH_CUTOFF = 1e-14


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus: tuple
    labels: tuple | None = None

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise IncompleteKraus("channel has no Kraus operators")
        shape = ks[0].shape
        if any(k.shape != shape or k.ndim != 2 for k in ks):
            raise DimensionMismatch("Kraus operators must all have the same 2-d shape")
        total = sum(dagger(k) @ k for k in ks)
        err = float(np.max(np.abs(total - np.eye(shape[1]))))
        if err > COMPLETENESS_TOL:
            raise IncompleteKraus(f"sum K^dag K deviates from identity by {err:.3e}")
        if self.labels is not None and len(self.labels) != len(ks):
            raise DimensionMismatch("one label per Kraus operator is required")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __len__(self) -> int:
        return len(self.kraus)


def _input(channel: KrausChannel, rho) -> DensityMatrix:
    rho = as_density(rho)
    if rho.dim != channel.dim_in:
        raise DimensionMismatch(f"channel input dimension {channel.dim_in} != state dimension {rho.dim}")
    return rho


def apply(channel: KrausChannel, rho) -> DensityMatrix:
    rho = _input(channel, rho)
    out = sum(k @ rho.matrix @ dagger(k) for k in channel.kraus)
    return make_density(out)


def apply_selective(channel: KrausChannel, rho) -> list[tuple[float, DensityMatrix, int]]:
    """Outcome probabilities and normalized post-measurement states.

    Each entry is ``(p_n, rho_n, n)`` with ``n`` the Kraus index; branches
    with ``p_n < 1e-14`` are dropped.
    """
    rho = _input(channel, rho)
    out = []
    for n, k in enumerate(channel.kraus):
        un = k @ rho.matrix @ dagger(k)
        p = float(np.real(np.trace(un)))
        if p < BRANCH_CUTOFF:
            continue
        out.append((p, make_density(un / p), n))
    return out


def _basis_matrix(basis, d: int) -> np.ndarray:
    if basis is None:
        return np.eye(d, dtype=complex)
    b = np.asarray(basis, dtype=complex)
    if b.ndim == 2 and b.shape == (d, d):
        return b
    b = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in basis])
    if b.shape != (d, d):
        raise DimensionMismatch(f"basis must contain {d} vectors of length {d}")
    return b


def is_incoherent(channel: KrausChannel, basis=None, tol: float = 1e-10) -> bool:
    """True iff every ``K_n |k_i><k_i| K_n^dag`` is diagonal in ``basis``.

    ``basis`` is a unitary whose columns are the reference vectors (default:
    computational basis).
    """
    b = _basis_matrix(basis, channel.dim_in)
    for k in channel.kraus:
        kb = dagger(b) @ k @ b
        for i in range(b.shape[1]):
            col = kb[:, i]
            img = np.outer(col, col.conj())
            off = img - np.diag(np.diag(img))
            if np.max(np.abs(off)) > tol:
                return False
    return True


def random_incoherent(d: int, n_kraus: int, seed, basis=None, injective: bool = True) -> KrausChannel:
    """Random incoherent channel ``K_n = sum_i c_ni |f_n(i)><k_i|``.

    The column weights satisfy ``sum_n |c_ni|^2 = 1``. With ``injective`` the
    index maps are permutations and the channel has exactly ``n_kraus``
    operators. Otherwise the maps are arbitrary (resets included) and each
    ``K_n`` is split into its rank-one terms ``c_ni |f_n(i)><k_i|``, because
    colliding columns inside one operator would break completeness.
    """
    if n_kraus < 1:
        raise ValueError("n_kraus must be >= 1")
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(n_kraus, d)) + 1j * rng.normal(size=(n_kraus, d))
    c /= np.linalg.norm(c, axis=0)
    kraus = []
    for n in range(n_kraus):
        f = rng.permutation(d) if injective else rng.integers(0, d, size=d)
        if injective:
            k = np.zeros((d, d), dtype=complex)
            k[f, np.arange(d)] = c[n]
            kraus.append(k)
        else:
            for i in range(d):
                k = np.zeros((d, d), dtype=complex)
                k[f[i], i] = c[n, i]
                kraus.append(k)
    b = _basis_matrix(basis, d)
    return KrausChannel(tuple(b @ k @ dagger(b) for k in kraus))


def unitary_channel(u) -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),))


def projective_measurement(projectors: Sequence[np.ndarray], labels=None) -> KrausChannel:
    return KrausChannel(tuple(np.asarray(p, dtype=complex) for p in projectors), labels)


def dephasing(K) -> KrausChannel:
    """Rank-one von Neumann measurement in the eigenbasis of ``K``.

    Outcome ``n`` is the ``n``-th eigenvector in ascending eigenvalue order.
    """
    K = as_observable(K)
    v = K.eigenvectors
    return projective_measurement([np.outer(v[:, i], v[:, i].conj()) for i in range(K.dim)])


def spectral_projectors(M, gap: float = 1e-8) -> list[np.ndarray]:
    """Projectors onto the eigenspaces of ``M``; eigenvalues closer than ``gap`` share a block."""
    M = as_observable(M)
    w, v = M.eigenvalues, M.eigenvectors
    blocks, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] >= gap:
            vs = v[:, start:i]
            blocks.append(vs @ dagger(vs))
            start = i
    return blocks


def invariant_unitary(K_tot, seed, gap: float = 1e-8) -> np.ndarray:
    """Random unitary commuting with ``K_tot``.

    A Gaussian Hermitian matrix is projected onto the commutant of ``K_tot``
    by keeping only its blocks inside each eigenspace, then exponentiated.
    """
    K_tot = as_observable(K_tot)
    rng = np.random.default_rng(seed)
    n = K_tot.dim
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (g + dagger(g)) / 2
    h_proj = sum(p @ h @ p for p in spectral_projectors(K_tot, gap))
    v = expm(1j * h_proj)
    err = float(np.max(np.abs(v @ K_tot.matrix @ dagger(v) - K_tot.matrix)))
    if err > 1e-9:
        raise ArithmeticError(f"invariant unitary breaks the symmetry by {err:.3e}")
    return v


def dilation_channel(v, tau_B, d_A: int) -> KrausChannel:
    """Kraus form of ``rho_A -> Tr_B[V (rho_A (x) tau_B) V^dag]``."""
    tau = as_density(tau_B)
    d_B = tau.dim
    v = np.asarray(v, dtype=complex)
    if v.shape != (d_A * d_B, d_A * d_B):
        raise DimensionMismatch(f"coupling unitary shape {v.shape} does not match {d_A}x{d_B}")
    vt = v.reshape(d_A, d_B, d_A, d_B)
    kraus = []
    for lam, vec in zip(tau.eigenvalues, tau.eigenvectors.T):
        if lam < BRANCH_CUTOFF:
            continue
        # (I (x) <l|) V (I (x) |vec>) for each output flag l
        mid = np.einsum("albm,m->alb", vt, vec)
        for l in range(d_B):
            kraus.append(np.sqrt(lam) * mid[:, l, :])
    return KrausChannel(tuple(kraus))


def k_invariant_channel(K_A, K_B, tau_B, seed) -> tuple[KrausChannel, np.ndarray]:
    """Channel on A dilated through a unitary conserving ``K_A (x) I + I (x) K_B``.

    ``tau_B`` must commute with ``K_B``. Returns the channel and the coupling unitary.
    """
    K_A, K_B, tau = as_observable(K_A), as_observable(K_B), as_density(tau_B)
    if tau.dim != K_B.dim:
        raise DimensionMismatch("environment state and K_B dimensions differ")
    comm = float(np.max(np.abs(commutator(tau.matrix, K_B.matrix))))
    if comm > 1e-10:
        raise NonIncoherentEnvironment(f"environment state does not commute with K_B (max|[tau, K_B]| = {comm:.3e})")
    k_tot = tensor(K_A.matrix, np.eye(K_B.dim)) + tensor(np.eye(K_A.dim), K_B.matrix)
    v = invariant_unitary(k_tot, seed)
    return dilation_channel(v, tau, K_A.dim), v


def classical_encoding(channel: KrausChannel, rho_A, basis_B) -> DensityMatrix:
    """``sum_n p_n rho_n (x) |n><n|_B`` from the selective action of ``channel``.

    ``basis_B`` is either the flag dimension (computational flags) or a
    matrix whose columns are the flag states.
    """
    if isinstance(basis_B, (int, np.integer)):
        flags = np.eye(int(basis_B), dtype=complex)
    else:
        flags = np.asarray(basis_B, dtype=complex)
    if flags.shape[1] < len(channel):
        raise TooFewFlagStates(f"{len(channel)} Kraus branches need at least that many flag states, got {flags.shape[1]}")
    out = 0
    for p, rho_n, n in apply_selective(channel, rho_A):
        f = flags[:, n]
        out = out + p * tensor(rho_n.matrix, np.outer(f, f.conj()))
    return make_density(out)


def covariance_deviation(channel: KrausChannel, unitaries: Sequence[np.ndarray], rho) -> float:
    """``max_g |E(U rho U^dag) - U E(rho) U^dag|`` over the supplied unitaries."""
    rho = as_density(rho)
    e_rho = apply(channel, rho).matrix
    worst = 0.0
    for u in unitaries:
        lhs = apply(channel, u @ rho.matrix @ dagger(u)).matrix
        rhs = u @ e_rho @ dagger(u)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def kraus_to_json(channel: KrausChannel) -> list:
    return [matrix_to_json(k) for k in channel.kraus]


def kraus_from_json(obj) -> KrausChannel:
    if not isinstance(obj, list):
        raise ValueError("Kraus set must be a JSON array of matrices")
    return KrausChannel(tuple(matrix_from_json(m, where=f"kraus[{i}]") for i, m in enumerate(obj)))
