"""Validated quantum states and operators, plus the dense operator constructions
(Gell-Mann basis, SWAP, projectors, gates) the rest of the package is built on.

Conventions
-----------
* Multi-register operators use row-major ordering: the leftmost tensor factor
  is the slowest-varying index, so ``tensor(a, b)[i*db + j, k*db + l]`` equals
  ``a[i, k] * b[j, l]``.
* Gell-Mann generators are ordered symmetric pairs ``(j<k)``, then
  antisymmetric pairs ``(j<k)``, then the ``d-1`` diagonal generators.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NotHermitian,
    NotPositive,
    NotUnitary,
    NotUnitTrace,
    QuantumInputError,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
UNITARY_TOL = 1e-10
EIGEN_FLOOR_FACTOR = 10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _square(matrix, what: str = "matrix") -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"{what} must be a non-empty square matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix with its spectral decomposition.

    Build instances with :func:`make_density` (or the ``from_*``
    constructors); the raw constructor does not validate.
    ``eigenvalues`` are clamped to ``[0, 1]``; ``eigenvectors`` holds the
    matching orthonormal eigenvectors as columns. Eigenvalues below the
    eigensolver noise floor ``10 d eps`` are stored as exact zeros.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectrum(self) -> list[tuple[float, np.ndarray]]:
        return [(float(l), self.eigenvectors[:, i]) for i, l in enumerate(self.eigenvalues)]

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise QuantumInputError("state vector has zero norm")
        psi = psi / norm
        return make_density(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return make_density(np.eye(d) / d)

    @classmethod
    def basis_state(cls, d: int, i: int) -> "DensityMatrix":
        m = np.zeros((d, d), dtype=complex)
        m[i, i] = 1
        return make_density(m)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def make_density(matrix) -> DensityMatrix:
    """Validate ``matrix`` as a quantum state and cache its spectrum.

    Raises NotHermitian, NotUnitTrace or NotPositive with the measured
    violation. Eigenvalues above ``-1e-10`` are accepted and clamped to 0.
    """
    if isinstance(matrix, DensityMatrix):
        return matrix
    m = _square(matrix, "density matrix")
    herm = float(np.max(np.abs(m - dagger(m))))
    if herm > HERMITIAN_TOL:
        raise NotHermitian(f"density matrix is not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    m = (m + dagger(m)) / 2
    tr = complex(np.trace(m)).real
    if abs(tr - 1) > TRACE_TOL:
        raise NotUnitTrace(f"density matrix trace is {tr!r}, |Tr rho - 1| = {abs(tr - 1):.3e}")
    w, v = np.linalg.eigh(m)
    if w[0] < -PSD_TOL:
        raise NotPositive(f"density matrix is not positive semidefinite: min eigenvalue = {w[0]:.6g}")
    w = np.clip(w, 0.0, 1.0)
    # eigh is only accurate to ~d eps in absolute terms; below that floor an
    # eigenvalue is noise, and sqrt would blow it up to ~1e-8
    w[w < EIGEN_FLOOR_FACTOR * len(w) * np.finfo(float).eps] = 0.0
    w.setflags(write=False)
    return DensityMatrix(_frozen(m), w, _frozen(v))


def as_density(x) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else make_density(x)


@dataclass(frozen=True, eq=False)
class Observable:
    """A Hermitian operator with eigenvalues (ascending) and eigenvectors."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degenerate: bool = field(default=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectral_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def make_observable(matrix, degeneracy_tol: float = 1e-9) -> Observable:
    if isinstance(matrix, Observable):
        return matrix
    m = _square(matrix, "observable")
    herm = float(np.max(np.abs(m - dagger(m))))
    if herm > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(m)))):
        raise NotHermitian(f"observable is not Hermitian: max|K - K^dag| = {herm:.3e}")
    m = (m + dagger(m)) / 2
    w, v = np.linalg.eigh(m)
    scale = max(1.0, float(np.max(np.abs(w))))
    degenerate = bool(np.any(np.diff(w) < degeneracy_tol * scale)) if len(w) > 1 else False
    w.setflags(write=False)
    return Observable(_frozen(m), w, _frozen(v), degenerate)


def as_observable(x) -> Observable:
    return x if isinstance(x, Observable) else make_observable(x)


def observable_from_spectrum(eigenvalues, basis=None) -> Observable:
    """``U diag(eigenvalues) U^dag``; ``basis`` columns are the eigenvectors (default computational)."""
    lam = np.asarray(eigenvalues, dtype=float)
    u = np.eye(len(lam), dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    return make_observable(u @ np.diag(lam) @ dagger(u))


def pauli_observable(n: Sequence[float]) -> Observable:
    n = np.asarray(n, dtype=float)
    return make_observable(n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z)


def matrix_sqrt(rho) -> np.ndarray:
    """Principal square root from the (clamped) spectral decomposition."""
    rho = as_density(rho)
    v = rho.eigenvectors
    return (v * np.sqrt(rho.eigenvalues)) @ dagger(v)


def matrix_power(rho, p: float) -> np.ndarray:
    rho = as_density(rho)
    v = rho.eigenvectors
    lam = rho.eigenvalues
    # 0**p is 0 for p > 0; keep exact zeros exact
    powered = np.where(lam > 0, np.power(np.where(lam > 0, lam, 1.0), p), 0.0)
    return (v * powered) @ dagger(v)


def tensor(*ops) -> np.ndarray:
    """Kronecker product, leftmost factor slowest."""
    out = np.asarray(np.asarray(ops[0]), dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _check_dims(total: int, dims: Sequence[int]) -> list[int]:
    dims = [int(x) for x in dims]
    if any(x < 1 for x in dims) or int(np.prod(dims)) != total:
        raise DimensionMismatch(f"subsystem dims {dims} do not multiply to total dimension {total}")
    return dims


def partial_trace_matrix(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of an arbitrary square operator, keeping the listed subsystems in order."""
    m = _square(m)
    dims = _check_dims(m.shape[0], dims)
    keep = sorted({int(k) for k in keep})
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionMismatch(f"keep={keep} is not a nonempty subset of range({len(dims)})")
    n = len(dims)
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionMismatch("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep]))
    return r.reshape(dk, dk)


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> DensityMatrix:
    rho = as_density(rho)
    return make_density(partial_trace_matrix(rho.matrix, dims, keep))


def embed(op, dims: Sequence[int], site: int) -> np.ndarray:
    """``I (x) ... (x) op (x) ... (x) I`` with ``op`` on subsystem ``site``."""
    op = np.asarray(op, dtype=complex)
    dims = [int(x) for x in dims]
    if not 0 <= site < len(dims) or op.shape != (dims[site], dims[site]):
        raise DimensionMismatch(f"operator of shape {op.shape} cannot act on site {site} of dims {dims}")
    left = int(np.prod(dims[:site]))
    right = int(np.prod(dims[site + 1 :]))
    return tensor(np.eye(left), op, np.eye(right))


class GellMannBasis:
    """Generalized Gell-Mann generators for dimension ``d``.

    ``normalized`` holds the ``d**2 - 1`` traceless Hermitian generators with
    ``Tr[s_i s_j] = 2 delta_ij``; ``tau`` holds the rescaled generators
    ``sqrt(d(d-1)/2) * s_i`` with ``Tr[tau_i tau_j] = d(d-1) delta_ij``, for
    which ``rho = (I + x.tau)/d`` has ``|x| = 1`` exactly on pure states.
    ``labels`` records ``('s', j, k)``, ``('a', j, k)`` or ``('d', l)``.
    """

    def __init__(self, d: int):
        if int(d) < 2:
            raise QuantumInputError(f"Gell-Mann basis needs d >= 2, got {d}")
        d = int(d)
        self.dim = d
        gens, labels = [], []
        for j in range(d):
            for k in range(j + 1, d):
                g = np.zeros((d, d), dtype=complex)
                g[j, k] = g[k, j] = 1
                gens.append(g)
                labels.append(("s", j, k))
        for j in range(d):
            for k in range(j + 1, d):
                g = np.zeros((d, d), dtype=complex)
                g[j, k] = -1j
                g[k, j] = 1j
                gens.append(g)
                labels.append(("a", j, k))
        for l in range(1, d):
            diag = np.zeros(d)
            diag[:l] = 1
            diag[l] = -l
            gens.append(np.diag(diag * np.sqrt(2 / (l * (l + 1)))).astype(complex))
            labels.append(("d", l))
        self.labels = tuple(labels)
        self.normalized = _frozen(np.stack(gens))
        self.scale = float(np.sqrt(d * (d - 1) / 2))
        self.tau = _frozen(self.scale * self.normalized)

    def __len__(self) -> int:
        return self.dim**2 - 1

    @functools.cached_property
    def structure_constants(self) -> np.ndarray:
        """Real antisymmetric ``f_ijk`` with ``[s_i, s_j] = 2i sum_k f_ijk s_k``."""
        s = self.normalized
        prod = np.einsum("aij,bjk->abik", s, s)
        comm = prod - np.transpose(prod, (1, 0, 2, 3))
        f = np.einsum("abij,cji->abc", comm, s) * (-0.25j)
        f = f.real.copy()
        f.setflags(write=False)
        return f


@functools.lru_cache(maxsize=32)
def gell_mann(d: int) -> GellMannBasis:
    return GellMannBasis(d)


def bloch_vector(rho, basis: GellMannBasis | None = None) -> np.ndarray:
    """Coordinates ``x`` with ``rho = (I + x.tau)/d``, i.e. ``x_i = Tr[rho tau_i]/(d-1)``."""
    m = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    d = m.shape[0]
    basis = basis or gell_mann(d)
    if basis.dim != d:
        raise DimensionMismatch(f"basis dimension {basis.dim} != state dimension {d}")
    return np.einsum("aij,ji->a", basis.tau, m).real / (d - 1)


def operator_from_bloch(x, d: int) -> np.ndarray:
    """``(I + x.tau)/d`` without positivity validation."""
    basis = gell_mann(d)
    x = np.asarray(x, dtype=float)
    if x.shape != (d * d - 1,):
        raise DimensionMismatch(f"Bloch vector for d={d} needs {d * d - 1} components, got {x.shape}")
    return (np.eye(d) + np.einsum("a,aij->ij", x, basis.tau)) / d


def state_from_bloch(x, d: int) -> DensityMatrix:
    return make_density(operator_from_bloch(x, d))


def swap_operator(d: int) -> np.ndarray:
    """Permutation ``sum_ij |i j><j i|`` on two ``d``-dimensional registers."""
    v = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            v[i * d + j, j * d + i] = 1
    return v


def swap_from_gell_mann(d: int) -> np.ndarray:
    """SWAP assembled from the generator expansion ``(I + sum tau_i (x) tau_i / (d-1)) / d``."""
    tau = gell_mann(d).tau
    acc = np.einsum("aij,akl->ikjl", tau, tau).reshape(d * d, d * d)
    return (np.eye(d * d) + acc / (d - 1)) / d


def symmetric_projectors(d: int) -> tuple[np.ndarray, np.ndarray]:
    v = swap_operator(d)
    eye = np.eye(d * d)
    return (eye + v) / 2, (eye - v) / 2


def unitary_exp(K, t: float) -> np.ndarray:
    """``exp(i K t)`` from the spectral decomposition of ``K``."""
    K = as_observable(K)
    v = K.eigenvectors
    return (v * np.exp(1j * K.eigenvalues * t)) @ dagger(v)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0])))) <= tol


def controlled(u) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) U`` with the control qubit as leftmost factor."""
    u = _square(u, "controlled unitary")
    if not is_unitary(u):
        err = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
        raise NotUnitary(f"controlled() needs a unitary, max|U^dag U - I| = {err:.3e}")
    n = u.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, :n] = np.eye(n)
    out[n:, n:] = u
    return out


def fourier_matrix(d: int) -> np.ndarray:
    """Discrete Fourier unitary; equals the Hadamard gate for ``d == 2``."""
    w = np.exp(2j * np.pi / d)
    idx = np.arange(d)
    return w ** np.outer(idx, idx) / np.sqrt(d)


def purity(rho) -> float:
    m = as_density(rho).matrix
    return float(np.real(np.vdot(m, m)))


def overlap(a, b) -> float:
    a, b = as_density(a), as_density(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"overlap of states with dimensions {a.dim} and {b.dim}")
    # Tr[a b] for Hermitian a, b is the Frobenius inner product
    return float(np.real(np.vdot(a.matrix, b.matrix)))


def linear_entropy(rho) -> float:
    """``d/(d-1) (1 - Tr[rho^2])``, normalized to 1 on the maximally mixed state."""
    d = as_density(rho).dim
    return d / (d - 1) * (1 - purity(rho))


def von_neumann_entropy(rho) -> float:
    """Natural-log entropy; eigenvalues below 1e-14 contribute nothing."""
    lam = as_density(rho).eigenvalues
    lam = lam[lam > 1e-14]
    return float(-np.sum(lam * np.log(lam)))


# -- JSON exchange format -------------------------------------------------------


def matrix_to_json(m) -> dict:
    """``{"dim": d, "re": [[...]], "im": [[...]]}``; non-square matrices carry ``dim = [rows, cols]``."""
    m = np.asarray(m.matrix if isinstance(m, (DensityMatrix, Observable)) else m, dtype=complex)
    dim = m.shape[0] if m.shape[0] == m.shape[1] else [m.shape[0], m.shape[1]]
    return {"dim": dim, "re": [[float(x) for x in row] for row in m.real], "im": [[float(x) for x in row] for row in m.imag]}


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    """Parse the exchange format; errors name the offending key."""
    if not isinstance(obj, dict):
        raise QuantumInputError(f"{where}: expected a JSON object with keys 'dim', 're', 'im'")
    for key in ("dim", "re"):
        if key not in obj:
            raise QuantumInputError(f"{where}: missing key '{key}'")
    dim = obj["dim"]
    if isinstance(dim, int) and dim > 0:
        shape = (dim, dim)
    elif isinstance(dim, list) and len(dim) == 2 and all(isinstance(x, int) and x > 0 for x in dim):
        shape = tuple(dim)
    else:
        raise QuantumInputError(f"{where}: key 'dim' must be a positive integer, got {dim!r}")
    parts = []
    for key in ("re", "im"):
        if key not in obj:
            parts.append(np.zeros(shape))
            continue
        try:
            arr = np.asarray(obj[key], dtype=float)
        except (TypeError, ValueError):
            raise QuantumInputError(f"{where}: key '{key}' must be a nested list of numbers") from None
        if arr.shape != shape:
            raise QuantumInputError(f"{where}: key '{key}' has shape {arr.shape}, expected {shape} from 'dim'")
        parts.append(arr)
    return parts[0] + 1j * parts[1]
