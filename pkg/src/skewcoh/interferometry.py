"""Matrix-level simulation of the two ancilla-based detection schemes.

Scheme 1 (controlled-SWAP interferometer). Registers are ordered
``(control qubit, copy 1, copy 2)``. The control is sandwiched between two
Hadamards around a controlled SWAP of the copies, and its output
polarization is ``Tr[alpha sigma_z] * Tr[rho_1 rho_2]``. Running it on
``(rho, rho)`` and ``(rho, U_K(t) rho U_K(t)^dag)`` gives the purity and the
overlap that enter the finite-difference estimate of the lower bound.

Scheme 2 (half-SWAP network). Registers are ordered ``(A, ancilla qudit, B)``.
The gate ``sqrt(V) = (I - iV)/sqrt(2)`` acts on ``(A, ancilla)`` and then on
``(ancilla, B)``, and the ancilla is read out by a projective measurement in
a basis that contains its initial pure state ``|b><b|``. The ancilla output is

    beta_int = (rho_A + beta + i[beta, rho_A]) / 2
    beta_out = (beta_int + rho_B + i[beta_int, rho_B]) / 2

so a single run only sees the row ``b`` of ``rho_A`` and ``rho_B``. Summing
the readouts of the ``(A, B)`` and ``(B, A)`` runs gives, for ``i != b``,

    p_i + p'_i = 3/4 (A_ii + B_ii) + Re(A_ib B_bi)

and :func:`sweep_reconstruct` rebuilds ``Tr[rho_A rho_B]`` by repeating the
run with the ancilla in every basis state. The closed-form single-run
reconstruction (:func:`scheme2_reconstruct`) is implemented literally and checked
against the simulation; when the two disagree the report carries the
``FORMULA_MISMATCH`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    AncillaNotBasisElement,
    DimensionMismatch,
    IncompleteTable,
    NotUnitVector,
    QuantumInputError,
    ZeroPhase,
    ZeroSensitivityAncilla,
)
from .qmat import (
    HADAMARD,
    PAULI_Z,
    DensityMatrix,
    Observable,
    as_density,
    as_observable,
    bloch_vector,
    controlled,
    dagger,
    gell_mann,
    overlap,
    pauli_observable,
    purity,
    swap_operator,
    tensor,
    unitary_exp,
)

IDENTITY_TOL = 1e-10
FORMULA_TOL = 1e-8

SCHEME1_BUDGET = 2


def measurement_budget(d: int, interacting: bool = False) -> int:
    """Projective measurements the half-SWAP scheme needs (4d with interacting gates)."""
    return 4 * d if interacting else 5 * d


def sweep_budget(d: int) -> int:
    """Measurements used by :func:`sweep_reconstruct`: d ancilla settings x 2 orders x d outcomes, plus 2d direct."""
    return 2 * d * d + 2 * d


def tomography_count(d: int) -> int:
    return d * d - 1


# -- scheme 1 -------------------------------------------------------------------------


@dataclass(frozen=True)
class Scheme1Config:
    ancilla: DensityMatrix
    K: Observable
    t: float
    rho: DensityMatrix

    def __post_init__(self):
        object.__setattr__(self, "ancilla", as_density(self.ancilla))
        object.__setattr__(self, "K", as_observable(self.K))
        object.__setattr__(self, "rho", as_density(self.rho))
        if self.ancilla.dim != 2:
            raise DimensionMismatch("the control ancilla must be a qubit")
        if self.K.dim != self.rho.dim:
            raise DimensionMismatch(f"observable dimension {self.K.dim} != state dimension {self.rho.dim}")

    @property
    def sensitivity(self) -> float:
        return float(np.real(np.trace(self.ancilla.matrix @ PAULI_Z)))


def swap_test_polarization(alpha: np.ndarray, rho1: np.ndarray, rho2: np.ndarray) -> float:
    d = rho1.shape[0]
    n = d * d
    h = tensor(HADAMARD, np.eye(n))
    gate = h @ controlled(swap_operator(d)) @ h
    state = tensor(alpha, rho1, rho2)
    out = gate @ state @ dagger(gate)
    return float(np.real(np.trace(out @ tensor(PAULI_Z, np.eye(n)))))


def scheme1_polarization(cfg: Scheme1Config, rotated: bool = False) -> float:
    """Output ``<sigma_z>`` of the control qubit.

    With ``rotated`` the second copy is ``U_K(t) rho U_K(t)^dag``. The result
    is checked against ``Tr[alpha sigma_z]`` times the purity (or overlap).
    """
    a = cfg.sensitivity
    if abs(a) <= 1e-6:
        raise ZeroSensitivityAncilla(f"Tr[alpha sigma_z] = {a:.3e}; the interferometer output carries no signal")
    rho = cfg.rho.matrix
    if rotated:
        u = unitary_exp(cfg.K, cfg.t)
        second = u @ rho @ dagger(u)
    else:
        second = rho
    m = swap_test_polarization(cfg.ancilla.matrix, rho, second)
    expected = a * float(np.real(np.vdot(rho, second)))
    if abs(m - expected) > IDENTITY_TOL:
        raise ArithmeticError(f"polarization {m!r} violates the SWAP identity (expected {expected!r})")
    return m


def default_phase(K) -> float:
    K = as_observable(K)
    norm = K.spectral_norm
    return 1e-3 / norm if norm > 0 else 1e-3


def estimate_lower_bound_taylor(rho, K, t: float | None = None) -> float:
    """``(Tr[rho^2] - Tr[rho U rho U^dag]) / (2 t^2)`` with ``U = exp(iKt)``.

    The difference is evaluated as ``||rho - U rho U^dag||_F^2 / 2`` so it does
    not lose digits to cancellation at small ``t``.
    """
    rho, K = as_density(rho), as_observable(K)
    if t is None:
        t = default_phase(K)
    if t == 0:
        raise ZeroPhase("the Taylor estimator needs a nonzero phase t")
    u = unitary_exp(K, t)
    diff = rho.matrix - u @ rho.matrix @ dagger(u)
    return float(0.5 * np.real(np.vdot(diff, diff)) / (2 * t * t))


def qubit_exact_lower_bound(rho, n: Sequence[float]) -> float:
    """Qubit lower bound from a single overlap at phase ``pi/2``; exact for ``K = n.sigma``."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > 1e-10:
        raise NotUnitVector(f"n must be a unit 3-vector, got {n.tolist()}")
    rho = as_density(rho)
    if rho.dim != 2:
        raise DimensionMismatch("qubit_exact_lower_bound needs a qubit state")
    u = unitary_exp(pauli_observable(n), np.pi / 2)
    return 0.5 * (purity(rho) - overlap(rho, u @ rho.matrix @ dagger(u)))


# -- scheme 2 -------------------------------------------------------------------------


def sqrt_swap(d: int) -> np.ndarray:
    return (np.eye(d * d) - 1j * swap_operator(d)) / np.sqrt(2)


def _gate_on_pair(state: np.ndarray, gate: np.ndarray, d: int, first: bool) -> np.ndarray:
    """Apply a two-register gate to a 3-register density tensor of shape (d,)*6."""
    g = gate.reshape(d, d, d, d)
    gc = g.conj()
    if first:
        return np.einsum("xypq,pqzrsw,uvrs->xyzuvw", g, state, gc, optimize=True)
    return np.einsum("yzpq,xpqrsw,uvsw->xyzruv", g, state, gc, optimize=True)


def half_swap_ancilla(rho_A, rho_B, beta, stage: str = "out") -> np.ndarray:
    """Ancilla marginal after the first (``stage='int'``) or both half-SWAP gates."""
    a, b, beta = (np.asarray(getattr(x, "matrix", x), dtype=complex) for x in (rho_A, rho_B, beta))
    d = a.shape[0]
    if b.shape != (d, d) or beta.shape != (d, d):
        raise DimensionMismatch("A, ancilla and B must share one dimension")
    state = tensor(a, beta, b).reshape((d,) * 6)
    sv = sqrt_swap(d)
    state = _gate_on_pair(state, sv, d, first=True)
    if stage == "out":
        state = _gate_on_pair(state, sv, d, first=False)
    elif stage != "int":
        raise ValueError("stage must be 'int' or 'out'")
    return np.einsum("aibajb->ij", state)


def _probabilities(m: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ji,jk,ki->i", basis.conj(), m, basis))


@dataclass(frozen=True, eq=False)
class SValueTable:
    """Readout statistics ``S^i = d p_i - 1`` of the half-SWAP scheme."""

    dim: int
    basis: np.ndarray
    i_beta: int
    S_AB: np.ndarray
    S_BA: np.ndarray
    S_A: np.ndarray
    S_B: np.ndarray
    measurement_count: int
    shots: int | None = None

    def __post_init__(self):
        d = self.dim
        for name in ("S_AB", "S_BA", "S_A", "S_B"):
            s = getattr(self, name)
            if s is None:
                raise IncompleteTable(f"S-value table is missing {name}")
            s = np.asarray(s, dtype=float)
            if s.shape != (d,) or not np.all(np.isfinite(s)):
                raise IncompleteTable(f"{name} must hold {d} finite values")
            if abs(s.sum()) > 1e-10 or s.min() < -1 - 1e-10 or s.max() > d - 1 + 1e-10:
                raise QuantumInputError(f"{name} is not of the form d*p - 1 for a probability vector p")
            object.__setattr__(self, name, s)

    def probabilities(self, name: str) -> np.ndarray:
        return (1 + getattr(self, name)) / self.dim

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "i_beta": self.i_beta,
            "S_AB": self.S_AB.tolist(),
            "S_BA": self.S_BA.tolist(),
            "S_A": self.S_A.tolist(),
            "S_B": self.S_B.tolist(),
            "measurement_count": self.measurement_count,
            "shots": self.shots,
        }


def _basis_and_index(d: int, beta, basis) -> tuple[np.ndarray, int, np.ndarray]:
    w = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if w.shape != (d, d) or np.max(np.abs(dagger(w) @ w - np.eye(d))) > 1e-10:
        raise DimensionMismatch("basis must be a d x d unitary whose columns are the readout states")
    if beta is None:
        return w, 0, np.outer(w[:, 0], w[:, 0].conj())
    if isinstance(beta, (int, np.integer)):
        i = int(beta)
        return w, i, np.outer(w[:, i], w[:, i].conj())
    bm = as_density(beta).matrix
    if bm.shape != (d, d):
        raise DimensionMismatch("ancilla dimension differs from the states")
    p = _probabilities(bm, w)
    i = int(np.argmax(p))
    expect = np.zeros(d)
    expect[i] = 1
    if np.max(np.abs(p - expect)) > 1e-10:
        raise AncillaNotBasisElement("the ancilla must be one of the readout basis states")
    return w, i, bm


def scheme2_probabilities(rho_A, rho_B, beta=None, basis=None) -> dict[str, np.ndarray]:
    """Exact readout distributions of the four measurement settings."""
    a, b = as_density(rho_A), as_density(rho_B)
    if a.dim != b.dim:
        raise DimensionMismatch(f"states have dimensions {a.dim} and {b.dim}")
    w, _, bm = _basis_and_index(a.dim, beta, basis)
    return {
        "AB": _probabilities(half_swap_ancilla(a, b, bm), w),
        "BA": _probabilities(half_swap_ancilla(b, a, bm), w),
        "A": _probabilities(a.matrix, w),
        "B": _probabilities(b.matrix, w),
    }


def table_from_probabilities(probs: dict, d: int, basis, i_beta: int, interacting: bool = False, shots=None) -> SValueTable:
    s = {k: d * np.clip(np.asarray(v, dtype=float), 0, 1) - 1 for k, v in probs.items()}
    return SValueTable(
        dim=d,
        basis=basis,
        i_beta=i_beta,
        S_AB=s["AB"],
        S_BA=s["BA"],
        S_A=s["A"],
        S_B=s["B"],
        measurement_count=measurement_budget(d, interacting),
        shots=shots,
    )


def scheme2_run(rho_A, rho_B, beta=None, basis=None, interacting: bool = False) -> SValueTable:
    """Simulate the half-SWAP network and collect the S-value table.

    ``beta`` is the ancilla: a pure state that is a member of ``basis``, or
    the index of that member (default 0). ``interacting`` only changes the
    measurement accounting (4d instead of 5d).
    """
    a = as_density(rho_A)
    w, i_beta, _ = _basis_and_index(a.dim, beta, basis)
    probs = scheme2_probabilities(rho_A, rho_B, beta, basis)
    return table_from_probabilities(probs, a.dim, w, i_beta, interacting)


def scheme2_reconstruct(table: SValueTable) -> float:
    """Single-run closed-form overlap ``(1 + (d-1) x_A.x_B) / d``.

    ``x_A.x_B = sum_i [2(S_AB + S_BA) - 3/2 (S_A + S_B)
    + (S_A S_B[b] + S_B S_A[b]) / (2(d-1))] - 1``.
    Because each S-vector sums to zero, this evaluates to ``(2-d)/d`` for
    every input; :func:`scheme2_overlap` flags the disagreement.
    """
    d, b = table.dim, table.i_beta
    if not 0 <= b < d:
        raise IncompleteTable(f"i_beta={b} is outside the basis")
    terms = (
        2 * (table.S_AB + table.S_BA)
        - 1.5 * (table.S_A + table.S_B)
        + (table.S_A * table.S_B[b] + table.S_B * table.S_A[b]) / (2 * (d - 1))
    )
    xx = float(np.sum(terms)) - 1
    return (1 + (d - 1) * xx) / d


def sweep_reconstruct(tables: Sequence[SValueTable]) -> float:
    """Overlap from half-SWAP runs with the ancilla in every basis state.

    ``Tr[AB] = sum_i A_ii B_ii + sum_b sum_{i != b} Re(A_ib B_bi)`` and each
    run with ancilla ``b`` supplies the inner sum as
    ``sum_{i != b} (p_i + p'_i) - 3/4 sum_{i != b} (A_ii + B_ii)``.
    """
    if not tables:
        raise IncompleteTable("no tables to combine")
    d = tables[0].dim
    by_index = {}
    for t in tables:
        if t.dim != d:
            raise DimensionMismatch("tables of different dimensions")
        by_index[t.i_beta] = t
    missing = sorted(set(range(d)) - set(by_index))
    if missing:
        raise IncompleteTable(f"ancilla settings {missing} are missing from the sweep")
    pa = np.mean([t.probabilities("S_A") for t in tables], axis=0)
    pb = np.mean([t.probabilities("S_B") for t in tables], axis=0)
    total = float(np.dot(pa, pb))
    for b in range(d):
        t = by_index[b]
        mask = np.arange(d) != b
        both = t.probabilities("S_AB") + t.probabilities("S_BA")
        total += float(np.sum(both[mask]) - 0.75 * np.sum(pa[mask] + pb[mask]))
    return total


@dataclass
class Scheme2Report:
    table: SValueTable
    formula_overlap: float
    sweep_overlap: float
    exact_overlap: float
    formula_mismatch: bool
    budget: int
    sweep_budget: int
    flags: list = field(default_factory=list)

    @property
    def overlap(self) -> float:
        """The value to use downstream: the closed form if it agrees, otherwise the swept simulation."""
        return self.sweep_overlap if self.formula_mismatch else self.formula_overlap

    def to_dict(self) -> dict:
        return {
            "overlap": self.overlap,
            "formula_overlap": self.formula_overlap,
            "sweep_overlap": self.sweep_overlap,
            "exact_overlap": self.exact_overlap,
            "formula_mismatch": self.formula_mismatch,
            "budget": self.budget,
            "sweep_budget": self.sweep_budget,
            "flags": list(self.flags),
            "table": self.table.to_dict(),
        }


def scheme2_sweep(rho_A, rho_B, basis=None) -> list[SValueTable]:
    d = as_density(rho_A).dim
    return [scheme2_run(rho_A, rho_B, beta=b, basis=basis) for b in range(d)]


def scheme2_overlap(rho_A, rho_B, beta=None, basis=None, interacting: bool = False) -> Scheme2Report:
    a, b = as_density(rho_A), as_density(rho_B)
    table = scheme2_run(a, b, beta, basis, interacting)
    formula = scheme2_reconstruct(table)
    swept = sweep_reconstruct(scheme2_sweep(a, b, basis=table.basis))
    exact = overlap(a, b)
    mismatch = abs(formula - exact) > FORMULA_TOL
    return Scheme2Report(
        table=table,
        formula_overlap=formula,
        sweep_overlap=swept,
        exact_overlap=exact,
        formula_mismatch=mismatch,
        budget=table.measurement_count,
        sweep_budget=sweep_budget(a.dim),
        flags=["FORMULA_MISMATCH"] if mismatch else [],
    )


def scheme2_lower_bound(rho, K, t: float | None = None) -> dict:
    """Finite-difference lower bound with purity and overlap from the half-SWAP network."""
    rho, K = as_density(rho), as_observable(K)
    if t is None:
        t = default_phase(K)
    if t == 0:
        raise ZeroPhase("the Taylor estimator needs a nonzero phase t")
    u = unitary_exp(K, t)
    rotated = as_density(u @ rho.matrix @ dagger(u))
    pur = scheme2_overlap(rho, rho)
    ovl = scheme2_overlap(rho, rotated)
    return {
        "t": t,
        "purity": pur.overlap,
        "overlap": ovl.overlap,
        "estimate": (pur.overlap - ovl.overlap) / (2 * t * t),
        "flags": sorted(set(pur.flags) | set(ovl.flags)),
        "budget": pur.budget,
        "sweep_budget": 2 * pur.sweep_budget,
    }


# -- Bloch-vector algebra ----------------------------------------------------------------


def wedge_scale(d: int) -> float:
    """Scale making ``y = (x_A + x_beta + (d-1) x_A ^ x_beta)/2`` exact; equals 1 for qubits."""
    return float(np.sqrt(2 / (d * (d - 1))))


def _raw_wedge(a: np.ndarray, b: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("ijk,i,j->k", gell_mann(d).structure_constants, a, b)


def bloch_wedge(a, b, d: int | None = None, scale: float | None = None) -> np.ndarray:
    """``(a ^ b)_k = c_d sum_ij f_ijk a_i b_j`` (the cross product when d = 2)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch("Bloch vectors must have equal length")
    if d is None:
        d = int(round(np.sqrt(len(a) + 1)))
    if len(a) != d * d - 1:
        raise DimensionMismatch(f"Bloch vectors of length {len(a)} do not match d={d}")
    c = wedge_scale(d) if scale is None else scale
    return c * _raw_wedge(a, b, d)


def fit_wedge_scale(d: int, samples: int = 20, seed: int = 0) -> float:
    """Least-squares scale of the wedge term against the simulated intermediate ancilla."""
    from .randlab import haar_pure, hs_random_density

    rng = np.random.default_rng(seed)
    num = den = 0.0
    for _ in range(samples):
        rho_a = hs_random_density(d, d, int(rng.integers(2**63)))
        beta = haar_pure(d, int(rng.integers(2**63)))
        xa, xb = bloch_vector(rho_a), bloch_vector(beta)
        y = bloch_vector(half_swap_ancilla(rho_a, rho_a, beta, stage="int"))
        g = (d - 1) / 2 * _raw_wedge(xa, xb, d)
        r = y - (xa + xb) / 2
        num += float(g @ r)
        den += float(g @ g)
    return num / den


@dataclass(frozen=True)
class BlochCheck:
    y_formula: np.ndarray
    y_simulated: np.ndarray
    intermediate_deviation: float
    output_deviation_y_wedge_xb: float
    output_deviation_xb_wedge_y: float
    threshold: float = 1e-10

    @property
    def flagged(self) -> bool:
        return self.intermediate_deviation > self.threshold


def intermediate_bloch_check(rho_A, beta, rho_B=None) -> BlochCheck:
    """Compare the Bloch-vector update rules with the simulated ancilla.

    The output stage is tested in both operand orders of the wedge,
    ``y ^ x_B`` and ``x_B ^ y``; only the second agrees with the
    circuit, matching the operand order of the intermediate stage.
    """
    a, beta = as_density(rho_A), as_density(beta)
    b = a if rho_B is None else as_density(rho_B)
    d = a.dim
    xa, xbeta, xb = bloch_vector(a), bloch_vector(beta), bloch_vector(b)
    y = (xa + xbeta + (d - 1) * bloch_wedge(xa, xbeta, d)) / 2
    y_sim = bloch_vector(half_swap_ancilla(a, b, beta, stage="int"))
    z_sim = bloch_vector(half_swap_ancilla(a, b, beta, stage="out"))
    z_y_first = (xb + y_sim + (d - 1) * bloch_wedge(y_sim, xb, d)) / 2
    z_xb_first = (xb + y_sim + (d - 1) * bloch_wedge(xb, y_sim, d)) / 2
    return BlochCheck(
        y_formula=y,
        y_simulated=y_sim,
        intermediate_deviation=float(np.max(np.abs(y - y_sim))),
        output_deviation_y_wedge_xb=float(np.max(np.abs(z_y_first - z_sim))),
        output_deviation_xb_wedge_y=float(np.max(np.abs(z_xb_first - z_sim))),
    )
