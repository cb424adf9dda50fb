"""Per-collision thermodynamics of repeated interactions.

A system S meets a fresh copy of B in the Gibbs state at inverse temperature
beta, the pair evolves with a joint unitary U, and B is discarded. For every
collision we record

    dE     = Tr[H_S (rho_S' - rho_S)]
    W      = Tr[(H_S + H_B)(rho_tot' - rho_tot)]
    Q      = Tr[H_B (omega_beta(H_B) - rho_B')]        (heat flowing from B to S)
    dS_vN  = S(rho_S') - S(rho_S)
    Sigma  = D(rho_tot' || rho_S' (x) omega_beta(H_B))

which satisfy dE = W + Q and dS_vN = Sigma + beta Q with Sigma >= 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import JointUnitary

# below this, eigenvalues are treated as zero inside logarithms (0 ln 0 := 0)
EIG_FLOOR = 1e-300


@dataclass(frozen=True)
class DiagonalState:
    """A state diagonal in the eigenbasis of its Hamiltonian."""

    probs: np.ndarray
    energies: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        e = np.asarray(self.energies, dtype=float)
        if p.shape != e.shape or p.ndim != 1:
            raise ValueError(f"probs and energies must be 1-D of equal length, got {p.shape} and {e.shape}")
        if np.any(p < -1e-15):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))
        object.__setattr__(self, "energies", e)

    @property
    def energy(self) -> float:
        return float(self.probs @ self.energies)

    @property
    def entropy(self) -> float:
        return shannon_entropy(self.probs)

    def matrix(self) -> np.ndarray:
        return np.diag(self.probs)


def gibbs(energies, beta: float) -> np.ndarray:
    """Populations of omega_beta(H) for a diagonal H."""
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > EIG_FLOOR]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    return shannon_entropy(np.linalg.eigvalsh(rho))


def relative_entropy(a: np.ndarray, b: np.ndarray, support_tol: float = 1e-12) -> float:
    """D(a||b) = Tr[a ln a - a ln b] via eigendecompositions.

    Returns ``math.inf`` when ``a`` puts more than ``support_tol`` of weight
    outside the support of ``b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 1:
        a = np.diag(a)
    if b.ndim == 1:
        b = np.diag(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    lam_a = np.linalg.eigvalsh(a)
    lam_b, vec_b = np.linalg.eigh(b)
    # weight of a along each eigenvector of b
    weights = np.real(np.einsum("ij,ik,kj->j", vec_b.conj(), a, vec_b))
    null = lam_b <= 1e-15 * max(lam_b.max(), EIG_FLOOR)
    if np.sum(weights[null]) > support_tol:
        return math.inf
    log_b = np.log(np.clip(lam_b, EIG_FLOOR, None))
    return float(-shannon_entropy(lam_a) - weights @ log_b)


def _energies(h) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim == 2:
        if np.any(np.abs(h - np.diag(np.diag(h))) > 0):
            raise ValueError("Hamiltonian must be diagonal in the working basis")
        h = np.diag(h)
    return np.real(h).astype(float)


@dataclass(frozen=True)
class StepRecord:
    dE: float
    W: float
    Q: float
    dS_vN: float
    Sigma: float
    beta: float

    def first_law_residual(self) -> float:
        return abs(self.dE - self.W - self.Q)

    def entropy_balance_residual(self) -> float:
        return abs(self.dS_vN - self.Sigma - self.beta * self.Q)


def _partial_traces(rho: np.ndarray, d0: int, d1: int) -> tuple[np.ndarray, np.ndarray]:
    r = rho.reshape(d0, d1, d0, d1)
    return np.einsum("ijkj->ik", r), np.einsum("ijil->jl", r)


def collision_step(
    state: DiagonalState,
    unitary,
    h_b,
    beta: float,
    *,
    system_first: bool = True,
    entropy_production: bool = True,
    offdiag_tol: float = 1e-10,
) -> tuple[DiagonalState, StepRecord]:
    """One collision of the system with a fresh thermal copy of B.

    ``unitary`` acts on the product space with the first factor being the
    qubit (the ordering fixed in :mod:`qbattery.model`). ``system_first``
    says whether the system is that first factor (qubit battery) or the
    second one (cavity battery). The new system state must stay diagonal;
    coherences above ``offdiag_tol`` raise.
    """
    u = np.asarray(unitary.matrix if isinstance(unitary, JointUnitary) else unitary)
    e_s = state.energies
    e_b = _energies(h_b)
    ds, db = len(e_s), len(e_b)
    if u.shape != (ds * db, ds * db):
        raise ValueError(f"unitary of shape {u.shape} does not act on {ds} x {db}")
    p_b = gibbs(e_b, beta)
    if system_first:
        p_tot = np.kron(state.probs, p_b)
        e_tot = np.add.outer(e_s, e_b).ravel()
    else:
        p_tot = np.kron(p_b, state.probs)
        e_tot = np.add.outer(e_b, e_s).ravel()

    rho_new = (u * p_tot) @ u.conj().T
    if system_first:
        rho_s, rho_b = _partial_traces(rho_new, ds, db)
    else:
        rho_b, rho_s = _partial_traces(rho_new, db, ds)
    coh = np.max(np.abs(rho_s - np.diag(np.diag(rho_s))))
    if coh > offdiag_tol:
        raise ValueError(f"collision created coherences of size {coh:.3g} in the system state")
    p_s_new = np.real(np.diag(rho_s)).copy()
    p_b_new = np.real(np.diag(rho_b))
    p_s_new = np.clip(p_s_new, 0.0, None)
    p_s_new /= p_s_new.sum()

    dE = float((p_s_new - state.probs) @ e_s)
    W = float((np.real(np.diag(rho_new)) - p_tot) @ e_tot)
    Q = float((p_b - p_b_new) @ e_b)
    dS = shannon_entropy(p_s_new) - state.entropy
    if entropy_production:
        ref = np.kron(p_s_new, p_b) if system_first else np.kron(p_b, p_s_new)
        sigma = _relative_entropy_to_diagonal(rho_new, ref)
    else:
        sigma = math.nan
    rec = StepRecord(dE, W, Q, dS, sigma, beta)
    return DiagonalState(p_s_new, e_s), rec


def _relative_entropy_to_diagonal(a: np.ndarray, b_diag: np.ndarray) -> float:
    # same quantity as relative_entropy(a, diag(b)) without diagonalising b
    lam_a = np.linalg.eigvalsh(a)
    diag_a = np.real(np.diag(a))
    null = b_diag <= EIG_FLOOR
    if np.sum(diag_a[null]) > 1e-12:
        return math.inf
    return float(-shannon_entropy(lam_a) - diag_a @ np.log(np.clip(b_diag, EIG_FLOOR, None)))


class ThermoLedger:
    """Sequential record of collisions with running totals of work and heat."""

    columns = ("step", "dE", "W", "Q", "dS_vN", "Sigma", "W_cum", "Q_cum")

    def __init__(self) -> None:
        self.records: list[StepRecord] = []

    def append(self, rec: StepRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def total_work(self) -> float:
        return math.fsum(r.W for r in self.records)

    @property
    def total_heat(self) -> float:
        return math.fsum(r.Q for r in self.records)

    def rows(self):
        w_cum = q_cum = 0.0
        for i, r in enumerate(self.records, start=1):
            w_cum += r.W
            q_cum += r.Q
            yield (i, r.dE, r.W, r.Q, r.dS_vN, r.Sigma, w_cum, q_cum)


def ergotropy(state: DiagonalState) -> tuple[float, DiagonalState]:
    """Ergotropy of a diagonal state and the passive state left after extraction.

    The passive state assigns the populations, sorted in decreasing order, to
    the energies sorted in increasing order.
    """
    order_e = np.argsort(state.energies, kind="stable")
    sorted_p = np.sort(state.probs)[::-1]
    passive = np.empty_like(state.probs)
    passive[order_e] = sorted_p
    value = float((state.probs - passive) @ state.energies)
    return max(value, 0.0), DiagonalState(passive, state.energies)


def ergotropy_bruteforce(state: DiagonalState) -> float:
    """Max over permutations of energy extracted; exponential cost, small states only."""
    e0 = state.energy
    best = 0.0
    for perm in itertools.permutations(range(len(state.probs))):
        best = max(best, e0 - float(state.probs[list(perm)] @ state.energies))
    return best


def total_work_closed_form(h_s, h_s_star, initial: DiagonalState, beta: float) -> float:
    """Work to charge from ``initial`` to the equilibrium state of H_S*.

    W_tot = Tr[(H_S - H_S*)(exp(-beta H_S*)/Z* - rho_0)], valid when H_S and
    H_S* commute (both diagonal here).
    """
    e = _energies(h_s)
    e_star = _energies(h_s_star)
    return float((e - e_star) @ (gibbs(e_star, beta) - initial.probs))
