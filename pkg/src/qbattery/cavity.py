"""Cavity battery: a stream of thermal atoms crossing one cavity.

The photon distribution p_n evolves with a tridiagonal column-stochastic
kernel. Its formal invariant vector grows like (p_g/p_e)^n, so there is no
normalisable steady state; in the high-selectivity limit the dynamics
collapses onto the sector {N0, N0+1}, which then relaxes to an inverted
two-level distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LeakageError, NormalizationError, SelectivityError, TruncationWarning
from .model import (
    ModelParams,
    build_effective_unitary,
    cavity_energies,
    qubit_energies,
    sector_arrays,
    transition_probability,
)
from .thermo import DiagonalState, ThermoLedger, collision_step

NORM_TOL = 1e-8
LEAK_REPORT_TOL = 1e-6
NEG_TOL = 1e-15
RATIO_FLOOR = 1e-14


@dataclass(frozen=True)
class TridiagonalKernel:
    """Column-stochastic tridiagonal map on p_0..p_{n_max}.

    ``sub[n]`` is the weight carried from n-1 up to n, ``sup[n]`` the weight
    carried from n+1 down to n and ``diag[n]`` the weight that stays.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    tau: float
    qubit_thermal: tuple[float, float]

    @property
    def n_max(self) -> int:
        return len(self.diag) - 1

    def apply(self, p: np.ndarray) -> np.ndarray:
        out = self.diag * p
        out[1:] += self.sub[1:] * p[:-1]
        out[:-1] += self.sup[:-1] * p[1:]
        return out

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        m += np.diag(self.sub[1:], -1)
        m += np.diag(self.sup[:-1], 1)
        return m

    def column_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[:-1] += self.sub[1:]
        s[1:] += self.sup[:-1]
        return s


def build_kernel(params: ModelParams, n_max: int, tau: float | None = None) -> TridiagonalKernel:
    """Photon-number kernel for one collision with a thermal qubit.

    At the top level the upward move out of n_max is dropped and its weight
    stays on the diagonal, matching the truncated joint unitary whose
    boundary vector |g,n_max> is left untouched.
    """
    if params.n0_is_integer and n_max < params.N0 + 4:
        raise ValueError(f"n_max={n_max} too small for N0={params.N0}; need n_max >= N0 + 4")
    tau = params.tau if tau is None else tau
    p_g, p_e = params.qubit_thermal()
    s = transition_probability(params, np.arange(n_max + 1), tau)
    s[n_max] = 0.0  # boundary closure
    s_below = np.concatenate([[0.0], s[:-1]])  # s_{n-1}, with |e,0> frozen
    sub = p_g * s_below
    sup = p_e * s
    sup[n_max] = 0.0
    diag = p_g * (1.0 - s) + p_e * (1.0 - s_below)
    return TridiagonalKernel(sub, diag, sup, tau, (p_g, p_e))


def detailed_balance_ratio(kernel: TridiagonalKernel) -> np.ndarray:
    """Ratio p_{n+1}/p_n of the formal invariant vector (flux balance between n and n+1).

    This is p_g/p_e >= 1 in every active sector, hence no normalisable steady state.
    """
    up = kernel.sub[1:]
    down = kernel.sup[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(down > 0, up / down, np.nan)


@dataclass(frozen=True)
class CavityState:
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) < 2:
            raise ValueError("cavity state needs a 1-D probability vector")
        if np.any(p < -NEG_TOL):
            raise ValueError("photon probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"photon probabilities must sum to 1, got {p.sum()!r}")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    @property
    def mean_n(self) -> float:
        return float(np.arange(len(self.probs)) @ self.probs)

    def leakage(self) -> float:
        return float(self.probs[-3:].sum())


def thermal_state(nbar: float, n_max: int) -> CavityState:
    """Geometric photon distribution with mean nbar (before truncation)."""
    if nbar <= 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return CavityState(p)
    q = nbar / (nbar + 1.0)
    p = q ** np.arange(n_max + 1, dtype=float)
    return CavityState(p / p.sum())


def uniform_state(lo: int, hi: int, n_max: int) -> CavityState:
    """Equal weight on every level lo..hi inclusive."""
    if not 0 <= lo <= hi <= n_max:
        raise ValueError(f"need 0 <= lo <= hi <= n_max, got {lo}..{hi} with n_max={n_max}")
    p = np.zeros(n_max + 1)
    p[lo : hi + 1] = 1.0 / (hi - lo + 1)
    return CavityState(p)


def sector_state(p_n0: float, p_n0p1: float, n0: int, n_max: int) -> CavityState:
    p = np.zeros(n_max + 1)
    p[n0] = p_n0
    p[n0 + 1] = p_n0p1
    return CavityState(p)


@dataclass
class Diagnostics:
    collision_index: np.ndarray
    p_N0: np.ndarray
    p_N0p1: np.ndarray
    p_up: np.ndarray
    p_down: np.ndarray
    ratio: np.ndarray
    mean_n: np.ndarray

    columns = ("collision_index", "p_N0", "p_N0p1", "p_up", "p_down", "ratio", "mean_n")

    def rows(self):
        for k in range(len(self.collision_index)):
            yield tuple(
                int(self.collision_index[k]) if c == "collision_index" else float(getattr(self, c)[k])
                for c in self.columns
            )


def metastability_diagnostics(snapshots: np.ndarray, sector: int, indices=None) -> Diagnostics:
    """Per-snapshot sector populations, escape mass above/below and the inversion ratio."""
    snaps = np.atleast_2d(np.asarray(snapshots, dtype=float))
    n0 = int(sector)
    if not 0 <= n0 < snaps.shape[1] - 1:
        raise ValueError(f"sector {n0} outside the truncated space")
    if indices is None:
        indices = np.arange(len(snaps))
    p0 = snaps[:, n0]
    p1 = snaps[:, n0 + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p0 >= RATIO_FLOOR, p1 / p0, np.nan)
    return Diagnostics(
        collision_index=np.asarray(indices),
        p_N0=p0,
        p_N0p1=p1,
        p_up=snaps[:, n0 + 2 :].sum(axis=1),
        p_down=snaps[:, :n0].sum(axis=1),
        ratio=ratio,
        mean_n=snaps @ np.arange(snaps.shape[1]),
    )


@dataclass
class CavityRun:
    indices: np.ndarray
    snapshots: np.ndarray  # (n_snapshots, n_max + 1)
    final: CavityState
    diagnostics: Diagnostics | None
    ledger: ThermoLedger | None
    max_leakage: float

    @property
    def mean_n(self) -> np.ndarray:
        return self.snapshots @ np.arange(self.snapshots.shape[1])

    def snapshot_rows(self):
        for i, p in zip(self.indices, self.snapshots):
            for n, pn in enumerate(p):
                yield int(i), n, float(pn)


def _snapshot_schedule(n_collisions: int, stride: int | None, snapshot_at) -> np.ndarray:
    if snapshot_at is not None:
        idx = sorted({int(i) for i in snapshot_at} | {0})
        if idx[-1] > n_collisions:
            raise ValueError("snapshot index beyond the run length")
        return np.array(idx)
    stride = stride or max(1, n_collisions)
    idx = list(range(0, n_collisions + 1, stride))
    if idx[-1] != n_collisions:
        idx.append(n_collisions)
    return np.array(idx)


def run_cavity_charging(
    params: ModelParams,
    initial: CavityState,
    n_collisions: int,
    *,
    stride: int | None = None,
    snapshot_at: Sequence[int] | None = None,
    collision_times: Sequence[float] | None = None,
    sector: int | None = None,
    ledger: bool = False,
    abort_on_leakage: bool = False,
) -> CavityRun:
    """Iterate the tridiagonal kernel from ``initial`` for ``n_collisions`` atoms.

    Snapshots are taken at collision 0 and every ``stride`` collisions (or at
    the explicit ``snapshot_at`` indices) plus the last one. Metastability
    diagnostics are attached when N0 is an integer or ``sector`` is given.
    ``ledger=True`` also runs each collision through the dense joint unitary
    for exact work/heat bookkeeping (cost grows as n_max^3 per collision).
    """
    n_max = initial.n_max
    if collision_times is None:
        times = np.full(n_collisions, params.tau)
    else:
        times = np.asarray(collision_times, dtype=float)
        if len(times) != n_collisions:
            raise ValueError("collision_times must have n_collisions entries")
    sched = _snapshot_schedule(n_collisions, stride, snapshot_at)
    kernels: dict[float, TridiagonalKernel] = {}

    snaps = np.empty((len(sched), n_max + 1))
    p = initial.probs.copy()
    k = 0
    if sched[0] == 0:
        snaps[0] = p
        k = 1
    book = ThermoLedger() if ledger else None
    if ledger:
        e_cav = cavity_energies(params, n_max)
        e_q = qubit_energies(params)
        unitaries: dict[float, object] = {}
    max_leak = float(p[-3:].sum())
    for i, t in enumerate(times, start=1):
        kern = kernels.get(t)
        if kern is None:
            kern = kernels[t] = build_kernel(params, n_max, t)
        if ledger:
            u = unitaries.get(t)
            if u is None:
                u = unitaries[t] = build_effective_unitary(params, n_max, t)
            st, rec = collision_step(
                DiagonalState(p, e_cav), u, e_q, params.beta, system_first=False
            )
            book.append(rec)
        p = kern.apply(p)
        low = p.min()
        if low < -NEG_TOL:
            warnings.warn(f"negative photon probability {low:.3g} clamped at collision {i}", RuntimeWarning)
        np.clip(p, 0.0, None, out=p)
        drift = abs(p.sum() - 1.0)
        if drift > NORM_TOL:
            raise NormalizationError(f"normalisation drifted by {drift:.3g} at collision {i}")
        leak = float(p[-3:].sum())
        max_leak = max(max_leak, leak)
        if leak > LEAK_REPORT_TOL and abort_on_leakage:
            raise LeakageError(f"{leak:.3g} of the probability on the top three levels at collision {i}")
        if k < len(sched) and sched[k] == i:
            snaps[k] = p
            k += 1
    if max_leak > LEAK_REPORT_TOL:
        warnings.warn(
            f"up to {max_leak:.3g} of the probability reached the top three Fock levels; increase n_max",
            TruncationWarning,
        )

    if sector is None and params.n0_is_integer:
        sector = int(params.N0)
    diag = metastability_diagnostics(snaps, sector, sched) if sector is not None else None
    return CavityRun(sched, snaps, CavityState(p / p.sum()), diag, book, max_leak)


def selective_kernel(params: ModelParams, tau: float | None = None) -> np.ndarray:
    """2x2 map on (p_N0, p_N0+1) in the high-selectivity limit."""
    if not params.n0_is_integer:
        raise SelectivityError(f"selectivity requires integer N0, got {params.N0}")
    tau = params.tau if tau is None else tau
    p_g, _ = params.qubit_thermal()
    _, g_n, _ = sector_arrays(params, params.N0)
    s2 = math.sin(float(g_n) * tau) ** 2
    return np.array(
        [[1.0 - p_g * s2, (1.0 - p_g) * s2], [p_g * s2, 1.0 - (1.0 - p_g) * s2]]
    )


def selective_fixed_point(params: ModelParams) -> tuple[float, float]:
    """Invariant (p_N0, p_N0+1) = (1 - p_g, p_g) of the sector map."""
    p_g, _ = params.qubit_thermal()
    return 1.0 - p_g, p_g


def selective_subdominant_eigenvalue(params: ModelParams, tau: float | None = None) -> float:
    tau = params.tau if tau is None else tau
    _, g_n, _ = sector_arrays(params, params.N0)
    return 0.5 * (1.0 + math.cos(2.0 * float(g_n) * tau))


def selective_rate(params: ModelParams, tau: float | None = None) -> float:
    lam = selective_subdominant_eigenvalue(params, tau)
    return math.inf if lam == 0.0 else -math.log(lam)


def selective_final_state(params: ModelParams, initial: CavityState) -> CavityState:
    """Long-time state in the selective limit: sector weight redistributed, rest frozen."""
    n0 = int(params.N0)
    p = initial.probs.copy()
    total = p[n0] + p[n0 + 1]
    a, b = selective_fixed_point(params)
    p[n0], p[n0 + 1] = a * total, b * total
    return CavityState(p)


@dataclass(frozen=True)
class CavityFiguresOfMerit:
    W_tot: float
    ergotropy: float
    eta: float


def cavity_figures_of_merit(params: ModelParams, initial, final) -> CavityFiguresOfMerit:
    """Selective-regime work, ergotropy and efficiency from sector populations.

    ``eta`` is NaN when the populations of N0+1 did not change (no charging).
    """
    if not params.n0_is_integer:
        raise SelectivityError(f"selective figures of merit need integer N0, got {params.N0}")
    n0 = int(params.N0)
    p0 = np.asarray(getattr(initial, "probs", initial), dtype=float)
    pf = np.asarray(getattr(final, "probs", final), dtype=float)
    w, wl = params.require_omega(), params.omega_L
    gain = pf[n0 + 1] - p0[n0 + 1]
    work = wl * gain
    erg = w * (pf[n0 + 1] - pf[n0])
    eta = math.nan if gain == 0.0 else (w / wl) * (pf[n0 + 1] - pf[n0]) / gain
    return CavityFiguresOfMerit(float(work), float(erg), float(eta))


def cavity_eta_thermal(params: ModelParams) -> float:
    """Selective-limit efficiency when the cavity starts thermal at the atoms' temperature."""
    w, wl, b = params.require_omega(), params.omega_L, params.beta
    return (w / wl) * (-math.expm1(-b * params.omega_eg)) * (1.0 + math.exp(-b * w)) / (-math.expm1(-b * wl))


def cavity_eta_passive(params: ModelParams) -> float:
    return params.require_omega() / params.omega_L
