"""Qubit battery: one atom crossing a train of thermal cavities.

For a diagonal qubit state the collision map is a 2x2 column-stochastic
matrix fixed by the single rate A_tau and the cavity Boltzmann factor, so
charging reduces to iterating that matrix. The full joint-unitary route
(``ledger=True``) is kept for thermodynamic bookkeeping and as a check that
the 2x2 map is the exact partial trace.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TruncationWarning
from .model import (
    THERMAL_TAIL_TOL,
    ModelParams,
    build_effective_unitary,
    cavity_energies,
    default_n_max,
    qubit_energies,
    thermal_tail,
    thermal_weights,
    transition_probability,
)
from .thermo import DiagonalState, ThermoLedger, collision_step, ergotropy


def a_tau(params: ModelParams, n_max: int | None = None, tau: float | None = None) -> float:
    """Thermally averaged transition probability A_tau of one collision.

    The sum runs over the sectors n = 0..n_max-1 with Boltzmann weights
    normalised on 0..n_max, which is exactly what the truncated joint unitary
    produces (its boundary vector |g,n_max> never flips).
    """
    bw = params.beta * params.require_omega()
    if n_max is None:
        n_max = default_n_max(params)
    elif thermal_tail(bw, n_max) > THERMAL_TAIL_TOL:
        warnings.warn(
            f"thermal tail exp(-beta omega (n_max+1)) = {thermal_tail(bw, n_max):.3g} exceeds "
            f"{THERMAL_TAIL_TOL:g}; A_tau refers to the truncated cavity",
            TruncationWarning,
            stacklevel=2,
        )
    w = thermal_weights(bw, n_max)[:-1]
    s = transition_probability(params, np.arange(n_max), tau)
    return float(w @ s)


def transition_matrix(A: float, beta_omega: float) -> np.ndarray:
    b = math.exp(-beta_omega)
    return np.array([[1.0 - A, A * b], [A, 1.0 - A * b]])


def qubit_step(state, A: float, beta_omega: float) -> tuple[float, float]:
    """Apply one collision to the populations (p_g, p_e)."""
    if not 0.0 <= A <= 1.0:
        raise ValueError(f"A must lie in [0, 1], got {A}")
    p_g, p_e = state
    b = math.exp(-beta_omega)
    return p_g * (1.0 - A) + p_e * A * b, p_e * (1.0 - A * b) + p_g * A


def fixed_point(beta_omega: float) -> tuple[float, float]:
    """Inverted equilibrium populations (p_g, p_e) = (e^{-bw}, 1)/(1 + e^{-bw})."""
    p_e = 1.0 / (1.0 + math.exp(-beta_omega))
    return 1.0 - p_e, p_e


def subdominant_eigenvalue(A: float, beta_omega: float) -> float:
    return 1.0 - A * (math.exp(-beta_omega) + 1.0)


def charging_rate(A: float, beta_omega: float) -> float:
    lam = abs(subdominant_eigenvalue(A, beta_omega))
    return math.inf if lam == 0.0 else -math.log(lam)


def thermal_qubit(params: ModelParams) -> tuple[float, float]:
    return params.qubit_thermal()


def passive_qubit(params: ModelParams) -> tuple[float, float]:
    """Passive state left after extracting the ergotropy of the fixed point."""
    p_g, p_e = fixed_point(params.beta * params.require_omega())
    return p_e, p_g


def resolve_initial(params: ModelParams, initial) -> tuple[float, float]:
    """Turn 'thermal', 'passive', a (p_g, p_e) pair or a 2x2 diagonal matrix into populations."""
    if isinstance(initial, str):
        if initial == "thermal":
            return thermal_qubit(params)
        if initial == "passive":
            return passive_qubit(params)
        raise ValueError(f"unknown qubit initial state {initial!r}")
    arr = np.asarray(initial, dtype=complex)
    if arr.shape == (2, 2):
        if abs(arr[0, 1]) > 0 or abs(arr[1, 0]) > 0:
            raise ValueError("only qubit states diagonal in the energy basis are supported")
        arr = np.diag(arr)
    if arr.shape != (2,) or np.any(np.abs(arr.imag) > 0):
        raise ValueError("qubit initial state must be two real populations")
    p = arr.real
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"qubit populations must be non-negative and sum to 1, got {p}")
    return float(p[0]), float(p[1])


@dataclass(frozen=True)
class QubitFiguresOfMerit:
    A_tau: float
    rate: float
    ergotropy: float
    W_tot_thermal: float
    W_tot_passive: float
    eta_thermal: float
    eta_passive: float


def work_thermal_initial(params: ModelParams) -> float:
    """Total charging work starting from the thermal qubit (closed form)."""
    w, wg, we = params.require_omega(), params.omega_g, params.omega_e
    bw = params.beta * w
    x = math.exp(-bw)
    y = math.exp(-params.beta * params.omega_eg)
    return ((wg - w) * x + we) / (1.0 + x) - ((wg - w) + we * y) / (y + 1.0)


def qubit_ergotropy(params: ModelParams) -> float:
    return params.omega_eg * math.tanh(0.5 * params.beta * params.require_omega())


def eta_thermal_limits(params: ModelParams) -> tuple[float, float]:
    """(beta -> infinity, beta -> 0) limits of the thermal-start efficiency."""
    wl, w = params.omega_L, params.require_omega()
    return (wl - w) / wl, 2.0 * (wl - w) * w / wl**2


def qubit_figures_of_merit(params: ModelParams, n_max: int | None = None) -> QubitFiguresOfMerit:
    bw = params.beta * params.require_omega()
    A = a_tau(params, n_max)
    erg = qubit_ergotropy(params)
    w_th = work_thermal_initial(params)
    w_pas = params.omega_L * math.tanh(0.5 * bw)
    return QubitFiguresOfMerit(
        A_tau=A,
        rate=charging_rate(A, bw),
        ergotropy=erg,
        W_tot_thermal=w_th,
        W_tot_passive=w_pas,
        eta_thermal=erg / w_th,
        eta_passive=params.omega_eg / params.omega_L,
    )


@dataclass
class QubitChargeReport:
    trajectory: np.ndarray  # (n_collisions + 1, 2) rows of (p_g, p_e)
    A_tau: np.ndarray  # per collision
    fixed_point: tuple[float, float]
    figures: QubitFiguresOfMerit
    ledger: ThermoLedger | None = None
    n_max: int = 0
    collision_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def final(self) -> tuple[float, float]:
        return float(self.trajectory[-1, 0]), float(self.trajectory[-1, 1])

    @property
    def rate(self) -> float:
        return self.figures.rate

    def ergotropy_running(self, omega_eg: float) -> np.ndarray:
        return omega_eg * np.clip(self.trajectory[:, 1] - self.trajectory[:, 0], 0.0, None)


def run_qubit_charging(
    params: ModelParams,
    initial="thermal",
    n_collisions: int | None = None,
    *,
    collision_times: Sequence[float] | None = None,
    n_max: int | None = None,
    ledger: bool = False,
    entropy_production: bool = True,
) -> QubitChargeReport:
    """Charge the qubit with a sequence of collisions.

    Either ``n_collisions`` (all of duration ``params.tau``) or an explicit
    ``collision_times`` sequence must be given. With ``ledger=True`` every
    collision is also run through the joint unitary and the thermodynamic
    ledger, and the trajectory is taken from that exact partial trace.
    """
    if collision_times is None:
        if n_collisions is None:
            raise ValueError("give n_collisions or collision_times")
        times = np.full(n_collisions, params.tau, dtype=float)
    else:
        times = np.asarray(collision_times, dtype=float)
    if np.any(times < 0):
        raise ValueError("collision times must be non-negative")
    if n_max is None:
        n_max = default_n_max(params)
    bw = params.beta * params.require_omega()
    p = resolve_initial(params, initial)

    # one A per distinct duration; repeated durations are the common case
    uniq, inverse = np.unique(times, return_inverse=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        a_vals = np.array([a_tau(params, n_max, t) for t in uniq])[inverse] if len(times) else np.empty(0)

    traj = np.empty((len(times) + 1, 2))
    traj[0] = p
    book = ThermoLedger() if ledger else None
    if ledger:
        h_b = cavity_energies(params, n_max)
        state = DiagonalState(np.array(p), qubit_energies(params))
        unitaries = {t: build_effective_unitary(params, n_max, t) for t in uniq}
        for i, t in enumerate(times):
            state, rec = collision_step(
                state, unitaries[t], h_b, params.beta, entropy_production=entropy_production
            )
            book.append(rec)
            traj[i + 1] = state.probs
    else:
        b = math.exp(-bw)
        pg, pe = p
        for i, A in enumerate(a_vals):
            pg, pe = pg * (1.0 - A) + pe * A * b, pe * (1.0 - A * b) + pg * A
            traj[i + 1] = pg, pe

    return QubitChargeReport(
        trajectory=traj,
        A_tau=a_vals,
        fixed_point=fixed_point(bw),
        figures=qubit_figures_of_merit(params, n_max),
        ledger=book,
        n_max=n_max,
        collision_times=times,
    )


def qubit_ergotropy_of(p_g: float, p_e: float, params: ModelParams) -> float:
    value, _ = ergotropy(DiagonalState(np.array([p_g, p_e]), qubit_energies(params)))
    return value
