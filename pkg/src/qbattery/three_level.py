"""Exact three-level dynamics in one photon sector.

In the interaction picture the amplitudes of |g,n>, |e,n+1>, |h,n> obey

    i c_g' = eps c_g + Omega_L e^{-i delta t} c_h
    i c_e' = g sqrt(n+1) e^{-i delta t} c_h
    i c_h' = Omega_L e^{i delta t} c_g + g sqrt(n+1) e^{i delta t} c_e

which we integrate with fixed-step classical RK4, keeping the explicit time
dependence (no rotating-frame averaging). Comparing against the effective
two-level evolution measures the error of adiabatically eliminating |h>.
Populations are compared, since the effective model fixes amplitudes only
up to sector-dependent phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import UnderResolvedError
from .model import ModelParams

MAX_PHASE_STEP = 0.05
DEFAULT_PHASE_STEP = 0.02
VALIDITY_RATIO = 10.0


@dataclass(frozen=True)
class SectorAmplitudes:
    n: int
    c_g: complex
    c_e: complex
    c_h: complex = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.c_g, self.c_e, self.c_h], dtype=complex)

    @property
    def norm2(self) -> float:
        return abs(self.c_g) ** 2 + abs(self.c_e) ** 2 + abs(self.c_h) ** 2


@dataclass
class SectorTrajectory:
    n: int
    times: np.ndarray
    amplitudes: np.ndarray  # (len(times), 3) or (len(times), 3, k) for k initial vectors

    def __getitem__(self, k: int) -> SectorAmplitudes:
        c = self.amplitudes[k]
        return SectorAmplitudes(self.n, complex(c[0]), complex(c[1]), complex(c[2]))

    def __len__(self) -> int:
        return len(self.times)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.populations().sum(axis=1) - 1.0)))


def fastest_rate(params: ModelParams, n: int) -> float:
    return max(params.delta, params.Omega_L, params.g * math.sqrt(n + 1), abs(params.epsilon))


def default_dt(params: ModelParams, n: int) -> float:
    return DEFAULT_PHASE_STEP / max(fastest_rate(params, n), 1.0)


@numba.njit(cache=True)
def _rhs(t, c, eps, om, gs, delta, out):
    em = np.exp(-1j * delta * t)
    ep = np.conj(em)
    for k in range(c.shape[1]):
        cg, ce, ch = c[0, k], c[1, k], c[2, k]
        out[0, k] = -1j * (eps * cg + om * em * ch)
        out[1, k] = -1j * (gs * em * ch)
        out[2, k] = -1j * (om * ep * cg + gs * ep * ce)


@numba.njit(cache=True)
def _rk4(c0, t0, dt, n_steps, stride, eps, om, gs, delta):
    # c0 has shape (3, k): k initial vectors integrated side by side
    n_rec = n_steps // stride + 1
    if n_steps % stride != 0:
        n_rec += 1
    rec = np.empty((n_rec, 3, c0.shape[1]), dtype=np.complex128)
    times = np.empty(n_rec)
    c = c0.copy()
    k1 = np.empty_like(c)
    k2 = np.empty_like(c)
    k3 = np.empty_like(c)
    k4 = np.empty_like(c)
    rec[0] = c
    times[0] = t0
    j = 1
    for i in range(n_steps):
        t = t0 + i * dt
        _rhs(t, c, eps, om, gs, delta, k1)
        _rhs(t + 0.5 * dt, c + 0.5 * dt * k1, eps, om, gs, delta, k2)
        _rhs(t + 0.5 * dt, c + 0.5 * dt * k2, eps, om, gs, delta, k3)
        _rhs(t + dt, c + dt * k3, eps, om, gs, delta, k4)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % stride == 0 or i + 1 == n_steps:
            rec[j] = c
            times[j] = t0 + (i + 1) * dt
            j += 1
    return times[:j], rec[:j]


def _steps(t_final: float, dt: float) -> tuple[int, float]:
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if t_final == 0:
        return 0, dt
    n = max(1, math.ceil(t_final / dt - 1e-9))
    return n, t_final / n


def _integrate(params, n, c0, t_final, dt, t0, stride):
    if dt is None:
        dt = default_dt(params, n)
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps, dt = _steps(t_final, dt)
    if dt * fastest_rate(params, n) > MAX_PHASE_STEP:
        raise UnderResolvedError(
            f"under-resolved oscillation: dt*rate = {dt * fastest_rate(params, n):.3g} > {MAX_PHASE_STEP}"
        )
    gs = params.g * math.sqrt(n + 1)
    return _rk4(
        np.ascontiguousarray(c0, dtype=np.complex128),
        float(t0), float(dt), int(n_steps), int(stride),
        float(params.epsilon), float(params.Omega_L), float(gs), float(params.delta),
    )


def integrate_sector(
    params: ModelParams,
    n: int,
    initial: SectorAmplitudes,
    t_final: float,
    dt: float | None = None,
    *,
    t0: float = 0.0,
    stride: int = 1,
) -> SectorTrajectory:
    """Integrate the three-level amplitudes of sector n over [t0, t0 + t_final].

    ``dt`` is shrunk so that an integer number of steps covers the interval;
    ``stride`` keeps every stride-th step (the last one is always kept).
    """
    if n < 0:
        raise ValueError("photon index must be non-negative")
    c0 = initial.vector()[:, None]
    times, rec = _integrate(params, n, c0, t_final, dt, t0, stride)
    return SectorTrajectory(n, times, rec[:, :, 0])


def exact_collision_unitary(
    params: ModelParams, n: int, tau: float | None = None, dt: float | None = None, *, t0: float = 0.0
) -> np.ndarray:
    """3x3 propagator on (|g,n>, |e,n+1>, |h,n>) from t0 to t0 + tau."""
    tau = params.tau if tau is None else tau
    _, rec = _integrate(params, n, np.eye(3, dtype=complex), tau, dt, t0, max(1, 10**9))
    return rec[-1]


def effective_sector_hamiltonian(params: ModelParams, n: int) -> np.ndarray:
    """2x2 Hamiltonian on (|g,n>, |e,n+1>) after eliminating |h>."""
    om, g, d = params.Omega_L, params.g, params.delta
    G = om * g * math.sqrt(n + 1) / d
    return np.array(
        [[params.epsilon - om**2 / d, -G], [-G, -(g**2) * (n + 1) / d]], dtype=complex
    )


def effective_populations(params: ModelParams, n: int, c0, times) -> np.ndarray:
    """(|c_g|^2, |c_e|^2) of the effective evolution at each time, from amplitudes c0 at t = 0."""
    h = effective_sector_hamiltonian(params, n)
    lam, v = np.linalg.eigh(h)
    coeff = v.conj().T @ np.asarray(c0, dtype=complex)[:2]
    t = np.asarray(times, dtype=float)
    amps = (v[None, :, :] * (np.exp(-1j * np.outer(t, lam)) * coeff)[:, None, :]).sum(axis=2)
    return np.abs(amps) ** 2


@dataclass(frozen=True)
class AdiabaticityReport:
    max_pop_error: float
    max_h_population: float
    validity_flag: bool


def adiabaticity_report(
    params: ModelParams,
    n: int,
    tau: float | None = None,
    dt: float | None = None,
    initial: SectorAmplitudes | None = None,
    *,
    stride: int = 1,
    ratio_threshold: float = VALIDITY_RATIO,
) -> AdiabaticityReport:
    """Compare exact and effective populations over one collision.

    ``max_pop_error`` is the largest deviation of either |c_g|^2 or |c_e|^2
    over the recorded times.
    """
    tau = params.tau if tau is None else tau
    if initial is None:
        initial = SectorAmplitudes(n, 1.0, 0.0, 0.0)
    traj = integrate_sector(params, n, initial, tau, dt, stride=stride)
    pops = traj.populations()
    eff = effective_populations(params, n, initial.vector(), traj.times)
    err = float(np.max(np.abs(pops[:, :2] - eff))) if len(traj) else 0.0
    valid = params.delta >= ratio_threshold * max(params.Omega_L, params.g)
    return AdiabaticityReport(min(err, 1.0), float(np.max(pops[:, 2])), bool(valid))


def adiabatic_error_surface(
    params: ModelParams,
    omega_l_over_delta,
    g_over_delta,
    n: int,
    tau: float | None = None,
    dt: float | None = None,
    *,
    stride: int = 1,
) -> list[tuple[float, float, AdiabaticityReport]]:
    """Adiabaticity reports over a grid of coupling ratios Omega_L/delta and g/delta.

    delta, N0 and beta are taken from ``params``; each grid point replaces the
    two couplings. Points are independent and evaluated in row-major order.
    """
    out = []
    for x in np.atleast_1d(omega_l_over_delta):
        for y in np.atleast_1d(g_over_delta):
            p = params.replace(Omega_L=float(x) * params.delta, g=float(y) * params.delta)
            out.append((float(x), float(y), adiabaticity_report(p, n, tau, dt, stride=stride)))
    return out


def surface_rows(params: ModelParams, surface):
    """CSV rows (Omega_L/sqrt(delta), g/sqrt(delta), max_pop_error, max_h_population)."""
    root = math.sqrt(params.delta)
    for x, y, rep in surface:
        yield x * params.delta / root, y * params.delta / root, rep.max_pop_error, rep.max_h_population


SURFACE_COLUMNS = ("omega_L_over_sqrt_delta", "g_over_sqrt_delta", "max_pop_error", "max_h_population")
