"""Model parameters and effective qubit-cavity dynamics.

Units are natural (hbar = k_B = 1). The joint Hilbert space is the qubit
{|g>, |e>} tensored with a Fock space truncated at ``n_max`` photons, with the
basis ordered qubit-major::

    |g,0>, |g,1>, ..., |g,n_max>, |e,0>, |e,1>, ..., |e,n_max>

so the state |q,n> sits at index ``q * (n_max + 1) + n`` with q = 0 for g and
q = 1 for e. The effective interaction (anti-Jaynes-Cummings) only couples
|g,n> with |e,n+1>, which keeps every 2x2 sector block index-computable.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCouplingError, SelectivityError, TruncationWarning

# thermal weight left beyond the truncation edge that we still call negligible
THERMAL_TAIL_TOL = 1e-12
LEAKAGE_TOL = 1e-8


@dataclass(frozen=True, kw_only=True)
class ModelParams:
    """Physical parameters of the driven three-level atom and the cavity.

    ``omega_g``/``omega_e`` are the qubit level frequencies, ``omega`` the
    cavity mode frequency (may be left as None for runs where it never enters,
    e.g. the cavity kernel), ``Omega_L`` and ``g`` the laser and cavity
    couplings, ``delta`` the common detuning from the upper level, ``N0`` the
    resonance index fixing the Stark shift, ``beta`` the inverse temperature
    and ``tau`` the collision duration.
    """

    omega_e: float
    Omega_L: float
    g: float
    delta: float
    N0: float
    beta: float
    omega: float | None = None
    omega_g: float = 0.0
    tau: float = 1.0

    def __post_init__(self) -> None:
        if not self.omega_e > self.omega_g:
            raise ValueError(f"need omega_e > omega_g, got {self.omega_e} <= {self.omega_g}")
        if self.omega is not None and not self.omega > 0:
            raise ValueError(f"cavity frequency must be positive, got {self.omega}")
        if not self.delta > 0:
            raise ValueError(f"detuning must be positive, got {self.delta}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.tau >= 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if self.Omega_L < 0 or self.g < 0:
            raise ValueError("couplings Omega_L and g are taken real and non-negative")
        for name in ("omega_e", "omega_g", "Omega_L", "g", "delta", "N0", "beta", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_epsilon(cls, *, epsilon: float, **kwargs) -> "ModelParams":
        """Build parameters with the Stark shift as the independent variable."""
        n0 = N0_from_epsilon(kwargs["Omega_L"], kwargs["g"], kwargs["delta"], epsilon)
        return cls(N0=n0, **kwargs)

    @property
    def omega_eg(self) -> float:
        return self.omega_e - self.omega_g

    @property
    def epsilon(self) -> float:
        return epsilon_from_N0(self)

    @property
    def omega_L(self) -> float:
        """Laser frequency omega_e - omega_g + omega (resonance of the two-photon process)."""
        return self.omega_eg + self.require_omega()

    @property
    def n0_is_integer(self) -> bool:
        return float(self.N0).is_integer()

    def require_omega(self) -> float:
        if self.omega is None:
            raise ValueError("this quantity needs the cavity frequency omega; pass omega explicitly")
        return self.omega

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def qubit_thermal(self) -> tuple[float, float]:
        """Thermal qubit populations (p_g, p_e) at inverse temperature beta."""
        x = self.beta * self.omega_eg
        p_e = 1.0 / (1.0 + math.exp(x))
        return 1.0 - p_e, p_e

    def mean_photons(self) -> float:
        """Thermal mean photon number 1/(exp(beta*omega) - 1) of the cavity."""
        return 1.0 / math.expm1(self.beta * self.require_omega())


def epsilon_from_N0(params: ModelParams) -> float:
    """Stark shift fixed by the resonance index: Omega_L^2/delta - (g^2/delta)(N0+1)."""
    return (params.Omega_L**2 - params.g**2 * (params.N0 + 1.0)) / params.delta


def N0_from_epsilon(Omega_L: float, g: float, delta: float, epsilon: float) -> float:
    """Inverse of :func:`epsilon_from_N0`."""
    if g == 0:
        raise DegenerateCouplingError("degenerate coupling: N0 is undefined when g = 0")
    return (Omega_L**2 - epsilon * delta) / g**2 - 1.0


@dataclass(frozen=True)
class SectorFrequencies:
    n: int
    Delta_n: float
    G_n: float
    Omega_n: float


def sector_arrays(params: ModelParams, n) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised (Delta_n, G_n, Omega_n) for an array of photon indices."""
    n = np.asarray(n, dtype=float)
    delta_n = params.g**2 / params.delta * (n - params.N0)
    g_n = params.Omega_L * params.g / params.delta * np.sqrt(n + 1.0)
    omega_n = np.hypot(0.5 * delta_n, g_n)
    return delta_n, g_n, omega_n


def sector_frequencies(params: ModelParams, n: int) -> SectorFrequencies:
    if n < 0:
        raise ValueError("photon index must be non-negative")
    d, gn, w = sector_arrays(params, n)
    return SectorFrequencies(int(n), float(d), float(gn), float(w))


def transition_probability(params: ModelParams, n, tau: float | None = None) -> np.ndarray:
    """Probability (G_n/Omega_n)^2 sin^2(Omega_n tau) of |g,n> <-> |e,n+1> in one collision."""
    tau = params.tau if tau is None else tau
    _, g_n, omega_n = sector_arrays(params, n)
    # G sin(W t)/W written through sinc so the W = 0 sector needs no special case
    amp = g_n * tau * np.sinc(omega_n * tau / np.pi)
    return amp**2


def fock_index(q: int, n: int, n_max: int) -> int:
    return q * (n_max + 1) + n


@dataclass(frozen=True)
class JointUnitary:
    """Dense unitary on the truncated qubit x Fock space (qubit-major ordering)."""

    matrix: np.ndarray
    n_max: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def unitarity_residual(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.dim))))


def build_effective_unitary(params: ModelParams, n_max: int, tau: float | None = None) -> JointUnitary:
    """Interaction-picture collision unitary of the effective qubit-cavity model.

    Each sector {|g,n>, |e,n+1>} for n < n_max gets the closed-form 2x2 block;
    |e,0> is left alone, and so is the boundary vector |g,n_max> whose partner
    |e,n_max+1> lies outside the truncated space.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    tau = params.tau if tau is None else tau
    dim = 2 * (n_max + 1)
    u = np.eye(dim, dtype=complex)
    n = np.arange(n_max)
    delta_n, g_n, omega_n = sector_arrays(params, n)
    c = np.cos(omega_n * tau)
    s_over_w = tau * np.sinc(omega_n * tau / np.pi)  # sin(W t)/W, -> t as W -> 0
    ig = n
    ie = n_max + 1 + n + 1
    u[ig, ig] = c + 0.5j * delta_n * s_over_w
    u[ie, ie] = c - 0.5j * delta_n * s_over_w
    u[ig, ie] = -1j * g_n * s_over_w
    u[ie, ig] = -1j * g_n * s_over_w
    return JointUnitary(u, n_max)


def build_selective_unitary(params: ModelParams, n_max: int, tau: float | None = None) -> JointUnitary:
    """High-selectivity limit: Rabi block in sector N0, pure phases elsewhere."""
    if not params.n0_is_integer:
        raise SelectivityError(f"selectivity requires integer N0, got {params.N0}")
    n0 = int(params.N0)
    if not 0 <= n0 < n_max:
        raise ValueError(f"need 0 <= N0 < n_max, got N0={n0}, n_max={n_max}")
    tau = params.tau if tau is None else tau
    dim = 2 * (n_max + 1)
    u = np.eye(dim, dtype=complex)
    n = np.arange(n_max)
    delta_n, g_n, _ = sector_arrays(params, n)
    ig = n
    ie = n_max + 2 + n
    u[ig, ig] = np.exp(0.5j * delta_n * tau)
    u[ie, ie] = np.exp(-0.5j * delta_n * tau)
    gt = g_n[n0] * tau
    a, b = n0, n_max + 2 + n0
    u[a, a] = u[b, b] = math.cos(gt)
    u[a, b] = u[b, a] = -1j * math.sin(gt)
    return JointUnitary(u, n_max)


def free_hamiltonian(params: ModelParams, n_max: int) -> np.ndarray:
    """Diagonal of H_0 = omega_g|g><g| + omega_e|e><e| + omega a^dag a (qubit-major)."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n = np.arange(n_max + 1) * params.require_omega()
    return np.concatenate([params.omega_g + n, params.omega_e + n])


def qubit_energies(params: ModelParams) -> np.ndarray:
    return np.array([params.omega_g, params.omega_e])


def cavity_energies(params: ModelParams, n_max: int) -> np.ndarray:
    return params.require_omega() * np.arange(n_max + 1, dtype=float)


def qubit_star_energies(params: ModelParams) -> np.ndarray:
    """Diagonal of H*_qubit = omega |g><g|, whose Gibbs state is the charged fixed point."""
    return np.array([params.require_omega(), 0.0])


def cavity_star_energies(params: ModelParams, n_max: int) -> np.ndarray:
    """Diagonal of H*'_cavity = -omega_eg (N0 |N0><N0| + (N0+1) |N0+1><N0+1|)."""
    if not params.n0_is_integer:
        raise SelectivityError(f"selectivity requires integer N0, got {params.N0}")
    n0 = int(params.N0)
    if not 0 <= n0 < n_max:
        raise ValueError(f"need 0 <= N0 < n_max, got N0={n0}, n_max={n_max}")
    e = np.zeros(n_max + 1)
    e[n0] = -params.omega_eg * n0
    e[n0 + 1] = -params.omega_eg * (n0 + 1)
    return e


def dress_schrodinger(u: JointUnitary, params: ModelParams, tau: float | None = None) -> JointUnitary:
    """Schroedinger-picture collision operator exp(-i H_0 tau) U_I(tau)."""
    tau = params.tau if tau is None else tau
    phases = np.exp(-1j * tau * free_hamiltonian(params, u.n_max))
    return JointUnitary(phases[:, None] * u.matrix, u.n_max)


def thermal_weights(beta_omega: float, n_max: int) -> np.ndarray:
    """Geometric photon distribution exp(-beta omega n)/Z normalised on 0..n_max."""
    w = np.exp(-beta_omega * np.arange(n_max + 1, dtype=float))
    return w / w.sum()


def thermal_tail(beta_omega: float, n_max: int) -> float:
    """Weight exp(-beta omega (n_max+1)) lost by cutting the untruncated thermal series."""
    return math.exp(-beta_omega * (n_max + 1))


def default_n_max(params: ModelParams) -> int:
    """Truncation keeping the cavity's thermal tail below THERMAL_TAIL_TOL.

    Starts from max(4 N0, 10 ceil(nbar), 64) and grows it when the thermal
    series at beta*omega still has weight above tolerance beyond that point.
    """
    n_max = max(4 * math.ceil(max(params.N0, 0.0)), 64)
    if params.omega is not None:
        bw = params.beta * params.omega
        n_max = max(n_max, 10 * math.ceil(params.mean_photons()))
        n_max = max(n_max, math.ceil(-math.log(THERMAL_TAIL_TOL) / bw))
    return int(n_max)


def leakage(probs: np.ndarray, tol: float = LEAKAGE_TOL, warn: bool = True) -> float:
    """Total photon probability on the top three levels n >= n_max - 2."""
    probs = np.asarray(probs)
    top = float(np.sum(probs[-3:]))
    if warn and top > tol:
        warnings.warn(
            f"{top:.3g} of the probability sits on the top three Fock levels; increase n_max",
            TruncationWarning,
            stacklevel=2,
        )
    return top
