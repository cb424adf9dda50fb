"""Repeated-interaction quantum batteries in atom-cavity QED.

Two batteries built from a laser-driven three-level atom and a cavity mode:
a qubit charged by a train of thermal cavities, and a cavity charged by a
stream of thermal atoms.
"""

from .model import (
    JointUnitary,
    ModelParams,
    SectorFrequencies,
    N0_from_epsilon,
    build_effective_unitary,
    build_selective_unitary,
    epsilon_from_N0,
    free_hamiltonian,
    sector_frequencies,
)
from .thermo import DiagonalState, StepRecord, ThermoLedger, collision_step, ergotropy, relative_entropy
from .qubit import a_tau, qubit_figures_of_merit, qubit_step, run_qubit_charging
from .cavity import (
    CavityState,
    TridiagonalKernel,
    build_kernel,
    cavity_figures_of_merit,
    metastability_diagnostics,
    run_cavity_charging,
    selective_fixed_point,
    selective_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "CavityState",
    "DiagonalState",
    "JointUnitary",
    "ModelParams",
    "N0_from_epsilon",
    "SectorFrequencies",
    "StepRecord",
    "ThermoLedger",
    "TridiagonalKernel",
    "a_tau",
    "build_effective_unitary",
    "build_kernel",
    "build_selective_unitary",
    "cavity_figures_of_merit",
    "collision_step",
    "epsilon_from_N0",
    "ergotropy",
    "free_hamiltonian",
    "metastability_diagnostics",
    "qubit_figures_of_merit",
    "qubit_step",
    "relative_entropy",
    "run_cavity_charging",
    "run_qubit_charging",
    "sector_frequencies",
    "selective_fixed_point",
    "selective_kernel",
]
