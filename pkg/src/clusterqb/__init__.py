"""Charging energetics of cluster-Ising quantum batteries.

Two families of periodic spin chains (a single cluster string of range n, or
the average of all ranges up to n) are charged by a double quench of the
Hamiltonian angle.  The package computes the stored energy per spin and the
average charging power exactly in momentum space, locates the maximal power,
fits its finite-size scaling, and cross-validates everything against dense
exact diagonalization in the odd fermion-parity sector.
"""

from .energetics import (
    DEGENERACY_TOL,
    GAP_TOL,
    INFINITE,
    EnergyCurve,
    QuenchEngine,
    QuenchSpec,
    charging_power,
    energy_curve,
    mode_summands,
    stored_energy,
)
from .model import (
    H1,
    H2,
    ModelSpec,
    coefficients,
    dispersion,
    mode_coefficients,
    structure_factors,
)
from .optimizer import PowerSummary, default_window, maximize_power
from .scaling import (
    ClusterRule,
    Rounding,
    Rule,
    ScalingFit,
    SweepRow,
    fit_power_law,
    fit_sweep,
    preset_sizes,
    sweep,
)

__all__ = [
    "H1",
    "H2",
    "INFINITE",
    "GAP_TOL",
    "DEGENERACY_TOL",
    "ModelSpec",
    "QuenchSpec",
    "QuenchEngine",
    "EnergyCurve",
    "PowerSummary",
    "ClusterRule",
    "Rule",
    "Rounding",
    "ScalingFit",
    "SweepRow",
    "coefficients",
    "mode_coefficients",
    "structure_factors",
    "dispersion",
    "stored_energy",
    "charging_power",
    "energy_curve",
    "mode_summands",
    "maximize_power",
    "default_window",
    "sweep",
    "fit_power_law",
    "fit_sweep",
    "preset_sizes",
]

__version__ = "0.1.0"
