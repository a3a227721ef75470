"""Massless Schwinger model on a circle in the positive-energy Fock representation.

Builds the point-split regularized fermion operators on a truncated Fock
space, the large gauge transformation, the anomaly limits, and the full
Hamiltonian with the gauge-field zero mode.
"""

from schwinger.params import ConfigError, ModelParams
from schwinger.fock import (
    BasisSector,
    FockState,
    Ladder,
    TruncationError,
    apply_ladder,
    enumerate_basis,
    unexcited_state,
)
from schwinger.operators import (
    OperatorMatrix,
    build_coulomb,
    build_HD0_reg,
    build_HDa_reg,
    build_j0_mode,
    build_j1_mode,
    build_Q,
    build_Q5_naive,
    build_Q5_reg,
)
from schwinger.gauge import (
    gamma_apply,
    gamma_matrix,
    verify_chirality_shift,
    verify_gauge_invariance,
)
from schwinger.anomaly import (
    Mollifier,
    RegulatorPoint,
    Schedule,
    compute_CA,
    compute_CA_prime,
    delta_pm,
    eval_I,
    eval_II_difference,
)
from schwinger.assembly import (
    FullHamiltonian,
    GaugeGrid,
    build_full_hamiltonian,
    build_zero_mode_kinetic,
    gauge_invariance_full,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSector",
    "ConfigError",
    "FockState",
    "FullHamiltonian",
    "GaugeGrid",
    "Ladder",
    "ModelParams",
    "Mollifier",
    "OperatorMatrix",
    "RegulatorPoint",
    "Schedule",
    "TruncationError",
    "apply_ladder",
    "build_coulomb",
    "build_full_hamiltonian",
    "build_HD0_reg",
    "build_HDa_reg",
    "build_j0_mode",
    "build_j1_mode",
    "build_Q",
    "build_Q5_naive",
    "build_Q5_reg",
    "build_zero_mode_kinetic",
    "compute_CA",
    "compute_CA_prime",
    "delta_pm",
    "enumerate_basis",
    "eval_I",
    "eval_II_difference",
    "gamma_apply",
    "gamma_matrix",
    "gauge_invariance_full",
    "spectrum",
    "unexcited_state",
    "verify_chirality_shift",
    "verify_gauge_invariance",
]
