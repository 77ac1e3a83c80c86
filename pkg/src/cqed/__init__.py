"""Photon transport statistics for weakly driven multi-emitter cavity QED.

The library computes the transmissivity T(omega_L) and the equal-time and
delayed two-photon correlations g2(0; omega_L), g2(tau; omega_L) of a
cavity coupled to N two-level emitters, by diagonalizing the non-Hermitian
effective Hamiltonian on the one- and two-excitation subspaces (polynomial
in N). It also ships a Dicke-reduction fast path and closed-form large-N
limits for identical emitters, a seeded Monte-Carlo harness for
inhomogeneously broadened ensembles, and an independent master-equation
oracle for validation at small N.
"""

from .eigen import DefectiveMatrixError, EigenSystem, diag_complex_symmetric
from .identical import (
    AsymptoticEigen,
    BrightEigen1,
    BrightEigen2,
    FastpathMismatchError,
    IdenticalParams,
    asymptotic_eigen,
    bright_gamma_contributions,
    bright_single_eigen,
    bright_two_eigen,
    collective_spin_multiplicity,
    compute_spectrum_identical,
    fastpath_equivalence,
    g2_tau_identical,
    g2_zero_grid_identical,
    g2_zero_identical,
    limit_g2,
    limit_transmission,
    transmission_identical,
)
from .montecarlo import (
    ClassifyContext,
    DipReport,
    MCConfig,
    MCResult,
    detect_dips,
    run_mc,
    sample_ensemble,
)
from .oracle import (
    DriveConfig,
    RefinementNeededError,
    g2_tau_regression,
    steady_state_observables,
    sweep_observables,
)
from .params import (
    Emitter,
    ExcitationBasis,
    OperatorBlocks,
    SystemParams,
    UnsupportedLevelError,
    build_basis,
    project_operators,
)
from .scattering import (
    AnharmonicityReport,
    DipContribution,
    G2Components,
    G2Trace,
    Spectrum,
    TransmissionZeroError,
    anharmonicity,
    compute_spectrum,
    g2_components,
    g2_tau,
    g2_zero,
    g2_zero_grid,
    transmission,
)

__version__ = "0.1.0"
