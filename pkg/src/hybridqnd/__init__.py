"""Linear-optics model of an atom-light hybrid interferometer used as a
quantum non-demolition photon-number probe."""

from .fock import TruncationError, oracle_simulate
from .interferometer import (
    REFERENCE_LOSSY,
    REFERENCE_N_BETA,
    InterferometerParams,
    LosslessCoefficients,
    LossyCoefficients,
    build_lossless_network,
    build_lossy_network,
    lossless_coefficients,
    lossy_coefficients,
)
from .metrics import (
    MomentSet,
    coherent_moments,
    fock_snr,
    holland_criteria,
    poisson_phase_moment,
    qnd_correlation,
)
from .network import (
    BosonicNetwork,
    Coherent,
    ModeSpec,
    VACUUM,
    apply_attenuation,
    apply_beam_splitter,
    apply_phase_shift,
    apply_two_mode_squeezer,
    build_network,
    commutator_weight,
    compose,
    quadrature_moments,
)
from .sweep import SweepGrid, extract_contour, optimize_g2, optimized_ratio_grid, sweep_c

__version__ = "0.1.0"
