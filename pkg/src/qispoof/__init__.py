"""Simulate measure-and-prepare spoofing of a quantum-illumination radar."""

from .channel import NoiseLossParams, apply_closed_form, apply_dilation_oracle, apply_sequence, compose_half_trips
from .fock_core import (
    FockCutoff,
    SingleModeOperator,
    TruncationError,
    TwoModeDensityOperator,
    partial_trace,
    tensor,
    trace_norm,
    uhlmann_fidelity,
)
from .gaussian import CovMatrix, gaussian_fidelity, heterodyne_noisy_covariances, symplectic_fidelity
from .metrics import DiscriminationReport, helstrom_error, m_star_bounds, pe_bounds, report
from .spoof_models import (
    HypothesisPair,
    Strategy,
    build_coherent_baseline,
    build_direct_noise_free,
    build_direct_noisy,
    build_heterodyne_noise_free,
)
from .states import ModePairParams, classically_correlated, coherent, thermal, tmsv

__version__ = "0.1.0"
