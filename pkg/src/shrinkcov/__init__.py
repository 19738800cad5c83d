"""Optimal linear shrinkage estimation of large-dimensional covariance matrices."""

__version__ = "0.1.0"

from .asymptotics import (
    SpectrumSpec,
    deterministic_frobenius,
    deterministic_trace_product,
    phi_limit,
    spectrum_moment,
)
from .errors import (
    ArgError,
    ConfigError,
    DegenerateTarget,
    DimError,
    InsufficientData,
    NumericalError,
    ParseError,
    ShrinkCovError,
)
from .estimators import (
    EstimateResult,
    ShrinkageWeights,
    WeightKind,
    asymptotic_oracle_weights,
    bona_fide_weights,
    frobenius_estimator,
    glse_loss,
    identity_target,
    lw_estimator,
    olse,
    oracle_weights,
    sample_covariance,
)
from .matrix_core import (
    TOLERANCES,
    Tolerances,
    data_matrix,
    frobenius_norm_sq,
    spectral_norm,
    sym_eigenvalues,
    sym_matrix,
    trace_norm_sq,
    trace_product,
)
