"""Quantised compressive sensing: signal models, sensing matrices, B-bit
registers, sparse reconstruction and closed-form error predictions."""
from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    IllConditionedError,
    InvalidSpecError,
    NumericalError,
    QcsError,
    RangeError,
    RankDeficiencyError,
    UndefinedSNRError,
    UnsupportedConfigurationError,
)
from .families import Family, sigma_mu_sq, welch_bound_sq
from .quantizer import ArithmeticMode, FoldingSpec, QuantizerSpec, fold_coefficients, quantize
from .reconstruction import AlgoConfig, Algorithm, reconstruct
from .sensing import SensingMatrix, build_matrix, coherence_report, initial_estimate, measure
from .signal_model import SignalSpec, SpectralVector, TailSpec, generate, sparse_truncation
from .theory import ScenarioSpec, TheoryPrediction, predict

__version__ = "0.1.0"
