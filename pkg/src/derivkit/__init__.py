"""Reconstruction of high-order derivatives of noisy uniformly sampled series.

The library trains a dictionary of windowed linear maps indexed by signal
bandwidth and noise level, then estimates derivatives (with per-instant
confidence widths) by sliding the selected map along a series.  Classical
differentiators and a benchmark harness are included for comparison.
"""

from .basis import (
    BasisMatrix,
    DesignGrid,
    PulsationGrid,
    eval_basis,
    make_design_grid,
    make_grid,
    project,
    residual_curve,
)
from .baselines import (
    DEFAULT_LAMBDAS,
    KalmanParams,
    NoValidSettingError,
    SavGolParams,
    SpectralParams,
    StdParams,
    aostd_differentiate,
    best_tuned,
    best_tuned_all_orders,
    kalman_differentiate,
    savgol_differentiate,
    spectral_differentiate,
)
from .bench import (
    ALL_METHODS,
    BANDWIDTH_FRACTIONS,
    NOISE_LEVELS,
    ErrorReport,
    build_benchmark,
    evaluate_benchmark,
    run_bench,
)
from .config import DEFAULT_ALPHAS, DictionaryConfig
from .dictionary import (
    BadMagicError,
    BadVersionError,
    ChecksumError,
    CompressedMap,
    DictionaryFileError,
    DictKey,
    FormatError,
    ModelDictionary,
    TrainingError,
    TruncatedFileError,
    compress,
    load_dictionary,
    save_dictionary,
    train_dictionary,
)
from .estimator import (
    DerivativeEstimate,
    DerivativeEstimator,
    est_deriv,
    estimate_noise,
    select_bandwidth,
    sliding_estimate,
    window_counts,
)
from .metrics import COVERAGE_THRESHOLDS, DegenerateTruthError, coverage_table, eval_error
from .ridge import RidgeFit, ridge_cv_fit, ridge_fit
from .synth import BenchmarkCase, TrainingSet, make_benchmark_case, make_training_set, stream_rng

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "BANDWIDTH_FRACTIONS",
    "BadMagicError",
    "BadVersionError",
    "BasisMatrix",
    "BenchmarkCase",
    "COVERAGE_THRESHOLDS",
    "ChecksumError",
    "CompressedMap",
    "DEFAULT_ALPHAS",
    "DEFAULT_LAMBDAS",
    "DegenerateTruthError",
    "DerivativeEstimate",
    "DerivativeEstimator",
    "DesignGrid",
    "DictKey",
    "DictionaryConfig",
    "DictionaryFileError",
    "ErrorReport",
    "FormatError",
    "KalmanParams",
    "ModelDictionary",
    "NOISE_LEVELS",
    "NoValidSettingError",
    "PulsationGrid",
    "RidgeFit",
    "SavGolParams",
    "SpectralParams",
    "StdParams",
    "TrainingError",
    "TrainingSet",
    "TruncatedFileError",
    "aostd_differentiate",
    "best_tuned",
    "best_tuned_all_orders",
    "build_benchmark",
    "compress",
    "coverage_table",
    "est_deriv",
    "estimate_noise",
    "eval_basis",
    "eval_error",
    "evaluate_benchmark",
    "kalman_differentiate",
    "load_dictionary",
    "make_benchmark_case",
    "make_design_grid",
    "make_grid",
    "make_training_set",
    "project",
    "residual_curve",
    "ridge_cv_fit",
    "ridge_fit",
    "run_bench",
    "save_dictionary",
    "savgol_differentiate",
    "select_bandwidth",
    "sliding_estimate",
    "spectral_differentiate",
    "stream_rng",
    "train_dictionary",
    "window_counts",
]
