"""
tcn-bench

Temporal context normalization and the benchmarks that test it: visual
analogy extrapolation and dynamic object prediction, on a small numpy
autograd engine.
"""

__version__ = "1.0.0"

# Export key functions
from .tensor import Tensor, no_grad, precision
from .normalization import (
    ContextBatch,
    NormSpec,
    NormStats,
    normalize,
    tcn_forward,
    tcn_inverse,
    fit_train_stats,
)
from .vaec import (
    AnalogyProblem,
    ObjectSpec,
    RegimeSpec,
    enumerate_analogies,
    sample_problems,
    render_object,
)
from .dynobj import SequenceSpec, sample_sequence, render_sequence
from .models import (
    AnalogyScorer,
    Autoencoder,
    Predictor,
    solve_analogy,
    predict_sequence,
)
from .optim import adam_update
from .analysis import pca, per_dimension_accuracy, curve_compare
from .config import ExperimentConfig, load_config
from .exceptions import (
    TCNBenchError,
    ShapeError,
    NormalizationError,
    DatasetError,
    ConfigurationError,
    NumericalAbortError,
    InputMissingError,
)

__all__ = [
    # Autograd
    "Tensor",
    "no_grad",
    "precision",
    # Normalization
    "ContextBatch",
    "NormSpec",
    "NormStats",
    "normalize",
    "tcn_forward",
    "tcn_inverse",
    "fit_train_stats",
    # Datasets
    "AnalogyProblem",
    "ObjectSpec",
    "RegimeSpec",
    "enumerate_analogies",
    "sample_problems",
    "render_object",
    "SequenceSpec",
    "sample_sequence",
    "render_sequence",
    # Models
    "AnalogyScorer",
    "Autoencoder",
    "Predictor",
    "solve_analogy",
    "predict_sequence",
    "adam_update",
    # Analysis
    "pca",
    "per_dimension_accuracy",
    "curve_compare",
    # Configuration
    "ExperimentConfig",
    "load_config",
    # Exceptions
    "TCNBenchError",
    "ShapeError",
    "NormalizationError",
    "DatasetError",
    "ConfigurationError",
    "NumericalAbortError",
    "InputMissingError",
]
