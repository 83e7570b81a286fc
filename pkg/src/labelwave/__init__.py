"""Validation-free early stopping under label noise via prediction changes."""

from labelwave.errors import (
    ConfigError,
    DataError,
    InsufficientDataError,
    LabelWaveError,
    NumericError,
    ParseError,
    ProtocolError,
    UndefinedCorrelationError,
)
from labelwave.metrics import (
    k_epoch_learning,
    kendall_tau,
    moving_average,
    pearson,
    prediction_changes,
)
from labelwave.stopper import LabelWaveStopper, StopDecision, StopperConfig, run_over_trace

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "InsufficientDataError",
    "LabelWaveError",
    "LabelWaveStopper",
    "NumericError",
    "ParseError",
    "ProtocolError",
    "StopDecision",
    "StopperConfig",
    "UndefinedCorrelationError",
    "k_epoch_learning",
    "kendall_tau",
    "moving_average",
    "pearson",
    "prediction_changes",
    "run_over_trace",
]
