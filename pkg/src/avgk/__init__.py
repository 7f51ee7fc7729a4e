"""Top-K and average-K set-valued classification."""

from .core import (
    AvgKError,
    DomainError,
    FiniteZoneDistribution,
    LabelVector,
    ParseError,
    ScoreMatrix,
    SetPrediction,
    ValidationError,
)
from .predictors import AverageKSolution, average_k_sets, top_k_sets
from .metrics import EvaluationReport, evaluate_curves, set_error_rate

__all__ = [
    "AverageKSolution",
    "AvgKError",
    "DomainError",
    "EvaluationReport",
    "FiniteZoneDistribution",
    "LabelVector",
    "ParseError",
    "ScoreMatrix",
    "SetPrediction",
    "ValidationError",
    "average_k_sets",
    "evaluate_curves",
    "set_error_rate",
    "top_k_sets",
]
