"""Error rates, set-size statistics and error-vs-K curves."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, as_array, as_labels, as_mask
from .predictors import average_k_sets_budget, top_k_sets


def _hits(mask: np.ndarray, labels: np.ndarray) -> int:
    if mask.shape[0] != labels.shape[0]:
        raise DomainError(f"{mask.shape[0]} set rows but {labels.shape[0]} labels")
    if labels.size and (labels.min() < 0 or labels.max() >= mask.shape[1]):
        raise DomainError("label outside the class range of the sets")
    return int(mask[np.arange(mask.shape[0]), labels].sum())


def set_error_rate(sets, labels) -> float:
    """Fraction of rows whose true label is missing from the predicted set."""
    mask = as_mask(sets)
    y = as_labels(labels)
    n = mask.shape[0]
    return (n - _hits(mask, y)) / n


def average_set_size(sets) -> float:
    mask = as_mask(sets)
    return int(mask.sum()) / mask.shape[0]


def size_histogram(sets) -> dict[int, int]:
    counts = Counter(as_mask(sets).sum(axis=1).tolist())
    return {int(size): counts[size] for size in sorted(counts)}


def selected_mass(scores, sets) -> float:
    """Correctly rounded sum of the selected scores (independent of summation order)."""
    return math.fsum(as_array(scores)[as_mask(sets)].tolist())


def adaptive_gain_empirical(scores, labels, k: int) -> float:
    values = as_array(scores)
    y = as_labels(labels)
    n = values.shape[0]
    top = top_k_sets(values, k)
    avg = average_k_sets_budget(values, n * int(k)).sets
    return set_error_rate(top, y) - set_error_rate(avg, y)


@dataclass(frozen=True)
class CurvePoint:
    k: int
    top_k_error: float
    avg_k_error: float
    size_histogram: dict[int, int]

    @property
    def adaptive_gain(self) -> float:
        return self.top_k_error - self.avg_k_error

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "top_k_error": self.top_k_error,
            "avg_k_error": self.avg_k_error,
            "adaptive_gain": self.adaptive_gain,
            "size_histogram": {str(s): c for s, c in self.size_histogram.items()},
        }


@dataclass(frozen=True)
class EvaluationReport:
    n: int
    c: int
    curves: list[CurvePoint]
    metadata: dict = field(default_factory=dict)

    @property
    def mean_top_k_error(self) -> float:
        return sum(p.top_k_error for p in self.curves) / len(self.curves)

    @property
    def mean_avg_k_error(self) -> float:
        return sum(p.avg_k_error for p in self.curves) / len(self.curves)

    def point(self, k: int) -> CurvePoint:
        return self.curves[k - 1]

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "c": self.c,
            "curves": [p.to_dict() for p in self.curves],
            "mean_top_k_error": self.mean_top_k_error,
            "mean_avg_k_error": self.mean_avg_k_error,
        }
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out


def _curve_point(values: np.ndarray, labels: np.ndarray, k: int) -> CurvePoint:
    n = values.shape[0]
    top = top_k_sets(values, k).mask
    avg = average_k_sets_budget(values, n * k).sets.mask
    return CurvePoint(
        k=k,
        top_k_error=(n - _hits(top, labels)) / n,
        avg_k_error=(n - _hits(avg, labels)) / n,
        size_histogram=size_histogram(avg),
    )


def evaluate_curves(scores, labels, k_max: int, workers: int | None = None) -> EvaluationReport:
    """Top-K and average-K errors for K = 1..k_max.

    ``workers`` > 1 evaluates the K values on a thread pool; the report is
    assembled in K order either way.
    """
    values = as_array(scores)
    y = as_labels(labels)
    n, c = values.shape
    if y.shape[0] != n:
        raise DomainError(f"{n} score rows but {y.shape[0]} labels")
    if isinstance(k_max, bool) or int(k_max) != k_max or not 1 <= k_max <= c:
        raise DomainError(f"k_max must be an integer in [1, {c}], got {k_max!r}")
    ks = range(1, int(k_max) + 1)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(lambda k: _curve_point(values, y, k), ks))
    else:
        curves = [_curve_point(values, y, k) for k in ks]
    return EvaluationReport(n=n, c=c, curves=curves)
