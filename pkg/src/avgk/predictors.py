"""Top-K and average-K set construction from a score matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, ScoreMatrix, SetPrediction, as_array


@dataclass(frozen=True)
class AverageKSolution:
    threshold: float
    sets: SetPrediction
    n_strict: int
    n_tie_used: int

    @property
    def budget(self) -> int:
        return self.n_strict + self.n_tie_used

    @property
    def mean_size(self) -> float:
        return self.budget / self.sets.mask.shape[0]


def top_k_sets(scores: ScoreMatrix | np.ndarray, k: int) -> SetPrediction:
    """Mark the ``k`` largest scores of each row.

    Ties at the k-th value go to the lowest class index.
    """
    values = as_array(scores)
    n, c = values.shape
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= c:
        raise DomainError(f"k must be an integer in [1, {c}], got {k!r}")
    k = int(k)
    # stable sort on the negated scores keeps ascending class order among equals
    order = np.argsort(-values, axis=1, kind="stable")[:, :k]
    mask = np.zeros((n, c), dtype=bool)
    np.put_along_axis(mask, order, True, axis=1)
    return SetPrediction(mask)


def average_k_threshold(scores: ScoreMatrix | np.ndarray, budget: int) -> float:
    """Return the ``budget``-th largest entry of the flattened score matrix.

    This is the lower-interpolated quantile used to threshold average-K sets,
    computed by partial selection in linear expected time.
    """
    flat = as_array(scores).ravel()
    total = flat.size
    if isinstance(budget, bool) or int(budget) != budget or not 1 <= budget <= total:
        raise DomainError(f"budget must be an integer in [1, {total}], got {budget!r}")
    pos = total - int(budget)
    return float(np.partition(flat, pos)[pos])


def budget_for(n_samples: int, avg_size: float) -> int:
    return int(np.floor(n_samples * avg_size))


def average_k_sets(scores: ScoreMatrix | np.ndarray, avg_size: float) -> AverageKSolution:
    """Average-K sets with budget ``floor(N * avg_size)``.

    Entries strictly above the threshold are always kept; the remaining
    budget is filled from entries equal to the threshold in row-major order.
    """
    values = as_array(scores)
    n, c = values.shape
    if not 0 < avg_size <= c:
        raise DomainError(f"average size must lie in (0, {c}], got {avg_size!r}")
    budget = budget_for(n, avg_size)
    if budget < 1:
        raise DomainError(f"budget floor({n} * {avg_size}) is zero")
    return average_k_sets_budget(values, budget)


def average_k_sets_budget(scores: ScoreMatrix | np.ndarray, budget: int) -> AverageKSolution:
    values = as_array(scores)
    lam = average_k_threshold(values, budget)
    strict = values > lam
    n_strict = int(strict.sum())
    deficit = budget - n_strict
    flat_mask = strict.ravel().copy()
    ties = np.flatnonzero(values.ravel() == lam)[:deficit]
    flat_mask[ties] = True
    return AverageKSolution(
        threshold=lam,
        sets=SetPrediction(flat_mask.reshape(values.shape)),
        n_strict=n_strict,
        n_tie_used=int(ties.size),
    )


def empirical_G(scores: ScoreMatrix | np.ndarray, lam: float) -> float:
    """Mean number of entries per row strictly above ``lam``."""
    values = as_array(scores)
    return int((values > lam).sum()) / values.shape[0]
