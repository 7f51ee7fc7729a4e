"""Temperature scaling of logits by one-dimensional NLL minimisation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import DomainError, ScoreMatrix, as_array, as_labels, row_normalize_softmax

T_MIN = 1e-3
T_MAX = 1e3
GRID_POINTS = 200
LOG_T_TOL = 1e-6
# grid spread below this (relative) means the objective is flat up to rounding
FLAT_RTOL = 1e-12

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TemperatureFit:
    temperature: float
    nll_before: float
    nll_after: float
    iterations: int
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "nll_before": self.nll_before,
            "nll_after": self.nll_after,
            "iterations": self.iterations,
            "warning": self.warning,
        }


def mean_nll(logits, labels, temperature: float) -> float:
    """Mean negative log-likelihood of softmax(logits / temperature)."""
    z = as_array(logits) / temperature
    y = as_labels(labels)
    return float(np.mean(logsumexp(z, axis=1) - z[np.arange(z.shape[0]), y]))


def fit_temperature(logits, labels) -> TemperatureFit:
    """Fit a single temperature in [1e-3, 1e3].

    A 200-point log-spaced grid locates the best bracket, which golden-section
    search then refines in log T until the bracket is narrower than 1e-6.
    Exact grid ties resolve to the lowest temperature.  An objective that is
    flat up to rounding over the whole grid yields T = 1 with a warning.
    """
    z = as_array(logits)
    y = as_labels(labels)
    if z.shape[0] < 1 or y.shape[0] != z.shape[0]:
        raise DomainError(f"{z.shape[0]} logit rows but {y.shape[0]} labels")
    before = mean_nll(z, y, 1.0)
    if np.all(z.max(axis=1) == z.min(axis=1)):
        return TemperatureFit(1.0, before, before, 0, "constant logits: NLL does not depend on T")

    log_grid = np.linspace(math.log(T_MIN), math.log(T_MAX), GRID_POINTS)
    values = np.array([mean_nll(z, y, math.exp(t)) for t in log_grid])
    if np.ptp(values) <= FLAT_RTOL * max(1.0, abs(values.min())):
        return TemperatureFit(1.0, before, before, 0, "NLL does not depend on T over [1e-3, 1e3]")
    best = int(np.argmin(values))
    if best in (0, GRID_POINTS - 1):
        edge = T_MIN if best == 0 else T_MAX
        side = "lower" if best == 0 else "upper"
        return TemperatureFit(
            edge, before, float(values[best]), 0,
            f"NLL decreases towards the {side} bound; temperature clamped to {edge}",
        )
    lo = log_grid[max(best - 1, 0)]
    hi = log_grid[min(best + 1, GRID_POINTS - 1)]

    def f(t):
        return mean_nll(z, y, math.exp(t))

    iterations = 0
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > LOG_T_TOL:
        iterations += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    t_star = (a + b) / 2.0
    # the refined point competes with the grid optimum and with T = 1
    candidates = [(f(t_star), t_star), (values[best], log_grid[best]), (before, 0.0)]
    nll, log_t = min(candidates, key=lambda pair: (pair[0], pair[1]))
    return TemperatureFit(math.exp(log_t), before, nll, iterations)


def apply_temperature(logits, temperature: float) -> ScoreMatrix:
    return row_normalize_softmax(logits, temperature)
