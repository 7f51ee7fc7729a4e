"""Proper losses, their regrets, and the plug-in regret bounds they feed.

Natural logarithms throughout.  Infinite values (log of zero, KL against a
zero estimate) are returned as ``math.inf`` rather than raised.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import kl_div

from .core import DomainError, FiniteZoneDistribution
from . import oracle

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class BinaryBase:
    """A binary proper loss l(y, q) for y in {-1, +1} and q = P(y = +1).

    ``mu`` is its strong-properness constant in the binary sense:
    regret(eta, q) >= mu / 2 * (eta - q) ** 2.
    """

    name: str
    loss: Callable[[int, float], float]
    regret: Callable[[float, float], float]
    mu: float


def _half_squared_loss(y: int, q: float) -> float:
    return 0.5 * (1.0 - q) ** 2 if y == 1 else 0.5 * q**2


def _binary_log_loss(y: int, q: float) -> float:
    p = q if y == 1 else 1.0 - q
    return math.inf if p <= 0 else -math.log(p)


def _binary_kl(eta: float, q: float) -> float:
    return float(kl_div(eta, q) + kl_div(1.0 - eta, 1.0 - q))


SQUARED_BASE = BinaryBase(
    "squared", _half_squared_loss, lambda eta, q: 0.5 * (eta - q) ** 2, mu=1.0
)
# Pinsker in the binary case: KL >= 2 (eta - q)^2
LOG_BASE = BinaryBase("log", _binary_log_loss, _binary_kl, mu=4.0)


class LossKind(enum.Enum):
    NLL = "nll"
    BRIER = "brier"
    OVA = "ova"

    @classmethod
    def parse(cls, value) -> "LossKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown loss kind {value!r}") from None


def _simplex(p, name: str = "probability vector") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise DomainError(f"{name} must be a 1-D vector with at least 2 entries")
    if not np.all(np.isfinite(p)) or p.min() < -SIMPLEX_TOL or abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"{name} is not on the probability simplex")
    return p


def loss_value(kind, label: int, p, base: BinaryBase = SQUARED_BASE) -> float:
    kind = LossKind.parse(kind)
    p = _simplex(p)
    if not 0 <= label < p.size:
        raise DomainError(f"label {label} outside [0, {p.size})")
    if kind is LossKind.NLL:
        return math.inf if p[label] <= 0 else -math.log(p[label])
    if kind is LossKind.BRIER:
        onehot = np.zeros_like(p)
        onehot[label] = 1.0
        return 0.5 * float(np.sum((onehot - p) ** 2))
    return base.loss(1, float(p[label])) + sum(
        base.loss(-1, float(q)) for j, q in enumerate(p) if j != label
    )


def conditional_risk(kind, eta, p_hat, base: BinaryBase = SQUARED_BASE) -> float:
    """Expected loss of predicting ``p_hat`` when the label is drawn from ``eta``."""
    eta = _simplex(eta, "eta")
    p_hat = _simplex(p_hat, "p_hat")
    if eta.size != p_hat.size:
        raise DomainError("eta and p_hat differ in length")
    total = 0.0
    for k, weight in enumerate(eta):
        if weight == 0:
            continue
        total += weight * loss_value(kind, k, p_hat, base)
    return total


def pointwise_regret(kind, eta, p_hat, base: BinaryBase = SQUARED_BASE) -> float:
    """Closed-form regret: KL for NLL, half squared L2 for Brier, summed binary
    regrets for one-vs-all."""
    kind = LossKind.parse(kind)
    eta = _simplex(eta, "eta")
    p_hat = _simplex(p_hat, "p_hat")
    if eta.size != p_hat.size:
        raise DomainError("eta and p_hat differ in length")
    if kind is LossKind.NLL:
        # kl_div adds (p_hat - eta) termwise: same total on the simplex, but every
        # term is non-negative, so rounding cannot push the sum below zero
        return float(np.sum(kl_div(eta, p_hat)))
    if kind is LossKind.BRIER:
        return 0.5 * float(np.sum((eta - p_hat) ** 2))
    return sum(base.regret(float(e), float(q)) for e, q in zip(eta, p_hat))


def strong_properness_constant(kind, n_classes: int, base: BinaryBase = SQUARED_BASE) -> float:
    kind = LossKind.parse(kind)
    if kind is LossKind.NLL:
        return 1.0
    if kind is LossKind.BRIER:
        return 1.0 / n_classes
    return base.mu / n_classes


def check_strong_properness(kind, eta, p_hat, base: BinaryBase = SQUARED_BASE):
    """Return ``(regret, mu / 2 * ||eta - p_hat||_1 ** 2, mu)``; the caller
    asserts ``regret >= bound``."""
    eta_a = _simplex(eta, "eta")
    p_a = _simplex(p_hat, "p_hat")
    mu = strong_properness_constant(kind, eta_a.size, base)
    regret = pointwise_regret(kind, eta_a, p_a, base)
    l1 = float(np.sum(np.abs(eta_a - p_a)))
    return regret, 0.5 * mu * l1**2, mu


def pinsker_chain(kind, dist: FiniteZoneDistribution, eta_hat, base: BinaryBase = SQUARED_BASE):
    """Return ``(E||eta - eta_hat||_1, sqrt(2 / mu * E regret))`` over the zones.

    The first never exceeds the second for a mu-strongly proper loss.
    """
    etas = dist.eta_matrix()
    eta_hat = np.asarray(eta_hat, dtype=float)
    w = dist.weight_array()
    mu = strong_properness_constant(kind, dist.n_classes, base)
    l1 = float(np.dot(w, np.abs(etas - eta_hat).sum(axis=1)))
    regret = float(np.dot(w, [pointwise_regret(kind, e, q, base) for e, q in zip(etas, eta_hat)]))
    return l1, math.sqrt(2.0 / mu * regret)


def check_plugin_bound(dist: FiniteZoneDistribution, eta_hat_per_zone, k, mode: str = "top"):
    """Regret of the plug-in set classifier built from ``eta_hat_per_zone``.

    Zones are scored by the estimate and errors measured under the true
    probabilities.  Returns ``(regret, E||eta - eta_hat||_1)``; the regret
    never exceeds the bound for exact arithmetic.
    """
    eta_hat = [list(row) for row in eta_hat_per_zone]
    if len(eta_hat) != dist.n_zones or any(len(row) != dist.n_classes for row in eta_hat):
        raise DomainError("eta_hat needs one row of length C per zone")
    for row in eta_hat:
        _simplex(row, "eta_hat row")
    estimate = dist.with_etas(eta_hat)
    if mode == "top":
        member = oracle.top_k_membership(estimate, k)
        best = oracle.oracle_top_k_error(dist, k)
    elif mode == "avg":
        member = oracle.average_k_membership(estimate, k)
        best = oracle.oracle_avg_k_error(dist, k)
    else:
        raise DomainError(f"mode must be 'top' or 'avg', got {mode!r}")
    regret = oracle.membership_error(dist, member) - best
    bound = sum(
        w * sum(abs(a - b) for a, b in zip(eta, row))
        for w, eta, row in zip(dist.weights, dist.etas, eta_hat)
    )
    return float(regret), float(bound)
