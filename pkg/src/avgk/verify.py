"""Invariant and Monte-Carlo checks run by ``avgk verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import losses, oracle
from .core import FiniteZoneDistribution
from .metrics import evaluate_curves

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

GAIN_ATOL = 1e-12
PLUGIN_ATOL = 1e-10
# agreement is not judged when even the widest 3-sigma band (p = 1/2) exceeds this
MAX_AGREEMENT_BAND = 0.05


@dataclass
class Check:
    name: str
    status: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def check_gain_bounds(dist: FiniteZoneDistribution) -> list[Check]:
    """Non-negative gain, straddle lower bound and the support-gap equivalence for all K < C."""
    c = dist.n_classes
    neg, below, mismatch = [], [], []
    for K in range(1, c):
        gain = oracle.oracle_adaptive_gain(dist, K)
        if gain < -GAIN_ATOL:
            neg.append(K)
        if gain < oracle.straddle_strength(dist, K, 1) - GAIN_ATOL:
            below.append(K)
        if 2 * K <= c and gain < oracle.straddle_lower_bound(dist, K) - GAIN_ATOL:
            below.append(K)
        if oracle.support_gap_exists(dist, K) != (abs(gain) <= GAIN_ATOL):
            mismatch.append(K)
    return [
        Check("nonnegative_gain", _status(not neg), {"violations": neg}),
        Check("straddle_lower_bound", _status(not below), {"violations": sorted(set(below))}),
        Check("support_gap_characterization", _status(not mismatch), {"violations": mismatch}),
    ]


def check_budget_identity(dist: FiniteZoneDistribution) -> Check:
    bad = []
    values = sorted({p for eta in dist.etas for p in eta} | {0})
    for K in range(1, dist.n_classes + 1):
        lam = oracle.oracle_lambda_k(dist, K)
        if oracle.oracle_G(dist, lam) > K + oracle.G_ATOL:
            bad.append(K)
        smaller = [v for v in values if v < lam]
        if smaller and oracle.oracle_G(dist, smaller[-1]) <= K + oracle.G_ATOL:
            bad.append(K)
    return Check("budget_identity", _status(not bad), {"violations": bad})


def check_excess_risk(dist: FiniteZoneDistribution) -> Check:
    """The top-K classifier's excess error equals the weighted symmetric-difference formula."""
    worst = 0.0
    for K in range(1, dist.n_classes + 1):
        member = oracle.top_k_membership(dist, K)
        direct = oracle.membership_error(dist, member) - oracle.oracle_avg_k_error(dist, K)
        formula = oracle.excess_risk_formula(dist, K, member)
        worst = max(worst, abs(float(direct) - float(formula)))
    return Check("excess_risk_formula", _status(worst <= PLUGIN_ATOL), {"max_abs_diff": worst})


def check_monte_carlo(dist: FiniteZoneDistribution, samples: int, seed: int) -> Check:
    k_max = min(3, dist.n_classes)
    band = 3.0 * math.sqrt(0.25 / samples)
    scores, labels = oracle.sample(dist, samples, seed)
    report = evaluate_curves(scores, labels, k_max)
    rows = []
    ok = True
    for point in report.curves:
        for mode, empirical, exact in (
            ("top", point.top_k_error, float(oracle.oracle_top_k_error(dist, point.k))),
            ("avg", point.avg_k_error, float(oracle.oracle_avg_k_error(dist, point.k))),
        ):
            tol = 3.0 * math.sqrt(exact * (1.0 - exact) / samples)
            agree = abs(empirical - exact) <= tol
            ok &= agree
            rows.append(
                {"k": point.k, "mode": mode, "empirical": empirical, "exact": exact,
                 "tolerance": tol, "agree": agree}
            )
    if band > MAX_AGREEMENT_BAND:
        status = INCONCLUSIVE
    else:
        status = _status(ok)
    return Check("monte_carlo_agreement", status, {"samples": samples, "seed": seed, "rows": rows})


def check_strong_properness(dist: FiniteZoneDistribution, epsilon: float, seed: int) -> Check:
    estimate = oracle.corrupt_distribution(dist, epsilon, seed).eta_matrix()
    worst = math.inf
    for kind in losses.LossKind:
        for eta, q in zip(dist.eta_matrix(), estimate):
            regret, bound, _ = losses.check_strong_properness(kind, eta / eta.sum(), q)
            worst = min(worst, regret - bound)
    return Check("strong_properness", _status(worst >= -1e-12), {"min_slack": worst})


def check_plugin_bounds(dist: FiniteZoneDistribution, epsilon: float, seed: int) -> list[Check]:
    estimate = oracle.corrupt_distribution(dist, epsilon, seed)
    eta_hat = [list(row) for row in estimate.etas]
    checks = []
    for mode in ("top", "avg"):
        worst = -math.inf
        for K in range(1, dist.n_classes + 1):
            regret, bound = losses.check_plugin_bound(dist, eta_hat, K, mode)
            worst = max(worst, regret - bound)
        ok = math.isfinite(worst) and worst <= PLUGIN_ATOL
        checks.append(Check(f"plugin_bound_{mode}", _status(ok), {"max_excess": worst}))
    worst_chain = -math.inf
    for kind in losses.LossKind:
        l1, bound = losses.pinsker_chain(kind, dist, estimate.eta_matrix())
        worst_chain = max(worst_chain, l1 - bound)
    ok = math.isfinite(worst_chain) and worst_chain <= 1e-12
    checks.append(Check("estimation_error_chain", _status(ok), {"max_excess": worst_chain}))
    return checks


def run_checks(
    dist: FiniteZoneDistribution, samples: int, seed: int, corrupt: float | None = None
) -> dict:
    """Run every check; the verdict passes when no check fails."""
    checks: list[Check] = []
    checks.extend(check_gain_bounds(dist))
    checks.append(check_budget_identity(dist))
    checks.append(check_excess_risk(dist))
    checks.append(check_monte_carlo(dist, samples, seed))
    checks.append(check_strong_properness(dist, 0.5 if corrupt is None else corrupt, seed))
    if corrupt is not None:
        checks.extend(check_plugin_bounds(dist, corrupt, seed))
    passed = all(ch.status != FAIL for ch in checks)
    return {"passed": passed, "checks": [ch.to_dict() for ch in checks]}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def verdict_json(verdict: dict) -> dict:
    return _jsonable(verdict)
