"""Closed-form analysis of finite-zone distributions.

A finite-zone distribution is a mixture of regions ("zones"), each with a
constant vector of conditional class probabilities.  Every zone is treated
as a continuum of inputs sharing that vector, so tie mass at a threshold may
be split fractionally; this keeps the optimal average-K error exact.

All closed forms use plain Python arithmetic: pass ``Fraction`` weights and
etas to get exact rational answers, floats otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    DomainError,
    FiniteZoneDistribution,
    LabelVector,
    ScoreMatrix,
    ValidationError,
    as_array,
)

# slack on G(lambda) <= K for float inputs whose weights sum to 1 only up to rounding
G_ATOL = 1e-12

EXAMPLE_IDS = (1, 2, 3, 4)


def builtin_example(example_id: int) -> FiniteZoneDistribution:
    """The four six-class toy distributions, with exact rational values.

    1. pairs of classes {0,1}, {2,3}, {4,5}, probabilities (0.55, 0.45);
    2. zones with one, two and three equally likely classes, equal weights;
    3. as 2 with weights (3/100, 2/3 - 3/100, 1/3);
    4. as 2 with the first zone's eta replaced by (2/3 + 1/100, 1/3 - 1/100, 0, ...).
    """
    F = Fraction
    third = F(1, 3)
    zone_b = (0, F(1, 2), F(1, 2), 0, 0, 0)
    zone_c = (0, 0, 0, third, third, third)
    if example_id == 1:
        hi, lo = F(55, 100), F(45, 100)
        etas = (
            (hi, lo, 0, 0, 0, 0),
            (0, 0, hi, lo, 0, 0),
            (0, 0, 0, 0, hi, lo),
        )
        return FiniteZoneDistribution((third, third, third), _fractions(etas))
    if example_id == 2:
        etas = ((1, 0, 0, 0, 0, 0), zone_b, zone_c)
        return FiniteZoneDistribution((third, third, third), _fractions(etas))
    if example_id == 3:
        w1 = F(3, 100)
        etas = ((1, 0, 0, 0, 0, 0), zone_b, zone_c)
        return FiniteZoneDistribution((w1, 2 * third - w1, third), _fractions(etas))
    if example_id == 4:
        eps = F(1, 100)
        etas = ((2 * third + eps, third - eps, 0, 0, 0, 0), zone_b, zone_c)
        return FiniteZoneDistribution((third, third, third), _fractions(etas))
    raise DomainError(f"unknown example id {example_id!r}; expected one of {EXAMPLE_IDS}")


def _fractions(etas):
    return tuple(tuple(Fraction(p) for p in eta) for eta in etas)


# -- G, its inverse and the optimal errors ---------------------------------


def oracle_G(dist: FiniteZoneDistribution, lam) -> float:
    """Expected number of classes whose probability is strictly above ``lam``."""
    return sum(w * sum(1 for p in eta if p > lam) for w, eta in zip(dist.weights, dist.etas))


def _mass_by_value(dist: FiniteZoneDistribution) -> dict:
    mass: dict = {}
    for w, eta in zip(dist.weights, dist.etas):
        for p in eta:
            mass[p] = mass.get(p, 0) + w
    return mass


def _check_avg_size(dist: FiniteZoneDistribution, avg_size) -> None:
    if not 0 < avg_size <= dist.n_classes:
        raise DomainError(f"average size must lie in (0, {dist.n_classes}], got {avg_size!r}")


def oracle_lambda_k(dist: FiniteZoneDistribution, avg_size):
    """Smallest threshold in [0, 1] whose expected set size is at most ``avg_size``.

    G is a right-continuous step function with jumps only at eta values, so
    the minimum is searched over 0 and the distinct eta values.
    """
    _check_avg_size(dist, avg_size)
    mass = _mass_by_value(dist)
    candidates = sorted(set(mass) | {0}, reverse=True)
    lam = candidates[0]
    g = 0
    for prev, cand in zip(candidates, candidates[1:]):
        g += mass[prev]
        if g > avg_size + G_ATOL:
            break
        lam = cand
    return lam


def oracle_top_k_error(dist: FiniteZoneDistribution, k: int):
    _check_k(dist, k, upper=dist.n_classes)
    captured = sum(w * sum(s[:k]) for w, s in zip(dist.weights, dist.sorted_etas))
    return 1 - captured


def oracle_avg_k_error(dist: FiniteZoneDistribution, avg_size):
    """Error of the optimal average-K classifier.

    Each unit of tie set size at the threshold captures exactly ``lambda``
    of probability, so the result does not depend on how ties are split.
    """
    lam = oracle_lambda_k(dist, avg_size)
    g = oracle_G(dist, lam)
    mass = sum(w * sum(p for p in eta if p > lam) for w, eta in zip(dist.weights, dist.etas))
    deficit = avg_size - g
    if deficit < 0:
        deficit = 0
    return 1 - mass - deficit * lam


def oracle_adaptive_gain(dist: FiniteZoneDistribution, k: int):
    return oracle_top_k_error(dist, k) - oracle_avg_k_error(dist, k)


def _check_k(dist, k, upper):
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= upper:
        raise DomainError(f"K must be an integer in [1, {upper}], got {k!r}")


# -- straddle strength and the support gap ---------------------------------


def straddle_strength(dist: FiniteZoneDistribution, K: int, order: int):
    """Expected positive part of sorted_eta[K+order](X) - sorted_eta[K+1-order](X').

    Ranks are 1-based; X and X' are independent.
    """
    c = dist.n_classes
    if not (1 <= order <= K and K + order <= c):
        raise DomainError(f"straddle order {order} invalid for K={K}, C={c}")
    hi = [s[K + order - 1] for s in dist.sorted_etas]
    lo = [s[K - order] for s in dist.sorted_etas]
    total = 0
    for wa, a in zip(dist.weights, hi):
        for wb, b in zip(dist.weights, lo):
            if a > b:
                total += wa * wb * (a - b)
    return total


def straddle_weight(dist: FiniteZoneDistribution, K: int):
    """Probability that the (K+1)-th probability of X exceeds the K-th of X'."""
    if not 1 <= K < dist.n_classes:
        raise DomainError(f"K must lie in [1, {dist.n_classes - 1}], got {K!r}")
    hi = [s[K] for s in dist.sorted_etas]
    lo = [s[K - 1] for s in dist.sorted_etas]
    return sum(
        wa * wb for wa, a in zip(dist.weights, hi) for wb, b in zip(dist.weights, lo) if a > b
    )


def straddle_magnitude(dist: FiniteZoneDistribution, K: int):
    """Mean size of the overlap given that it occurs (0 when it never does)."""
    weight = straddle_weight(dist, K)
    if weight == 0:
        return 0
    return straddle_strength(dist, K, 1) / weight


def straddle_profile(dist: FiniteZoneDistribution, K: int) -> list:
    return [straddle_strength(dist, K, k) for k in range(1, K + 1) if K + k <= dist.n_classes]


def straddle_lower_bound(dist: FiniteZoneDistribution, K: int):
    """Sum of all straddle orders when 2K <= C, the first order otherwise."""
    c = dist.n_classes
    if K >= c:
        return 0
    if 2 * K <= c:
        return sum(straddle_strength(dist, K, k) for k in range(1, K + 1))
    return straddle_strength(dist, K, 1)


def support_gap_exists(dist: FiniteZoneDistribution, K: int) -> bool:
    """True when some threshold separates the K-th and (K+1)-th ranked probabilities."""
    if not 1 <= K < dist.n_classes:
        raise DomainError(f"K must lie in [1, {dist.n_classes - 1}], got {K!r}")
    kth = min(s[K - 1] for s in dist.sorted_etas)
    next_ = max(s[K] for s in dist.sorted_etas)
    return kth >= next_


# -- fractional set assignments --------------------------------------------


def average_k_membership(scoring: FiniteZoneDistribution, avg_size) -> list[list]:
    """Per-zone membership in [0, 1] of the thresholded average-K classifier.

    Entries above the threshold get 1.  The missing size is taken from the
    tie entries scanned zone by zone, class by class, each one absorbing up
    to its zone weight.
    """
    lam = oracle_lambda_k(scoring, avg_size)
    remaining = avg_size - oracle_G(scoring, lam)
    member = []
    for w, eta in zip(scoring.weights, scoring.etas):
        row = []
        for p in eta:
            if p > lam:
                row.append(1)
            elif p == lam and remaining > 0:
                frac = min(1, remaining / w)
                remaining -= frac * w
                row.append(frac)
            else:
                row.append(0)
        member.append(row)
    return member


def top_k_membership(scoring: FiniteZoneDistribution, k: int) -> list[list]:
    """Per-zone 0/1 top-k membership, ties broken by lowest class index."""
    _check_k(scoring, k, upper=scoring.n_classes)
    member = []
    for eta in scoring.etas:
        keep = set(sorted(range(len(eta)), key=lambda j: (-eta[j], j))[:k])
        member.append([1 if j in keep else 0 for j in range(len(eta))])
    return member


def membership_size(dist: FiniteZoneDistribution, member) -> float:
    return sum(w * sum(row) for w, row in zip(dist.weights, member))


def membership_error(dist: FiniteZoneDistribution, member):
    """Set error of a fractional assignment under the true probabilities."""
    captured = sum(
        w * sum(m * p for m, p in zip(row, eta))
        for w, row, eta in zip(dist.weights, member, dist.etas)
    )
    return 1 - captured


def excess_risk_formula(dist: FiniteZoneDistribution, avg_size, member):
    """Excess error over the optimal average-K classifier as a weighted
    symmetric difference: sum of |eta_k - lambda_K| over disagreeing memberships."""
    lam = oracle_lambda_k(dist, avg_size)
    best = average_k_membership(dist, avg_size)
    return sum(
        w * sum(abs(p - lam) * abs(m - b) for p, m, b in zip(eta, row, brow))
        for w, eta, row, brow in zip(dist.weights, dist.etas, member, best)
    )


# -- full analysis ---------------------------------------------------------


@dataclass(frozen=True)
class OracleAnalysis:
    k: int
    lambda_k: float
    top_k_error: float
    avg_k_error: float
    adaptive_gain: float
    straddle: list
    straddle_lower_bound: float
    support_gap: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda_k": float(self.lambda_k),
            "top_k_error": float(self.top_k_error),
            "avg_k_error": float(self.avg_k_error),
            "adaptive_gain": float(self.adaptive_gain),
            "straddle": [float(d) for d in self.straddle],
            "straddle_lower_bound": float(self.straddle_lower_bound),
            "support_gap": self.support_gap,
        }


def analyze(dist: FiniteZoneDistribution, k: int) -> OracleAnalysis:
    _check_k(dist, k, upper=dist.n_classes)
    top = oracle_top_k_error(dist, k)
    avg = oracle_avg_k_error(dist, k)
    return OracleAnalysis(
        k=k,
        lambda_k=oracle_lambda_k(dist, k),
        top_k_error=top,
        avg_k_error=avg,
        adaptive_gain=top - avg,
        straddle=straddle_profile(dist, k),
        straddle_lower_bound=straddle_lower_bound(dist, k),
        support_gap=True if k == dist.n_classes else support_gap_exists(dist, k),
    )


def table1(K: int = 2) -> list[dict]:
    """Heterogeneity decomposition (weight, magnitude, measure) for examples 2-4."""
    rows = []
    for example_id in (2, 3, 4):
        dist = builtin_example(example_id)
        rows.append(
            {
                "example": example_id,
                "top_k_error": float(oracle_top_k_error(dist, K)),
                "avg_k_error": float(oracle_avg_k_error(dist, K)),
                "weight": float(straddle_weight(dist, K)),
                "magnitude": float(straddle_magnitude(dist, K)),
                "measure": float(straddle_strength(dist, K, 1)),
            }
        )
    return rows


# -- random corpora --------------------------------------------------------


def random_distribution(
    seed: int, classes: tuple[int, int] = (3, 10), zones: tuple[int, int] = (1, 6)
) -> FiniteZoneDistribution:
    """Dirichlet(1) weights and etas with C and zone count drawn uniformly."""
    rng = np.random.default_rng(seed)
    c = int(rng.integers(classes[0], classes[1] + 1))
    z = int(rng.integers(zones[0], zones[1] + 1))
    weights = rng.dirichlet(np.ones(z))
    etas = rng.dirichlet(np.ones(c), size=z)
    return FiniteZoneDistribution(tuple(weights.tolist()), tuple(map(tuple, etas.tolist())))


def _composition(rng, total: int, parts: int, positive: bool) -> list[int]:
    if positive:
        cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False).tolist())
    else:
        cuts = sorted(rng.integers(0, total + 1, size=parts - 1).tolist())
    edges = [0, *cuts, total]
    return [b - a for a, b in zip(edges, edges[1:])]


def random_tie_distribution(seed: int) -> FiniteZoneDistribution:
    """Exact distribution with probabilities on a coarse grid, so ties are common.

    Weights are multiples of 1/12 and etas multiples of 1/6; zones may repeat.
    """
    rng = np.random.default_rng(10_000 + seed)
    c = int(rng.integers(3, 9))
    z = int(rng.integers(1, 6))
    weights = [Fraction(n, 12) for n in _composition(rng, 12, z, positive=True)]
    etas = []
    pool = []
    for _ in range(z):
        if pool and rng.random() < 0.3:
            etas.append(pool[int(rng.integers(len(pool)))])
            continue
        eta = tuple(Fraction(n, 6) for n in _composition(rng, 6, c, positive=False))
        etas.append(eta)
        pool.append(eta)
    return FiniteZoneDistribution(tuple(weights), tuple(etas))


# -- sampling and corruption -----------------------------------------------


def _rng(seed) -> np.random.Generator:
    # Philox is counter-based: streams are reproducible and splittable
    return np.random.Generator(np.random.Philox(seed))


def sample_zones(dist: FiniteZoneDistribution, n: int, seed: int):
    """Draw ``n`` (zone, label) pairs; returns two integer arrays."""
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n!r}")
    rng = _rng(seed)
    weights = dist.weight_array()
    zones = rng.choice(dist.n_zones, size=n, p=weights / weights.sum())
    labels = np.empty(n, dtype=np.int64)
    etas = dist.eta_matrix()
    for z in range(dist.n_zones):
        idx = np.flatnonzero(zones == z)
        if idx.size:
            p = etas[z] / etas[z].sum()
            labels[idx] = rng.choice(dist.n_classes, size=idx.size, p=p)
    return zones, labels


def sample(dist: FiniteZoneDistribution, n: int, seed: int) -> tuple[ScoreMatrix, LabelVector]:
    """Sample ``n`` labelled inputs; each score row is the true eta of its zone."""
    zones, labels = sample_zones(dist, n, seed)
    scores = ScoreMatrix(dist.eta_matrix()[zones], probabilistic=True)
    return scores, LabelVector(labels, dist.n_classes)


def corrupt_eta(scores, epsilon: float, seed: int) -> ScoreMatrix:
    """Mix every row with a uniform draw from the simplex: (1 - eps) * eta + eps * u."""
    if not 0 <= epsilon <= 1:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    values = as_array(scores)
    if epsilon == 0:
        return ScoreMatrix(values, probabilistic=True)
    rng = _rng(seed)
    u = rng.dirichlet(np.ones(values.shape[1]), size=values.shape[0])
    mixed = np.clip((1 - epsilon) * values + epsilon * u, 0.0, 1.0)
    return ScoreMatrix(mixed, probabilistic=True)


def corrupt_distribution(
    dist: FiniteZoneDistribution, epsilon: float, seed: int
) -> FiniteZoneDistribution:
    """Per-zone estimate obtained by corrupting each zone's eta."""
    noisy = corrupt_eta(dist.eta_matrix(), epsilon, seed).values
    # renormalise so zone sums stay within the distribution tolerance
    noisy = noisy / noisy.sum(axis=1, keepdims=True)
    return dist.with_etas(noisy.tolist())


# -- label noise -----------------------------------------------------------


@dataclass(frozen=True)
class NoiseGroups:
    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(int(c) for c in g) for g in self.groups)
        if any(len(g) == 0 for g in groups):
            raise ValidationError("noise groups must be non-empty")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_dict(cls, data) -> "NoiseGroups":
        try:
            groups = data["groups"]
        except (KeyError, TypeError):
            raise ValidationError('noise groups JSON needs a "groups" list') from None
        if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
            raise ValidationError('"groups" must be a list of lists')
        for g in groups:
            if not all(isinstance(c, int) and not isinstance(c, bool) for c in g):
                raise ValidationError("group members must be integers")
        return cls(tuple(tuple(g) for g in groups))

    def to_dict(self) -> dict:
        return {"groups": [list(g) for g in self.groups]}

    def validate(self, n_classes: int) -> None:
        seen = [c for g in self.groups for c in g]
        if len(seen) != len(set(seen)):
            raise ValidationError("noise groups overlap")
        if sorted(seen) != list(range(n_classes)):
            raise ValidationError(f"noise groups must cover classes 0..{n_classes - 1} exactly")

    def confusion_matrix(self, n_classes: int) -> np.ndarray:
        """Row k' holds P(new label = k | old label = k')."""
        self.validate(n_classes)
        m = np.zeros((n_classes, n_classes))
        for g in self.groups:
            m[np.ix_(g, g)] = 1.0 / len(g)
        return m


def inject_label_noise(labels: LabelVector, groups: NoiseGroups, seed: int) -> LabelVector:
    """Replace every label by a uniform draw from its own group."""
    groups.validate(labels.n_classes)
    group_of = np.empty(labels.n_classes, dtype=np.int64)
    offsets = []
    members = []
    for i, g in enumerate(groups.groups):
        group_of[list(g)] = i
        offsets.append(len(members))
        members.extend(g)
    sizes = np.array([len(g) for g in groups.groups])
    offsets = np.array(offsets)
    members = np.array(members)
    gid = group_of[labels.labels]
    draw = _rng(seed).integers(0, sizes[gid])
    return LabelVector(members[offsets[gid] + draw], labels.n_classes)


def zone_scores(dist: FiniteZoneDistribution, etas: Sequence | None = None) -> ScoreMatrix:
    return ScoreMatrix(dist.eta_matrix() if etas is None else np.asarray(etas), probabilistic=True)
