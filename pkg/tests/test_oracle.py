from fractions import Fraction as F

import numpy as np
import pytest

from avgk import oracle
from avgk.core import DomainError, FiniteZoneDistribution, LabelVector, ValidationError


@pytest.fixture(params=[1, 2, 3, 4])
def example(request):
    return oracle.builtin_example(request.param)


def test_examples_are_exact_and_valid(example):
    assert example.n_classes == 6
    assert sum(example.weights) == 1
    assert all(sum(eta) == 1 for eta in example.etas)
    assert example.is_exact


def test_example_weights():
    assert oracle.builtin_example(2).weights == (F(1, 3),) * 3
    ex3 = oracle.builtin_example(3)
    assert ex3.weights[0] * ex3.weights[2] == F(1, 100)


def test_unknown_example():
    with pytest.raises(DomainError):
        oracle.builtin_example(5)


def test_G_values():
    ex2 = oracle.builtin_example(2)
    assert oracle.oracle_G(ex2, 0) == 2
    assert oracle.oracle_G(ex2, F(1, 3)) == 1
    assert oracle.oracle_G(ex2, 1) == 0


def test_lambda_k():
    assert oracle.oracle_lambda_k(oracle.builtin_example(2), 2) == 0
    assert oracle.oracle_lambda_k(oracle.builtin_example(3), 2) == F(1, 3)
    for example_id in oracle.EXAMPLE_IDS:
        assert oracle.oracle_lambda_k(oracle.builtin_example(example_id), 6) == 0


def test_lambda_k_breakpoints_ex3():
    ex3 = oracle.builtin_example(3)
    assert oracle.oracle_G(ex3, 0) == F(23033, 10000) + F(1, 30000)
    assert oracle.oracle_G(ex3, F(1, 3)) == F(13033, 10000) + F(1, 30000)


def test_closed_form_errors():
    ex2, ex3 = oracle.builtin_example(2), oracle.builtin_example(3)
    assert oracle.oracle_top_k_error(ex2, 2) == F(1, 9)
    assert oracle.oracle_top_k_error(ex3, 2) == F(1, 9)
    assert oracle.oracle_avg_k_error(ex2, 2) == 0
    assert oracle.oracle_avg_k_error(ex3, 2) == F(91, 900)
    assert oracle.oracle_top_k_error(ex2, 6) == oracle.oracle_avg_k_error(ex2, 6) == 0


def test_ex3_avg_error_matches_zone_sum():
    # mass above 1/3 plus 1/3 per unit of tie size
    ex3 = oracle.builtin_example(3)
    mass = ex3.weights[0] + ex3.weights[1]
    rho = 2 - oracle.oracle_G(ex3, F(1, 3))
    assert oracle.oracle_avg_k_error(ex3, 2) == 1 - mass - rho * F(1, 3)


def test_gains():
    ex1, ex2, ex4 = (oracle.builtin_example(i) for i in (1, 2, 4))
    assert oracle.oracle_adaptive_gain(ex2, 2) == F(1, 9)
    assert oracle.oracle_adaptive_gain(ex1, 2) == 0
    assert 0 < oracle.oracle_adaptive_gain(ex4, 2) <= F(1, 100)
    assert oracle.oracle_adaptive_gain(ex4, 2) == F(1, 300)


def test_straddle_table_values():
    assert oracle.straddle_strength(oracle.builtin_example(2), 2, 1) == F(1, 27)
    assert oracle.straddle_strength(oracle.builtin_example(3), 2, 1) == F(1, 300)
    assert oracle.straddle_strength(oracle.builtin_example(4), 2, 1) == F(1, 900)


def test_straddle_range():
    ex2 = oracle.builtin_example(2)
    with pytest.raises(DomainError):
        oracle.straddle_strength(ex2, 2, 3)
    with pytest.raises(DomainError):
        oracle.straddle_strength(ex2, 5, 2)


def test_straddle_decomposition(example):
    for K in range(1, 6):
        weight = oracle.straddle_weight(example, K)
        if weight:
            assert oracle.straddle_magnitude(example, K) * weight == oracle.straddle_strength(example, K, 1)


def test_support_gap():
    assert oracle.support_gap_exists(oracle.builtin_example(1), 2)
    assert not oracle.support_gap_exists(oracle.builtin_example(2), 2)


def test_single_zone_has_gap(single_zone):
    for K in (1, 2):
        assert oracle.support_gap_exists(single_zone, K)
        assert oracle.oracle_adaptive_gain(single_zone, K) == 0


def test_analyze(example):
    for k in range(1, 7):
        a = oracle.analyze(example, k)
        assert a.adaptive_gain == a.top_k_error - a.avg_k_error >= 0
        assert a.adaptive_gain >= a.straddle_lower_bound
        assert a.support_gap == (a.adaptive_gain == 0)
        assert len(a.straddle) == min(k, 6 - k)


def test_table1_rows():
    rows = {row["example"]: row for row in oracle.table1(2)}
    assert rows[2]["measure"] == pytest.approx(1 / 27, abs=1e-15)
    assert rows[3]["weight"] == pytest.approx(0.01, abs=1e-15)
    assert rows[4]["magnitude"] == pytest.approx(0.01, abs=1e-15)


def test_excess_risk_formula_on_alternatives():
    rng = np.random.default_rng(0)
    for seed in range(40):
        dist = oracle.random_distribution(seed)
        c = dist.n_classes
        K = int(rng.integers(1, c))
        raw = rng.random((dist.n_zones, c))
        size = oracle.membership_size(dist, raw.tolist())
        # rescale towards the budget K so the alternative is a valid average-K assignment
        if size >= K:
            member = raw * K / size
        else:
            member = 1 - (1 - raw) * (c - K) / (c - size)
        assert oracle.membership_size(dist, member.tolist()) == pytest.approx(K, abs=1e-12)
        direct = oracle.membership_error(dist, member.tolist()) - oracle.oracle_avg_k_error(dist, K)
        assert direct == pytest.approx(oracle.excess_risk_formula(dist, K, member.tolist()), abs=1e-10)


def test_sample_zone_frequencies():
    ex2 = oracle.builtin_example(2)
    n = 100_000
    zones, _ = oracle.sample_zones(ex2, n, seed=3)
    tol = 3 * np.sqrt((1 / 3) * (2 / 3) / n)
    freqs = np.bincount(zones, minlength=3) / n
    assert np.all(np.abs(freqs - 1 / 3) <= tol)


def test_sample_is_deterministic():
    ex4 = oracle.builtin_example(4)
    a = oracle.sample(ex4, 500, seed=9)
    b = oracle.sample(ex4, 500, seed=9)
    assert np.array_equal(a[0].values, b[0].values)
    assert np.array_equal(a[1].labels, b[1].labels)
    one, _ = oracle.sample(ex4, 1, seed=0)
    assert any(np.array_equal(one.values[0], eta) for eta in ex4.eta_matrix())


def test_labels_follow_zone_support():
    scores, labels = oracle.sample(oracle.builtin_example(2), 2000, seed=1)
    assert np.all(scores.values[np.arange(2000), labels.labels] > 0)


def test_corrupt_eta():
    base = oracle.builtin_example(2).eta_matrix()
    assert np.array_equal(oracle.corrupt_eta(base, 0, 1).values, base)
    full = oracle.corrupt_eta(base, 1, 1).values
    assert np.allclose(full.sum(axis=1), 1)
    for eps in (0.05, 0.3, 0.8):
        noisy = oracle.corrupt_eta(base, eps, 2).values
        assert np.all(np.abs(noisy - base).sum(axis=1) <= 2 * eps + 1e-12)


def test_noise_singletons_keep_labels():
    labels = LabelVector(np.array([0, 1, 2, 1]), 3)
    groups = oracle.NoiseGroups(((0,), (1,), (2,)))
    assert np.array_equal(oracle.inject_label_noise(labels, groups, 0).labels, labels.labels)


def test_noise_one_group_is_uniform():
    n, c = 60_000, 4
    labels = LabelVector(np.zeros(n, dtype=np.int64), c)
    noisy = oracle.inject_label_noise(labels, oracle.NoiseGroups((tuple(range(c)),)), 5)
    freqs = np.bincount(noisy.labels, minlength=c) / n
    assert np.all(np.abs(freqs - 1 / c) <= 3 * np.sqrt((1 / c) * (1 - 1 / c) / n))


def test_noise_group_closure():
    labels = LabelVector(np.array([2, 0, 1, 2, 2, 0]), 3)
    noisy = oracle.inject_label_noise(labels, oracle.NoiseGroups(((0, 1), (2,))), 7)
    assert np.all(noisy.labels[labels.labels == 2] == 2)
    assert set(noisy.labels[labels.labels != 2]) <= {0, 1}


@pytest.mark.parametrize("groups", [((0, 1), (1, 2)), ((0,), (1,)), ((0, 1, 2, 3),)])
def test_invalid_partitions(groups):
    with pytest.raises(ValidationError):
        oracle.inject_label_noise(LabelVector(np.array([0, 1]), 3), oracle.NoiseGroups(groups), 0)


def test_confusion_matrix_rows_sum_to_one():
    m = oracle.NoiseGroups(((0, 2), (1,), (3, 4, 5))).confusion_matrix(6)
    assert np.allclose(m.sum(axis=1), 1)
    assert m[0, 2] == 0.5 and m[1, 1] == 1


def test_random_tie_distribution_is_exact():
    for seed in range(20):
        dist = oracle.random_tie_distribution(seed)
        assert dist.is_exact
        assert sum(dist.weights) == 1


def test_float_distribution_matches_exact():
    exact = oracle.builtin_example(3)
    approx = FiniteZoneDistribution(
        tuple(float(w) for w in exact.weights),
        tuple(tuple(float(p) for p in eta) for eta in exact.etas),
    )
    for k in range(1, 6):
        assert float(oracle.oracle_avg_k_error(approx, k)) == pytest.approx(
            float(oracle.oracle_avg_k_error(exact, k)), abs=1e-12
        )
