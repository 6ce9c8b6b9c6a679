from collections import Counter
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from randsel.exceptions import ClassCoverageError, ParameterError, SelectionFinished
from randsel.sampling import (
    SeedPlan,
    TaskKind,
    draw_feature_subset,
    draw_rows,
    make_task_pair,
    redraw_rows,
    subset_sizes,
)


def test_forced_single_feature():
    assert draw_feature_subset([0], 1, seed=123) == (0,)


def test_inclusion_frequency_is_one_half():
    counts = np.zeros(10)
    draws = 100_000
    for seed in range(draws):
        counts[list(draw_feature_subset(range(10), 5, seed))] += 1
    np.testing.assert_allclose(counts / draws, 0.5, atol=0.01)


def test_subsets_uniform_chi_square():
    # all C(6,3) = 20 subsets should be equally likely
    draws = 100_000
    seen = Counter(draw_feature_subset(range(6), 3, seed) for seed in range(draws))
    assert len(seen) == 20
    assert chisquare(list(seen.values())).pvalue > 0.001


@given(st.lists(st.integers(0, 500), min_size=1, max_size=30, unique=True), st.data())
@settings(max_examples=50, deadline=None)
def test_subset_properties(active, data):
    size = data.draw(st.integers(1, len(active)))
    seed = data.draw(st.integers(0, 2**64 - 1))
    subset = draw_feature_subset(active, size, seed)
    assert len(subset) == size == len(set(subset))
    assert set(subset) <= set(active)
    assert list(subset) == sorted(subset)
    assert draw_feature_subset(active, size, seed) == subset


@pytest.mark.parametrize("size", [0, 4])
def test_bad_subset_size(size):
    with pytest.raises(ParameterError):
        draw_feature_subset([1, 2, 3], size, 0)


def test_single_row_bootstrap():
    np.testing.assert_array_equal(draw_rows(1, 3, seed=5), [0, 0, 0])


def test_balanced_forced_counts():
    y = np.array([1, 1, 1, -1])
    rows = draw_rows(4, 4, labels=y, balanced=True, seed=9)
    assert Counter(y[rows].tolist()) == {1: 2, -1: 2}


def test_balanced_remainder_goes_to_rarest_class():
    y = np.array([0] * 10 + [1] * 3 + [2] * 6)
    rows = draw_rows(y.size, 8, labels=y, balanced=True, seed=1)
    # 8 = 3 * 2 + 2; class 1 (3 members) then class 2 (6 members) get the extras
    assert Counter(y[rows].tolist()) == {0: 2, 1: 3, 2: 3}


def test_balanced_missing_class():
    with pytest.raises(ClassCoverageError):
        draw_rows(3, 4, labels=[1, 1, 1], balanced=True, seed=0)
    with pytest.raises(ClassCoverageError):
        draw_rows(3, 4, labels=[1, 1, -1], balanced=True, seed=0, classes=[1, -1, 7])


def test_row_appearance_rate():
    # 4e4 draws put the 0.02 band at ~5.7 standard errors for every one of the 100 indices
    m, s, draws = 100, 50, 40_000
    counts = np.zeros(m)
    for seed in range(draws):
        counts += np.bincount(draw_rows(m, s, seed=seed), minlength=m)
    np.testing.assert_allclose(counts / draws, s / m, atol=0.02)


@pytest.mark.parametrize("n_active, expected", [(4, (2, 3)), (5, (2, 3)), (3, (1, 2)), (16, (8, 9))])
def test_pair_sizes(n_active, expected):
    assert subset_sizes(n_active) == expected
    base, plus = make_task_pair(range(n_active), m=30, s=10, plan=SeedPlan(0), i=0)
    assert (len(base.feature_subset), len(plus.feature_subset)) == expected
    assert base.kind is TaskKind.BASE and plus.kind is TaskKind.PLUS


def test_pair_is_deterministic():
    plan = SeedPlan(2024)
    first = make_task_pair(range(9), m=50, s=20, plan=plan, i=17, iteration=2)
    second = make_task_pair(range(9), m=50, s=20, plan=SeedPlan(2024), i=17, iteration=2)
    assert first == second
    other = make_task_pair(range(9), m=50, s=20, plan=plan, i=18, iteration=2)
    assert other != first


def test_pair_halves_are_independent_draws():
    plan = SeedPlan(5)
    base, plus = make_task_pair(range(10), m=1000, s=40, plan=plan, i=0)
    assert base.task_seed != plus.task_seed
    assert not np.array_equal(base.row_indices, plus.row_indices)


def test_too_few_features_finishes():
    with pytest.raises(SelectionFinished):
        make_task_pair([0, 1], m=10, s=5, plan=SeedPlan(0), i=0)


def test_full_rows_option():
    base, plus = make_task_pair(range(5), m=12, s=3, plan=SeedPlan(0), i=0, full_rows=True)
    np.testing.assert_array_equal(base.row_indices, np.arange(12))
    np.testing.assert_array_equal(plus.row_indices, np.arange(12))


def test_seed_plan_counters():
    plan = SeedPlan(11)
    assert plan.task_seed(0, 3, TaskKind.BASE) == plan.task_seed(0, 3, TaskKind.BASE)
    seeds = {plan.task_seed(it, i, k, r) for it in range(3) for i in range(20) for k in TaskKind for r in range(2)}
    assert len(seeds) == 3 * 20 * 2 * 2
    with pytest.raises(ParameterError):
        SeedPlan(-1)


def test_redraw_keeps_subset_and_changes_rows():
    base, _ = make_task_pair(range(6), m=200, s=30, plan=SeedPlan(3), i=4)
    again = redraw_rows(base, 200, 30, retry=1)
    assert again.feature_subset == base.feature_subset
    assert again.retry == 1
    assert not np.array_equal(again.row_indices, base.row_indices)
    assert again == redraw_rows(base, 200, 30, retry=1)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_matched_distribution_support(n):
    """Removing j from PLUS subsets that contain j reaches exactly the BASE sets without j."""
    plan = SeedPlan(n)
    base_size, _ = subset_sizes(n)
    plus_minus, base_without = {j: set() for j in range(n)}, {j: set() for j in range(n)}
    for i in range(3000):
        base, plus = make_task_pair(range(n), m=5, s=2, plan=plan, i=i)
        for j in range(n):
            if j in plus.feature_subset:
                plus_minus[j].add(tuple(f for f in plus.feature_subset if f != j))
            if j not in base.feature_subset:
                base_without[j].add(base.feature_subset)
    for j in range(n):
        expected = set(combinations([f for f in range(n) if f != j], base_size))
        assert plus_minus[j] == expected
        assert base_without[j] == expected
