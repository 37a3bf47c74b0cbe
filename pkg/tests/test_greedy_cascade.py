"""Greedy sequences, their skyline, and anytime budget spending."""

import math

import numpy as np
import pytest

from polydom.costpoly import CostPolynomial
from polydom.errors import ValidationError
from polydom.greedy_cascade import (
    GreedyParams,
    GreedySequenceIndex,
    build_sequences,
    greedy_acc,
    greedy_cost,
    poly_cost_oracle,
    query_anytime,
)
from polydom.learner import SyntheticOracleLearner, sample_synthetic_config

from conftest import TableLearner, mask


def oracle_learner(seed=0, F=6, k=math.inf, p=0.6):
    return SyntheticOracleLearner(sample_synthetic_config(F, p, k, seed))


class TestBuildSequences:
    def test_zero_lambda_orders_by_pure_accuracy_gain(self):
        learner = oracle_learner(seed=4)
        params = GreedyParams(lambdas=(0.0,), reference_size=10)
        index = build_sequences(learner, params)
        via_acc = greedy_acc(oracle_learner(seed=4), 10)
        assert [s.feature for s in index.sequences["0.0"]] == [
            s.feature for s in via_acc.sequences["acc"]
        ]

    def test_gain_tie_breaks_toward_lower_cost(self):
        # dyadic values make the two gains exactly equal in floats:
        # 0.125 - 32/256 == 0.0625 - 16/256 == 0; the cheap feature wins
        accuracies = {0: 0.5, 1: 0.625, 2: 0.5625, 3: 0.6875}
        costs = (CostPolynomial((32.0,)), CostPolynomial((16.0,)))
        learner = TableLearner(accuracies, costs)
        lam = 1.0 / 256.0
        params = GreedyParams(lambdas=(lam,), reference_size=1)
        index = build_sequences(learner, params)
        assert [s.feature for s in index.sequences[repr(lam)]] == [1, 0]

    def test_training_and_prefix_bounds(self):
        lambdas = (0.0, 0.001, 0.01, 0.1, 1.0)
        F = 6
        learner = oracle_learner(seed=9, F=F)
        index = build_sequences(learner, GreedyParams(lambdas=lambdas, reference_size=25))
        assert index.trainings <= len(lambdas) * F * F
        assert index.unique_prefixes <= len(lambdas) * F
        for seq in index.sequences.values():
            assert len(seq) == F

    def test_prefix_accuracies_nondecreasing_under_monotone_oracle(self):
        learner = oracle_learner(seed=11)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0, 0.01, 1.0), reference_size=5))
        for seq in index.sequences.values():
            accs = [index.baseline.accuracy] + [s.node.accuracy for s in seq]
            assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))

    def test_skyline_sorted_and_accuracy_increasing(self):
        learner = oracle_learner(seed=13)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0, 0.05), reference_size=50))
        costs = [e.cost_at_ref for e in index.skyline]
        accs = [e.node.accuracy for e in index.skyline]
        assert costs == sorted(costs)
        assert all(a < b for a, b in zip(accs, accs[1:]))

    def test_full_universe_prefix_tops_skyline_with_zero_lambda(self):
        learner = oracle_learner(seed=15)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0, 0.5), reference_size=10))
        full_mask = (1 << learner.num_features) - 1
        assert index.skyline[-1].node.mask == full_mask

    def test_duplicate_lambdas_rejected(self):
        with pytest.raises(ValidationError):
            GreedyParams(lambdas=(0.1, 0.1))


class TestVariants:
    def test_cost_variant_orders_by_constant_costs(self):
        accuracies = {m: 0.5 + 0.01 * bin(m).count("1") for m in range(8)}
        costs = (CostPolynomial((50.0,)), CostPolynomial((5.0,)), CostPolynomial((100.0,)))
        learner = TableLearner(accuracies, costs)
        index = greedy_cost(learner, reference_size=10)
        assert [s.feature for s in index.sequences["cost"]] == [1, 0, 2]

    def test_acc_variant_first_pick_is_best_singleton(self):
        learner = oracle_learner(seed=21)
        index = greedy_acc(learner, reference_size=10)
        best = max(range(learner.num_features), key=lambda f: learner.config.accuracies[f])
        assert index.sequences["acc"][0].feature == best

    def test_expensive_feature_carrying_accuracy(self):
        # one costly feature holds all the signal: the accuracy-greedy
        # sequence peaks immediately, the cost-greedy one only at the end
        accuracies = {}
        for m in range(8):
            accuracies[m] = 0.9 if m & 4 else 0.5 + 0.001 * bin(m).count("1")
        costs = (CostPolynomial((1.0,)), CostPolynomial((2.0,)), CostPolynomial((500.0,)))
        learner = TableLearner(accuracies, costs)
        acc_index = greedy_acc(learner, reference_size=1)
        cost_index = greedy_cost(TableLearner(accuracies, costs), reference_size=1)
        assert acc_index.sequences["acc"][0].node.accuracy == 0.9
        cost_seq = cost_index.sequences["cost"]
        assert cost_seq[0].node.accuracy < 0.9
        assert cost_seq[-1].node.accuracy == 0.9


class TestQueryAnytime:
    def test_ample_budget_reaches_full_universe(self):
        learner = oracle_learner(seed=23)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0,), reference_size=50))
        oracle = poly_cost_oracle(learner.feature_costs)
        result = query_anytime(index, 50.0, 1e12, oracle)
        assert result.node.mask == (1 << learner.num_features) - 1
        assert len(result.extracted) == learner.num_features

    def test_zero_budget_returns_baseline(self):
        learner = oracle_learner(seed=23)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0,), reference_size=50))
        oracle = poly_cost_oracle(learner.feature_costs)
        result = query_anytime(index, 50.0, 0.0, oracle)
        assert result.node.mask == 0
        assert result.spent == 0.0

    def test_larger_items_extract_no_more_than_the_pick(self):
        # linear per-feature costs: at the reference size the skyline pick
        # fits exactly; a much larger item must stop at or before it
        accuracies = {m: 0.5 + 0.05 * bin(m).count("1") for m in range(16)}
        costs = tuple(CostPolynomial((0.0, float(i + 1))) for i in range(4))
        learner = TableLearner(accuracies, costs)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0,), reference_size=10))
        oracle = poly_cost_oracle(costs)
        budget = 60.0  # covers three cheap features at size 10
        small = query_anytime(index, 10.0, budget, oracle)
        large = query_anytime(index, 200.0, budget, oracle)
        assert len(large.extracted) <= len(small.extracted)

    def test_never_overspends(self):
        rng = np.random.default_rng(31)
        learner = oracle_learner(seed=29, F=7)
        index = build_sequences(
            learner, GreedyParams(lambdas=(0.0, 0.01, 1.0), reference_size=100)
        )
        oracle = poly_cost_oracle(learner.feature_costs)
        for _ in range(2000):
            size = float(rng.integers(1, 501))
            budget = float(rng.uniform(0, 5000))
            result = query_anytime(index, size, budget, oracle)
            assert result.spent <= budget
            assert result.spent == pytest.approx(
                sum(oracle(f, size) for f in result.extracted)
            )


class TestJson:
    def test_round_trip(self):
        learner = oracle_learner(seed=37, F=4)
        index = build_sequences(learner, GreedyParams(lambdas=(0.0, 0.02), reference_size=5))
        restored = GreedySequenceIndex.from_json(index.to_json())
        assert restored.reference_size == index.reference_size
        assert restored.baseline == index.baseline
        assert restored.sequences == index.sequences
        assert restored.skyline == index.skyline
