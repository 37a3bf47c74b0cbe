"""Synthetic oracle, noise wrapper and the minimal linear learner."""

import math

import numpy as np
import pytest

from polydom.costpoly import CostPolynomial
from polydom.errors import TrainingFailed, ValidationError
from polydom.learner import (
    Dataset,
    Item,
    LinearSGDLearner,
    NoisyOracleLearner,
    SyntheticConfig,
    SyntheticOracleLearner,
    accuracy_combiner,
    read_dataset_csv,
    sample_synthetic_config,
    train_linear,
)

from conftest import mask


def config_with(accuracies, k=math.inf):
    n = len(accuracies)
    return SyntheticConfig(
        num_features=n,
        p=0.5,
        k=k,
        seed=0,
        accuracies=tuple(accuracies),
        costs=tuple(CostPolynomial((1.0,)) for _ in range(n)),
    )


class TestAccuracyCombiner:
    def test_depth_one_takes_the_best_member(self):
        config = config_with([0.7, 0.8], k=1)
        assert accuracy_combiner(mask(0, 1), config) == 0.8

    def test_unbounded_depth_joins_all_members(self):
        config = config_with([0.7, 0.8], k=math.inf)
        assert accuracy_combiner(mask(0, 1), config) == pytest.approx(0.94)

    def test_empty_set_is_random_baseline(self):
        config = config_with([0.7, 0.8])
        assert accuracy_combiner(0, config) == 0.5

    @pytest.mark.parametrize("k", [1, 2, 3, math.inf])
    def test_monotone_over_all_subset_pairs(self, k):
        rng = np.random.default_rng(4)
        config = config_with([float(a) for a in rng.uniform(0.5, 0.8, 8)], k=k)
        acc = {m: accuracy_combiner(m, config) for m in range(1 << 8)}
        for m in range(1 << 8):
            sub = (m - 1) & m
            while True:
                assert acc[sub] <= acc[m] + 1e-12
                if sub == 0:
                    break
                sub = (sub - 1) & m

    def test_depth_one_equals_max_member(self):
        rng = np.random.default_rng(9)
        config = config_with([float(a) for a in rng.uniform(0.5, 0.8, 6)], k=1)
        for m in range(1, 1 << 6):
            members = [config.accuracies[i] for i in range(6) if m & (1 << i)]
            assert accuracy_combiner(m, config) == max(members)

    def test_unbounded_depth_strictly_improves(self):
        config = config_with([0.6, 0.7, 0.75], k=math.inf)
        for m in (mask(0), mask(1), mask(0, 1)):
            for f in range(3):
                if m & (1 << f):
                    continue
                assert accuracy_combiner(m | (1 << f), config) > accuracy_combiner(m, config)


class TestSampleSyntheticConfig:
    def test_cost_boxes_hold_over_many_draws(self):
        config = sample_synthetic_config(10_000, 0.6, 1, seed=12)
        for poly in config.costs:
            a0, a1, a2 = (list(poly.coeffs) + [0.0, 0.0, 0.0])[:3]
            assert 0 <= a0 <= 100
            assert 0 <= a1 <= (100 - a0) / 10
            assert 0 <= a2 <= (100 - a0 - a1) / 4

    def test_all_helpful_when_p_is_one(self):
        config = sample_synthetic_config(500, 1.0, 1, seed=3)
        assert all(0.7 <= a <= 0.8 for a in config.accuracies)

    def test_none_helpful_when_p_is_zero(self):
        config = sample_synthetic_config(500, 0.0, 1, seed=3)
        assert all(0.5 <= a <= 0.6 for a in config.accuracies)

    def test_seed_determinism(self):
        a = sample_synthetic_config(20, 0.6, math.inf, seed=77)
        b = sample_synthetic_config(20, 0.6, math.inf, seed=77)
        assert a == b

    def test_json_round_trip_including_inf(self):
        config = sample_synthetic_config(5, 0.6, math.inf, seed=1)
        assert SyntheticConfig.from_json(config.to_json()) == config


class TestSyntheticOracleLearner:
    def test_matches_combiner_and_cost_sum(self):
        config = sample_synthetic_config(5, 0.6, 1, seed=2)
        learner = SyntheticOracleLearner(config)
        m = mask(0, 3)
        node = learner.characterize(m)
        assert node.accuracy == accuracy_combiner(m, config)
        assert node.cost == config.costs[0] + config.costs[3]

    def test_training_counts_ignore_cache_hits(self):
        learner = SyntheticOracleLearner(sample_synthetic_config(4, 0.6, 1, seed=2))
        learner.characterize(3)
        learner.characterize(3)
        assert learner.trainings == 1
        assert learner.requests == 2


class TestNoisyOracle:
    def test_violations_bounded_by_e(self):
        e = 0.05
        base = SyntheticOracleLearner(sample_synthetic_config(7, 0.6, math.inf, seed=5))
        noisy = NoisyOracleLearner(base, e=e, seed=5)
        acc = {m: noisy.characterize(m).accuracy for m in range(1 << 7)}
        worst = 0.0
        for m in range(1 << 7):
            sub = (m - 1) & m
            while True:
                worst = max(worst, acc[sub] - acc[m])
                if sub == 0:
                    break
                sub = (sub - 1) & m
        assert worst <= e + 1e-12

    def test_empty_set_is_never_perturbed(self):
        base = SyntheticOracleLearner(sample_synthetic_config(3, 0.6, 1, seed=5))
        noisy = NoisyOracleLearner(base, e=0.1, seed=5)
        assert noisy.characterize(0).accuracy == base.characterize(0).accuracy


def toy_dataset(n_per_class=12, informative_second=True, seed=0):
    """Two well-separated blobs; feature 0 splits the classes, feature 1 optionally helps."""
    rng = np.random.default_rng(seed)
    items = []
    for label in (0, 1):
        for j in range(n_per_class):
            x0 = label * 10.0 + float(rng.normal(0, 0.2))
            if informative_second:
                x1 = label * 10.0 + float(rng.normal(0, 0.2))
            else:
                x1 = float(rng.normal(0, 1.0))
            items.append(
                Item(id=f"{label}-{j}", size=1 + j, label=label, feature_values=(x0, x1))
            )
    return Dataset(items=tuple(items), feature_names=("f0", "f1"))


UNIT_COSTS = (CostPolynomial((1.0,)), CostPolynomial((2.0,)))


class TestLinearLearner:
    def test_separable_toy_reaches_full_accuracy(self):
        learner = LinearSGDLearner(toy_dataset(), UNIT_COSTS, seed=0)
        node = learner.characterize(mask(0, 1))
        assert node.accuracy >= 0.95  # 1.0 modulo cross-validation noise

    def test_single_class_fails(self):
        items = tuple(
            Item(id=str(i), size=1, label=0, feature_values=(float(i), 0.0)) for i in range(10)
        )
        dataset = Dataset(items=items, feature_names=("f0", "f1"))
        learner = LinearSGDLearner(dataset, UNIT_COSTS, seed=0)
        with pytest.raises(TrainingFailed):
            learner.characterize(mask(0))

    def test_informative_second_feature_does_not_hurt(self):
        learner = LinearSGDLearner(toy_dataset(), UNIT_COSTS, seed=0)
        both = learner.characterize(mask(0, 1)).accuracy
        first = learner.characterize(mask(0)).accuracy
        assert both >= first - 0.1  # within cross-validation noise

    def test_empty_set_is_majority_baseline(self):
        learner = LinearSGDLearner(toy_dataset(), UNIT_COSTS, seed=0)
        assert learner.characterize(0).accuracy == pytest.approx(0.5, abs=0.05)

    def test_seeded_determinism(self):
        a = LinearSGDLearner(toy_dataset(), UNIT_COSTS, seed=3).characterize(mask(0, 1))
        b = LinearSGDLearner(toy_dataset(), UNIT_COSTS, seed=3).characterize(mask(0, 1))
        assert a == b

    def test_train_linear_returns_handle(self):
        handle = train_linear(mask(0), toy_dataset(), seed=1)
        assert handle.mask == mask(0)
        assert handle.id.startswith("linear-")


class TestDatasetCsv:
    def test_round_trip_with_split(self, tmp_path):
        data = tmp_path / "items.csv"
        data.write_text(
            "id,size,label,colors,edges\n"
            "a,10,0,0.5,1.5\n"
            "b,20,1,2.5,3.5\n"
            "c,30,1,4.5,5.5\n"
        )
        split = tmp_path / "test_ids.txt"
        split.write_text("c\n")
        dataset = read_dataset_csv(str(data), str(split))
        assert dataset.feature_names == ("colors", "edges")
        assert [i.id for i in dataset.train_items] == ["a", "b"]
        assert [i.id for i in dataset.test_items] == ["c"]
        assert dataset.label_cardinality == 2

    def test_header_is_checked(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,label,size\n")
        with pytest.raises(ValidationError):
            read_dataset_csv(str(bad))
