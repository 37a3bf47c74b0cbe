"""Black-box learners that characterize feature subsets.

A learner owns the feature universe: one extraction-cost curve per feature
plus a way to estimate the accuracy of the best model trainable on any
subset. Characterizations are memoized per learner so re-expanding a node
is free and training counts are meaningful. Two learners ship here: a
synthetic oracle whose accuracy comes from a seeded combiner formula, and a
small linear classifier (SGD, hinge loss, L1 penalty) scored by stratified
cross-validation on tabular data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .costpoly import CostPolynomial, sum_polys
from .errors import EmptyDataset, TrainingFailed, ValidationError
from .lattice import CharacterizedFeatureSet, mask_members

RANDOM_BASELINE_ACCURACY = 0.5
HELPFUL_ACCURACY_RANGE = (0.7, 0.8)
UNHELPFUL_ACCURACY_RANGE = (0.5, 0.6)


@dataclass(frozen=True)
class ModelHandle:
    id: str
    mask: int


@dataclass(frozen=True)
class Item:
    """One labeled example; feature_values align with the dataset's feature names."""

    id: str
    size: int
    label: int
    feature_values: tuple[float, ...]

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError(f"item size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class Dataset:
    items: tuple[Item, ...]
    feature_names: tuple[str, ...]
    test_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        for item in self.items:
            if len(item.feature_values) != len(self.feature_names):
                raise ValidationError(
                    f"item {item.id!r} has {len(item.feature_values)} values for "
                    f"{len(self.feature_names)} features"
                )

    @property
    def label_cardinality(self) -> int:
        return len({item.label for item in self.items})

    @property
    def train_items(self) -> tuple[Item, ...]:
        return tuple(i for i in self.items if i.id not in self.test_ids)

    @property
    def test_items(self) -> tuple[Item, ...]:
        return tuple(i for i in self.items if i.id in self.test_ids)


def read_dataset_csv(path: str, split_path: str | None = None) -> Dataset:
    """Load items from an `id,size,label,<feature...>` CSV, plus optional test-id list."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:3] != ["id", "size", "label"]:
            raise ValidationError("dataset CSV must start with columns id,size,label")
        feature_names = tuple(header[3:])
        items = []
        for row in reader:
            items.append(
                Item(
                    id=row[0],
                    size=int(row[1]),
                    label=int(row[2]),
                    feature_values=tuple(float(v) for v in row[3:]),
                )
            )
    test_ids: frozenset[str] = frozenset()
    if split_path is not None:
        with open(split_path) as handle:
            test_ids = frozenset(line.strip() for line in handle if line.strip())
    return Dataset(items=tuple(items), feature_names=feature_names, test_ids=test_ids)


# ---------------------------------------------------------------------------
# synthetic oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    """Seeded universe: per-feature accuracy and quadratic cost, plus combiner depth k."""

    num_features: int
    p: float
    k: float  # combiner depth; math.inf combines every member
    seed: int
    accuracies: tuple[float, ...]
    costs: tuple[CostPolynomial, ...]

    def __post_init__(self):
        if len(self.accuracies) != self.num_features or len(self.costs) != self.num_features:
            raise ValidationError("accuracies and costs must match num_features")

    def to_json_dict(self) -> dict:
        return {
            "num_features": self.num_features,
            "p": self.p,
            "k": "inf" if math.isinf(self.k) else self.k,
            "seed": self.seed,
            "accuracies": list(self.accuracies),
            "costs": [c.to_json_dict() for c in self.costs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "SyntheticConfig":
        raw_k = d["k"]
        return cls(
            num_features=int(d["num_features"]),
            p=float(d["p"]),
            k=math.inf if raw_k == "inf" else float(raw_k),
            seed=int(d["seed"]),
            accuracies=tuple(float(a) for a in d["accuracies"]),
            costs=tuple(CostPolynomial.from_json_dict(c) for c in d["costs"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "SyntheticConfig":
        return cls.from_json_dict(json.loads(text))


def sample_synthetic_config(num_features: int, p: float, k: float, seed: int) -> SyntheticConfig:
    """Draw a seeded universe.

    Each feature is helpful with probability p (accuracy uniform in
    [0.7, 0.8], otherwise [0.5, 0.6]). Quadratic cost coefficients come from
    nested boxes: a0 in [0, 100], a1 in [0, (100-a0)/10],
    a2 in [0, (100-a0-a1)/4].
    """
    if num_features < 1:
        raise ValidationError("num_features must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    accuracies = []
    costs = []
    for _ in range(num_features):
        lo, hi = HELPFUL_ACCURACY_RANGE if rng.random() < p else UNHELPFUL_ACCURACY_RANGE
        accuracies.append(float(rng.uniform(lo, hi)))
        a0 = float(rng.uniform(0.0, 100.0))
        a1 = float(rng.uniform(0.0, (100.0 - a0) / 10.0))
        a2 = float(rng.uniform(0.0, (100.0 - a0 - a1) / 4.0))
        costs.append(CostPolynomial((a0, a1, a2)))
    return SyntheticConfig(
        num_features=num_features,
        p=p,
        k=k,
        seed=seed,
        accuracies=tuple(accuracies),
        costs=tuple(costs),
    )


def accuracy_combiner(mask: int, config: SyntheticConfig) -> float:
    """Combined accuracy of a subset: 1 - prod(1 - a) over its top-k members.

    The empty set returns the random baseline 0.5.
    """
    if mask == 0:
        return RANDOM_BASELINE_ACCURACY
    accs = sorted((config.accuracies[i] for i in mask_members(mask)), reverse=True)
    depth = len(accs) if math.isinf(config.k) else min(int(config.k), len(accs))
    miss = 1.0
    for a in accs[:depth]:
        miss *= 1.0 - a
    return 1.0 - miss


# ---------------------------------------------------------------------------
# learner base + implementations
# ---------------------------------------------------------------------------


class BlackBoxLearner:
    """Caches characterizations; subclasses provide _train(mask) -> (accuracy, model_id)."""

    supports_concurrent_training = False

    def __init__(self, feature_costs: Iterable[CostPolynomial]):
        self.feature_costs = tuple(feature_costs)
        self._cache: dict[int, CharacterizedFeatureSet] = {}
        self.trainings = 0
        self.requests = 0

    @property
    def num_features(self) -> int:
        return len(self.feature_costs)

    def subset_cost(self, mask: int) -> CostPolynomial:
        return sum_polys(self.feature_costs[i] for i in mask_members(mask))

    def characterize(self, mask: int) -> CharacterizedFeatureSet:
        if not 0 <= mask < (1 << self.num_features):
            raise ValidationError(f"mask {mask} outside universe of {self.num_features} features")
        self.requests += 1
        cached = self._cache.get(mask)
        if cached is not None:
            return cached
        accuracy, model_id = self._train(mask)
        self.trainings += 1
        node = CharacterizedFeatureSet(
            mask=mask, accuracy=accuracy, cost=self.subset_cost(mask), model_id=model_id
        )
        self._cache[mask] = node
        return node

    def _train(self, mask: int) -> tuple[float, str]:
        raise NotImplementedError


class SyntheticOracleLearner(BlackBoxLearner):
    """Accuracy comes straight from the combiner formula; no data involved."""

    supports_concurrent_training = True

    def __init__(self, config: SyntheticConfig):
        super().__init__(config.costs)
        self.config = config

    def _train(self, mask: int) -> tuple[float, str]:
        return accuracy_combiner(mask, self.config), f"oracle-s{self.config.seed}-{mask:06x}"


class NoisyOracleLearner(BlackBoxLearner):
    """Wraps a learner and subtracts seeded uniform noise from nonempty subsets.

    With bound e (optionally rescaled per mask), any subset pair violates
    monotonicity by at most e times the larger scale, which drives the
    relaxed-monotonicity tooling.
    """

    supports_concurrent_training = True

    def __init__(
        self,
        base: BlackBoxLearner,
        e: float,
        seed: int = 0,
        scale_fn: Callable[[int], float] | None = None,
    ):
        super().__init__(base.feature_costs)
        if e < 0:
            raise ValidationError("the noise bound e must be >= 0")
        self.base = base
        self.e = e
        self.seed = seed
        self.scale_fn = scale_fn

    def noise_for(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        scale = 1.0 if self.scale_fn is None else self.scale_fn(mask)
        rng = np.random.default_rng((self.seed, mask))
        return float(rng.uniform(0.0, self.e * scale))

    def _train(self, mask: int) -> tuple[float, str]:
        node = self.base.characterize(mask)
        accuracy = max(0.0, node.accuracy - self.noise_for(mask))
        return accuracy, f"noisy-{node.model_id}"


class LinearSGDLearner(BlackBoxLearner):
    """One-vs-rest linear classifier (SGD, hinge loss, L1) scored by stratified CV.

    Deliberately minimal: it exists to drive the real-learner path, not to
    chase benchmark accuracy. Deterministic for a fixed seed.
    """

    supports_concurrent_training = True

    def __init__(
        self,
        dataset: Dataset,
        feature_costs: Iterable[CostPolynomial],
        seed: int = 0,
        cv_folds: int = 5,
        epochs: int = 1000,
        l1_penalty: float = 1e-4,
    ):
        super().__init__(feature_costs)
        if len(self.feature_costs) != len(dataset.feature_names):
            raise ValidationError("one cost curve per dataset feature is required")
        train = dataset.train_items
        if not train:
            raise EmptyDataset("no training items")
        self.dataset = dataset
        self.seed = seed
        self.cv_folds = cv_folds
        self.epochs = epochs
        self.l1_penalty = l1_penalty
        self.models: dict[str, np.ndarray] = {}
        self._X = np.array([i.feature_values for i in train], dtype=float)
        self._y = np.array([i.label for i in train], dtype=int)

    def _folds(self):
        from sklearn.model_selection import StratifiedKFold

        _, counts = np.unique(self._y, return_counts=True)
        n_splits = min(self.cv_folds, int(counts.min()))
        if n_splits < 2:
            raise TrainingFailed("not enough items per class for cross-validation")
        return StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=self.seed)

    def _classifier(self):
        from sklearn.linear_model import SGDClassifier

        return SGDClassifier(
            loss="hinge",
            penalty="l1",
            alpha=self.l1_penalty,
            max_iter=self.epochs,
            tol=1e-3,
            random_state=self.seed,
        )

    def _train(self, mask: int) -> tuple[float, str]:
        model_id = f"linear-s{self.seed}-{mask:06x}"
        if np.unique(self._y).size < 2:
            raise TrainingFailed("degenerate labels: only one class present", mask=mask)
        if mask == 0:
            # featureless baseline: predict the majority class outright
            _, counts = np.unique(self._y, return_counts=True)
            self.models[model_id] = np.zeros(0)
            return float(counts.max() / counts.sum()), model_id

        cols = mask_members(mask)
        X = self._X[:, cols]
        if not np.all(np.isfinite(X)):
            raise TrainingFailed("non-finite feature values", mask=mask)
        scores = []
        for tr, va in self._folds().split(X, self._y):
            clf = self._classifier()
            clf.fit(X[tr], self._y[tr])
            scores.append(float(np.mean(clf.predict(X[va]) == self._y[va])))
        final = self._classifier()
        final.fit(X, self._y)
        self.models[model_id] = np.asarray(final.coef_)
        return float(np.mean(scores)), model_id


def train_linear(
    mask: int, dataset: Dataset, epochs: int = 1000, l1: float = 1e-4, seed: int = 0
) -> ModelHandle:
    """Train the built-in linear classifier on `mask` and return its handle."""
    costs = [CostPolynomial((0.0,))] * len(dataset.feature_names)
    learner = LinearSGDLearner(
        dataset, costs, seed=seed, epochs=epochs, l1_penalty=l1
    )
    node = learner.characterize(mask)
    return ModelHandle(id=node.model_id, mask=mask)
