"""Greedy feature-addition sequences and anytime budgeted retrieval.

For each tradeoff weight lambda, features are added one at a time, always
picking the feature whose (accuracy gain) - lambda * (cost gain at a fixed
reference size) is largest. Every prefix is characterized, sequences share
trained prefixes through the learner cache, and a single cost-sorted skyline
over all prefixes (at the reference size) drives retrieval. Online, the
query picks a prefix from the skyline, then replays that lambda's sequence
feature by feature, charging each feature's cost at the item's true size
and stopping before the budget would be exceeded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ValidationError
from .lattice import CharacterizedFeatureSet
from .learner import ModelHandle

DEFAULT_LAMBDAS = (0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0)

ACC_SEQUENCE_KEY = "acc"
COST_SEQUENCE_KEY = "cost"

_MIN_KEY = (-1.0, 0)


@dataclass(frozen=True)
class GreedyParams:
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    reference_size: int = 1

    def __post_init__(self):
        if not self.lambdas:
            raise ValidationError("at least one lambda is required")
        if len(set(self.lambdas)) != len(self.lambdas):
            raise ValidationError("lambdas must be distinct")
        if self.reference_size < 1:
            raise ValidationError("reference_size must be >= 1")


@dataclass(frozen=True)
class SequenceStep:
    feature: int
    node: CharacterizedFeatureSet


@dataclass(frozen=True)
class SkylineEntry:
    sequence_key: str
    prefix_len: int
    cost_at_ref: float
    node: CharacterizedFeatureSet


@dataclass(frozen=True)
class GreedySequenceIndex:
    reference_size: int
    baseline: CharacterizedFeatureSet
    sequences: dict[str, tuple[SequenceStep, ...]] = field(compare=False)
    skyline: tuple[SkylineEntry, ...] = ()
    trainings: int = 0

    @property
    def unique_prefixes(self) -> int:
        return len({step.node.mask for seq in self.sequences.values() for step in seq})

    def to_json(self) -> str:
        payload = {
            "reference_size": self.reference_size,
            "baseline": self.baseline.to_json_dict(),
            "sequences": {
                key: [{"feature": s.feature, "node": s.node.to_json_dict()} for s in seq]
                for key, seq in self.sequences.items()
            },
            "skyline": [
                {
                    "sequence_key": e.sequence_key,
                    "prefix_len": e.prefix_len,
                    "cost_at_ref": e.cost_at_ref,
                    "node": e.node.to_json_dict(),
                }
                for e in self.skyline
            ],
            "trainings": self.trainings,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GreedySequenceIndex":
        d = json.loads(text)
        return cls(
            reference_size=int(d["reference_size"]),
            baseline=CharacterizedFeatureSet.from_json_dict(d["baseline"]),
            sequences={
                key: tuple(
                    SequenceStep(
                        feature=int(s["feature"]),
                        node=CharacterizedFeatureSet.from_json_dict(s["node"]),
                    )
                    for s in seq
                )
                for key, seq in d["sequences"].items()
            },
            skyline=tuple(
                SkylineEntry(
                    sequence_key=str(e["sequence_key"]),
                    prefix_len=int(e["prefix_len"]),
                    cost_at_ref=float(e["cost_at_ref"]),
                    node=CharacterizedFeatureSet.from_json_dict(e["node"]),
                )
                for e in d["skyline"]
            ),
            trainings=int(d["trainings"]),
        )


def _sequence_key(lam: float) -> str:
    return repr(float(lam))


def _build_one_sequence(learner, lam: float, reference_size: int) -> tuple[SequenceStep, ...]:
    baseline = learner.characterize(0)
    cur_mask, cur_acc = 0, baseline.accuracy
    cur_cost = baseline.cost.eval(reference_size)
    remaining = list(range(learner.num_features))
    steps: list[SequenceStep] = []
    while remaining:
        best_rank, best = None, None
        for f in remaining:
            cand = learner.characterize(cur_mask | (1 << f))
            dacc = cand.accuracy - cur_acc
            dcost = cand.cost.eval(reference_size) - cur_cost
            rank = (-(dacc - lam * dcost), dcost, f)
            if best_rank is None or rank < best_rank:
                best_rank, best = rank, (f, cand)
        f, node = best
        steps.append(SequenceStep(feature=f, node=node))
        remaining.remove(f)
        cur_mask, cur_acc = node.mask, node.accuracy
        cur_cost = node.cost.eval(reference_size)
    return tuple(steps)


def _assemble(
    learner, reference_size: int, keyed: list[tuple[str, tuple[SequenceStep, ...]]]
) -> GreedySequenceIndex:
    baseline = learner.characterize(0)
    pool: list[tuple[float, SkylineEntry]] = []
    for key_order, (key, seq) in enumerate(keyed):
        for length, step in enumerate(seq, start=1):
            cost_ref = step.node.cost.eval(reference_size)
            entry = SkylineEntry(
                sequence_key=key, prefix_len=length, cost_at_ref=cost_ref, node=step.node
            )
            pool.append(
                (
                    (cost_ref, -step.node.accuracy, step.node.mask, key_order, length),
                    entry,
                )
            )
    pool.sort(key=lambda pair: pair[0])
    skyline: list[SkylineEntry] = []
    best = _MIN_KEY
    for _, entry in pool:
        if entry.node.acc_key > best:
            skyline.append(entry)
            best = entry.node.acc_key
    return GreedySequenceIndex(
        reference_size=reference_size,
        baseline=baseline,
        sequences=dict(keyed),
        skyline=tuple(skyline),
        trainings=learner.trainings,
    )


def build_sequences(learner, params: GreedyParams) -> GreedySequenceIndex:
    """One gain-ordered sequence per lambda, plus the reference-size skyline.

    Gain ties break toward the lower cost increase, then the smaller feature
    index; identical prefixes across lambdas train once via the learner cache.
    """
    keyed = [
        (_sequence_key(lam), _build_one_sequence(learner, lam, params.reference_size))
        for lam in params.lambdas
    ]
    return _assemble(learner, params.reference_size, keyed)


def greedy_acc(learner, reference_size: int) -> GreedySequenceIndex:
    """Single sequence: always add the feature with the largest accuracy gain."""
    baseline = learner.characterize(0)
    cur_mask, cur_acc = 0, baseline.accuracy
    remaining = list(range(learner.num_features))
    steps: list[SequenceStep] = []
    while remaining:
        best_rank, best = None, None
        for f in remaining:
            cand = learner.characterize(cur_mask | (1 << f))
            dcost = learner.feature_costs[f].eval(reference_size)
            rank = (-(cand.accuracy - cur_acc), dcost, f)
            if best_rank is None or rank < best_rank:
                best_rank, best = rank, (f, cand)
        f, node = best
        steps.append(SequenceStep(feature=f, node=node))
        remaining.remove(f)
        cur_mask, cur_acc = node.mask, node.accuracy
    return _assemble(learner, reference_size, [(ACC_SEQUENCE_KEY, tuple(steps))])


def greedy_cost(learner, reference_size: int) -> GreedySequenceIndex:
    """Single sequence: always add the cheapest remaining feature at the reference size."""
    order = sorted(
        range(learner.num_features),
        key=lambda f: (learner.feature_costs[f].eval(reference_size), f),
    )
    steps: list[SequenceStep] = []
    cur_mask = 0
    for f in order:
        cur_mask |= 1 << f
        steps.append(SequenceStep(feature=f, node=learner.characterize(cur_mask)))
    return _assemble(learner, reference_size, [(COST_SEQUENCE_KEY, tuple(steps))])


@dataclass(frozen=True)
class AnytimeResult:
    handle: ModelHandle
    node: CharacterizedFeatureSet
    extracted: tuple[int, ...]
    spent: float
    sequence_key: str
    probes: int


def poly_cost_oracle(feature_costs: Sequence) -> Callable[[int, float], float]:
    """Charge each feature its fitted curve evaluated at the item's true size."""

    def oracle(feature: int, size: float) -> float:
        return feature_costs[feature].eval(size)

    return oracle


def query_anytime(
    index: GreedySequenceIndex,
    size: float,
    budget: float,
    cost_oracle: Callable[[int, float], float],
) -> AnytimeResult:
    """Spend the budget feature by feature along the best sequence for it.

    The skyline (priced at the reference size) picks a sequence; the walk
    then charges true per-feature costs for this item's size and stops
    before overspending, so the charged total never exceeds the budget. The
    result may sit before or past the skyline pick when the item's size
    differs from the reference size. Falls back to the featureless baseline.
    """
    if budget < 0:
        raise ValidationError("budget must be >= 0")
    probes = 0
    best = -1
    lo, hi = 0, len(index.skyline) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        probes += 1
        if index.skyline[mid].cost_at_ref <= budget:
            best = mid
            lo = mid + 1
        else:
            hi = mid - 1
    pick = index.skyline[best] if best >= 0 else index.skyline[0]
    sequence = index.sequences[pick.sequence_key]

    spent = 0.0
    extracted: list[int] = []
    current = index.baseline
    for step in sequence:
        fee = cost_oracle(step.feature, size)
        if spent + fee > budget:
            break
        spent += fee
        extracted.append(step.feature)
        current = step.node
    return AnytimeResult(
        handle=ModelHandle(id=current.model_id, mask=current.mask),
        node=current,
        extracted=tuple(extracted),
        spent=spent,
        sequence_key=pick.sequence_key,
        probes=probes,
    )
