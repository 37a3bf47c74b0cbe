"""Feature-subset lattice search with provably safe dominance pruning.

Feature sets are bit masks over the universe 0..F-1. The search expands
(trains and characterizes) nodes layer by layer from both ends of the
lattice, skipping any node sandwiched between an already-expanded subset
and superset whose accuracies are close enough that the middle can never
win. A second pass then drops expanded nodes that are dominated outright,
leaving the candidate set every size-specific skyline is drawn from.

Pruning decisions for a layer are made against the frontier state as it
stood when the layer opened, so results are independent of the order in
which the layer's nodes are trained and node training may run in parallel.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .costpoly import DEFAULT_N_MAX, CostPolynomial, cost_dominates
from .errors import TrainingFailed, UniverseTooLarge, ValidationError

MAX_LATTICE_FEATURES = 24

# probe sizes used to cheaply reject impossible dominance pairs before the
# exact curve comparison runs
_DOMINANCE_GRID = (0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, DEFAULT_N_MAX)


def mask_members(mask: int) -> list[int]:
    """Indices of the features present in `mask`."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class CharacterizedFeatureSet:
    """A feature subset with its trained model id, accuracy and summed cost curve."""

    mask: int
    accuracy: float
    cost: CostPolynomial
    model_id: str

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy must lie in [0, 1], got {self.accuracy}")
        if self.mask < 0:
            raise ValidationError("feature masks are nonnegative")

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    @property
    def acc_key(self) -> tuple[float, int]:
        # Exact accuracy ties are broken by treating the smaller mask as
        # infinitesimally more accurate, consistently everywhere.
        return (self.accuracy, -self.mask)

    def to_json_dict(self) -> dict:
        return {
            "mask": self.mask,
            "accuracy": self.accuracy,
            "cost": self.cost.to_json_dict(),
            "model_id": self.model_id,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CharacterizedFeatureSet":
        return cls(
            mask=int(d["mask"]),
            accuracy=float(d["accuracy"]),
            cost=CostPolynomial.from_json_dict(d["cost"]),
            model_id=str(d["model_id"]),
        )


@dataclass(frozen=True)
class PruningParams:
    """Accuracy slack `alpha` (>= 1) and monotonicity-violation tolerance `e`."""

    alpha: float = 1.0
    e: float = 0.0

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValidationError(f"alpha must be >= 1, got {self.alpha}")
        if not 0.0 <= self.e <= 1.0:
            raise ValidationError(f"e must lie in [0, 1], got {self.e}")


def dominates(
    a: CharacterizedFeatureSet,
    b: CharacterizedFeatureSet,
    alpha: float,
    n_max: float = DEFAULT_N_MAX,
) -> bool:
    """True iff `a` is never costlier than `b` and alpha * a's accuracy >= b's."""
    if alpha * a.accuracy < b.accuracy:
        return False
    return cost_dominates(a.cost, b.cost, n_max)


def is_sandwiched(
    mask: int,
    frontier_top: Iterable[CharacterizedFeatureSet],
    frontier_bottom: Iterable[CharacterizedFeatureSet],
    params: PruningParams,
) -> bool:
    """True iff some expanded pair F_i < mask < F_k has alpha*(a(F_i) - e) >= a(F_k)."""
    best_below = None
    for f in frontier_bottom:
        if f.mask != mask and f.mask & mask == f.mask:
            if best_below is None or f.accuracy > best_below:
                best_below = f.accuracy
    if best_below is None:
        return False
    worst_above = None
    for f in frontier_top:
        if f.mask != mask and f.mask | mask == f.mask:
            if worst_above is None or f.accuracy < worst_above:
                worst_above = f.accuracy
    if worst_above is None:
        return False
    return params.alpha * (best_below - params.e) >= worst_above


def _covering_intervals(
    frontier_top: Sequence[CharacterizedFeatureSet],
    frontier_bottom: Sequence[CharacterizedFeatureSet],
    params: PruningParams,
    universe_mask: int,
) -> list[tuple[int, int]]:
    """(lo, hi) mask pairs whose strict interiors are prunable by covering families."""
    out: list[tuple[int, int]] = []
    # a bottom node with dominated top supersets that jointly span every feature
    for fi in frontier_bottom:
        family = [
            fk
            for fk in frontier_top
            if fk.mask != fi.mask
            and fi.mask & fk.mask == fi.mask
            and params.alpha * (fi.accuracy - params.e) >= fk.accuracy
        ]
        if family:
            union = 0
            for fk in family:
                union |= fk.mask
            if union == universe_mask:
                out.extend((fi.mask, fk.mask) for fk in family)
    # inverse: a top node whose dominating bottom subsets share no common feature
    for fk in frontier_top:
        family = [
            fi
            for fi in frontier_bottom
            if fi.mask != fk.mask
            and fi.mask & fk.mask == fi.mask
            and params.alpha * (fi.accuracy - params.e) >= fk.accuracy
        ]
        if family:
            common = universe_mask
            for fi in family:
                common &= fi.mask
            if common == 0:
                out.extend((fi.mask, fk.mask) for fi in family)
    return sorted(set(out))


def covering_prunable(
    frontier_top: Sequence[CharacterizedFeatureSet],
    frontier_bottom: Sequence[CharacterizedFeatureSet],
    params: PruningParams,
    universe_mask: int,
    expanded_masks: frozenset[int] = frozenset(),
) -> set[int]:
    """All unexpanded masks strictly between a covering family and its base node."""
    prunable: set[int] = set()
    for lo, hi in _covering_intervals(frontier_top, frontier_bottom, params, universe_mask):
        gap = hi & ~lo
        sub = (gap - 1) & gap
        while sub:
            mask = lo | sub
            if mask not in expanded_masks:
                prunable.add(mask)
            sub = (sub - 1) & gap
    return prunable


def _children(mask: int) -> list[int]:
    return [mask & ~(1 << i) for i in mask_members(mask)]


def _parents(mask: int, universe_mask: int) -> list[int]:
    return [mask | (1 << i) for i in mask_members(universe_mask & ~mask)]


def expand_enumerate(
    learner,
    params: PruningParams,
    *,
    use_covering: bool = True,
    max_workers: int = 1,
) -> dict[int, CharacterizedFeatureSet]:
    """Bidirectional lattice expansion; returns every expanded node keyed by mask.

    The learner must expose num_features, characterize(mask) and
    supports_concurrent_training. {} and the full universe always expand.
    """
    num_features = learner.num_features
    if num_features < 1:
        raise ValidationError("the feature universe is empty")
    if num_features > MAX_LATTICE_FEATURES:
        raise UniverseTooLarge(
            f"{num_features} features exceeds the lattice cap of {MAX_LATTICE_FEATURES}; "
            "reduce the universe offline or use the progressive-alpha mode"
        )
    universe_mask = (1 << num_features) - 1

    expanded: dict[int, CharacterizedFeatureSet] = {}
    frontier_top: set[int] = set()
    frontier_bottom: set[int] = set()
    active_top: set[int] = {universe_mask}
    active_bottom: set[int] = {0}
    cover_intervals: list[tuple[int, int]] = []

    def covered(mask: int) -> bool:
        for lo, hi in cover_intervals:
            if lo & mask == lo and mask | hi == hi and mask != lo and mask != hi:
                return True
        return False

    def characterize_all(masks: list[int]) -> None:
        def one(mask: int) -> CharacterizedFeatureSet:
            try:
                return learner.characterize(mask)
            except TrainingFailed:
                raise
            except Exception as exc:  # attach the offending node
                raise TrainingFailed(f"learner failed on mask {mask}: {exc}", mask=mask) from exc

        if max_workers > 1 and getattr(learner, "supports_concurrent_training", False):
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                for mask, node in zip(masks, pool.map(one, masks)):
                    expanded[mask] = node
        else:
            for mask in masks:
                expanded[mask] = one(mask)

    while active_top or active_bottom:
        ft_view = [expanded[m] for m in frontier_top]
        fb_view = [expanded[m] for m in frontier_bottom]

        def should_expand(mask: int) -> bool:
            if mask in expanded or covered(mask):
                return False
            return not is_sandwiched(mask, ft_view, fb_view, params)

        todo_top = sorted(m for m in active_top if should_expand(m))
        todo_bottom = sorted(m for m in active_bottom if should_expand(m))
        characterize_all(sorted(set(todo_top) | set(todo_bottom)))

        for mask in todo_top:
            frontier_top.add(mask)
        for mask in todo_top:
            frontier_top.difference_update(_parents(mask, universe_mask))
        for mask in todo_bottom:
            frontier_bottom.add(mask)
        for mask in todo_bottom:
            frontier_bottom.difference_update(_children(mask))

        active_top = {c for m in todo_top for c in _children(m) if c not in expanded}
        active_bottom = {p for m in todo_bottom for p in _parents(m, universe_mask) if p not in expanded}

        if use_covering:
            ft_now = [expanded[m] for m in frontier_top]
            fb_now = [expanded[m] for m in frontier_bottom]
            for interval in _covering_intervals(ft_now, fb_now, params, universe_mask):
                if interval not in cover_intervals:
                    cover_intervals.append(interval)

    return expanded


@dataclass(frozen=True)
class ProgressiveResult:
    alpha: float
    expanded: dict
    completed_alphas: tuple[float, ...]


def expand_progressive(
    learner,
    alphas: Sequence[float],
    e: float = 0.0,
    budget_seconds: float = float("inf"),
    **kwargs,
) -> ProgressiveResult:
    """Run a descending alpha schedule under a wall-clock budget.

    The first (largest) alpha always completes; each later alpha reuses all
    previously trained nodes through the learner's cache, so tightening alpha
    never repeats work. Returns the result for the smallest completed alpha.
    """
    schedule = sorted(set(float(a) for a in alphas), reverse=True)
    if not schedule:
        raise ValidationError("the alpha schedule is empty")
    start = time.monotonic()
    completed: list[float] = []
    result: dict[int, CharacterizedFeatureSet] = {}
    for alpha in schedule:
        if completed and time.monotonic() - start >= budget_seconds:
            break
        result = expand_enumerate(learner, PruningParams(alpha=alpha, e=e), **kwargs)
        completed.append(alpha)
    return ProgressiveResult(alpha=completed[-1], expanded=result, completed_alphas=tuple(completed))


def _cost_integral(poly: CostPolynomial, n_max: float) -> float:
    return sum(c * n_max ** (i + 1) / (i + 1) for i, c in enumerate(poly.coeffs))


def candidate_set(
    expanded: Mapping[int, CharacterizedFeatureSet] | Iterable[CharacterizedFeatureSet],
    alpha: float,
    n_max: float = DEFAULT_N_MAX,
) -> list[CharacterizedFeatureSet]:
    """Drop every expanded node dominated by a retained one; sorted by mask.

    Nodes are processed in increasing order of total cost over the size
    domain, which puts every potential dominator before the nodes it can
    remove. A node is kept iff no retained node dominates it, so each removed
    node has a surviving witness and no retained pair dominates one another.
    Exact (accuracy, cost) ties keep the smaller mask.
    """
    nodes = list(expanded.values()) if isinstance(expanded, Mapping) else list(expanded)
    if not nodes:
        raise ValidationError("candidate pruning needs at least one expanded node")
    if len({n.mask for n in nodes}) != len(nodes):
        raise ValidationError("expanded nodes must have distinct masks")

    order = sorted(nodes, key=lambda c: (_cost_integral(c.cost, n_max), -c.accuracy, c.mask))
    grids = {c.mask: tuple(c.cost.eval(min(g, n_max)) for g in _DOMINANCE_GRID) for c in order}

    retained: list[CharacterizedFeatureSet] = []
    for node in order:
        g_node = grids[node.mask]
        dominated = False
        for r in retained:
            if alpha * r.accuracy < node.accuracy:
                continue
            g_r = grids[r.mask]
            if any(a > b + 1e-12 * (1.0 + abs(b)) for a, b in zip(g_r, g_node)):
                continue
            # cheap sufficient test: coefficient-wise smaller curves dominate
            rc, nc = r.cost.coeffs, node.cost.coeffs
            if len(rc) <= len(nc) and all(a <= b for a, b in zip(rc, nc)):
                dominated = True
                break
            if cost_dominates(r.cost, node.cost, n_max):
                dominated = True
                break
        if not dominated:
            retained.append(node)
    return sorted(retained, key=lambda c: c.mask)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def sets_to_json(nodes: Iterable[CharacterizedFeatureSet]) -> str:
    payload = [n.to_json_dict() for n in sorted(nodes, key=lambda c: c.mask)]
    return json.dumps(payload, indent=2, sort_keys=True)


def sets_from_json(text: str) -> list[CharacterizedFeatureSet]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValidationError("expected a JSON array of characterized feature sets")
    return [CharacterizedFeatureSet.from_json_dict(d) for d in data]
