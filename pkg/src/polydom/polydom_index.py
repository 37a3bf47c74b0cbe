"""Breakpoint index over candidate cost curves, with O(log) budget queries.

Offline, a kinetic sweep walks the crossings of the candidates' cost curves
in increasing size order. Only adjacent curves can cross next, so a priority
queue of adjacent-pair crossings visits every order change. A crossing is
stored as a breakpoint only when it actually changes the skyline (the
cheapest-for-each-accuracy frontier); between stored breakpoints the skyline
is constant, so one cost-sorted skyline array per range suffices.

Online, a query (size n, budget c) binary-searches the breakpoints for the
range holding n, then binary-searches that range's skyline for the costliest
entry within c. Both searches count their comparisons so retrieval cost can
be audited against the logarithmic bound.
"""

from __future__ import annotations

import heapq
import json
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .costpoly import (
    DEFAULT_N_MAX,
    Breakpoint,
    CostPolynomial,
    _diff_coeffs,
    _eval_raw,
    _roots_fast,
)
from .errors import AccuracyTie, NoFeasibleModel, ValidationError
from .lattice import CharacterizedFeatureSet

INITIAL_ORDER_AT = 1e-6
COALESCE_TOL = 1e-9

_MIN_KEY = (-1.0, 0)


@dataclass(frozen=True)
class QueryBudget:
    """An online request: item size n and extraction budget c (ms)."""

    n: float
    c: float

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"item size must be >= 1, got {self.n}")
        if self.c < 0:
            raise ValidationError(f"budget must be >= 0, got {self.c}")


@dataclass(frozen=True)
class IndexStats:
    t_int: int  # stored (interesting) breakpoints
    t_cand: int  # longest per-range skyline
    total_intersections: int  # crossings the sweep visited

    def __post_init__(self):
        if self.t_int > self.total_intersections:
            raise ValidationError("stored breakpoints cannot exceed visited crossings")


@dataclass(frozen=True)
class SweepEvent:
    """One visited crossing: the pair, whether order changed, and the verdict."""

    n_value: float
    lo_mask: int  # cheaper before the crossing
    hi_mask: int  # cheaper after the crossing (when swapped)
    swapped: bool
    interesting: bool


@dataclass(frozen=True)
class PolyDomIndex:
    breakpoints: tuple[float, ...]
    skylines: tuple[tuple[CharacterizedFeatureSet, ...], ...]
    candidates: tuple[CharacterizedFeatureSet, ...]
    stats: IndexStats

    def __post_init__(self):
        if len(self.skylines) != len(self.breakpoints) + 1:
            raise ValidationError("an index stores one skyline per range")

    def to_json(self) -> str:
        payload = {
            "breakpoints": list(self.breakpoints),
            "skylines": [[e.to_json_dict() for e in sky] for sky in self.skylines],
            "candidates": [c.to_json_dict() for c in self.candidates],
            "stats": {
                "t_int": self.stats.t_int,
                "t_cand": self.stats.t_cand,
                "total_intersections": self.stats.total_intersections,
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PolyDomIndex":
        d = json.loads(text)
        return cls(
            breakpoints=tuple(float(b) for b in d["breakpoints"]),
            skylines=tuple(
                tuple(CharacterizedFeatureSet.from_json_dict(e) for e in sky)
                for sky in d["skylines"]
            ),
            candidates=tuple(CharacterizedFeatureSet.from_json_dict(c) for c in d["candidates"]),
            stats=IndexStats(**d["stats"]),
        )


def skyline_at(
    candidates: Iterable[CharacterizedFeatureSet], n: float
) -> tuple[CharacterizedFeatureSet, ...]:
    """Cost-sorted undominated frontier at a fixed size.

    Candidates are ordered by cost at n (cost ties: higher accuracy first,
    then smaller mask) and an entry survives iff its accuracy strictly
    exceeds the running maximum.
    """
    nodes = list(candidates)
    if not nodes:
        raise ValidationError("skyline of an empty candidate set")
    ordered = sorted(nodes, key=lambda c: (c.cost.eval(n), -c.accuracy, c.mask))
    out: list[CharacterizedFeatureSet] = []
    best = _MIN_KEY
    for node in ordered:
        if node.acc_key > best:
            out.append(node)
            best = node.acc_key
    return tuple(out)


def classify_intersection(
    point: Breakpoint,
    sorted_curves: Sequence[int],
    skyline_membership: Iterable[int] | Mapping[int, bool],
    accuracies: Mapping[int, float],
    *,
    resolve_ties: bool = True,
) -> bool:
    """Decide whether a crossing of two adjacent curves changes the skyline.

    `sorted_curves` is the pre-crossing cost order (cheapest first) of curve
    ids; `skyline_membership` flags the ids on the current range's skyline.
    Writing curve-1 for the curve that is cheaper after the crossing and
    curve-2 for the other: both on the skyline always changes it; curve-1 off
    and curve-2 on changes it iff curve-1 is more accurate, or no curve below
    the pair beats curve-1; any other combination leaves it unchanged.
    """
    on = (
        {m for m, flag in skyline_membership.items() if flag}
        if isinstance(skyline_membership, Mapping)
        else set(skyline_membership)
    )
    order = list(sorted_curves)
    pa, pb = order.index(point.curve_a), order.index(point.curve_b)
    if abs(pa - pb) != 1:
        raise ValidationError("only adjacent curves can cross next")
    lo_pos = min(pa, pb)
    lo, hi = order[lo_pos], order[lo_pos + 1]
    if accuracies[lo] == accuracies[hi] and not resolve_ties:
        raise AccuracyTie(f"curves {lo} and {hi} share accuracy {accuracies[lo]}")

    def key(curve: int) -> tuple[float, int]:
        return (accuracies[curve], -curve)

    on1, on2 = hi in on, lo in on
    if on1 and on2:
        return True
    if not on1 and on2:
        if key(hi) > key(lo):
            return True
        below = [key(c) for c in order[:lo_pos]]
        return not below or max(below) < key(hi)
    return False


def build(
    candidates: Iterable[CharacterizedFeatureSet],
    *,
    n_max: float = DEFAULT_N_MAX,
    resolve_ties: bool = True,
    event_log: list[SweepEvent] | None = None,
) -> PolyDomIndex:
    """Sweep the candidate curves and store the skyline at every interesting crossing.

    Crossings of curve pairs closer than ``COALESCE_TOL`` collapse into one
    breakpoint whose skyline is recomputed after all of the group's swaps, so
    the result does not depend on their processing order.
    """
    cands = sorted(set(candidates), key=lambda c: c.mask)
    if not cands:
        raise ValidationError("cannot index an empty candidate set")
    if len({c.mask for c in cands}) != len(cands):
        raise ValidationError("candidate masks must be distinct")

    m = len(cands)
    masks = [c.mask for c in cands]
    acc_keys = [c.acc_key for c in cands]
    coeffs = [c.cost.coeffs for c in cands]

    order = sorted(
        range(m), key=lambda i: (_eval_raw(coeffs[i], INITIAL_ORDER_AT), coeffs[i], masks[i])
    )
    pos = [0] * m
    for p, i in enumerate(order):
        pos[i] = p

    prefix_max: list[tuple[float, int]] = [_MIN_KEY] * m
    running = _MIN_KEY
    for p, i in enumerate(order):
        running = max(running, acc_keys[i])
        prefix_max[p] = running

    def skyline_from_order() -> tuple[CharacterizedFeatureSet, ...]:
        out = []
        best = _MIN_KEY
        for i in order:
            if acc_keys[i] > best:
                out.append(cands[i])
                best = acc_keys[i]
        return tuple(out)

    skylines = [skyline_from_order()]
    membership = {e.mask for e in skylines[0]}

    pair_roots: dict[tuple[int, int], list[float]] = {}

    def roots_of(i: int, j: int) -> list[float]:
        key = (i, j) if i < j else (j, i)
        found = pair_roots.get(key)
        if found is None:
            d = _diff_coeffs(cands[key[0]].cost, cands[key[1]].cost)
            found = [] if all(c == 0.0 for c in d) else _roots_fast(d, 0.0, n_max)
            found = [r for r in found if r > 0.0]
            pair_roots[key] = found
        return found

    heap: list[tuple[float, int, int]] = []
    scheduled: set[tuple[int, int, float]] = set()

    def push_next(i: int, j: int, after: float) -> None:
        roots = roots_of(i, j)
        idx = bisect_right(roots, after)
        if idx < len(roots):
            key = (min(i, j), max(i, j), roots[idx])
            if key not in scheduled:
                scheduled.add(key)
                heapq.heappush(heap, (roots[idx], key[0], key[1]))

    for p in range(m - 1):
        push_next(order[p], order[p + 1], 0.0)

    breakpoints: list[float] = []
    visited = 0
    group_t: float | None = None
    group_interesting = False

    def flush_group() -> None:
        nonlocal group_t, group_interesting, membership
        if group_t is not None and group_interesting:
            breakpoints.append(group_t)
            sky = skyline_from_order()
            skylines.append(sky)
            membership = {e.mask for e in sky}
        group_t = None
        group_interesting = False

    def classify_fast(lo_i: int, hi_i: int) -> bool:
        if cands[lo_i].accuracy == cands[hi_i].accuracy and not resolve_ties:
            raise AccuracyTie(
                f"curves {masks[lo_i]} and {masks[hi_i]} share accuracy {cands[lo_i].accuracy}"
            )
        on1 = masks[hi_i] in membership
        on2 = masks[lo_i] in membership
        if on1 and on2:
            return True
        if not on1 and on2:
            if acc_keys[hi_i] > acc_keys[lo_i]:
                return True
            p = pos[lo_i]
            return p == 0 or prefix_max[p - 1] < acc_keys[hi_i]
        return False

    while heap:
        t, a, b = heapq.heappop(heap)
        scheduled.discard((a, b, t))  # allow rescheduling if adjacency recurs
        if abs(pos[a] - pos[b]) != 1:
            continue  # stale adjacency
        if group_t is not None and t - group_t > COALESCE_TOL:
            flush_group()
        if group_t is None:
            group_t = t
        visited += 1

        lo_i, hi_i = (a, b) if pos[a] < pos[b] else (b, a)
        d = _diff_coeffs(cands[lo_i].cost, cands[hi_i].cost)  # hi - lo, positive before t
        roots = roots_of(lo_i, hi_i)
        idx = bisect_right(roots, t)
        probe = 0.5 * (t + roots[idx]) if idx < len(roots) else 0.5 * (t + max(n_max, t + 2.0))
        swapped = _eval_raw(d, probe) < 0.0

        interesting = False
        if swapped:
            interesting = classify_fast(lo_i, hi_i)
            p = pos[lo_i]
            order[p], order[p + 1] = hi_i, lo_i
            pos[hi_i], pos[lo_i] = p, p + 1
            prev = prefix_max[p - 1] if p > 0 else _MIN_KEY
            prefix_max[p] = max(prev, acc_keys[hi_i])
            if interesting:
                group_interesting = True
                membership = {e.mask for e in skyline_from_order()}
            if p > 0:
                push_next(order[p - 1], hi_i, t)
            if p + 2 < m:
                push_next(lo_i, order[p + 2], t)
            push_next(lo_i, hi_i, t)
        else:
            push_next(lo_i, hi_i, t)  # tangential touch, order unchanged

        if event_log is not None:
            event_log.append(
                SweepEvent(
                    n_value=t,
                    lo_mask=masks[lo_i],
                    hi_mask=masks[hi_i],
                    swapped=swapped,
                    interesting=interesting,
                )
            )

    flush_group()
    stats = IndexStats(
        t_int=len(breakpoints),
        t_cand=max(len(s) for s in skylines),
        total_intersections=visited,
    )
    return PolyDomIndex(
        breakpoints=tuple(breakpoints),
        skylines=tuple(skylines),
        candidates=tuple(cands),
        stats=stats,
    )


@dataclass(frozen=True)
class QueryResult:
    choice: CharacterizedFeatureSet
    probes: int

    @property
    def model_id(self) -> str:
        return self.choice.model_id


def query(index: PolyDomIndex, q: QueryBudget) -> QueryResult:
    """Best indexed model for size q.n within budget q.c, via two binary searches."""
    probes = 0
    bps = index.breakpoints
    lo, hi = 0, len(bps)
    while lo < hi:
        mid = (lo + hi) // 2
        probes += 1
        if bps[mid] <= q.n:
            lo = mid + 1
        else:
            hi = mid
    sky = index.skylines[lo]

    best = -1
    lo2, hi2 = 0, len(sky) - 1
    while lo2 <= hi2:
        mid = (lo2 + hi2) // 2
        probes += 1
        if sky[mid].cost.eval(q.n) <= q.c:
            best = mid
            lo2 = mid + 1
        else:
            hi2 = mid - 1
    if best < 0:
        raise NoFeasibleModel(
            f"no skyline entry fits budget {q.c} at size {q.n}; "
            "include the empty feature set to provide a zero-cost floor"
        )
    return QueryResult(choice=sky[best], probes=probes)
