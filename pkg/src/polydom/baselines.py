"""Reference implementations the fast paths are audited against.

Deliberately unclever: exhaustive lattice expansion, an index that stores a
recomputed skyline at every pairwise curve crossing, and a linear scan
lookup that is the ground-truth answer for any (size, budget) probe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .costpoly import DEFAULT_N_MAX, _diff_coeffs, _roots_fast
from .errors import NoFeasibleModel, UniverseTooLarge, ValidationError
from .lattice import CharacterizedFeatureSet
from .polydom_index import COALESCE_TOL, IndexStats, PolyDomIndex, skyline_at

NAIVE_EXPANSION_CAP = 20


def naive_expand_all(learner, cap: int = NAIVE_EXPANSION_CAP) -> dict[int, CharacterizedFeatureSet]:
    """Characterize every one of the 2^F subsets. Guarded: this is exponential."""
    num_features = learner.num_features
    if num_features > cap:
        raise UniverseTooLarge(
            f"{num_features} features means {2 ** num_features} trainings; "
            f"the guard is {cap} (override `cap` to force it)"
        )
    return {mask: learner.characterize(mask) for mask in range(1 << num_features)}


def index_all(
    candidates: Iterable[CharacterizedFeatureSet], n_max: float = DEFAULT_N_MAX
) -> PolyDomIndex:
    """Store a recomputed skyline at every pairwise crossing, interesting or not."""
    cands = sorted(set(candidates), key=lambda c: c.mask)
    if not cands:
        raise ValidationError("cannot index an empty candidate set")
    crossings: list[float] = []
    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            d = _diff_coeffs(cands[i].cost, cands[j].cost)
            if all(c == 0.0 for c in d):
                continue
            crossings.extend(r for r in _roots_fast(d, 0.0, n_max) if r > 0.0)
    total = len(crossings)
    crossings.sort()
    breakpoints: list[float] = []
    for r in crossings:
        if not breakpoints or r - breakpoints[-1] > COALESCE_TOL:
            breakpoints.append(r)

    representatives = [breakpoints[0] / 2.0 if breakpoints else 1.0]
    representatives += [0.5 * (a + b) for a, b in zip(breakpoints, breakpoints[1:])]
    if breakpoints:
        representatives.append(breakpoints[-1] + 1.0)
    skylines = tuple(skyline_at(cands, rep) for rep in representatives)

    stats = IndexStats(
        t_int=len(breakpoints),
        t_cand=max(len(s) for s in skylines),
        total_intersections=total,
    )
    return PolyDomIndex(
        breakpoints=tuple(breakpoints),
        skylines=skylines,
        candidates=tuple(cands),
        stats=stats,
    )


@dataclass(frozen=True)
class LookupResult:
    choice: CharacterizedFeatureSet
    probes: int

    @property
    def model_id(self) -> str:
        return self.choice.model_id


def naive_lookup(
    candidates: Iterable[CharacterizedFeatureSet], n: float, c: float
) -> LookupResult:
    """Scan every candidate and return the most accurate one within budget."""
    best = None
    probes = 0
    for cand in candidates:
        probes += 1
        if cand.cost.eval(n) <= c and (best is None or cand.acc_key > best.acc_key):
            best = cand
    if best is None:
        raise NoFeasibleModel(f"no candidate fits budget {c} at size {n}")
    return LookupResult(choice=best, probes=probes)
