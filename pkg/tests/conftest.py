"""Shared fixtures: small hand-built universes with known behavior."""

from __future__ import annotations

import pytest

from polydom.costpoly import CostPolynomial
from polydom.lattice import CharacterizedFeatureSet
from polydom.learner import BlackBoxLearner


class TableLearner(BlackBoxLearner):
    """Accuracy read from a mask-keyed table; handy for exactly scripted lattices."""

    supports_concurrent_training = True

    def __init__(self, accuracies: dict[int, float], feature_costs):
        super().__init__(feature_costs)
        self.accuracies = dict(accuracies)

    def _train(self, mask: int) -> tuple[float, str]:
        return self.accuracies[mask], f"table-{mask:06x}"


def mask(*features: int) -> int:
    m = 0
    for f in features:
        m |= 1 << f
    return m


# A four-feature universe whose sandwich pruning outcome is known by hand:
# with alpha=1 exactly {f2,f3} and {f3,f4} stay unexpanded, and with
# alpha=1.1 the whole middle layer except {f1,f2} is pruned.
DIAMOND_ACCURACIES = {
    mask(): 0.5,
    mask(0): 0.78,
    mask(1): 0.70,
    mask(2): 0.75,
    mask(3): 0.60,
    mask(0, 1): 0.86,
    mask(0, 2): 0.80,
    mask(0, 3): 0.78,
    mask(1, 2): 0.75,
    mask(1, 3): 0.75,
    mask(2, 3): 0.75,
    mask(0, 1, 2): 0.86,
    mask(0, 1, 3): 0.90,
    mask(0, 2, 3): 0.83,
    mask(1, 2, 3): 0.75,
    mask(0, 1, 2, 3): 0.96,
}

DIAMOND_COSTS = tuple(CostPolynomial((10.0 * (i + 1),)) for i in range(4))


@pytest.fixture
def diamond_learner() -> TableLearner:
    return TableLearner(DIAMOND_ACCURACIES, DIAMOND_COSTS)


def four_curve_family() -> list[CharacterizedFeatureSet]:
    """Four candidate curves with five crossings, two of which move the skyline.

    Initial cost order (near n = 0) is A < B < C < D; crossings happen at
    n = 20 (A x B, skyline changes), 100 (A x C, off-skyline), 230 (A x D,
    unchanged), 262.5 (C x D, unchanged) and 440 (B x D, skyline changes).
    """
    return [
        CharacterizedFeatureSet(1, 0.70, CostPolynomial((10.0, 1.0)), "curve-a"),
        CharacterizedFeatureSet(2, 0.76, CostPolynomial((20.0, 0.5)), "curve-b"),
        CharacterizedFeatureSet(4, 0.65, CostPolynomial((30.0, 0.8)), "curve-c"),
        CharacterizedFeatureSet(8, 0.80, CostPolynomial((240.0,)), "curve-d"),
    ]


@pytest.fixture
def curve_family() -> list[CharacterizedFeatureSet]:
    return four_curve_family()


# populated by the acceptance suite; one (criterion, passed, detail) per entry
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_LINES:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{criterion}] {status} {detail}")
