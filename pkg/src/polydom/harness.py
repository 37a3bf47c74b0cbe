"""Experiment driver: seeded configs in, metrics tables and figures out.

A run takes one universe (synthetic config or tabular dataset), builds the
requested algorithms offline, then replays a (size x budget) probe grid
online. Four metric families are recorded per algorithm: offline expansion
counts, index size, online probe counts plus wall time, and achieved
accuracy per probe. Reports are written as a long-format CSV plus a
provenance JSON and are byte-identical across reruns of the same spec.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import subprocess
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .baselines import index_all, naive_expand_all, naive_lookup
from .costpoly import DEFAULT_N_MAX, CostPolynomial, CostSample, fit
from .errors import EquivalenceError, InsufficientSamples, ValidationError
from .greedy_cascade import (
    DEFAULT_LAMBDAS,
    GreedyParams,
    build_sequences,
    greedy_acc,
    greedy_cost,
    poly_cost_oracle,
    query_anytime,
)
from .lattice import PruningParams, candidate_set, expand_enumerate
from .learner import (
    Dataset,
    LinearSGDLearner,
    SyntheticConfig,
    SyntheticOracleLearner,
    sample_synthetic_config,
)
from .polydom_index import PolyDomIndex, QueryBudget, build, query

DEFAULT_SIZES = (1, 5, 10, 25, 50, 100, 250, 500)
DEFAULT_BUDGETS = (
    10.0,
    43.0,
    187.0,
    811.0,
    3511.0,
    15199.0,
    65793.0,
    284804.0,
    1232847.0,
    5336699.0,
    23101297.0,
    100000000.0,
)

ALL_ALGORITHMS = ("polydom", "greedy", "greedy-acc", "greedy-cost")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a run needs; serialized verbatim into run.json."""

    synthetic: SyntheticConfig | None = None
    dataset_path: str | None = None
    split_path: str | None = None
    costs_path: str | None = None
    algorithms: tuple[str, ...] = ALL_ALGORITHMS
    alpha: float = 1.2
    e: float = 0.0
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    sizes: tuple[int, ...] = DEFAULT_SIZES
    budgets: tuple[float, ...] = DEFAULT_BUDGETS
    reference_size: int | None = None
    include_baselines: bool = True
    use_covering: bool = True
    n_max: float = DEFAULT_N_MAX
    seed: int = 0
    out_dir: str | None = None
    make_plots: bool = True

    def __post_init__(self):
        if not self.algorithms:
            raise ValidationError("at least one algorithm must run")
        unknown = set(self.algorithms) - set(ALL_ALGORITHMS)
        if unknown:
            raise ValidationError(f"unknown algorithms: {sorted(unknown)}")
        if not self.budgets:
            raise ValidationError("the budget grid is empty")
        if not self.sizes:
            raise ValidationError("the size grid is empty")
        if self.synthetic is None and self.dataset_path is None:
            raise ValidationError("a synthetic config or a dataset path is required")

    def to_json_dict(self) -> dict:
        return {
            "synthetic": None if self.synthetic is None else self.synthetic.to_json_dict(),
            "dataset_path": self.dataset_path,
            "split_path": self.split_path,
            "costs_path": self.costs_path,
            "algorithms": list(self.algorithms),
            "alpha": self.alpha,
            "e": self.e,
            "lambdas": list(self.lambdas),
            "sizes": list(self.sizes),
            "budgets": list(self.budgets),
            "reference_size": self.reference_size,
            "include_baselines": self.include_baselines,
            "use_covering": self.use_covering,
            "n_max": self.n_max,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MetricRow:
    algorithm: str
    metric: str
    size: int | None
    budget: float | None
    value: float


@dataclass
class MetricsReport:
    spec: ExperimentSpec
    rows: list[MetricRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, algorithm: str, metric: str, value: float, size=None, budget=None) -> None:
        self.rows.append(MetricRow(algorithm, metric, size, budget, float(value)))

    def values(self, algorithm: str, metric: str) -> list[float]:
        return [r.value for r in self.rows if r.algorithm == algorithm and r.metric == metric]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["algorithm", "metric", "size", "budget", "value"])
        for r in self.rows:
            writer.writerow(
                [
                    r.algorithm,
                    r.metric,
                    "" if r.size is None else r.size,
                    "" if r.budget is None else repr(float(r.budget)),
                    repr(r.value),
                ]
            )
        return buf.getvalue()

    def to_run_json(self) -> str:
        payload = {
            "version": __version__,
            "spec": self.spec.to_json_dict(),
            "summary": self.summary,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _median_size(sizes: Sequence[int]) -> int:
    return int(statistics.median_low(sorted(sizes)))


def _make_learner(spec: ExperimentSpec):
    if spec.synthetic is not None:
        return SyntheticOracleLearner(spec.synthetic)
    from .learner import read_dataset_csv

    dataset = read_dataset_csv(spec.dataset_path, spec.split_path)
    if spec.costs_path is None:
        raise ValidationError("dataset runs need --costs with fitted per-feature curves")
    with open(spec.costs_path) as handle:
        raw = json.load(handle)
    costs = [
        CostPolynomial.from_json_dict(raw["features"][name]) for name in dataset.feature_names
    ]
    return LinearSGDLearner(dataset, costs, seed=spec.seed)


def run_experiment(spec: ExperimentSpec) -> MetricsReport:
    """Run every requested algorithm offline, probe the grid online, write reports."""
    report = MetricsReport(spec=spec)
    probes = [(size, budget) for size in spec.sizes for budget in spec.budgets]
    reference = spec.reference_size or _median_size(spec.sizes)
    params = PruningParams(alpha=spec.alpha, e=spec.e)
    summary: dict = {"reference_size": reference}

    pd_candidates = None
    pd_index = None
    if "polydom" in spec.algorithms:
        learner = _make_learner(spec)
        expanded = expand_enumerate(learner, params, use_covering=spec.use_covering)
        pd_candidates = candidate_set(expanded, spec.alpha, spec.n_max)
        pd_index = build(pd_candidates, n_max=spec.n_max)
        report.add("polydom", "expanded_sets", len(expanded))
        index_entries = len(pd_index.breakpoints) + sum(len(s) for s in pd_index.skylines)
        report.add("polydom", "index_entries", index_entries)
        started = time.perf_counter()
        for size, budget in probes:
            result = query(pd_index, QueryBudget(n=size, c=budget))
            report.add("polydom", "accuracy", result.choice.accuracy, size, budget)
            report.add("polydom", "query_probes", result.probes, size, budget)
        report.add("polydom", "query_wall_ms", 1000.0 * (time.perf_counter() - started))
        summary["polydom"] = {
            "expanded": len(expanded),
            "candidates": len(pd_candidates),
            "breakpoints": pd_index.stats.t_int,
            "visited_intersections": pd_index.stats.total_intersections,
            "max_skyline": pd_index.stats.t_cand,
        }

    if spec.include_baselines and pd_candidates is not None:
        learner = _make_learner(spec)
        exhaustive = naive_expand_all(learner)
        report.add("naive-expand-all", "expanded_sets", len(exhaustive))
        all_index = index_all(pd_candidates, spec.n_max)
        report.add(
            "polydom-index-all",
            "index_entries",
            len(all_index.breakpoints) + sum(len(s) for s in all_index.skylines),
        )
        report.add("naive-lookup", "index_entries", len(pd_candidates))
        started = time.perf_counter()
        for size, budget in probes:
            scan = naive_lookup(pd_candidates, size, budget)
            report.add("naive-lookup", "query_probes", scan.probes, size, budget)
            report.add("naive-lookup", "accuracy", scan.choice.accuracy, size, budget)
            indexed = query(pd_index, QueryBudget(n=size, c=budget))
            via_all = query(all_index, QueryBudget(n=size, c=budget))
            if not (
                scan.choice.accuracy == indexed.choice.accuracy == via_all.choice.accuracy
            ):
                raise EquivalenceError(
                    f"baseline disagreement at size={size} budget={budget}: "
                    f"scan={scan.choice.accuracy} index={indexed.choice.accuracy} "
                    f"index-all={via_all.choice.accuracy}"
                )
        report.add("naive-lookup", "query_wall_ms", 1000.0 * (time.perf_counter() - started))
        summary["baselines"] = {
            "naive_expanded": len(exhaustive),
            "index_all_breakpoints": all_index.stats.t_int,
        }

    greedy_builds = {
        "greedy": lambda lrn: build_sequences(
            lrn, GreedyParams(lambdas=spec.lambdas, reference_size=reference)
        ),
        "greedy-acc": lambda lrn: greedy_acc(lrn, reference),
        "greedy-cost": lambda lrn: greedy_cost(lrn, reference),
    }
    for name, builder in greedy_builds.items():
        if name not in spec.algorithms:
            continue
        learner = _make_learner(spec)
        index = builder(learner)
        oracle = poly_cost_oracle(learner.feature_costs)
        report.add(name, "expanded_sets", learner.trainings)
        report.add(
            name,
            "index_entries",
            len(index.skyline) + sum(len(s) for s in index.sequences.values()),
        )
        started = time.perf_counter()
        for size, budget in probes:
            answer = query_anytime(index, size, budget, oracle)
            report.add(name, "accuracy", answer.node.accuracy, size, budget)
            report.add(name, "query_probes", answer.probes, size, budget)
        report.add(name, "query_wall_ms", 1000.0 * (time.perf_counter() - started))
        summary[name] = {
            "trainings": index.trainings,
            "unique_prefixes": index.unique_prefixes,
            "skyline_entries": len(index.skyline),
        }

    report.summary = summary
    if spec.out_dir is not None:
        write_report(report, spec.out_dir)
    return report


def write_report(report: MetricsReport, out_dir: str) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as handle:
        handle.write(report.to_csv())
    with open(os.path.join(out_dir, "run.json"), "w") as handle:
        handle.write(report.to_run_json())
    if report.spec.make_plots:
        from .report_plots import render_experiment_plots

        render_experiment_plots(report, out_dir)


# ---------------------------------------------------------------------------
# monotonicity tooling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityReport:
    pair_count: int
    violations: tuple[float, ...]  # sorted ascending
    cdf: tuple[tuple[float, float], ...]
    per_distance: dict[int, dict]
    recommended_e: float
    max_violation: float
    target: float

    def to_json(self) -> str:
        payload = {
            "pair_count": self.pair_count,
            "max_violation": self.max_violation,
            "recommended_e": self.recommended_e,
            "target": self.target,
            "cdf": [list(point) for point in self.cdf],
            "per_distance": {str(k): v for k, v in sorted(self.per_distance.items())},
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def cdf_to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["violation", "fraction"])
        for violation, fraction in self.cdf:
            writer.writerow([repr(violation), repr(fraction)])
        return buf.getvalue()


def monotonicity_analysis(nodes, target: float = 0.95) -> MonotonicityReport:
    """Measure accuracy drops across every subset/superset pair.

    A pair (F_i subset of F_j) violates monotonicity by max(0, a_i - a_j).
    The report carries the violation CDF, per-distance medians with quartile
    spread, and the smallest tolerance e covering `target` of all pairs.
    """
    if not 0.0 < target <= 1.0:
        raise ValidationError(f"target must be in (0, 1], got {target}")
    node_list = list(nodes.values()) if isinstance(nodes, Mapping) else list(nodes)
    by_mask = {n.mask: n for n in node_list}
    if len(by_mask) < 2:
        raise ValidationError("monotonicity analysis needs at least two comparable sets")

    violations: list[float] = []
    by_distance: dict[int, list[float]] = {}
    for mask_j, node_j in by_mask.items():
        sub = (mask_j - 1) & mask_j
        while True:
            node_i = by_mask.get(sub)
            if node_i is not None:
                violation = max(0.0, node_i.accuracy - node_j.accuracy)
                violations.append(violation)
                distance = node_j.size - node_i.size
                by_distance.setdefault(distance, []).append(violation)
            if sub == 0:
                break
            sub = (sub - 1) & mask_j

    if not violations:
        raise ValidationError("no subset/superset pairs among the given sets")
    violations.sort()
    count = len(violations)
    cdf_points: list[tuple[float, float]] = []
    for i, v in enumerate(violations, start=1):
        if i == count or violations[i] != v:
            cdf_points.append((v, i / count))
    rec_index = max(0, math.ceil(target * count) - 1)
    recommended = violations[min(rec_index, count - 1)]
    per_distance = {
        d: {
            "median": statistics.median(vals),
            "p25": statistics.quantiles(vals, n=4)[0] if len(vals) > 1 else vals[0],
            "p75": statistics.quantiles(vals, n=4)[2] if len(vals) > 1 else vals[0],
            "count": len(vals),
        }
        for d, vals in by_distance.items()
    }
    return MonotonicityReport(
        pair_count=count,
        violations=tuple(violations),
        cdf=tuple(cdf_points),
        per_distance=per_distance,
        recommended_e=recommended,
        max_violation=violations[-1],
        target=target,
    )


def write_monotonicity_report(
    report: MonotonicityReport, out_dir: str, make_plots: bool = True
) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "monotonicity.json"), "w") as handle:
        handle.write(report.to_json())
    with open(os.path.join(out_dir, "monotonicity_cdf.csv"), "w", newline="") as handle:
        handle.write(report.cdf_to_csv())
    if make_plots:
        from .report_plots import render_monotonicity_plots

        render_monotonicity_plots(report, out_dir)


# ---------------------------------------------------------------------------
# cost profiling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfiledCost:
    feature: str
    poly: CostPolynomial
    sample_count: int
    max_abs_residual: float


def profile_costs(
    samples_by_feature: Mapping[str, Iterable[CostSample]],
    degree: int,
    quantile: float = 1.0,
) -> dict[str, ProfiledCost]:
    """Fit one cost curve per feature and report residuals at the sampled sizes."""
    out: dict[str, ProfiledCost] = {}
    for feature in sorted(samples_by_feature):
        samples = list(samples_by_feature[feature])
        poly = fit(samples, degree, quantile)
        by_size: dict[int, list[float]] = {}
        for s in samples:
            by_size.setdefault(s.size, []).append(s.elapsed)
        residual = 0.0
        for size, values in by_size.items():
            observed = float(np.quantile(values, quantile))
            residual = max(residual, abs(poly.eval(size) - observed))
        out[feature] = ProfiledCost(
            feature=feature,
            poly=poly,
            sample_count=len(samples),
            max_abs_residual=residual,
        )
    return out


def time_feature_command(
    command_template: str, sizes: Sequence[int], repetitions: int
) -> list[CostSample]:
    """Wall-clock a shell command once per (size, repetition); {size} interpolates."""
    if repetitions < 1:
        raise ValidationError("repetitions must be >= 1")
    if not sizes:
        raise InsufficientSamples("no sizes to profile")
    samples = []
    for size in sizes:
        command = command_template.format(size=size)
        for _ in range(repetitions):
            started = time.perf_counter()
            proc = subprocess.run(command, shell=True, capture_output=True)
            elapsed_ms = 1000.0 * (time.perf_counter() - started)
            if proc.returncode != 0:
                raise ValidationError(
                    f"profiled command failed (exit {proc.returncode}): {command}"
                )
            samples.append(CostSample(size=size, elapsed=elapsed_ms))
    return samples


def profiled_costs_to_json(profiled: Mapping[str, ProfiledCost]) -> str:
    payload = {
        "features": {
            name: {
                "coeffs": list(p.poly.coeffs),
                "sample_count": p.sample_count,
                "max_abs_residual": p.max_abs_residual,
            }
            for name, p in sorted(profiled.items())
        }
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def gen_synthetic(num_features: int, p: float, k: float, seed: int, out_path: str) -> SyntheticConfig:
    """Sample a seeded synthetic universe and write it as JSON."""
    config = sample_synthetic_config(num_features, p, k, seed)
    with open(out_path, "w") as handle:
        handle.write(config.to_json())
    return config
