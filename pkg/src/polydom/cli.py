"""Command-line front end.

Exit codes: 0 success, 2 bad inputs, 3 a computation failed.
"""

from __future__ import annotations

import functools
import json
import math
import sys

import click

from .baselines import index_all as build_index_all
from .costpoly import DEFAULT_N_MAX, MAX_DEGREE, read_timing_csv
from .errors import ComputationError, ValidationError
from .greedy_cascade import (
    DEFAULT_LAMBDAS,
    GreedyParams,
    GreedySequenceIndex,
    build_sequences,
    greedy_acc,
    greedy_cost,
    poly_cost_oracle,
    query_anytime,
)
from .harness import (
    ALL_ALGORITHMS,
    DEFAULT_BUDGETS,
    DEFAULT_SIZES,
    ExperimentSpec,
    gen_synthetic,
    monotonicity_analysis,
    profile_costs,
    profiled_costs_to_json,
    run_experiment,
    time_feature_command,
    write_monotonicity_report,
)
from .lattice import PruningParams, candidate_set, expand_enumerate, sets_from_json, sets_to_json
from .learner import SyntheticConfig, SyntheticOracleLearner, sample_synthetic_config
from .polydom_index import PolyDomIndex, QueryBudget, build as build_index, query as index_query

EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except ComputationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_COMPUTATION)

    return wrapper


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in _floats(text))


def _load_config(path: str) -> SyntheticConfig:
    with open(path) as handle:
        return SyntheticConfig.from_json(handle.read())


def _learner_from_config(path: str) -> SyntheticOracleLearner:
    return SyntheticOracleLearner(_load_config(path))


@click.group()
def main() -> None:
    """Budget-aware model selection over size-dependent extraction costs."""


@main.command("gen-synthetic")
@click.option("--num-features", type=int, required=True)
@click.option("--p", type=float, default=0.6, show_default=True, help="Probability a feature is helpful.")
@click.option("--k", default="1", show_default=True, help="Combiner depth; 'inf' joins all members.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@guarded
def gen_synthetic_cmd(num_features, p, k, seed, out):
    """Sample a seeded synthetic universe and write it to OUT."""
    depth = math.inf if k == "inf" else float(k)
    config = gen_synthetic(num_features, p, depth, seed, out)
    click.echo(f"wrote {out} ({config.num_features} features, seed {seed})")


@main.command("profile-costs")
@click.option("--timings", type=click.Path(exists=True, dir_okay=False), help="CSV of feature,size,elapsed_ms rows.")
@click.option("--command", "command_template", help="Shell command to time; {size} interpolates.")
@click.option("--feature", "feature_name", default="feature", show_default=True, help="Name for --command timings.")
@click.option("--sizes", default="", help="Comma-separated sizes for --command runs.")
@click.option("--repetitions", type=int, default=3, show_default=True)
@click.option("--degree", type=int, default=2, show_default=True)
@click.option("--quantile", type=float, default=1.0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@guarded
def profile_costs_cmd(timings, command_template, feature_name, sizes, repetitions, degree, quantile, out):
    """Fit per-feature cost curves from timings and report residuals."""
    if degree > MAX_DEGREE:
        raise ValidationError(f"--degree is capped at {MAX_DEGREE}")
    if timings is not None:
        samples = read_timing_csv(timings)
    elif command_template is not None:
        size_list = _ints(sizes)
        samples = {feature_name: time_feature_command(command_template, size_list, repetitions)}
    else:
        raise ValidationError("give either --timings or --command")
    profiled = profile_costs(samples, degree, quantile)
    with open(out, "w") as handle:
        handle.write(profiled_costs_to_json(profiled))
    for name, p in sorted(profiled.items()):
        click.echo(
            f"{name}: coeffs={list(p.poly.coeffs)} max_abs_residual={p.max_abs_residual:.6g}"
        )


@main.command("build")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Synthetic universe JSON.")
@click.option("--candidates", "candidates_path", type=click.Path(exists=True, dir_okay=False), help="Pre-pruned candidate sets JSON.")
@click.option("--alpha", type=float, default=1.2, show_default=True)
@click.option("--e", type=float, default=0.0, show_default=True)
@click.option("--nmax", type=float, default=DEFAULT_N_MAX, show_default=True)
@click.option("--no-covering", is_flag=True, help="Disable the covering-family pruning step.")
@click.option("--index-all", "index_every", is_flag=True, help="Store every crossing (baseline index).")
@click.option("--dump-candidates", type=click.Path(dir_okay=False), help="Also write the candidate set JSON here.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@guarded
def build_cmd(config_path, candidates_path, alpha, e, nmax, no_covering, index_every, dump_candidates, out):
    """Expand, prune and index; or index a prebuilt candidate file."""
    if candidates_path is not None:
        candidates = sets_from_json(open(candidates_path).read())
    elif config_path is not None:
        learner = _learner_from_config(config_path)
        expanded = expand_enumerate(
            learner, PruningParams(alpha=alpha, e=e), use_covering=not no_covering
        )
        candidates = candidate_set(expanded, alpha, nmax)
        click.echo(f"expanded {len(expanded)} sets, {len(candidates)} candidates")
    else:
        raise ValidationError("give either --config or --candidates")
    if dump_candidates:
        with open(dump_candidates, "w") as handle:
            handle.write(sets_to_json(candidates))
    index = build_index_all(candidates, nmax) if index_every else build_index(candidates, n_max=nmax)
    with open(out, "w") as handle:
        handle.write(index.to_json())
    click.echo(
        f"wrote {out}: {index.stats.t_int} breakpoints, "
        f"max skyline {index.stats.t_cand}, visited {index.stats.total_intersections}"
    )


@main.command("query")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=float, required=True, help="Item size.")
@click.option("--budget", type=float, required=True, help="Extraction budget (ms).")
@guarded
def query_cmd(index_path, n, budget):
    """Look up the best model for an item size under a budget."""
    index = PolyDomIndex.from_json(open(index_path).read())
    result = index_query(index, QueryBudget(n=n, c=budget))
    click.echo(
        json.dumps(
            {
                "model_id": result.choice.model_id,
                "mask": result.choice.mask,
                "accuracy": result.choice.accuracy,
                "cost_at_n": result.choice.cost.eval(n),
                "probes": result.probes,
            },
            sort_keys=True,
        )
    )


@main.command("greedy-build")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lambdas", default=",".join(str(x) for x in DEFAULT_LAMBDAS), show_default=True)
@click.option("--variant", type=click.Choice(["full", "acc", "cost"]), default="full", show_default=True)
@click.option("--reference-size", type=int, default=1, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@guarded
def greedy_build_cmd(config_path, lambdas, variant, reference_size, out):
    """Build greedy feature-addition sequences and their skyline."""
    learner = _learner_from_config(config_path)
    if variant == "acc":
        index = greedy_acc(learner, reference_size)
    elif variant == "cost":
        index = greedy_cost(learner, reference_size)
    else:
        params = GreedyParams(lambdas=_floats(lambdas), reference_size=reference_size)
        index = build_sequences(learner, params)
    with open(out, "w") as handle:
        handle.write(index.to_json())
    click.echo(
        f"wrote {out}: {len(index.sequences)} sequences, "
        f"{index.unique_prefixes} unique prefixes, {index.trainings} trainings"
    )


@main.command("greedy-query")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Universe JSON supplying per-feature cost curves.")
@click.option("--n", type=float, required=True)
@click.option("--budget", type=float, required=True)
@guarded
def greedy_query_cmd(index_path, config_path, n, budget):
    """Spend a budget feature by feature along the indexed sequences."""
    index = GreedySequenceIndex.from_json(open(index_path).read())
    config = _load_config(config_path)
    result = query_anytime(index, n, budget, poly_cost_oracle(config.costs))
    click.echo(
        json.dumps(
            {
                "model_id": result.node.model_id,
                "mask": result.node.mask,
                "accuracy": result.node.accuracy,
                "extracted": list(result.extracted),
                "spent": result.spent,
                "sequence": result.sequence_key,
            },
            sort_keys=True,
        )
    )


@main.command("run-experiment")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Synthetic universe JSON.")
@click.option("--num-features", type=int, help="Sample a universe instead of loading one.")
@click.option("--p", type=float, default=0.6, show_default=True)
@click.option("--k", default="1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dataset", type=click.Path(exists=True, dir_okay=False), help="Tabular dataset CSV (id,size,label,features...).")
@click.option("--split", type=click.Path(exists=True, dir_okay=False), help="File of test item ids.")
@click.option("--costs", type=click.Path(exists=True, dir_okay=False), help="Fitted per-feature costs JSON for --dataset runs.")
@click.option("--algorithms", default=",".join(ALL_ALGORITHMS), show_default=True)
@click.option("--alpha", type=float, default=1.2, show_default=True)
@click.option("--e", type=float, default=0.0, show_default=True)
@click.option("--lambdas", default=",".join(str(x) for x in DEFAULT_LAMBDAS), show_default=True)
@click.option("--sizes", default=",".join(str(s) for s in DEFAULT_SIZES), show_default=True)
@click.option("--budgets", default=",".join(str(b) for b in DEFAULT_BUDGETS), show_default=True)
@click.option("--reference-size", type=int, default=None)
@click.option("--nmax", type=float, default=DEFAULT_N_MAX, show_default=True)
@click.option("--baselines/--no-baselines", default=True, show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@guarded
def run_experiment_cmd(
    config_path, num_features, p, k, seed, dataset, split, costs, algorithms,
    alpha, e, lambdas, sizes, budgets, reference_size, nmax, baselines, plots, out,
):
    """Run the full offline/online comparison and write metrics, JSON and figures."""
    synthetic = None
    if config_path is not None:
        synthetic = _load_config(config_path)
    elif num_features is not None:
        depth = math.inf if k == "inf" else float(k)
        synthetic = sample_synthetic_config(num_features, p, depth, seed)
    elif dataset is None:
        raise ValidationError("give --config, --num-features, or --dataset")
    spec = ExperimentSpec(
        synthetic=synthetic,
        dataset_path=dataset,
        split_path=split,
        costs_path=costs,
        algorithms=tuple(a.strip() for a in algorithms.split(",") if a.strip()),
        alpha=alpha,
        e=e,
        lambdas=_floats(lambdas),
        sizes=_ints(sizes),
        budgets=_floats(budgets),
        reference_size=reference_size,
        include_baselines=baselines,
        n_max=nmax,
        seed=seed,
        out_dir=out,
        make_plots=plots,
    )
    report = run_experiment(spec)
    click.echo(f"wrote {out}/metrics.csv ({len(report.rows)} rows) and {out}/run.json")
    for algorithm in spec.algorithms:
        expanded = report.values(algorithm, "expanded_sets")
        if expanded:
            click.echo(f"  {algorithm}: {int(expanded[0])} sets expanded")


@main.command("monotonicity")
@click.option("--sets", "sets_path", type=click.Path(exists=True, dir_okay=False), help="Characterized sets JSON.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Synthetic universe JSON; implies exhaustive enumeration.")
@click.option("--target", type=float, default=0.95, show_default=True, help="Fraction of pairs the recommended e must cover.")
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@guarded
def monotonicity_cmd(sets_path, config_path, target, plots, out):
    """Measure monotonicity violations across subset pairs and recommend e."""
    if sets_path is not None:
        nodes = sets_from_json(open(sets_path).read())
    elif config_path is not None:
        from .baselines import naive_expand_all

        nodes = naive_expand_all(_learner_from_config(config_path))
    else:
        raise ValidationError("give either --sets or --config")
    report = monotonicity_analysis(nodes, target=target)
    write_monotonicity_report(report, out, make_plots=plots)
    click.echo(
        f"{report.pair_count} pairs, max violation {report.max_violation:.6g}, "
        f"recommended e = {report.recommended_e:.6g}"
    )


if __name__ == "__main__":
    main()
