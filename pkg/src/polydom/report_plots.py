"""Render the report figures next to the delimited outputs.

Everything draws from the already-written metric rows, so a figure is only
ever a view of metrics.csv / monotonicity.json content.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _by_probe(report, algorithm: str, metric: str) -> dict[tuple[int, float], float]:
    return {
        (r.size, r.budget): r.value
        for r in report.rows
        if r.algorithm == algorithm and r.metric == metric and r.size is not None
    }


def render_experiment_plots(report, out_dir: str) -> None:
    algorithms = sorted({r.algorithm for r in report.rows})
    sizes = report.spec.sizes
    budgets = report.spec.budgets

    for size in sizes:
        fig, ax = plt.subplots(figsize=(6, 4))
        drew = False
        for algorithm in algorithms:
            accs = _by_probe(report, algorithm, "accuracy")
            ys = [accs.get((size, b)) for b in budgets]
            if any(y is not None for y in ys):
                ax.plot(budgets, ys, marker="o", label=algorithm)
                drew = True
        if not drew:
            plt.close(fig)
            continue
        ax.set_xscale("log")
        ax.set_xlabel("budget (ms)")
        ax.set_ylabel("accuracy")
        ax.set_title(f"accuracy vs budget, item size {size}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"accuracy_vs_budget_size{size}.png"), dpi=120)
        plt.close(fig)

    for metric, fname, ylabel in (
        ("expanded_sets", "expanded_counts.png", "feature sets expanded"),
        ("index_entries", "index_sizes.png", "index entries"),
    ):
        pairs = [
            (algorithm, values[0])
            for algorithm in algorithms
            for values in [report.values(algorithm, metric)]
            if values
        ]
        if not pairs:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar([p[0] for p in pairs], [p[1] for p in pairs])
        ax.set_ylabel(ylabel)
        ax.set_yscale("log")
        ax.tick_params(axis="x", rotation=20)
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, fname), dpi=120)
        plt.close(fig)


def render_monotonicity_plots(report, out_dir: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [point[0] for point in report.cdf]
    ys = [point[1] for point in report.cdf]
    ax.step([0.0] + xs, [0.0] + ys, where="post")
    ax.axvline(report.recommended_e, linestyle="--", color="grey")
    ax.set_xlabel("monotonicity violation")
    ax.set_ylabel("fraction of pairs")
    ax.set_title("violation CDF")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "monotonicity_cdf.png"), dpi=120)
    plt.close(fig)

    distances = sorted(report.per_distance)
    medians = [report.per_distance[d]["median"] for d in distances]
    lower = [report.per_distance[d]["median"] - report.per_distance[d]["p25"] for d in distances]
    upper = [report.per_distance[d]["p75"] - report.per_distance[d]["median"] for d in distances]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(distances, medians, yerr=[lower, upper], fmt="o-", color="black", ecolor="grey")
    ax.set_xlabel("subset distance")
    ax.set_ylabel("median violation")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "monotonicity_by_distance.png"), dpi=120)
    plt.close(fig)
