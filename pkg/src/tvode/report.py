"""Delimited reports and figures.

Every CLI path that produces numbers also renders a matplotlib figure
next to the delimited output. Report rows share one schema: dataset,
source, variable, fold, mode (CV, OC, fixed or tv), w, N, MAE_valid,
MAE_test, with MAE as percent of the normalized scale. Fixed-mode rows
leave w and N empty; the JSON mirror carries divergence flags.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REPORT_COLUMNS = ("dataset", "source", "variable", "fold", "mode", "w", "N", "MAE_valid", "MAE_test")


def cv_rows(dataset, source, result, cv_choices):
    rows = []
    for row in cv_choices:
        for v, name in enumerate(result.state_names):
            rows.append(
                {
                    "dataset": dataset,
                    "source": source,
                    "variable": name,
                    "fold": row["fold"],
                    "mode": "CV",
                    "w": row["w"],
                    "N": row["N"],
                    "MAE_valid": row["mae_valid"],
                    "MAE_test": float(row["mae_test"][v]),
                    "diverged": row["diverged"],
                }
            )
    return rows


def oc_rows(dataset, source, sweep_choices):
    return [
        {
            "dataset": dataset,
            "source": source,
            "variable": row["variable"],
            "fold": row["fold"],
            "mode": "OC",
            "w": row["w"],
            "N": row["N"],
            "MAE_valid": row["mae_valid"],
            "MAE_test": row["mae_test"],
            "diverged": row["diverged"],
        }
        for row in sweep_choices
    ]


def baseline_rows(dataset, source, compare, state_names):
    rows = []
    for row in compare:
        for v, name in enumerate(state_names):
            rows.append(
                {
                    "dataset": dataset,
                    "source": source,
                    "variable": name,
                    "fold": row["fold"],
                    "mode": "tv",
                    "w": row["w"],
                    "N": row["N"],
                    "MAE_valid": None,
                    "MAE_test": float(row["tv_mae"][v]),
                    "diverged": row["tv_diverged"],
                }
            )
            rows.append(
                {
                    "dataset": dataset,
                    "source": source,
                    "variable": name,
                    "fold": row["fold"],
                    "mode": "fixed",
                    "w": None,
                    "N": None,
                    "MAE_valid": None,
                    "MAE_test": float(row["fixed_mae"][v]),
                    "diverged": row["fixed_diverged"],
                }
            )
    return rows


def write_report(rows, csv_path, json_path=None):
    """Write the shared-schema rows as CSV (and a JSON mirror with flags)."""
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else row.get(c) for c in REPORT_COLUMNS])
    if json_path is not None:
        with open(json_path, "w") as handle:
            json.dump(rows, handle, indent=1)
            handle.write("\n")


def write_train_report(rows, csv_path):
    """Training-error table: variable, mode, w, N, MAE_train (percent)."""
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("dataset", "source", "variable", "mode", "w", "N", "MAE_train"))
        for row in rows:
            writer.writerow(
                [
                    row["dataset"],
                    row["source"],
                    row["variable"],
                    row["mode"],
                    "" if row["w"] is None else row["w"],
                    "" if row["N"] is None else row["N"],
                    row["MAE_train"],
                ]
            )


def _save(fig, path):
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_series(table, path, title=None):
    """All columns of a table, states on top, covariates below."""
    groups = [("states", table.states, table.state_names)]
    if table.inputs.shape[1]:
        groups.append(("inputs", table.inputs, table.input_names))
    if table.covariates.shape[1]:
        groups.append(("covariates", table.covariates, table.covariate_names))
    fig, axes = plt.subplots(len(groups), 1, figsize=(9, 2.8 * len(groups)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, (label, block, names) in zip(axes, groups):
        for j, name in enumerate(names):
            ax.plot(table.times, block[:, j], label=name, lw=0.9)
        ax.set_ylabel(label)
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_training_fit(times, observed, reconstructed, names, path):
    n = observed.shape[1]
    fig, axes = plt.subplots(n, 1, figsize=(9, 2.6 * n), sharex=True)
    axes = np.atleast_1d(axes)
    for k, ax in enumerate(axes):
        ax.plot(times, observed[:, k], "k-", lw=1.0, label="observed")
        ax.plot(times, reconstructed[:, k], "r--", lw=1.0, label="model")
        ax.set_ylabel(names[k])
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time")
    fig.tight_layout()
    _save(fig, path)


def plot_tracks(model, times, path):
    """Step plot of every state's windowed coefficient values."""
    fig, axes = plt.subplots(model.n_states, 1, figsize=(9, 2.6 * model.n_states), sharex=True)
    axes = np.atleast_1d(axes)
    for k, ax in enumerate(axes):
        track = model.tracks[k]
        edges = times[np.append(track.starts, track.ends[-1] - 1)]
        for j, term in enumerate(model.splits[k].varying):
            name = model.descriptors[term].name
            ax.stairs(track.values[:, j], edges, label=f"coef[{name}]")
        ax.set_ylabel(model.state_names[k])
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time")
    fig.tight_layout()
    _save(fig, path)


def plot_forecast(times, observed, predicted, names, path, title=None):
    n = predicted.shape[1]
    fig, axes = plt.subplots(n, 1, figsize=(9, 2.6 * n), sharex=True)
    axes = np.atleast_1d(axes)
    for k, ax in enumerate(axes):
        if observed is not None:
            ax.plot(times, observed[:, k], "k-", lw=1.0, label="observed")
        ax.plot(times, predicted[:, k], "r--", lw=1.2, label="forecast")
        ax.set_ylabel(names[k])
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_mae_bars(rows, path, title=None):
    """Average test MAE per variable and mode."""
    modes = sorted({r["mode"] for r in rows})
    variables = sorted({r["variable"] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(1, len(modes))
    xs = np.arange(len(variables))
    for i, mode in enumerate(modes):
        means = []
        for var in variables:
            vals = [
                r["MAE_test"]
                for r in rows
                if r["mode"] == mode and r["variable"] == var and np.isfinite(r["MAE_test"])
            ]
            means.append(np.mean(vals) if vals else np.nan)
        ax.bar(xs + i * width, means, width=width, label=mode)
    ax.set_xticks(xs + 0.4 - width / 2.0)
    ax.set_xticklabels(variables)
    ax.set_ylabel("test MAE (% of normalized scale)")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_bound(check, path, title=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(check.times, check.observed, "k-", lw=1.2, label="observed gap")
    ax.plot(check.times, check.bound, "r--", lw=1.2, label="bound")
    positive = check.observed[check.observed > 0]
    if positive.size and np.max(check.bound) / max(np.min(positive), 1e-300) > 1e3:
        ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel("max-norm error")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def write_bound_table(check, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "observed_error", "bound", "margin"))
        for t, err, b in zip(check.times, check.observed, check.bound):
            writer.writerow([t, err, b, b - err])


def write_table_csv(table, path):
    """Raw dataset as CSV: time plus every data column in role order."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("time",) + table.column_names)
        data = table.columns()
        for i in range(table.n_samples):
            writer.writerow([table.times[i]] + list(data[i]))
