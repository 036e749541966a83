"""Command-line entry points.

Subcommands: simulate, fit, forecast, evaluate, sweep, bound. Every
subcommand takes --config/--out/--seed/--jobs, writes the fully
resolved configuration next to its outputs, and renders figures
alongside the delimited files. Exit codes: 0 on success, 2 for
configuration problems, 3 for numerical failures.
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from . import evaluation, persist, pipeline, report
from .bounds import empirical_bound_check
from .config import ConfigError, NumericalError
from .discovery import coefficient_matrix
from .simulate import CrParams, SirParams, beta_of_t
from .strr import RankDeficientError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tvode",
        description="Discover and forecast ODE models with time-varying coefficients.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the global seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for grid passes")
        p.add_argument("--model", choices=("sir", "cr"), help="simulated dataset kind")
        p.add_argument("--sigma", type=float, help="simulation noise level")

    p = sub.add_parser("simulate", help="write a simulated dataset as CSV")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the split model and its coefficient predictor")
    common(p)
    p.add_argument("--w", type=int, help="window length in samples")
    p.add_argument("--n-varying", type=int, help="time-varying terms per equation")
    p.add_argument("--trees", type=int, help="forest size")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="forecast states from a saved model bundle")
    common(p)
    p.add_argument("--model-file", required=True, help="model.json from a fit run")
    p.add_argument("--start", type=int, help="first forecast sample (default: end of training)")
    p.add_argument("--horizon", type=int, help="forecast length in samples")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="cross-validated forecast report over the (w, N) grid")
    common(p)
    p.add_argument("--trees", type=int, help="forest size")
    p.set_defaults(func=cmd_evaluate, include_oc=False)

    p = sub.add_parser("sweep", help="evaluate plus the hindsight-optimal configurations")
    common(p)
    p.add_argument("--trees", type=int, help="forest size")
    p.set_defaults(func=cmd_evaluate, include_oc=True)

    p = sub.add_parser("bound", help="check the finite-horizon error bound on a fitted model")
    common(p)
    p.add_argument("--w", type=int, help="window length in samples")
    p.add_argument("--n-varying", type=int, help="time-varying terms per equation")
    p.add_argument("--horizon", type=float, help="bound horizon in time units")
    p.set_defaults(func=cmd_bound)

    return parser


def _overrides(args):
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    dataset = {}
    if getattr(args, "model", None):
        dataset["kind"] = args.model
    if getattr(args, "sigma", None) is not None:
        dataset["sigma"] = args.sigma
    if dataset:
        over["dataset"] = dataset
    discovery = {}
    if getattr(args, "w", None) is not None:
        discovery["window"] = args.w
    if getattr(args, "n_varying", None) is not None:
        discovery["n_varying"] = args.n_varying
    if discovery:
        over["discovery"] = discovery
    if getattr(args, "trees", None) is not None:
        over["predictor"] = {"trees": args.trees}
    if getattr(args, "horizon", None) is not None and args.command == "bound":
        over["bound"] = {"horizon": args.horizon}
    return over


def _setup(args):
    cfg = cfgmod.load_config(args.config, _overrides(args))
    os.makedirs(args.out, exist_ok=True)
    persist.save_json(cfg, os.path.join(args.out, "effective_config.json"))
    return cfg


def _prepare(cfg):
    table = cfgmod.materialize_dataset(cfg)
    folds = cfg["folds"]
    plan = evaluation.make_split_plan(
        table.n_samples,
        fold_length=folds["length"],
        n_test=folds["n_test"],
        n_initial_validation=folds["n_initial_validation"],
    )
    prep = pipeline.prepare(
        table,
        smooth_window=cfg["preprocess"]["smooth_window"],
        degree=cfg["library"]["degree"],
        train_end=plan.train_end,
        normalize=cfg["preprocess"]["normalize"],
    )
    return table, plan, prep


def cmd_simulate(args):
    cfg = _setup(args)
    table = cfgmod.materialize_dataset(cfg)
    report.write_table_csv(table, os.path.join(args.out, "dataset.csv"))
    dataset, source = cfgmod.dataset_label(cfg)
    report.plot_series(
        table, os.path.join(args.out, "dataset.png"), title=f"{dataset} (sigma={source})"
    )
    print(f"wrote {table.n_samples} samples x {len(table.column_names)} columns to dataset.csv")
    return 0


def cmd_fit(args):
    cfg = _setup(args)
    table, plan, prep = _prepare(cfg)
    strr = cfgmod.strr_config(cfg)
    model = pipeline.fit_varying(
        prep, cfg["discovery"]["window"], cfg["discovery"]["n_varying"], strr=strr
    )
    covs = cfgmod.covariate_names(cfg, table)
    predictor = (
        pipeline.fit_predictor(
            prep, model, covs, forest=cfgmod.forest_config(cfg), base_seed=cfg["seed"]
        )
        if covs
        else None
    )
    rec, tv_mae = pipeline.training_errors(prep, model)
    fixed = pipeline.fit_fixed(prep, strr=strr)
    _, fixed_mae = pipeline.training_errors(prep, fixed)

    persist.save_json(
        persist.bundle_to_json(cfg, prep, model, predictor),
        os.path.join(args.out, "model.json"),
    )
    dataset, source = cfgmod.dataset_label(cfg)
    rows = []
    for v, name in enumerate(table.state_names):
        rows.append(
            {
                "dataset": dataset,
                "source": source,
                "variable": name,
                "mode": "tv",
                "w": cfg["discovery"]["window"],
                "N": cfg["discovery"]["n_varying"],
                "MAE_train": float(tv_mae[v]),
            }
        )
        rows.append(
            {
                "dataset": dataset,
                "source": source,
                "variable": name,
                "mode": "fixed",
                "w": None,
                "N": None,
                "MAE_train": float(fixed_mae[v]),
            }
        )
    report.write_train_report(rows, os.path.join(args.out, "train_report.csv"))
    times = prep.table.times[: prep.train_end]
    report.plot_training_fit(
        times,
        prep.table.states[: prep.train_end],
        rec.states,
        table.state_names,
        os.path.join(args.out, "training_fit.png"),
    )
    report.plot_tracks(model, times, os.path.join(args.out, "coefficient_tracks.png"))
    for v, name in enumerate(table.state_names):
        print(
            f"{name}: train MAE {tv_mae[v]:.2f}% (time-varying) vs {fixed_mae[v]:.2f}% (fixed)"
        )
    if rec.diverged:
        raise NumericalError("training reconstruction diverged")
    return 0


def cmd_forecast(args):
    try:
        bundle = persist.bundle_from_json(persist.load_json(args.model_file))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load model bundle: {exc}") from exc
    cfg = cfgmod.validate(bundle["config"])
    if args.seed is not None:
        cfg["seed"] = args.seed
    os.makedirs(args.out, exist_ok=True)
    persist.save_json(cfg, os.path.join(args.out, "effective_config.json"))
    table, plan, prep = _prepare(cfg)
    if prep.train_end != bundle["train_end"]:
        raise ConfigError("model bundle does not match the materialized dataset")
    model, predictor = bundle["model"], bundle["predictor"]
    if predictor is None:
        raise ConfigError("model bundle has no coefficient predictor")
    start = args.start if args.start is not None else prep.train_end
    horizon = args.horizon if args.horizon is not None else cfg["folds"]["length"]
    fc = pipeline.forecast_fold(prep, model, predictor, start, horizon)

    times = prep.table.times[start : start + horizon]
    path = os.path.join(args.out, "forecast.csv")
    import csv as _csv

    with open(path, "w", newline="") as handle:
        writer = _csv.writer(handle)
        header = ["time"]
        for name in model.state_names:
            header += [f"{name}_pred", f"{name}_pred_scaled", f"{name}_obs_scaled"]
        writer.writerow(header)
        for i in range(horizon):
            row = [times[i]]
            for v in range(len(model.state_names)):
                row += [
                    fc.run.states[i, v],
                    fc.run.states_scaled[i, v],
                    fc.observed[i, v],
                ]
            writer.writerow(row)
    report.plot_forecast(
        times,
        fc.observed,
        fc.run.states_scaled,
        model.state_names,
        os.path.join(args.out, "forecast.png"),
        title=f"forecast from sample {start}",
    )
    for v, name in enumerate(model.state_names):
        print(f"{name}: forecast MAE {fc.mae_pct[v]:.2f}% over {horizon} samples")
    if fc.diverged:
        raise NumericalError("forecast diverged")
    return 0


def cmd_evaluate(args):
    cfg = _setup(args)
    table, plan, prep = _prepare(cfg)
    covs = cfgmod.covariate_names(cfg, table)
    result = evaluation.evaluate_grid(
        prep,
        plan,
        grid_w=cfg["grid"]["windows"],
        grid_n=cfg["grid"]["n_varying"],
        strr=cfgmod.strr_config(cfg),
        forest=cfgmod.forest_config(cfg),
        covariates=covs,
        seed=cfg["seed"],
        jobs=args.jobs,
    )
    cv = evaluation.cv_select(result, plan)
    if all(not np.isfinite(np.min(row["mae_test"])) for row in cv):
        raise NumericalError("every selected configuration diverged on every test fold")

    dataset, source = cfgmod.dataset_label(cfg)
    rows = report.cv_rows(dataset, source, result, cv)
    for row in cv:
        for v, name in enumerate(result.state_names):
            rows.append(
                {
                    "dataset": dataset,
                    "source": source,
                    "variable": name,
                    "fold": row["fold"],
                    "mode": "tv",
                    "w": row["w"],
                    "N": row["N"],
                    "MAE_valid": row["mae_valid"],
                    "MAE_test": float(row["mae_test"][v]),
                    "diverged": row["diverged"],
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
                    "MAE_test": float(result.fixed_test_mae[row["fold"] - 1, v]),
                    "diverged": bool(result.fixed_test_diverged[row["fold"] - 1]),
                }
            )
    if args.include_oc:
        rows += report.oc_rows(dataset, source, evaluation.optimal_sweep(result, plan))
    report.write_report(
        rows,
        os.path.join(args.out, "report.csv"),
        os.path.join(args.out, "report.json"),
    )
    report.plot_mae_bars(
        rows,
        os.path.join(args.out, "mae_bars.png"),
        title=f"{dataset} (source {source}): test MAE by mode",
    )
    for row in cv:
        picks = " ".join(
            f"{name}={row['mae_test'][v]:.2f}%" for v, name in enumerate(result.state_names)
        )
        print(f"fold {row['fold']}: CV picked w={row['w']} N={row['N']}; test {picks}")
    return 0


def _true_field(cfg, prep):
    """Deterministic simulated vector field mapped to the normalized scale."""
    ds = cfg["dataset"]
    names = prep.table.state_names
    idx = [prep.scaling.names.index(n) for n in names]
    mins = prep.scaling.mins[idx]
    spans = np.where(
        prep.scaling.degenerate[idx], 1.0, (prep.scaling.maxs - prep.scaling.mins)[idx]
    )
    if ds["kind"] == "sir":
        p = SirParams(jitter_sd=0.0)

        def field(t, z):
            s, i = mins + spans * np.asarray(z)
            beta = beta_of_t(p, t)
            ds_dt = p.recruitment - beta * s * i - p.death_rate * s
            di_dt = beta * s * i - (p.recovery_rate + p.death_rate) * i
            return np.array([ds_dt, di_dt]) / spans

        return field
    if ds["kind"] == "cr":
        p = CrParams()

        def field(t, z):
            r, c = mins + spans * np.asarray(z)
            predation = p.attack * r * c / (1.0 + p.handling * r)
            dr = p.prey_growth * r - predation
            dc = predation - p.mortality * c
            return np.array([dr, dc]) / spans

        return field
    raise ConfigError("bound checks need a simulated dataset (sir or cr)")


def _model_field(prep, model):
    """Piecewise-constant fitted field over the training range."""
    coef = coefficient_matrix(model, prep.train_end)
    exponents = np.array([d.exponents for d in model.descriptors], dtype=float)
    has_inputs = prep.table.inputs.shape[1] > 0
    inputs = prep.table.inputs
    dt = prep.dt
    last = prep.train_end - 1

    def field(t, z):
        step = min(max(int(t / dt), 0), last)
        row = np.concatenate([z, inputs[step]]) if has_inputs else np.asarray(z, dtype=float)
        terms = np.prod(row[None, :] ** exponents, axis=1)
        return np.array([c[step] @ terms for c in coef])

    return field


def cmd_bound(args):
    cfg = _setup(args)
    table, plan, prep = _prepare(cfg)
    strr = cfgmod.strr_config(cfg)
    model = pipeline.fit_varying(
        prep, cfg["discovery"]["window"], cfg["discovery"]["n_varying"], strr=strr
    )
    pad = cfg["bound"]["padding"]
    low = prep.table.states[: prep.train_end].min(axis=0) - pad
    high = prep.table.states[: prep.train_end].max(axis=0) + pad
    horizon = min(cfg["bound"]["horizon"], (prep.train_end - 1) * prep.dt)
    n_steps = max(1, int(round(horizon / prep.dt)))
    check = empirical_bound_check(
        _true_field(cfg, prep),
        _model_field(prep, model),
        prep.table.states[0],
        horizon,
        n_steps,
        low,
        high,
        per_dim=cfg["bound"]["grid"],
    )
    report.write_bound_table(check, os.path.join(args.out, "bound.csv"))
    report.plot_bound(
        check,
        os.path.join(args.out, "bound.png"),
        title=f"L={check.lipschitz:.3g} delta={check.delta:.3g}",
    )
    print("t observed_error bound margin")
    stride = max(1, len(check.times) // 12)
    for i in range(0, len(check.times), stride):
        t, err, b = check.times[i], check.observed[i], check.bound[i]
        print(f"{t:8.2f} {err:12.4g} {b:12.4g} {b - err:12.4g}")
    if not check.domain_ok:
        raise NumericalError("a trajectory left the stated domain; bound hypotheses fail")
    print(f"bound holds: {check.holds} (margin {check.margin:.3g})")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RankDeficientError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
