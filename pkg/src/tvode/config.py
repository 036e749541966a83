"""Run configuration: defaults, JSON loading, validation, CLI overrides.

A run is described by one nested mapping. Unknown keys anywhere are
rejected so typos fail loudly. The effective (fully resolved) mapping
is what every CLI subcommand writes next to its outputs; it excludes
volatile execution details like the output directory or worker count.
"""

import copy
import json

from .predictor import ForestConfig
from .preprocess import ingest_csv
from .simulate import (
    CrParams,
    SirParams,
    cr_with_weather,
    simulate_cr,
    simulate_sir,
    sir_with_weather,
)
from .strr import StrrConfig


class ConfigError(ValueError):
    """Bad or inconsistent run configuration."""


class NumericalError(RuntimeError):
    """A numeric step failed in a way retrying will not fix."""


DEFAULTS = {
    "seed": 0,
    "dataset": {
        "kind": "sir",
        "sigma": 0.0,
        "days": 1500.0,
        "dt": 0.01,
        "stride": 100,
        "weather": True,
        "rate_jitter_sd": 1e-5,
        "path": None,
        "roles": None,
        "daily_average": False,
    },
    "preprocess": {"smooth_window": 30, "normalize": True},
    "library": {"degree": 2},
    "strr": {"ridge": 0.01, "threshold": 0.001, "tol": 1e-8, "max_iter": 10000},
    "discovery": {"window": 7, "n_varying": 1},
    "grid": {"windows": [7, 14, 21, 28], "n_varying": None},
    "folds": {"length": 30, "n_test": 5, "n_initial_validation": 5},
    "predictor": {
        "trees": 5000,
        "max_depth": 5,
        "min_samples_split": 10,
        "min_samples_leaf": 5,
        "covariates": None,
    },
    "bound": {"horizon": 30.0, "padding": 0.2, "grid": 8},
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(base[key], dict) and base[key]:
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None, overrides=None):
    """Defaults, overlaid with a JSON file, overlaid with CLI values."""
    merged = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as handle:
                user = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
        merged = _merge(merged, user)
    if overrides:
        merged = _merge(merged, overrides)
    validate(merged)
    return merged


def validate(cfg):
    kind = cfg["dataset"]["kind"]
    if kind not in ("sir", "cr", "csv"):
        raise ConfigError("dataset.kind must be one of sir, cr, csv")
    if kind == "csv":
        if not cfg["dataset"]["path"]:
            raise ConfigError("dataset.path is required for csv datasets")
        if not isinstance(cfg["dataset"]["roles"], dict):
            raise ConfigError("dataset.roles mapping is required for csv datasets")
    else:
        if cfg["dataset"]["sigma"] < 0:
            raise ConfigError("dataset.sigma must be >= 0")
        if cfg["dataset"]["days"] <= 0 or cfg["dataset"]["dt"] <= 0:
            raise ConfigError("dataset.days and dataset.dt must be positive")
    if cfg["library"]["degree"] < 0:
        raise ConfigError("library.degree must be >= 0")
    if cfg["preprocess"]["smooth_window"] < 1:
        raise ConfigError("preprocess.smooth_window must be >= 1")
    for key in ("length", "n_test", "n_initial_validation"):
        if cfg["folds"][key] < 1:
            raise ConfigError(f"folds.{key} must be >= 1")
    windows = cfg["grid"]["windows"]
    if not windows or any(int(w) < 1 for w in windows):
        raise ConfigError("grid.windows must list positive window lengths")
    n_grid = cfg["grid"]["n_varying"]
    if n_grid is not None and any(int(n) < 0 for n in n_grid):
        raise ConfigError("grid.n_varying values must be >= 0")
    try:
        strr_config(cfg)
        forest_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["bound"]["horizon"] <= 0 or cfg["bound"]["grid"] < 2:
        raise ConfigError("bound.horizon must be positive and bound.grid >= 2")
    return cfg


def strr_config(cfg):
    c = cfg["strr"]
    return StrrConfig(
        ridge=c["ridge"], threshold=c["threshold"], tol=c["tol"], max_iter=c["max_iter"]
    )


def forest_config(cfg):
    c = cfg["predictor"]
    return ForestConfig(
        n_trees=c["trees"],
        max_depth=c["max_depth"],
        min_samples_split=c["min_samples_split"],
        min_samples_leaf=c["min_samples_leaf"],
    )


def materialize_dataset(cfg):
    """Build the configured dataset (simulation or CSV ingestion)."""
    ds = cfg["dataset"]
    seed = cfg["seed"]
    if ds["kind"] == "sir":
        params = SirParams(
            noise_s=ds["sigma"], noise_i=ds["sigma"], jitter_sd=ds["rate_jitter_sd"]
        )
        maker = sir_with_weather if ds["weather"] else simulate_sir
        return maker(params, t_end=ds["days"], dt=ds["dt"], stride=ds["stride"], seed=seed)
    if ds["kind"] == "cr":
        params = CrParams(noise_r=ds["sigma"], noise_c=ds["sigma"])
        if ds["weather"]:
            return cr_with_weather(
                params, t_end=ds["days"], dt=ds["dt"], stride=ds["stride"], seed=seed
            )
        return simulate_cr(params, t_end=ds["days"], dt=ds["dt"], stride=ds["stride"], seed=seed)
    try:
        return ingest_csv(ds["path"], ds["roles"], daily_average=ds["daily_average"])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"csv ingestion failed: {exc}") from exc


def covariate_names(cfg, table):
    names = cfg["predictor"]["covariates"]
    if names is None:
        return list(table.covariate_names)
    missing = [n for n in names if n not in table.column_names]
    if missing:
        raise ConfigError(f"predictor.covariates name unknown columns: {missing}")
    return list(names)


def dataset_label(cfg):
    ds = cfg["dataset"]
    if ds["kind"] == "csv":
        import os

        return "csv", os.path.splitext(os.path.basename(ds["path"]))[0]
    return ds["kind"], f"{ds['sigma']:g}"
