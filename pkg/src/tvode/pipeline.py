"""End-to-end composition: preprocessing, discovery, forecasting.

Everything downstream of raw data works on the smoothed, min-max
scaled table (scaling fitted on the training segment only), so model
coefficients, tracks and reported errors all live on the normalized
scale. Forecasts are mapped back to original units on the way out.
"""

from dataclasses import dataclass

import numpy as np

from .discovery import DiscoveryConfig, SplitModel, StateSplit, CoefficientTrack, fit_split_model, reconstruct, window_spans
from .forecast import ForecastRun, forecast_states
from .library import build_library, evaluate_library
from .predictor import ForestConfig, train_predictor
from .preprocess import estimate_derivatives, minmax_apply, minmax_fit, rolling_smooth
from .strr import StrrConfig


@dataclass
class Prepared:
    """Preprocessed dataset plus the evaluated candidate library."""

    raw: object
    table: object
    scaling: object
    xdot: np.ndarray
    descriptors: tuple
    theta: np.ndarray
    train_end: int

    @property
    def n_samples(self):
        return self.table.n_samples

    @property
    def dt(self):
        return self.table.dt


def prepare(raw, smooth_window=30, degree=2, train_end=None, normalize=True):
    """Smooth, scale (on the training segment), differentiate, evaluate terms."""
    if train_end is None:
        train_end = raw.n_samples
    if not 3 <= train_end <= raw.n_samples:
        raise ValueError("training range must hold at least three samples")
    table = rolling_smooth(raw, smooth_window) if smooth_window > 1 else raw
    if normalize:
        scaling = minmax_fit(table, train_end)
        table = minmax_apply(table, scaling)
    else:
        scaling = None
    xdot = estimate_derivatives(table)
    descriptors = build_library(
        n_states=len(table.state_names),
        n_inputs=len(table.input_names),
        degree=degree,
        state_names=table.state_names,
        input_names=table.input_names,
    )
    lib = evaluate_library(descriptors, table.states, table.inputs)
    return Prepared(
        raw=raw,
        table=table,
        scaling=scaling,
        xdot=xdot,
        descriptors=tuple(descriptors),
        theta=lib.theta,
        train_end=train_end,
    )


def fit_varying(prep, window, n_varying, strr=None, global_fits=None):
    """Split model with a windowed time-varying part (bias always varies)."""
    config = DiscoveryConfig(window=window, n_varying=n_varying, strr=strr or StrrConfig())
    model = fit_split_model(
        prep.theta,
        prep.xdot,
        prep.descriptors,
        config,
        state_names=prep.table.state_names,
        train_end=prep.train_end,
        global_fits=global_fits,
    )
    return model


def fit_fixed(prep, strr=None, global_fits=None):
    """Constant-coefficient baseline: the global sparse fit, nothing windowed."""
    from .discovery import fit_global

    strr = strr or StrrConfig()
    if global_fits is None:
        global_fits = fit_global(prep.theta[: prep.train_end], prep.xdot[: prep.train_end], strr)
    starts, ends = window_spans(prep.train_end, prep.train_end)
    splits, tracks = [], []
    for fit in global_fits:
        splits.append(StateSplit(active=fit.active.copy(), fixed_coef=fit.coef.copy(), varying=()))
        tracks.append(
            CoefficientTrack(
                starts=starts,
                ends=ends,
                values=np.zeros((len(starts), 0)),
                underdetermined=np.zeros(len(starts), dtype=bool),
            )
        )
    config = DiscoveryConfig(window=prep.train_end, n_varying=0, strr=strr)
    return SplitModel(
        descriptors=prep.descriptors,
        state_names=prep.table.state_names,
        splits=splits,
        tracks=tracks,
        config=config,
        global_fits=list(global_fits),
    )


def fit_predictor(prep, model, covariate_names, forest=None, base_seed=0):
    """Forests mapping covariate rows to each varying coefficient."""
    features = prep.table.feature_matrix(covariate_names)
    return train_predictor(
        model,
        features,
        covariate_names,
        config=forest or ForestConfig(),
        base_seed=base_seed,
        train_end=prep.train_end,
    )


def training_errors(prep, model):
    """Reconstruct the training trajectory; per-state MAE in percent
    of the normalized scale."""
    rec = reconstruct(
        model, prep.table.states, prep.table.inputs, prep.dt, n_steps=prep.train_end
    )
    observed = prep.table.states[: prep.train_end]
    valid = rec.n_valid
    if valid < 2:
        per_state = np.full(observed.shape[1], np.inf)
    else:
        per_state = 100.0 * np.mean(np.abs(rec.states[:valid] - observed[:valid]), axis=0)
    return rec, per_state


@dataclass
class FoldForecast:
    start: int
    length: int
    run: ForecastRun
    observed: np.ndarray
    mae_pct: np.ndarray
    diverged: bool


def _fold_slices(prep, start, length):
    if start < 1 or start + length > prep.n_samples:
        raise ValueError("fold outside the sampled range")
    x0 = prep.table.states[start - 1]
    hold = slice(start - 1, start - 1 + length)
    inputs = prep.table.inputs[hold] if prep.table.inputs.shape[1] else None
    return x0, hold, inputs


def forecast_fold(prep, model, predictor, start, length):
    """Forecast one fold with forest-predicted coefficient schedules.

    Integration starts from the preprocessed state just before the
    fold; covariates and inputs are held per step from the step's start
    sample. MAE is percent of the normalized scale over the valid rows.
    """
    x0, hold, inputs = _fold_slices(prep, start, length)
    features = prep.table.feature_matrix(predictor.feature_names)[hold]
    coef_steps = predictor.predict_track(features)
    run = forecast_states(
        model, coef_steps, x0, prep.dt, length, inputs=inputs, scaling=prep.scaling
    )
    return _score_fold(prep, run, start, length)


def forecast_fold_scheduled(prep, model, coef_steps, start, length):
    """Forecast one fold with caller-supplied coefficient schedules."""
    x0, hold, inputs = _fold_slices(prep, start, length)
    run = forecast_states(
        model, coef_steps, x0, prep.dt, length, inputs=inputs, scaling=prep.scaling
    )
    return _score_fold(prep, run, start, length)


def forecast_fold_fixed(prep, fixed_model, start, length):
    """Forecast one fold with the constant-coefficient baseline."""
    coef_steps = [np.zeros((length, 0)) for _ in fixed_model.splits]
    return forecast_fold_scheduled(prep, fixed_model, coef_steps, start, length)


def _score_fold(prep, run, start, length):
    observed = prep.table.states[start : start + length]
    valid = run.n_valid
    if valid == 0:
        mae_pct = np.full(observed.shape[1], np.inf)
    else:
        mae_pct = 100.0 * np.mean(np.abs(run.states_scaled[:valid] - observed[:valid]), axis=0)
    return FoldForecast(
        start=start,
        length=length,
        run=run,
        observed=observed,
        mae_pct=mae_pct,
        diverged=run.diverged,
    )
