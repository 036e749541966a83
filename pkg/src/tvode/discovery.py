"""Split-coefficient model discovery.

A global sparse fit on the whole training range picks the active
library terms per state equation. The active terms most correlated
with each state's derivative become time-varying (the bias always
does); the rest keep their global values. Time-varying coefficients are
then re-estimated window by window with plain ridge regression, and the
resulting piecewise-constant model can be integrated to reproduce the
training trajectory.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .integrate import rk4_path
from .library import library_from_json, library_to_json
from .strr import StrrConfig, SparseFit, ridge_solve, strr_fit


@dataclass(frozen=True)
class DiscoveryConfig:
    window: int = 7
    n_varying: int = 1
    strr: StrrConfig = field(default_factory=StrrConfig)

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1 sample")
        if self.n_varying < 0:
            raise ValueError("n_varying must be >= 0")


@dataclass
class StateSplit:
    """Coefficient split for one state equation."""

    active: np.ndarray
    fixed_coef: np.ndarray
    varying: tuple

    @property
    def fixed_indices(self):
        return tuple(i for i in np.flatnonzero(self.active) if i not in set(self.varying))


@dataclass
class CoefficientTrack:
    """Piecewise-constant window values for one state's varying terms."""

    starts: np.ndarray
    ends: np.ndarray
    values: np.ndarray
    underdetermined: np.ndarray

    def window_of(self, step):
        k = int(np.searchsorted(self.starts, step, side="right")) - 1
        if k < 0 or step >= self.ends[-1]:
            raise IndexError("step outside the fitted range")
        return k

    def at_step(self, step):
        return self.values[self.window_of(step)]

    def per_step(self):
        """Expand to one row per training step."""
        lengths = self.ends - self.starts
        return np.repeat(self.values, lengths, axis=0)


@dataclass
class SplitModel:
    descriptors: tuple
    state_names: tuple
    splits: list
    tracks: list
    config: DiscoveryConfig
    global_fits: list = None

    @property
    def n_states(self):
        return len(self.splits)

    def coefficients_at(self, state, step):
        """Full coefficient vector of one state equation at a training step."""
        split = self.splits[state]
        coef = split.fixed_coef.copy()
        coef[list(split.varying)] = self.tracks[state].at_step(step)
        return coef


def fit_global(theta, xdot, config=None):
    """Sparse fit of every state equation on the full design matrix."""
    xdot = np.atleast_2d(np.asarray(xdot, dtype=float))
    return [strr_fit(theta, xdot[:, k], config) for k in range(xdot.shape[1])]


def select_top_n(theta, active, xdot_k, n_varying):
    """Pick the bias plus the n most derivative-correlated active terms.

    Column 0 is the bias and is always selected. Ranking is by absolute
    Pearson correlation with xdot_k, ties broken toward the smaller
    column index; constant columns count as correlation zero.
    """
    theta = np.asarray(theta, dtype=float)
    active = np.asarray(active, dtype=bool)
    xdot_k = np.asarray(xdot_k, dtype=float)
    candidates = [int(i) for i in np.flatnonzero(active) if i != 0]
    if n_varying > len(candidates):
        raise ValueError("n_varying exceeds the active non-bias term count")
    y = xdot_k - xdot_k.mean()
    sy = np.sqrt(np.sum(y * y))
    scores = []
    for i in candidates:
        col = theta[:, i] - theta[:, i].mean()
        sx = np.sqrt(np.sum(col * col))
        rho = 0.0 if sx == 0.0 or sy == 0.0 else float(np.dot(col, y) / (sx * sy))
        scores.append((-abs(rho), i))
    scores.sort()
    chosen = sorted(i for _, i in scores[:n_varying])
    return tuple([0] + chosen)


def window_spans(train_end, window):
    """Half-open windows tiling [0, train_end); the last may be short."""
    starts = np.arange(0, train_end, window)
    ends = np.minimum(starts + window, train_end)
    return starts, ends


def fit_windows(theta, xdot_k, split, config, train_end=None):
    """Re-estimate the varying coefficients of one state window by window.

    Each window solves a ridge regression on its rows with the fixed
    terms' contribution subtracted; no re-thresholding happens here.
    The penalty is warm-started: it shrinks each window's coefficients
    toward the previous window's values (the first window shrinks
    toward zero, so a single full-length window reproduces the global
    fit exactly). Windows with fewer rows than varying terms remain
    solvable through the ridge penalty and are flagged.
    """
    theta = np.asarray(theta, dtype=float)
    xdot_k = np.asarray(xdot_k, dtype=float)
    if train_end is None:
        train_end = theta.shape[0]
    starts, ends = window_spans(train_end, config.window)
    varying = list(split.varying)
    fixed = list(split.fixed_indices)
    residual = xdot_k[:train_end].copy()
    if fixed:
        residual -= theta[:train_end, fixed] @ split.fixed_coef[fixed]
    values = np.empty((len(starts), len(varying)))
    under = np.zeros(len(starts), dtype=bool)
    previous = np.zeros(len(varying))
    for k, (s, e) in enumerate(zip(starts, ends)):
        block = theta[s:e, varying]
        shift = ridge_solve(block, residual[s:e] - block @ previous, config.strr.ridge)
        values[k] = previous + shift
        previous = values[k]
        under[k] = (e - s) < len(varying)
    return CoefficientTrack(starts=starts, ends=ends, values=values, underdetermined=under)


def fit_split_model(
    theta, xdot, descriptors, config, state_names=None, train_end=None, global_fits=None
):
    """Full discovery pass: global fit, split selection, window tracks.

    n_varying is clamped per state to that equation's active non-bias
    term count. The global fits are kept for the fixed-parameter
    baseline; precomputed ones can be passed in since they do not
    depend on the window or the varying-term count.
    """
    theta = np.asarray(theta, dtype=float)
    xdot = np.atleast_2d(np.asarray(xdot, dtype=float))
    if descriptors[0].degree != 0:
        raise ValueError("library must lead with the constant term")
    if train_end is None:
        train_end = theta.shape[0]
    n_states = xdot.shape[1]
    if state_names is None:
        state_names = tuple(f"x{k + 1}" for k in range(n_states))
    fits = global_fits
    if fits is None:
        fits = fit_global(theta[:train_end], xdot[:train_end], config.strr)
    splits, tracks = [], []
    for k in range(n_states):
        fit = fits[k]
        active = fit.active.copy()
        active[0] = True  # the bias term always carries the windowed part
        candidates = int(np.sum(active)) - 1
        n_k = min(config.n_varying, candidates)
        varying = select_top_n(theta[:train_end], active, xdot[:train_end, k], n_k)
        fixed_coef = fit.coef.copy()
        fixed_coef[list(varying)] = 0.0
        split = StateSplit(active=active, fixed_coef=fixed_coef, varying=varying)
        splits.append(split)
        tracks.append(fit_windows(theta, xdot[:, k], split, config, train_end))
    return SplitModel(
        descriptors=tuple(descriptors),
        state_names=tuple(state_names),
        splits=splits,
        tracks=tracks,
        config=config,
        global_fits=fits,
    )


def make_rhs(descriptors, coef_per_step, inputs=None):
    """RHS closure for the integrator.

    coef_per_step is a list (one per state) of full per-step coefficient
    matrices; inputs holds per-step exogenous rows. Values are held
    constant across the RK4 stages of each step.
    """
    exponents = np.array([d.exponents for d in descriptors], dtype=float)
    n_states = len(coef_per_step)
    stacked = np.stack(coef_per_step)

    def rhs(step, x):
        if inputs is not None and inputs.shape[1]:
            row = np.concatenate([x, inputs[step]])
        else:
            row = x
        terms = np.prod(row[None, :] ** exponents, axis=1)
        return stacked[:, step, :] @ terms

    return rhs


def coefficient_matrix(model, n_steps):
    """Per-step full coefficient matrices, one (n_steps, l) per state."""
    out = []
    for split, track in zip(model.splits, model.tracks):
        per_step = track.per_step()[:n_steps]
        if per_step.shape[0] < n_steps:
            raise ValueError("track does not cover the requested steps")
        coef = np.tile(split.fixed_coef, (n_steps, 1))
        coef[:, list(split.varying)] = per_step
        out.append(coef)
    return out


@dataclass
class Reconstruction:
    xdot_hat: np.ndarray
    states: np.ndarray
    diverged: bool
    n_valid: int


def reconstruct(model, states, inputs, dt, n_steps=None):
    """Evaluate and integrate the fitted model over the training grid.

    xdot_hat applies the per-step coefficients to the observed samples;
    states integrates the model from the first observed sample with RK4,
    holding coefficients and inputs per step.
    """
    states = np.asarray(states, dtype=float)
    if n_steps is None:
        n_steps = int(model.tracks[0].ends[-1])
    coef = coefficient_matrix(model, n_steps)
    exponents = np.array([d.exponents for d in model.descriptors], dtype=float)
    if inputs is not None and np.size(inputs):
        rows = np.hstack([states[:n_steps], inputs[:n_steps]])
    else:
        rows = states[:n_steps]
        inputs = None
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.prod(rows[:, None, :] ** exponents[None, :, :], axis=2)
    xdot_hat = np.column_stack([np.sum(terms * c, axis=1) for c in coef])

    rhs = make_rhs(model.descriptors, coef, inputs)
    run = rk4_path(rhs, states[0], n_steps - 1, dt)
    traj = np.vstack([states[0][None, :], run.states])
    return Reconstruction(
        xdot_hat=xdot_hat,
        states=traj,
        diverged=run.diverged,
        n_valid=run.n_valid + 1,
    )


def model_to_json(model):
    """JSON-serializable payload; floats survive round-trips bit-exactly."""
    payload = {
        "format": "tvode-split-model",
        "state_names": list(model.state_names),
        "library": library_to_json(model.descriptors),
        "config": {
            "window": model.config.window,
            "n_varying": model.config.n_varying,
            "strr": {
                "ridge": model.config.strr.ridge,
                "threshold": model.config.strr.threshold,
                "tol": model.config.strr.tol,
                "max_iter": model.config.strr.max_iter,
            },
        },
        "states": [],
    }
    for name, split, track in zip(model.state_names, model.splits, model.tracks):
        payload["states"].append(
            {
                "name": name,
                "active": [int(i) for i in np.flatnonzero(split.active)],
                "fixed_coef": {str(i): split.fixed_coef[i] for i in split.fixed_indices},
                "varying": list(split.varying),
                "track": {
                    "starts": [int(v) for v in track.starts],
                    "ends": [int(v) for v in track.ends],
                    "values": track.values.tolist(),
                    "underdetermined": [bool(v) for v in track.underdetermined],
                },
            }
        )
    return payload


def model_from_json(payload):
    if payload.get("format") != "tvode-split-model":
        raise ValueError("not a split-model payload")
    descriptors = tuple(library_from_json(payload["library"]))
    cfg = payload["config"]
    config = DiscoveryConfig(
        window=cfg["window"],
        n_varying=cfg["n_varying"],
        strr=StrrConfig(**cfg["strr"]),
    )
    n_terms = len(descriptors)
    splits, tracks = [], []
    for entry in payload["states"]:
        active = np.zeros(n_terms, dtype=bool)
        active[entry["active"]] = True
        fixed_coef = np.zeros(n_terms)
        for key, value in entry["fixed_coef"].items():
            fixed_coef[int(key)] = value
        splits.append(
            StateSplit(active=active, fixed_coef=fixed_coef, varying=tuple(entry["varying"]))
        )
        tr = entry["track"]
        tracks.append(
            CoefficientTrack(
                starts=np.asarray(tr["starts"], dtype=int),
                ends=np.asarray(tr["ends"], dtype=int),
                values=np.asarray(tr["values"], dtype=float),
                underdetermined=np.asarray(tr["underdetermined"], dtype=bool),
            )
        )
    return SplitModel(
        descriptors=descriptors,
        state_names=tuple(payload["state_names"]),
        splits=splits,
        tracks=tracks,
        config=config,
    )
