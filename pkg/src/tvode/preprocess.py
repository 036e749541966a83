"""Data ingestion and preprocessing.

Turns a delimited file (or simulator output) into a uniformly sampled
table of state, input and covariate columns, then provides the steps the
fitting pipeline chains together: rolling-mean smoothing, min-max
scaling fitted on the training segment only, and finite-difference
derivative estimation.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

ROLES = ("time", "state", "input", "covariate", "ignore")

_REL_TOL = 1e-9


def _check_uniform(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two samples on the time axis")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ValueError("time column must be strictly increasing")
    dt = steps[0]
    if np.any(np.abs(steps - dt) > _REL_TOL * max(abs(dt), 1.0)):
        raise ValueError("time grid is not uniform")
    return dt


@dataclass(frozen=True)
class TimeSeriesTable:
    """Uniform-grid multivariate series split into roles.

    states drive the dynamics and receive derivative estimates, inputs
    enter the candidate library as exogenous variables, covariates feed
    the coefficient predictor only.
    """

    times: np.ndarray
    states: np.ndarray
    state_names: tuple
    inputs: np.ndarray = None
    input_names: tuple = ()
    covariates: np.ndarray = None
    covariate_names: tuple = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        dt = _check_uniform(times)
        object.__setattr__(self, "dt", dt)
        m = times.size

        def conform(matrix, names, label):
            if matrix is None:
                matrix = np.zeros((m, 0))
            matrix = np.asarray(matrix, dtype=float)
            if matrix.ndim == 1:
                matrix = matrix[:, None]
            if matrix.shape[0] != m:
                raise ValueError(f"{label} rows do not match the time axis")
            if matrix.shape[1] != len(names):
                raise ValueError(f"{label} column count does not match names")
            if not np.all(np.isfinite(matrix)):
                raise ValueError(f"{label} contains non-finite values")
            return matrix

        object.__setattr__(self, "states", conform(self.states, self.state_names, "states"))
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(self, "inputs", conform(self.inputs, self.input_names, "inputs"))
        object.__setattr__(self, "input_names", tuple(self.input_names))
        object.__setattr__(
            self, "covariates", conform(self.covariates, self.covariate_names, "covariates")
        )
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))

    @property
    def n_samples(self):
        return self.times.size

    @property
    def column_names(self):
        return self.state_names + self.input_names + self.covariate_names

    def columns(self):
        """All data columns in role order as one m x (n+q+c) matrix."""
        return np.hstack([self.states, self.inputs, self.covariates])

    def column(self, name):
        for group, names in (
            (self.states, self.state_names),
            (self.inputs, self.input_names),
            (self.covariates, self.covariate_names),
        ):
            if name in names:
                return group[:, names.index(name)]
        raise KeyError(f"no column named {name!r}")

    def replace_columns(self, matrix):
        """Same layout, new values (used by smoothing/scaling)."""
        matrix = np.asarray(matrix, dtype=float)
        n, q = len(self.state_names), len(self.input_names)
        return TimeSeriesTable(
            times=self.times,
            states=matrix[:, :n],
            state_names=self.state_names,
            inputs=matrix[:, n : n + q],
            input_names=self.input_names,
            covariates=matrix[:, n + q :],
            covariate_names=self.covariate_names,
        )

    def with_covariates(self, other):
        """Merge another table's state columns in as covariates."""
        if other.n_samples != self.n_samples or abs(other.dt - self.dt) > _REL_TOL:
            raise ValueError("tables disagree on the time grid")
        return TimeSeriesTable(
            times=self.times,
            states=self.states,
            state_names=self.state_names,
            inputs=self.inputs,
            input_names=self.input_names,
            covariates=np.hstack([self.covariates, other.states]),
            covariate_names=self.covariate_names + other.state_names,
        )

    def feature_matrix(self, names):
        """Columns by name from any role, for predictor features."""
        return np.column_stack([self.column(n) for n in names])


@dataclass(frozen=True)
class ScalingSpec:
    """Per-column min-max scaling fitted on a training segment."""

    names: tuple
    mins: np.ndarray
    maxs: np.ndarray
    degenerate: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "mins", np.asarray(self.mins, dtype=float))
        object.__setattr__(self, "maxs", np.asarray(self.maxs, dtype=float))
        object.__setattr__(self, "degenerate", np.asarray(self.degenerate, dtype=bool))

    def transform(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        span = self.maxs - self.mins
        safe = np.where(self.degenerate, 1.0, span)
        out = (matrix - self.mins) / safe
        return np.where(self.degenerate, 0.5, out)

    def invert(self, matrix, names=None):
        """Map scaled values back to original units (column subset by name)."""
        matrix = np.asarray(matrix, dtype=float)
        if names is None:
            mins, maxs, degen = self.mins, self.maxs, self.degenerate
        else:
            idx = [self.names.index(n) for n in names]
            mins, maxs, degen = self.mins[idx], self.maxs[idx], self.degenerate[idx]
        span = np.where(degen, 0.0, maxs - mins)
        return mins + span * matrix


def ingest_csv(path, roles, daily_average=False):
    """Read a delimited file into a TimeSeriesTable.

    roles maps column names to one of 'time', 'state', 'input',
    'covariate' or 'ignore'; exactly one column takes the time role and
    unlisted columns are ignored. Rows with a missing value in any used
    column are dropped. daily_average collapses sub-daily rows onto the
    integer part of the time value by averaging before the uniform-grid
    check.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    unknown = [name for name in roles if name not in frame.columns]
    if unknown:
        raise ValueError(f"roles name columns missing from the file: {unknown}")
    bad = [f"{k}={v}" for k, v in roles.items() if v not in ROLES]
    if bad:
        raise ValueError(f"unrecognized roles: {bad}")
    time_cols = [name for name, role in roles.items() if role == "time"]
    if len(time_cols) != 1:
        raise ValueError("exactly one column must take the time role")
    time_col = time_cols[0]

    def names_for(role):
        return [name for name in frame.columns if roles.get(name) == role]

    state_names = names_for("state")
    input_names = names_for("input")
    covariate_names = names_for("covariate")
    if not state_names:
        raise ValueError("at least one state column is required")

    used = [time_col] + state_names + input_names + covariate_names
    data = frame[used].apply(pd.to_numeric, errors="coerce")
    data = data.dropna(axis=0, how="any")
    if daily_average:
        data = data.groupby(np.floor(data[time_col].to_numpy()), sort=True).mean()
        data[time_col] = data.index.to_numpy()
    if len(data) < 2:
        raise ValueError("fewer than two usable rows after dropping missing values")

    return TimeSeriesTable(
        times=data[time_col].to_numpy(dtype=float),
        states=data[state_names].to_numpy(dtype=float),
        state_names=tuple(state_names),
        inputs=data[input_names].to_numpy(dtype=float),
        input_names=tuple(input_names),
        covariates=data[covariate_names].to_numpy(dtype=float),
        covariate_names=tuple(covariate_names),
    )


def rolling_mean(values, window):
    """Centered moving average with truncated edge windows.

    Index i averages samples max(0, i-(window-1)//2) .. min(m, i+window//2+1),
    so even windows lean one sample forward and edges use what exists.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > m:
        raise ValueError("window exceeds the series length")
    if window == 1:
        return values.copy()
    flat = values.reshape(m, -1)
    csum = np.vstack([np.zeros((1, flat.shape[1])), np.cumsum(flat, axis=0)])
    idx = np.arange(m)
    lo = np.maximum(0, idx - (window - 1) // 2)
    hi = np.minimum(m, idx + window // 2 + 1)
    out = (csum[hi] - csum[lo]) / (hi - lo)[:, None]
    return out.reshape(values.shape)


def rolling_smooth(table, window):
    """Apply the centered rolling mean to every data column."""
    return table.replace_columns(rolling_mean(table.columns(), window))


def minmax_fit(table, train_end=None):
    """Fit per-column min-max bounds on rows [0, train_end).

    Columns that are constant over the segment are flagged degenerate
    and later map to 0.5.
    """
    if train_end is None:
        train_end = table.n_samples
    if not 1 <= train_end <= table.n_samples:
        raise ValueError("train_end outside the sampled range")
    segment = table.columns()[:train_end]
    mins = segment.min(axis=0)
    maxs = segment.max(axis=0)
    return ScalingSpec(
        names=table.column_names,
        mins=mins,
        maxs=maxs,
        degenerate=(maxs - mins) == 0.0,
    )


def minmax_apply(table, spec):
    if tuple(spec.names) != table.column_names:
        raise ValueError("scaling spec does not match the table columns")
    return table.replace_columns(spec.transform(table.columns()))


def estimate_derivatives(table):
    """Second-order finite-difference derivatives of the state columns.

    Central differences inside, one-sided three-point stencils at both
    ends; exact for quadratics on a uniform grid. Needs >= 3 samples.
    """
    x = table.states
    m = x.shape[0]
    if m < 3:
        raise ValueError("need at least three samples for derivative estimates")
    dt = table.dt
    xdot = np.empty_like(x)
    xdot[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    xdot[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt)
    xdot[-1] = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * dt)
    return xdot
