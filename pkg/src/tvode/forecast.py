"""State forecasting by integrating the split model forward.

The fixed coefficients come from the model, the time-varying ones from
a supplied per-step schedule (fitted window values or forest
predictions). Coefficients and inputs are held constant within each
step, matching the reconstruction path exactly.
"""

from dataclasses import dataclass

import numpy as np

from .discovery import make_rhs
from .integrate import rk4_path


@dataclass
class ForecastRun:
    states_scaled: np.ndarray
    states: np.ndarray
    diverged: bool
    n_valid: int


def forecast_states(model, coef_steps, x0, dt, horizon, inputs=None, scaling=None):
    """Integrate horizon steps from x0 under scheduled coefficients.

    coef_steps holds one (horizon, n_varying) block per state, aligned
    with each state's varying indices. Row i of the result is the state
    after i+1 steps. With a scaling spec the trajectory is also mapped
    back to original units; a non-finite state truncates the run and
    sets the diverged flag.
    """
    x0 = np.asarray(x0, dtype=float)
    if len(coef_steps) != model.n_states:
        raise ValueError("need one coefficient block per state")
    coef = []
    for split, block in zip(model.splits, coef_steps):
        block = np.atleast_2d(np.asarray(block, dtype=float))
        if block.shape != (horizon, len(split.varying)):
            raise ValueError("coefficient block shape does not match horizon/varying terms")
        full = np.tile(split.fixed_coef, (horizon, 1))
        if split.varying:
            full[:, list(split.varying)] = block
        coef.append(full)
    if inputs is not None:
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        if inputs.shape[0] < horizon:
            raise ValueError("inputs do not cover the forecast horizon")

    run = rk4_path(make_rhs(model.descriptors, coef, inputs), x0, horizon, dt)
    if scaling is None:
        states = run.states.copy()
    else:
        states = scaling.invert(run.states, names=model.state_names)
    return ForecastRun(
        states_scaled=run.states,
        states=states,
        diverged=run.diverged,
        n_valid=run.n_valid,
    )
