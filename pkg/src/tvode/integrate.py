"""Fixed-step RK4 with per-step held coefficients and divergence capture."""

from dataclasses import dataclass

import numpy as np


@dataclass
class IntegrationResult:
    states: np.ndarray
    diverged: bool
    n_valid: int


def rk4_path(rhs, x0, n_steps, dt):
    """Integrate x' = rhs(step, x) over n_steps of size dt.

    rhs receives the index of the step being taken so callers can hold
    piecewise-constant coefficients and inputs fixed across the four
    stages. Returns the n_steps states after x0; on a non-finite state
    the trajectory is truncated (remaining rows NaN) and flagged.
    """
    x = np.asarray(x0, dtype=float).copy()
    out = np.full((n_steps, x.size), np.nan)
    half = 0.5 * dt
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            k1 = rhs(step, x)
            k2 = rhs(step, x + half * k1)
            k3 = rhs(step, x + half * k2)
            k4 = rhs(step, x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                return IntegrationResult(states=out, diverged=True, n_valid=step)
            out[step] = x
    return IntegrationResult(states=out, diverged=False, n_valid=n_steps)
