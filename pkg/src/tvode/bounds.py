"""Finite-horizon error bounds for approximate vector fields.

If the true field is L-Lipschitz in the state and the learned field
stays within delta of it along the way, the trajectory gap obeys
|x - x_hat|(t) <= delta/L (e^{Lt} - 1). The module provides that bound,
its specialization to coefficient errors, best constant/piecewise
approximation errors of a coefficient signal (Chebyshev midrange), and
an empirical containment check that integrates both fields and compares
the observed gap against the bound. All norms are max-norms.
"""

from dataclasses import dataclass

import numpy as np

_SMALL_L = 1e-12


def gronwall_bound(delta, lipschitz, t):
    """delta/L (e^{Lt} - 1); the L -> 0 limit delta*t is used for tiny L."""
    if delta < 0 or lipschitz < 0:
        raise ValueError("delta and lipschitz must be >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if lipschitz < _SMALL_L:
        out = delta * t
    else:
        out = delta / lipschitz * np.expm1(lipschitz * t)
    return float(out) if out.ndim == 0 else out


def split_bound(term_bound, coef_error, lipschitz, t):
    """Trajectory bound when the field gap comes from coefficient error.

    term_bound caps the relevant library terms' magnitude along the
    trajectory and coef_error the coefficient discrepancy, so the field
    gap is at most their product.
    """
    if term_bound < 0 or coef_error < 0:
        raise ValueError("term_bound and coef_error must be >= 0")
    return gronwall_bound(term_bound * coef_error, lipschitz, t)


def best_constant_error(samples):
    """Max-norm error of the best constant fit: half the largest
    per-component peak-to-peak range."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    flat = samples.reshape(samples.shape[0], -1)
    return float(np.max(flat.max(axis=0) - flat.min(axis=0)) / 2.0)


def best_piecewise_error(samples, n_pieces):
    """Best piecewise-constant error over n_pieces near-equal chunks."""
    samples = np.asarray(samples, dtype=float)
    if not 1 <= n_pieces <= samples.shape[0]:
        raise ValueError("n_pieces must be between 1 and the sample count")
    return max(best_constant_error(chunk) for chunk in np.array_split(samples, n_pieces))


def _rk4_time(field, x0, t0, dt, n_steps):
    """Classic RK4 with time-dependent stages; rows after each step."""
    x = np.asarray(x0, dtype=float).copy()
    out = np.full((n_steps, x.size), np.nan)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            t = t0 + step * dt
            k1 = field(t, x)
            k2 = field(t + dt / 2.0, x + dt / 2.0 * k1)
            k3 = field(t + dt / 2.0, x + dt / 2.0 * k2)
            k4 = field(t + dt, x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                return out, step
            out[step] = x
    return out, n_steps


def _box_grid(low, high, per_dim):
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in zip(low, high)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def estimate_lipschitz(field, low, high, times, per_dim=8, h=1e-6):
    """Largest induced max-norm of the numerical Jacobian over a box grid."""
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    points = _box_grid(low, high, per_dim)
    n = low.size
    worst = 0.0
    for t in np.atleast_1d(times):
        for x in points:
            jac = np.empty((n, n))
            for j in range(n):
                step = h * max(1.0, abs(x[j]))
                e = np.zeros(n)
                e[j] = step
                jac[:, j] = (np.asarray(field(t, x + e)) - np.asarray(field(t, x - e))) / (
                    2.0 * step
                )
            worst = max(worst, float(np.max(np.sum(np.abs(jac), axis=1))))
    return worst


def estimate_discrepancy(field_a, field_b, low, high, times, per_dim=8):
    """Largest max-norm gap between two fields over a box grid."""
    points = _box_grid(np.asarray(low, float), np.asarray(high, float), per_dim)
    worst = 0.0
    for t in np.atleast_1d(times):
        for x in points:
            gap = np.max(np.abs(np.asarray(field_a(t, x)) - np.asarray(field_b(t, x))))
            worst = max(worst, float(gap))
    return worst


@dataclass
class BoundCheck:
    times: np.ndarray
    observed: np.ndarray
    bound: np.ndarray
    holds: bool
    domain_ok: bool
    first_exit: int
    lipschitz: float
    delta: float
    margin: float


def empirical_bound_check(
    field_true,
    field_model,
    x0,
    horizon,
    n_steps,
    low,
    high,
    lipschitz=None,
    delta=None,
    tol=1e-6,
    per_dim=8,
    n_time_samples=9,
):
    """Integrate both fields and test the observed gap against the bound.

    Missing L and delta are estimated on a grid over the box [low,
    high]; delta is additionally refined along the integrated model
    trajectory, where the bound actually needs it. If either trajectory
    leaves the box the check aborts with domain_ok=False, since the
    bound's hypotheses no longer hold.
    """
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < low) or np.any(x0 > high):
        raise ValueError("x0 outside the stated domain")
    dt = horizon / n_steps
    times = np.linspace(0.0, horizon, n_steps + 1)
    truth, ok_true = _rk4_time(field_true, x0, 0.0, dt, n_steps)
    model, ok_model = _rk4_time(field_model, x0, 0.0, dt, n_steps)

    traj_true = np.vstack([x0[None, :], truth])
    traj_model = np.vstack([x0[None, :], model])
    n_ok = min(ok_true, ok_model) + 1
    inside = np.all(
        (traj_true[:n_ok] >= low - 1e-12)
        & (traj_true[:n_ok] <= high + 1e-12)
        & (traj_model[:n_ok] >= low - 1e-12)
        & (traj_model[:n_ok] <= high + 1e-12),
        axis=1,
    )
    first_exit = int(np.argmin(inside)) if not inside.all() else n_ok
    domain_ok = bool(inside.all()) and n_ok == n_steps + 1

    t_samples = np.linspace(0.0, horizon, n_time_samples)
    if lipschitz is None:
        lipschitz = estimate_lipschitz(field_true, low, high, t_samples, per_dim=per_dim)
    if delta is None:
        delta = estimate_discrepancy(field_true, field_model, low, high, t_samples, per_dim=per_dim)
        for i in range(min(first_exit, n_ok)):
            gap = np.max(
                np.abs(
                    np.asarray(field_true(times[i], traj_model[i]))
                    - np.asarray(field_model(times[i], traj_model[i]))
                )
            )
            delta = max(delta, float(gap))

    upto = n_ok if domain_ok else first_exit
    observed = np.max(np.abs(traj_true[:upto] - traj_model[:upto]), axis=1)
    bound = gronwall_bound(delta, lipschitz, times[:upto])
    margin = float(np.min(bound - observed)) if upto else float("nan")
    holds = domain_ok and bool(np.all(observed <= bound + tol))
    return BoundCheck(
        times=times[:upto],
        observed=observed,
        bound=bound,
        holds=holds,
        domain_ok=domain_ok,
        first_exit=first_exit,
        lipschitz=float(lipschitz),
        delta=float(delta),
        margin=margin,
    )
