"""Synthetic data generators.

Euler-Maruyama integration of an epidemic model with a seasonally
forced transmission rate, a saturating consumer-resource model, and
mean-reverting weather series used as exogenous covariates. Fine
internal step, coarse recorded sampling.
"""

import math
from dataclasses import dataclass

import numpy as np

from .preprocess import TimeSeriesTable

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SirParams:
    """Susceptible-infected model with seasonal transmission.

    The transmission rate is a three-harmonic seasonal signal around a
    base level, optionally perturbed by per-step Gaussian jitter
    (jitter_sd=0 disables it), and clipped at zero.
    """

    recruitment: float = 100.0
    death_rate: float = 0.1
    recovery_rate: float = 0.1
    base_rate: float = 3e-4
    amp1: float = 1.5e-4
    amp2: float = 1.2e-4
    amp3: float = 1e-4
    freq1: float = _TWO_PI / (365.0 / 2.0)
    freq2: float = _TWO_PI / 365.0
    freq3: float = _TWO_PI / (365.0 / 2.0)
    phase2: float = math.pi / 4.0
    phase3: float = math.pi / 6.0
    slow_freq: float = 0.005
    jitter_sd: float = 1e-5
    noise_s: float = 0.0
    noise_i: float = 0.0
    s0: float = 500.0
    i0: float = 7.0


@dataclass(frozen=True)
class CrParams:
    """Consumer-resource model with a saturating functional response."""

    prey_growth: float = 0.1
    attack: float = 0.005
    handling: float = 0.001
    mortality: float = 0.025
    noise_r: float = 0.0
    noise_c: float = 0.0
    r0: float = 20.0
    c0: float = 10.0


@dataclass(frozen=True)
class OuParams:
    """One mean-reverting series with hard clamps."""

    reversion: float
    mean: float
    noise: float
    initial: float
    low: float
    high: float


@dataclass(frozen=True)
class WeatherParams:
    air_temp: OuParams = OuParams(0.1, 0.0, 10.0, 20.0, -20.0, 35.0)
    humidity: OuParams = OuParams(0.05, 50.0, 5.0, 60.0, 0.0, 100.0)
    wind: OuParams = OuParams(0.2, 5.0, 1.0, 10.0, 0.0, 30.0)
    precip: OuParams = OuParams(0.1, 0.1, 0.05, 0.2, 0.0, 100.0)


def beta_of_t(params, t, jitter=0.0):
    """Seasonal transmission rate at time t (days), clipped at zero."""
    value = (
        params.base_rate
        + params.amp1 * math.sin(params.freq1 * t)
        + params.amp2 * math.sin(params.freq2 * t + params.phase2)
        + params.amp3 * math.sin(params.freq3 * t + params.phase3) * math.sin(params.slow_freq * t)
        + jitter
    )
    return max(0.0, value)


def _grid(t_end, dt, stride):
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or stride < 1 or n_steps % stride:
        raise ValueError("t_end/dt must be a positive multiple of the recording stride")
    return n_steps


def simulate_sir(params=None, t_end=1500.0, dt=0.01, stride=100, seed=0):
    """Euler-Maruyama sample path of the epidemic model.

    Records every stride-th internal step starting at t=0, so the table
    has t_end/(dt*stride) rows. States are floored at zero after each
    step.
    """
    if params is None:
        params = SirParams()
    n_steps = _grid(t_end, dt, stride)
    rng_s, rng_i, rng_beta = [
        np.random.default_rng(child) for child in _seed_sequence(seed).spawn(3)
    ]
    sqdt = math.sqrt(dt)
    dw_s = rng_s.standard_normal(n_steps) * sqdt
    dw_i = rng_i.standard_normal(n_steps) * sqdt
    jitter = (
        rng_beta.standard_normal(n_steps) * params.jitter_sd
        if params.jitter_sd
        else np.zeros(n_steps)
    )

    m = n_steps // stride
    out = np.empty((m, 2))
    s, i = params.s0, params.i0
    loss_i = params.recovery_rate + params.death_rate
    for step in range(n_steps):
        if step % stride == 0:
            out[step // stride] = (s, i)
        beta = beta_of_t(params, step * dt, jitter[step])
        infection = beta * s * i
        s = s + (params.recruitment - infection - params.death_rate * s) * dt
        s += params.noise_s * dw_s[step]
        i = i + (infection - loss_i * i) * dt + params.noise_i * dw_i[step]
        s = max(0.0, s)
        i = max(0.0, i)
    times = np.arange(m) * (dt * stride)
    return TimeSeriesTable(times=times, states=out, state_names=("S", "I"))


def simulate_cr(params=None, t_end=1500.0, dt=0.01, stride=100, seed=0):
    """Euler-Maruyama sample path of the consumer-resource model."""
    if params is None:
        params = CrParams()
    n_steps = _grid(t_end, dt, stride)
    rng_r, rng_c = [np.random.default_rng(child) for child in _seed_sequence(seed).spawn(2)]
    sqdt = math.sqrt(dt)
    dw_r = rng_r.standard_normal(n_steps) * sqdt
    dw_c = rng_c.standard_normal(n_steps) * sqdt

    m = n_steps // stride
    out = np.empty((m, 2))
    r, c = params.r0, params.c0
    floor = 1e-6
    for step in range(n_steps):
        if step % stride == 0:
            out[step // stride] = (r, c)
        predation = params.attack * r * c / (1.0 + params.handling * r)
        r_next = r + (params.prey_growth * r - predation) * dt + params.noise_r * dw_r[step]
        c_next = c + (predation - params.mortality * c) * dt + params.noise_c * dw_c[step]
        r = max(floor, r_next)
        c = max(floor, c_next)
    times = np.arange(m) * (dt * stride)
    return TimeSeriesTable(times=times, states=out, state_names=("R", "C"))


def simulate_weather(params=None, t_end=1500.0, dt=0.01, stride=100, seed=0):
    """Four clamped mean-reverting weather series on the same grid."""
    if params is None:
        params = WeatherParams()
    n_steps = _grid(t_end, dt, stride)
    series = (params.air_temp, params.humidity, params.wind, params.precip)
    rngs = [np.random.default_rng(child) for child in _seed_sequence(seed).spawn(len(series))]
    sqdt = math.sqrt(dt)
    shocks = np.column_stack(
        [p.noise * sqdt * rng.standard_normal(n_steps) for p, rng in zip(series, rngs)]
    )

    m = n_steps // stride
    out = np.empty((m, len(series)))
    x = np.array([p.initial for p in series])
    reversion = np.array([p.reversion for p in series])
    mean = np.array([p.mean for p in series])
    low = np.array([p.low for p in series])
    high = np.array([p.high for p in series])
    for step in range(n_steps):
        if step % stride == 0:
            out[step // stride] = x
        x = x - reversion * (x - mean) * dt + shocks[step]
        x = np.clip(x, low, high)
    times = np.arange(m) * (dt * stride)
    return TimeSeriesTable(times=times, states=out, state_names=("AT", "RH", "WS", "PC"))


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def sir_with_weather(sir_params=None, weather_params=None, t_end=1500.0, dt=0.01, stride=100, seed=0):
    """Epidemic states plus weather covariates in one table."""
    root = _seed_sequence(seed)
    dyn_seed, weather_seed = root.spawn(2)
    table = simulate_sir(sir_params, t_end=t_end, dt=dt, stride=stride, seed=dyn_seed)
    weather = simulate_weather(weather_params, t_end=t_end, dt=dt, stride=stride, seed=weather_seed)
    return table.with_covariates(weather)


def cr_with_weather(cr_params=None, weather_params=None, t_end=1500.0, dt=0.01, stride=100, seed=0):
    """Consumer-resource states plus weather covariates in one table."""
    root = _seed_sequence(seed)
    dyn_seed, weather_seed = root.spawn(2)
    table = simulate_cr(cr_params, t_end=t_end, dt=dt, stride=stride, seed=dyn_seed)
    weather = simulate_weather(weather_params, t_end=t_end, dt=dt, stride=stride, seed=weather_seed)
    return table.with_covariates(weather)
