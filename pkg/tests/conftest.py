"""Shared fixtures: benchmark systems and the expensive grid passes."""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from tvode import pipeline
from tvode.evaluation import evaluate_grid, make_split_plan
from tvode.integrate import rk4_path
from tvode.library import build_library, evaluate_library
from tvode.predictor import ForestConfig
from tvode.preprocess import TimeSeriesTable
from tvode.simulate import CrParams, cr_with_weather, sir_with_weather


@dataclass
class BilinearData:
    """Noise-free run of a small input-driven polynomial system.

    x1' = 0.6 x1 + 0.2 x2 u1 and x2' = -0.4 x2 + 0.1 u2^2 with inputs
    u1 = sin t and u2 = cos 1.7t (incommensurate so no library column
    is a linear combination of others). Derivatives are evaluated from
    the exact right-hand side along the trajectory.
    """

    table: TimeSeriesTable
    xdot: np.ndarray
    theta: np.ndarray
    descriptors: tuple
    names: list


def make_bilinear_data(n_steps=1000, dt=0.01):
    def rhs(step, x):
        t = step * dt
        u1, u2 = np.sin(t), np.cos(1.7 * t)
        return np.array([0.6 * x[0] + 0.2 * x[1] * u1, -0.4 * x[1] + 0.1 * u2 ** 2])

    x0 = np.array([1.0, 2.0])
    run = rk4_path(rhs, x0, n_steps, dt)
    states = np.vstack([x0[None, :], run.states])
    times = np.arange(n_steps + 1) * dt
    inputs = np.column_stack([np.sin(times), np.cos(1.7 * times)])
    xdot = np.column_stack(
        [
            0.6 * states[:, 0] + 0.2 * states[:, 1] * inputs[:, 0],
            -0.4 * states[:, 1] + 0.1 * inputs[:, 1] ** 2,
        ]
    )
    table = TimeSeriesTable(
        times=times,
        states=states,
        state_names=("x1", "x2"),
        inputs=inputs,
        input_names=("u1", "u2"),
    )
    descriptors = build_library(2, 2, 2)
    lib = evaluate_library(descriptors, states, inputs)
    return BilinearData(
        table=table,
        xdot=xdot,
        theta=lib.theta,
        descriptors=tuple(descriptors),
        names=[d.name for d in descriptors],
    )


@pytest.fixture(scope="session")
def bilinear():
    return make_bilinear_data()


@pytest.fixture(scope="session")
def sir_table():
    """Noise-free seasonal epidemic run with weather covariates."""
    return sir_with_weather(seed=0)


def _grid_pass(table, trees=200):
    plan = make_split_plan(table.n_samples)
    prep = pipeline.prepare(table, smooth_window=30, degree=1, train_end=plan.train_end)
    result = evaluate_grid(prep, plan, forest=ForestConfig(n_trees=trees), seed=0)
    return prep, plan, result


@pytest.fixture(scope="session")
def sir_grid():
    """Full grid pass on the noise-free epidemic data, timed end to end."""
    start = time.monotonic()
    table = sir_with_weather(seed=0)
    prep, plan, result = _grid_pass(table)
    return prep, plan, result, time.monotonic() - start


@pytest.fixture(scope="session")
def cr_grid():
    """Full grid pass on the noise-free consumer-resource data, timed."""
    start = time.monotonic()
    table = cr_with_weather(CrParams(), seed=0)
    prep, plan, result = _grid_pass(table)
    return prep, plan, result, time.monotonic() - start
