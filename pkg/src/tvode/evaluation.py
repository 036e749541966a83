"""Forecast evaluation: fold layout, grid search, model selection.

The tail of the series is cut into equal consecutive blocks: an initial
group of validation folds followed by the test folds. Hyperparameters
(window length w, varying-term count N) are chosen per test fold by the
average validation MAE over an expanding set of validation folds; the
optimal sweep reports the hindsight-best configuration per fold as a
reference. MAE values are percentages of the normalized [0, 1] scale.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import pipeline
from .discovery import fit_global
from .predictor import ForestConfig
from .strr import StrrConfig


def mae(predicted, observed):
    """Mean absolute error over all entries."""
    predicted = np.asarray(predicted, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if predicted.shape != observed.shape:
        raise ValueError("shapes disagree")
    return float(np.mean(np.abs(predicted - observed)))


@dataclass(frozen=True)
class SplitPlan:
    """Block layout of the evaluation tail.

    Blocks 1..n_initial_validation are the starting validation folds;
    blocks n_initial_validation+1.. hold the test folds. Test fold j is
    validated on blocks 1..n_initial_validation+j-1.
    """

    train_end: int
    fold_length: int
    n_test: int
    n_initial_validation: int

    def block(self, index):
        """Half-open sample range of block index (1-based)."""
        start = self.train_end + (index - 1) * self.fold_length
        return start, start + self.fold_length

    @property
    def n_validation(self):
        return self.n_initial_validation + self.n_test - 1

    def validation_blocks(self, fold):
        if not 1 <= fold <= self.n_test:
            raise ValueError("test fold out of range")
        return list(range(1, self.n_initial_validation + fold))

    def test_block(self, fold):
        if not 1 <= fold <= self.n_test:
            raise ValueError("test fold out of range")
        return self.n_initial_validation + fold


def make_split_plan(n_samples, fold_length=30, n_test=5, n_initial_validation=5):
    if fold_length < 1 or n_test < 1 or n_initial_validation < 1:
        raise ValueError("fold layout values must be positive")
    tail = fold_length * (n_test + n_initial_validation)
    train_end = n_samples - tail
    if train_end < max(3, fold_length):
        raise ValueError("series too short for the requested fold layout")
    return SplitPlan(
        train_end=train_end,
        fold_length=fold_length,
        n_test=n_test,
        n_initial_validation=n_initial_validation,
    )


@dataclass
class GridResult:
    """Per-configuration fold MAE matrices from one grid pass."""

    grid: list
    state_names: tuple
    validation_mae: dict
    test_mae: dict
    validation_diverged: dict
    test_diverged: dict
    train_mae: dict
    fixed_test_mae: np.ndarray
    fixed_test_diverged: np.ndarray
    fixed_train_mae: np.ndarray


def _evaluate_configuration(prep, plan, w, n_varying, strr, forest, covariates, seed, global_fits):
    model = pipeline.fit_varying(prep, w, n_varying, strr=strr, global_fits=global_fits)
    predictor = pipeline.fit_predictor(prep, model, covariates, forest=forest, base_seed=seed)
    _, train_mae = pipeline.training_errors(prep, model)
    n_vars = len(prep.table.state_names)
    val = np.empty((plan.n_validation, n_vars))
    val_div = np.zeros(plan.n_validation, dtype=bool)
    for i in range(plan.n_validation):
        start, _ = plan.block(i + 1)
        fc = pipeline.forecast_fold(prep, model, predictor, start, plan.fold_length)
        val[i] = fc.mae_pct
        val_div[i] = fc.diverged
    test = np.empty((plan.n_test, n_vars))
    test_div = np.zeros(plan.n_test, dtype=bool)
    for j in range(plan.n_test):
        start, _ = plan.block(plan.test_block(j + 1))
        fc = pipeline.forecast_fold(prep, model, predictor, start, plan.fold_length)
        test[j] = fc.mae_pct
        test_div[j] = fc.diverged
    return val, test, val_div, test_div, train_mae


def _config_job(args):
    key, payload = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return key, _evaluate_configuration(*payload)


def evaluate_grid(
    prep,
    plan,
    grid_w=(7, 14, 21, 28),
    grid_n=None,
    strr=None,
    forest=None,
    covariates=(),
    seed=0,
    jobs=1,
):
    """Fit and score every (w, N) configuration plus the fixed baseline.

    The default N grid runs from 0 to the largest active non-bias term
    count found by the global fit. Distinct N values that clamp to the
    same per-state counts share one evaluation. Diverged forecasts score
    their valid prefix (infinite MAE when nothing is valid) and carry a
    flag.
    """
    strr = strr or StrrConfig()
    forest = forest or ForestConfig()
    covariates = tuple(covariates) or tuple(prep.table.covariate_names)
    global_fits = fit_global(prep.theta[: prep.train_end], prep.xdot[: prep.train_end], strr)
    if grid_n is None:
        most = max(int(np.sum(fit.active[1:])) for fit in global_fits)
        grid_n = list(range(most + 1))
    grid = [(int(w), int(n)) for w in grid_w for n in grid_n]

    clamp = [int(np.sum(fit.active[1:])) for fit in global_fits]
    effective = {}
    for w, n in grid:
        effective[(w, n)] = (w,) + tuple(min(n, c) for c in clamp)
    unique = {}
    for key in grid:
        unique.setdefault(effective[key], key)

    payloads = [
        (key, (prep, plan, key[0], key[1], strr, forest, tuple(covariates), seed, global_fits))
        for key in unique.values()
    ]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = dict(pool.map(_config_job, payloads))
    else:
        raw = dict(_config_job(p) for p in payloads)

    validation_mae, test_mae = {}, {}
    validation_diverged, test_diverged, train_mae = {}, {}, {}
    for key in grid:
        val, test, val_div, test_div, train = raw[unique[effective[key]]]
        validation_mae[key] = val
        test_mae[key] = test
        validation_diverged[key] = val_div
        test_diverged[key] = test_div
        train_mae[key] = train

    fixed = pipeline.fit_fixed(prep, strr=strr, global_fits=global_fits)
    _, fixed_train = pipeline.training_errors(prep, fixed)
    n_vars = len(prep.table.state_names)
    fixed_test = np.empty((plan.n_test, n_vars))
    fixed_div = np.zeros(plan.n_test, dtype=bool)
    for j in range(plan.n_test):
        start, _ = plan.block(plan.test_block(j + 1))
        fc = pipeline.forecast_fold_fixed(prep, fixed, start, plan.fold_length)
        fixed_test[j] = fc.mae_pct
        fixed_div[j] = fc.diverged
    return GridResult(
        grid=grid,
        state_names=prep.table.state_names,
        validation_mae=validation_mae,
        test_mae=test_mae,
        validation_diverged=validation_diverged,
        test_diverged=test_diverged,
        train_mae=train_mae,
        fixed_test_mae=fixed_test,
        fixed_test_diverged=fixed_div,
        fixed_train_mae=fixed_train,
    )


def cv_select(result, plan):
    """Choose (w, N) per test fold by expanding-window validation MAE.

    The score averages over that fold's validation blocks and all state
    variables; ties prefer smaller N, then smaller w.
    """
    rows = []
    for j in range(1, plan.n_test + 1):
        blocks = [b - 1 for b in plan.validation_blocks(j)]
        scored = []
        for w, n in result.grid:
            score = float(np.mean(result.validation_mae[(w, n)][blocks]))
            scored.append((score, n, w))
        scored.sort()
        score, n, w = scored[0]
        rows.append(
            {
                "fold": j,
                "w": w,
                "N": n,
                "mae_valid": score,
                "mae_test": result.test_mae[(w, n)][j - 1],
                "diverged": bool(result.test_diverged[(w, n)][j - 1]),
            }
        )
    return rows


def optimal_sweep(result, plan):
    """Hindsight-best (w, N) per test fold and state variable."""
    rows = []
    for j in range(1, plan.n_test + 1):
        blocks = [b - 1 for b in plan.validation_blocks(j)]
        for v, name in enumerate(result.state_names):
            scored = [
                (result.test_mae[(w, n)][j - 1, v], n, w) for w, n in result.grid
            ]
            scored.sort()
            best, n, w = scored[0]
            rows.append(
                {
                    "fold": j,
                    "variable": name,
                    "w": w,
                    "N": n,
                    "mae_valid": float(np.mean(result.validation_mae[(w, n)][blocks, v])),
                    "mae_test": float(best),
                    "diverged": bool(result.test_diverged[(w, n)][j - 1]),
                }
            )
    return rows


def compare_baseline(prep, plan, choices, strr=None, forest=None, covariates=(), seed=0):
    """Paired fixed vs time-varying test MAEs on the same folds.

    choices gives the (w, N) to use per test fold (e.g. the CV picks).
    Models are fitted once per distinct configuration on the training
    range.
    """
    strr = strr or StrrConfig()
    covariates = tuple(covariates) or tuple(prep.table.covariate_names)
    global_fits = fit_global(prep.theta[: prep.train_end], prep.xdot[: prep.train_end], strr)
    fixed = pipeline.fit_fixed(prep, strr=strr, global_fits=global_fits)
    fitted = {}
    rows = []
    for j, (w, n) in enumerate(choices, start=1):
        if (w, n) not in fitted:
            model = pipeline.fit_varying(prep, w, n, strr=strr, global_fits=global_fits)
            predictor = pipeline.fit_predictor(
                prep, model, covariates, forest=forest, base_seed=seed
            )
            fitted[(w, n)] = (model, predictor)
        model, predictor = fitted[(w, n)]
        start, _ = plan.block(plan.test_block(j))
        tv = pipeline.forecast_fold(prep, model, predictor, start, plan.fold_length)
        fx = pipeline.forecast_fold_fixed(prep, fixed, start, plan.fold_length)
        rows.append(
            {
                "fold": j,
                "w": w,
                "N": n,
                "tv_mae": tv.mae_pct,
                "fixed_mae": fx.mae_pct,
                "tv_diverged": tv.diverged,
                "fixed_diverged": fx.diverged,
            }
        )
    return rows
