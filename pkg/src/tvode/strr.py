"""Sparse ridge regression with sequential hard thresholding.

Alternates a ridge solve on the active columns with hard thresholding of
small coefficients until the coefficient vector stops moving. Surviving
coefficients are always re-estimated on the surviving columns only.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class RankDeficientError(RuntimeError):
    """Unregularized normal equations are singular."""


@dataclass(frozen=True)
class StrrConfig:
    ridge: float = 0.01
    threshold: float = 0.001
    tol: float = 1e-8
    max_iter: int = 10000

    def __post_init__(self):
        if self.ridge < 0:
            raise ValueError("ridge penalty must be >= 0")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class SparseFit:
    coef: np.ndarray
    active: np.ndarray
    iterations: int
    converged: bool
    all_terms_pruned: bool = False


def ridge_solve(theta, y, ridge):
    """Solve (Theta^T Theta + ridge*I) xi = Theta^T y via Cholesky.

    With ridge == 0 a singular system raises RankDeficientError instead
    of returning a least-norm answer.
    """
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    if theta.ndim != 2:
        raise ValueError("theta must be 2-d")
    if theta.shape[0] != y.shape[0]:
        raise ValueError("theta and y disagree on sample count")
    gram = theta.T @ theta
    if ridge:
        gram = gram + ridge * np.eye(gram.shape[0])
    rhs = theta.T @ y
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficientError(
            "normal equations are singular; use a positive ridge penalty"
        ) from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def threshold(coef, tau):
    """Zero every coefficient with magnitude strictly below tau."""
    coef = np.asarray(coef, dtype=float)
    return np.where(np.abs(coef) < tau, 0.0, coef)


def strr_fit(theta, y, config=None, warm_start=None):
    """Iterate ridge solve and hard threshold until the coefficients settle.

    Starts from all columns active (or from the support of warm_start).
    The support can only shrink. Convergence is max-abs change below
    config.tol. An empty support yields an all-zero fit flagged via
    all_terms_pruned.
    """
    if config is None:
        config = StrrConfig()
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    n_terms = theta.shape[1]
    if warm_start is None:
        active = np.ones(n_terms, dtype=bool)
        prev = np.zeros(n_terms)
    else:
        prev = np.asarray(warm_start, dtype=float).copy()
        if prev.shape != (n_terms,):
            raise ValueError("warm_start length does not match library size")
        active = prev != 0.0

    coef = prev.copy()
    for iteration in range(1, config.max_iter + 1):
        if not active.any():
            warnings.warn("thresholding removed every candidate term", RuntimeWarning)
            zero = np.zeros(n_terms)
            return SparseFit(
                coef=zero,
                active=np.zeros(n_terms, dtype=bool),
                iterations=iteration,
                converged=True,
                all_terms_pruned=True,
            )
        coef = np.zeros(n_terms)
        coef[active] = ridge_solve(theta[:, active], y, config.ridge)
        coef = threshold(coef, config.threshold)
        active = coef != 0.0
        if not active.any():
            warnings.warn("thresholding removed every candidate term", RuntimeWarning)
            return SparseFit(
                coef=coef,
                active=active,
                iterations=iteration,
                converged=True,
                all_terms_pruned=True,
            )
        if np.max(np.abs(coef - prev)) < config.tol:
            return SparseFit(coef=coef, active=active, iterations=iteration, converged=True)
        prev = coef

    return SparseFit(coef=coef, active=active, iterations=config.max_iter, converged=False)
