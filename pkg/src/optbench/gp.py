"""Gaussian-process regression with a Matern-5/2 kernel.

Inputs are expected in the unit hypercube and targets are standardized
internally, so one hyperparameter grid serves domains of very different
scales. The posterior is backed by a Cholesky factor of the kernel matrix;
a bounded jitter ladder guards against near-singular cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

SQRT5 = np.sqrt(5.0)

# Diagonal increments tried in turn when the Cholesky factorization fails.
JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

LENGTH_SCALE_GRID = (0.05, 0.1, 0.2, 0.4, 0.8)
SIGNAL_VARIANCE_GRID = (0.5, 1.0, 2.0)
GRID_NOISE_VARIANCE = 1e-6


class NumericalError(RuntimeError):
    """Kernel matrix could not be factorized even with maximal jitter."""


@dataclass(frozen=True)
class KernelParams:
    """Matern-5/2 hyperparameters with one length scale per input dimension."""

    signal_variance: float
    length_scales: np.ndarray
    noise_variance: float = GRID_NOISE_VARIANCE

    def __post_init__(self):
        scales = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", scales)
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if np.any(scales <= 0):
            raise ValueError("length_scales must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")


def kernel_value(params: KernelParams, a, b) -> float:
    """Matern-5/2 covariance between two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = (a - b) / params.length_scales
    r2 = float(diff @ diff)
    r = np.sqrt(r2)
    return float(params.signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r))


def kernel_matrix(params: KernelParams, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Covariance matrix between row sets `a` and `b` (defaults to `a` vs itself)."""
    sa = np.atleast_2d(a) / params.length_scales
    sb = sa if b is None else np.atleast_2d(b) / params.length_scales
    diff = sa[:, None, :] - sb[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    r = np.sqrt(r2)
    return params.signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)


@dataclass(frozen=True)
class GPPosterior:
    """Immutable trained GP state; safe to share across threads for prediction."""

    train_inputs: np.ndarray
    train_targets: np.ndarray  # standardized
    params: KernelParams
    chol_factor: np.ndarray
    alpha: np.ndarray
    target_mean: float
    target_scale: float
    jitter: float

    @property
    def n_train(self) -> int:
        return self.train_inputs.shape[0]


def _cholesky_with_jitter(kernel: np.ndarray, noise_variance: float) -> tuple[np.ndarray, float]:
    n = kernel.shape[0]
    eye = np.eye(n)
    for jitter in JITTER_LADDER:
        try:
            factor = np.linalg.cholesky(kernel + (noise_variance + jitter) * eye)
        except np.linalg.LinAlgError:
            continue
        return factor, jitter
    raise NumericalError(
        f"Cholesky factorization failed for an {n}x{n} kernel matrix "
        f"even with jitter {JITTER_LADDER[-1]:g}"
    )


def _standardize(targets: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(targets.mean())
    scale = float(targets.std()) if targets.size > 1 else 0.0
    if scale == 0.0:
        scale = 1.0
    return (targets - mean) / scale, mean, scale


def fit(inputs, targets, params: KernelParams) -> GPPosterior:
    """Condition a GP on the given data, standardizing targets internally."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    if x.shape[0] != y.size or y.size < 1:
        raise ValueError("inputs and targets must agree on n >= 1")
    y_std, mean, scale = _standardize(y)
    factor, jitter = _cholesky_with_jitter(kernel_matrix(params, x), params.noise_variance)
    alpha = solve_triangular(factor.T, solve_triangular(factor, y_std, lower=True), lower=False)
    return GPPosterior(
        train_inputs=x,
        train_targets=y_std,
        params=params,
        chol_factor=factor,
        alpha=alpha,
        target_mean=mean,
        target_scale=scale,
        jitter=jitter,
    )


def predict_batch(gp: GPPosterior, points) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (target units) at each row of `points`."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    cross = kernel_matrix(gp.params, x, gp.train_inputs)
    mean_std = cross @ gp.alpha
    v = solve_triangular(gp.chol_factor, cross.T, lower=True)
    var_std = gp.params.signal_variance - np.einsum("ij,ij->j", v, v)
    if var_std.size and var_std.min() < -1e-8:
        raise NumericalError(f"posterior variance {var_std.min():.3e} below round-off tolerance")
    var_std = np.maximum(var_std, 0.0)  # round-off can dip a hair below zero
    mean = gp.target_mean + gp.target_scale * mean_std
    variance = gp.target_scale**2 * var_std
    return mean, variance


def predict(gp: GPPosterior, x) -> tuple[float, float]:
    """Posterior mean and variance at a single point."""
    mean, variance = predict_batch(gp, np.atleast_2d(x))
    return float(mean[0]), float(variance[0])


def log_marginal_likelihood(inputs, targets_std, params: KernelParams) -> float:
    """Log evidence of standardized targets under the given hyperparameters."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets_std, dtype=float)
    factor, _ = _cholesky_with_jitter(kernel_matrix(params, x), params.noise_variance)
    half = solve_triangular(factor, y, lower=True)
    return float(
        -0.5 * half @ half - np.sum(np.log(np.diag(factor))) - 0.5 * y.size * np.log(2.0 * np.pi)
    )


def fit_hyperparameters(inputs, targets) -> KernelParams:
    """Pick kernel hyperparameters by grid search over the log marginal likelihood.

    The grid is deliberately small, derivative-free, and deterministic: a shared
    length scale in unit-cube units, a signal variance in standardized-target
    units, and a fixed tiny noise floor. Ties go to the larger length scale.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    if y.size < 2:
        raise ValueError("hyperparameter fitting requires at least 2 observations")
    y_std, _, _ = _standardize(y)
    dim = x.shape[1]
    best_ll = -np.inf
    best = None
    for length_scale in LENGTH_SCALE_GRID:
        for signal_variance in SIGNAL_VARIANCE_GRID:
            params = KernelParams(
                signal_variance=signal_variance,
                length_scales=np.full(dim, length_scale),
                noise_variance=GRID_NOISE_VARIANCE,
            )
            ll = log_marginal_likelihood(x, y_std, params)
            if ll > best_ll or (ll == best_ll and length_scale > best.length_scales[0]):
                best_ll = ll
                best = params
    return best
