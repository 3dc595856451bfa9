"""L1-penalized least squares via cyclic coordinate descent.

The objective is the un-normalized S(beta) = ||y - X beta||^2 + lambda*||beta||_1,
so the per-coordinate soft-threshold constant is lambda/2 and the smallest
all-zero penalty is lambda_max = 2*max|X^T y|. Columns are expected to be
standardized (mean 0, variance 1) with the response centered, which keeps the
intercept out of the penalty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class LassoFit:
    lam: float
    beta: np.ndarray
    active_set: np.ndarray
    n_iter: int
    converged: bool
    objective_path: tuple[float, ...] = field(default_factory=tuple, repr=False)


def soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def standardize(X: np.ndarray, mean=None, std=None):
    """Column-standardize X; returns (X_std, mean, std).

    Near-constant columns get std 1 so they map to (numerically) zero columns
    instead of dividing by zero; the penalty then keeps them at beta = 0.
    """
    X = np.asarray(X, dtype=float)
    if mean is None:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
    return (X - mean) / std, mean, std


def _check_standardized(X: np.ndarray) -> None:
    means = X.mean(axis=0)
    variances = X.var(axis=0)
    if np.any(np.abs(means) > 1e-8):
        j = int(np.argmax(np.abs(means)))
        raise DataError(f"column {j} is not centered (mean {means[j]:.3e})")
    off = np.abs(variances - 1.0)
    # all-zero columns (constants neutralized by standardize()) are allowed
    bad = (off > 1e-6) & (variances > 1e-12)
    if np.any(bad):
        j = int(np.argmax(np.where(bad, off, 0.0)))
        raise DataError(f"column {j} is not unit-variance (var {variances[j]:.6f})")


def fit_lasso(X: np.ndarray, y: np.ndarray, lam: float,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              beta0: np.ndarray | None = None,
              check_standardization: bool = True,
              gram: np.ndarray | None = None,
              xty: np.ndarray | None = None) -> LassoFit:
    """Cyclic coordinate descent on the L1-penalized objective.

    Convergence means the largest coordinate update in the final sweep fell
    below ``tol``; hitting ``max_iter`` returns converged=False rather than
    raising. ``gram``/``xty`` allow X^T X and X^T y to be shared across a
    penalty path.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if y.shape != (n,):
        raise DataError("response length mismatch")
    if lam < 0:
        raise DataError("lambda must be non-negative")
    if tol <= 0:
        raise DataError("tol must be positive")
    if check_standardization:
        _check_standardized(X)

    if gram is None:
        gram = X.T @ X
    if xty is None:
        xty = X.T @ y
    diag = np.diag(gram).copy()
    zero_cols = diag < 1e-12

    beta = np.zeros(m) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    q = gram @ beta if beta0 is not None else np.zeros(m)
    yty = float(y @ y)
    half_lam = lam / 2.0

    def objective() -> float:
        return yty - 2.0 * float(beta @ xty) + float(beta @ q) + lam * float(np.abs(beta).sum())

    objectives = [objective()]
    converged = False
    sweep = 0
    for sweep in range(1, max_iter + 1):
        max_update = 0.0
        for j in range(m):
            if zero_cols[j]:
                continue
            rho = xty[j] - q[j] + diag[j] * beta[j]
            new = soft_threshold(rho, half_lam) / diag[j]
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                q += gram[:, j] * delta
                max_update = max(max_update, abs(delta))
        objectives.append(objective())
        if max_update < tol:
            converged = True
            break
    if not converged:
        logger.warning("lasso reached max_iter=%d without converging (lambda=%g)", max_iter, lam)

    active = np.nonzero(beta)[0]
    return LassoFit(lam=float(lam), beta=beta, active_set=active,
                    n_iter=sweep, converged=converged,
                    objective_path=tuple(objectives))


def kkt_violation(fit: LassoFit, X: np.ndarray, y: np.ndarray) -> float:
    """Largest soft-threshold optimality violation of a fit.

    Active coordinates must satisfy grad_j + lam*sign(beta_j) = 0 and inactive
    ones |grad_j| <= lam, with grad = -2 X^T (y - X beta).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    grad = -2.0 * (X.T @ (y - X @ fit.beta))
    worst = 0.0
    for j in range(X.shape[1]):
        if fit.beta[j] != 0.0:
            worst = max(worst, abs(grad[j] + fit.lam * np.sign(fit.beta[j])))
        else:
            worst = max(worst, max(abs(grad[j]) - fit.lam, 0.0))
    return worst


def kkt_scale(X: np.ndarray, y: np.ndarray) -> float:
    """Natural magnitude for KKT tolerances: 2*max(1, |X^T y|_inf)."""
    return 2.0 * max(1.0, float(np.max(np.abs(np.asarray(X).T @ np.asarray(y)))))


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty that zeroes every coefficient: 2*max|X^T y|."""
    return 2.0 * float(np.max(np.abs(np.asarray(X).T @ np.asarray(y))))


def lambda_path(X: np.ndarray, y: np.ndarray, n_lambdas: int = 20,
                ratio: float = 1e-3) -> np.ndarray:
    """Descending geometric penalty grid from lambda_max to lambda_max*ratio."""
    if n_lambdas < 2:
        raise DataError("need at least 2 path points")
    if not 0.0 < ratio < 1.0:
        raise DataError("ratio must be in (0, 1)")
    lmax = lambda_max(X, y)
    if lmax == 0.0:
        raise DataError("X^T y is identically zero; penalty path undefined")
    return lmax * ratio ** (np.arange(n_lambdas) / (n_lambdas - 1))


def fit_path(X: np.ndarray, y: np.ndarray, lambdas: np.ndarray,
             tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
             check_standardization: bool = True) -> list[LassoFit]:
    """Warm-started fits along a descending penalty sequence."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if check_standardization:
        _check_standardized(X)
    gram = X.T @ X
    xty = X.T @ y
    fits: list[LassoFit] = []
    beta = None
    for lam in lambdas:
        fit = fit_lasso(X, y, lam, tol=tol, max_iter=max_iter, beta0=beta,
                        check_standardization=False, gram=gram, xty=xty)
        fits.append(fit)
        beta = fit.beta
    return fits


@dataclass(frozen=True)
class LambdaSelection:
    lam: float
    path: np.ndarray
    mean_rmse: np.ndarray  # NaN where the lambda was skipped on every split
    n_skipped: int


def select_lambda(X: np.ndarray, y: np.ndarray, splits,
                  path: np.ndarray | None = None,
                  n_lambdas: int = 20, ratio: float = 1e-3,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> LambdaSelection:
    """Pick the penalty minimizing mean validation RMSE over CV splits.

    ``splits`` is a sequence of (train_indices, validation_indices) pairs (a
    CvPlan's ``index_pairs()`` yields them). Standardization statistics come
    from each split's training rows only. Ties prefer the larger penalty.
    A penalty is skipped when some split has no more training rows than
    active features; if every penalty is skipped, raises DataError.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    pairs = splits.index_pairs() if hasattr(splits, "index_pairs") else list(splits)
    if path is None:
        xs, _, _ = standardize(X)
        path = lambda_path(xs, y - y.mean(), n_lambdas, ratio)
    path = np.asarray(path, dtype=float)

    n_lam = path.shape[0]
    rmse_matrix = np.full((len(pairs), n_lam), np.nan)
    usable = np.ones(n_lam, dtype=bool)
    for s, (train_idx, val_idx) in enumerate(pairs):
        x_train, mu, sd = standardize(X[train_idx])
        y_mean = y[train_idx].mean()
        y_train = y[train_idx] - y_mean
        x_val = (X[val_idx] - mu) / sd
        fits = fit_path(x_train, y_train, path, tol=tol, max_iter=max_iter,
                        check_standardization=False)
        for k, fit in enumerate(fits):
            if train_idx.shape[0] <= fit.active_set.shape[0]:
                usable[k] = False
                logger.warning("lambda %.4g skipped: split %d has %d rows <= %d active features",
                               path[k], s, train_idx.shape[0], fit.active_set.shape[0])
                continue
            pred = x_val @ fit.beta + y_mean
            rmse_matrix[s, k] = float(np.sqrt(np.mean((y[val_idx] - pred) ** 2)))

    mean_rmse = np.full(n_lam, np.nan)
    best_k = None
    for k in range(n_lam):
        if not usable[k] or np.isnan(rmse_matrix[:, k]).any():
            continue
        vals = rmse_matrix[:, k]
        mean_rmse[k] = sum(vals) / len(vals)
        # path is descending, so strict < keeps the larger lambda on ties
        if best_k is None or mean_rmse[k] < mean_rmse[best_k]:
            best_k = k
    if best_k is None:
        raise DataError("every penalty on the path was skipped; CV splits too small")
    return LambdaSelection(lam=float(path[best_k]), path=path,
                           mean_rmse=mean_rmse, n_skipped=int((~usable).sum()))
