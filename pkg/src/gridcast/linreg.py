"""Ordinary least squares with prediction intervals.

The solve path is a column-pivoted QR decomposition (rank deficiency is
detected from the R diagonal ratio) but the result matches the textbook
normal-equations solution on well-conditioned inputs. The fitted model keeps
the (X^T X)^-1 scaffold so prediction intervals can be formed later.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats

from .errors import DataError, RankDeficientError

RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class LinearModel:
    """OLS fit: coefficients, residual variance, covariance scaffold.

    ``beta`` includes the intercept (the design's prepended constant column);
    ``xtx_inv`` is (X^T X)^-1, so Cov(beta) = sigma2 * xtx_inv.
    """

    beta: np.ndarray
    sigma2: float
    xtx_inv: np.ndarray
    dof: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.dof < 1:
            raise DataError(f"degrees of freedom {self.dof} below 1")
        if self.sigma2 < 0:
            raise DataError("negative residual variance")

    @property
    def n_params(self) -> int:
        return self.beta.shape[0]

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "sigma2": float(self.sigma2),
            "dof": int(self.dof),
            "xtx_inv": self.xtx_inv.ravel().tolist(),
            "labels": list(self.labels),
        }

    @staticmethod
    def from_dict(d: dict) -> "LinearModel":
        beta = np.asarray(d["beta"], dtype=float)
        m = beta.shape[0]
        return LinearModel(
            beta=beta,
            sigma2=float(d["sigma2"]),
            xtx_inv=np.asarray(d["xtx_inv"], dtype=float).reshape(m, m),
            dof=int(d["dof"]),
            labels=tuple(d.get("labels", ())),
        )


def add_intercept(X: np.ndarray) -> np.ndarray:
    """Prepend a constant-1 column."""
    X = np.asarray(X, dtype=float)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def fit_ols(X: np.ndarray, y: np.ndarray, labels: tuple[str, ...] = ()) -> LinearModel:
    """Least-squares fit of y on X (X must already include any intercept).

    Raises RankDeficientError naming a dependent column when the pivoted R
    diagonal collapses below RANK_TOLERANCE relative to its largest entry.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if y.shape != (n,):
        raise DataError(f"response length {y.shape} does not match {n} rows")
    if n <= m:
        raise DataError(f"need more rows ({n}) than parameters ({m})")
    if not labels:
        labels = tuple(f"x{j}" for j in range(m))
    if len(labels) != m:
        raise DataError("label count does not match column count")

    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0 or np.min(diag) < RANK_TOLERANCE * diag[0]:
        k = int(np.argmax(diag < RANK_TOLERANCE * max(diag[0], np.finfo(float).tiny)))
        bad = labels[piv[k]]
        raise RankDeficientError(
            f"design matrix is rank deficient; column {bad!r} is linearly "
            "dependent on earlier columns", column=bad)

    beta_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty(m)
    beta[piv] = beta_piv

    r_inv = scipy.linalg.solve_triangular(r, np.eye(m))
    cov_piv = r_inv @ r_inv.T
    xtx_inv = np.empty((m, m))
    xtx_inv[np.ix_(piv, piv)] = cov_piv
    xtx_inv = 0.5 * (xtx_inv + xtx_inv.T)

    resid = y - X @ beta
    dof = n - m
    sigma2 = float(resid @ resid) / dof
    return LinearModel(beta=beta, sigma2=sigma2, xtx_inv=xtx_inv, dof=dof, labels=labels)


def predict(model: LinearModel, z_row: np.ndarray) -> float:
    """Point forecast: dot product of the coefficient vector with one row."""
    z = np.asarray(z_row, dtype=float)
    if z.shape != (model.n_params,):
        raise DataError(f"feature row length {z.shape} does not match {model.n_params} coefficients")
    return float(model.beta @ z)


def leverage_variance(model: LinearModel, z_row: np.ndarray) -> float:
    """Coefficient-uncertainty part of the predictive variance: sigma2 * z' (X'X)^-1 z."""
    z = np.asarray(z_row, dtype=float)
    if z.shape != (model.n_params,):
        raise DataError(f"feature row length {z.shape} does not match {model.n_params} coefficients")
    return float(model.sigma2 * (z @ model.xtx_inv @ z))


def prediction_interval(model: LinearModel, z_row: np.ndarray,
                        level: float = 0.95) -> tuple[float, float]:
    """Two-sided prediction interval for a new observation at z_row.

    Student-t quantile at the residual degrees of freedom times
    sqrt(sigma2 * (1 + z' (X'X)^-1 z)).
    """
    if not 0.0 < level < 1.0:
        raise DataError("interval level must be in (0, 1)")
    point = predict(model, z_row)
    var = model.sigma2 + leverage_variance(model, z_row)
    quantile = float(stats.t.ppf(0.5 + level / 2.0, model.dof))
    half = quantile * np.sqrt(var)
    return point - half, point + half


def rmse(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Root mean squared error."""
    a = np.asarray(y_true, dtype=float)
    b = np.asarray(y_pred, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"rmse shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DataError("rmse of empty vectors")
    return float(np.sqrt(np.mean((a - b) ** 2)))
