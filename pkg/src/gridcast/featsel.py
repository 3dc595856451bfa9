"""The four-step feature-selection loop.

1. drop one of every highly correlated pair (|rho| > 0.99),
2. LASSO with the penalty tuned by rolling-CV validation RMSE,
3. single-pass forward selection on the survivors,
4. repeat 2-3 until the column count stops decreasing.

All ordering rules are fixed (column order, ties to the earlier or the more
parsimonious choice) so the outcome is deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import lasso as lasso_mod
from .design import FeatureMatrix
from .errors import DataError, NumericalError, RankDeficientError
from .linreg import add_intercept, fit_ols, predict, rmse

logger = logging.getLogger(__name__)

CORRELATION_THRESHOLD = 0.99


@dataclass
class SelectionRound:
    step: str
    n_in: int
    n_out: int
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"step": self.step, "n_in": self.n_in, "n_out": self.n_out,
                "detail": self.detail}


@dataclass
class SelectionReport:
    rounds: list[SelectionRound]
    final_columns: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"rounds": [r.to_dict() for r in self.rounds],
                "final_columns": list(self.final_columns)}


def _as_pairs(splits) -> list[tuple[np.ndarray, np.ndarray]]:
    if hasattr(splits, "index_pairs"):
        return splits.index_pairs()
    return [(np.asarray(a, dtype=int), np.asarray(b, dtype=int)) for a, b in splits]


def prune_correlated(fm: FeatureMatrix, threshold: float = CORRELATION_THRESHOLD
                     ) -> tuple[FeatureMatrix, list[tuple[str, str, float]]]:
    """Greedy scan in column order; the later column of a correlated pair goes.

    Returns the reduced matrix and a list of (kept, removed, rho) records.
    """
    if fm.m < 1:
        raise DataError("cannot prune an empty matrix")
    x = fm.data - fm.data.mean(axis=0)
    norms = np.sqrt((x * x).sum(axis=0))
    norms[norms < 1e-300] = 1.0
    x = x / norms
    corr = x.T @ x

    kept: list[int] = []
    removed: list[tuple[str, str, float]] = []
    for j in range(fm.m):
        partner = None
        for i in kept:
            if abs(corr[i, j]) > threshold:
                partner = i
                break
        if partner is None:
            kept.append(j)
        else:
            removed.append((fm.labels[partner], fm.labels[j], float(corr[partner, j])))
    return fm.subset(kept), removed


def _mean_val_rmse(x: np.ndarray, y: np.ndarray,
                   pairs: list[tuple[np.ndarray, np.ndarray]],
                   labels: tuple[str, ...]) -> float:
    """Mean validation RMSE of an OLS refit per split; raises on any
    rank-deficient or under-determined split."""
    scores = []
    for train_idx, val_idx in pairs:
        xt = add_intercept(x[train_idx])
        model = fit_ols(xt, y[train_idx], labels=("intercept",) + labels)
        pred = add_intercept(x[val_idx]) @ model.beta
        scores.append(rmse(y[val_idx], pred))
    return sum(scores) / len(scores)


def forward_select(candidates: FeatureMatrix, y: np.ndarray, splits,
                   base: list[int] | None = None
                   ) -> tuple[list[int], list[SelectionRound]]:
    """Single-pass forward selection by mean validation RMSE.

    Starts from the best single candidate (or the supplied base columns),
    then walks the remaining candidates in column order, keeping each one iff
    it strictly decreases the mean validation RMSE. Candidates that make some
    split rank deficient are skipped with a note.
    """
    pairs = _as_pairs(splits)
    y = np.asarray(y, dtype=float)
    trace: list[dict] = []

    def score(indices: list[int]) -> float:
        sub = candidates.subset(indices)
        return _mean_val_rmse(sub.data, y, pairs, sub.labels)

    remaining = list(range(candidates.m))
    if base:
        selected = list(base)
        best = score(selected)
        remaining = [j for j in remaining if j not in set(base)]
    else:
        best = np.inf
        first = None
        for j in remaining:
            try:
                r = score([j])
            except (RankDeficientError, DataError) as exc:
                trace.append({"candidate": candidates.labels[j], "skipped": str(exc)})
                continue
            if r < best:
                best, first = r, j
        if first is None:
            raise DataError("no candidate produced a valid single-variable model")
        selected = [first]
        remaining = [j for j in remaining if j != first]
        trace.append({"candidate": candidates.labels[first], "rmse": best, "kept": True,
                      "note": "best single"})

    for j in remaining:
        try:
            r = score(selected + [j])
        except (RankDeficientError, DataError) as exc:
            logger.info("forward selection skips %s: %s", candidates.labels[j], exc)
            trace.append({"candidate": candidates.labels[j], "skipped": str(exc)})
            continue
        kept = r < best
        trace.append({"candidate": candidates.labels[j], "rmse": r, "kept": kept})
        if kept:
            selected.append(j)
            best = r

    rounds = [SelectionRound(step="forward", n_in=candidates.m, n_out=len(selected),
                             detail={"mean_validation_rmse": best, "trace": trace})]
    return selected, rounds


def lasso_select(fm: FeatureMatrix, y: np.ndarray, splits,
                 n_lambdas: int = 20, ratio: float = 1e-3
                 ) -> tuple[list[int], SelectionRound]:
    """CV-tuned LASSO; returns the active set of the chosen penalty refit on
    all train+validation rows."""
    pairs = _as_pairs(splits)
    selection = lasso_mod.select_lambda(fm.data, y, pairs,
                                        n_lambdas=n_lambdas, ratio=ratio)
    rows = np.unique(np.concatenate([np.concatenate(p) for p in pairs]))
    x_std, _, _ = lasso_mod.standardize(fm.data[rows])
    fit = lasso_mod.fit_lasso(x_std, y[rows] - y[rows].mean(), selection.lam,
                              check_standardization=False)
    active = [int(j) for j in fit.active_set]
    detail = {
        "lambda": selection.lam,
        "path": [float(v) for v in selection.path],
        "mean_validation_rmse": [None if np.isnan(v) else float(v) for v in selection.mean_rmse],
    }
    return active, SelectionRound(step="lasso", n_in=fm.m, n_out=len(active), detail=detail)


def select_features(fm: FeatureMatrix, y: np.ndarray, splits,
                    threshold: float = CORRELATION_THRESHOLD,
                    n_lambdas: int = 20, ratio: float = 1e-3
                    ) -> tuple[FeatureMatrix, SelectionReport]:
    """Full selection pipeline: prune, then LASSO + forward until converged."""
    y = np.asarray(y, dtype=float)
    rounds: list[SelectionRound] = []

    current, removed = prune_correlated(fm, threshold)
    rounds.append(SelectionRound(
        step="prune", n_in=fm.m, n_out=current.m,
        detail={"removed": [{"kept": a, "removed": b, "rho": r} for a, b, r in removed]}))
    if current.m == 0:
        raise DataError("correlation pruning removed every column")

    for _ in range(fm.m):
        count_in = current.m
        active, lasso_round = lasso_select(current, y, splits, n_lambdas, ratio)
        rounds.append(lasso_round)
        if not active:
            raise NumericalError(
                "LASSO selected no columns; loosen the penalty path or thresholds")
        lassoed = current.subset(active)

        selected, fwd_rounds = forward_select(lassoed, y, splits)
        rounds.extend(fwd_rounds)
        if not selected:
            raise NumericalError("forward selection kept no columns")
        current = lassoed.subset(selected)

        if current.m >= count_in:
            break
    rounds.append(SelectionRound(step="converged", n_in=current.m, n_out=current.m))
    return current, SelectionReport(rounds=rounds, final_columns=current.labels)
