"""Base models M0-M3, Softmax-weighted ensembles, residual correction, and
the horizon-routed compound forecaster.

The compound model maps every horizon 1..24 to either a dedicated weighted
ensemble for that horizon or to the 6-hour ensemble with a seasonal-ARIMA
residual correction; the default routing follows the response kind
("average": 1-2 pure, 3-6 corrected, 7-24 pure; "marginal": 1-6 corrected,
7-24 pure) and can be overridden per horizon.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import arima as arima_mod
from .cv import CvPlan
from .design import FeatureMatrix, Recipe, build_design, evaluate_columns, column_label
from .errors import ConfigError, DataError, NumericalError
from .featsel import SelectionReport, select_features
from .lasso import fit_lasso, select_lambda, standardize
from .linreg import LinearModel, add_intercept, fit_ols, rmse
from .timeseries import AvailabilityClass, TimeFrame
from ._util import atomic_write_json

logger = logging.getLogger(__name__)

HORIZONS = tuple(range(1, 25))
CORRECTED_BASE_H = 6
RESPONSE_KINDS = ("average", "marginal")


# ----------------------------------------------------------------------
# Softmax weighting
# ----------------------------------------------------------------------

def softmax_weights(rmse_values) -> np.ndarray:
    """Softmax over negated RMSEs, so better (lower-RMSE) members weigh more.

    Max-shifted for numerical stability; invariant to adding a constant to
    every RMSE.
    """
    x = -np.asarray(rmse_values, dtype=float)
    if x.size == 0:
        raise DataError("softmax weights need at least one member")
    if not np.all(np.isfinite(x)):
        raise DataError("softmax weights need finite RMSEs")
    e = np.exp(x - x.max())
    return e / e.sum()


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleConfig:
    """Knobs for building base models and the compound forecaster."""

    response: str
    sources: tuple[str, ...]
    include_exp: bool = True
    spline_count: int = 4
    nspline_count: int = 4
    interaction_pool: int = 50
    lasso_n_lambdas: int = 12
    lasso_ratio: float = 1e-3
    variants: tuple[str, ...] = ("M1", "M2", "M3")
    corrector: str | dict = "preset"  # "preset", "auto", or an explicit order dict
    horizon_overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "response": self.response,
            "sources": list(self.sources),
            "include_exp": self.include_exp,
            "spline_count": self.spline_count,
            "nspline_count": self.nspline_count,
            "interaction_pool": self.interaction_pool,
            "lasso_n_lambdas": self.lasso_n_lambdas,
            "lasso_ratio": self.lasso_ratio,
            "variants": list(self.variants),
            "corrector": self.corrector,
            "horizon_overrides": {str(k): v for k, v in self.horizon_overrides.items()},
        }

    @staticmethod
    def from_dict(d: dict) -> "EnsembleConfig":
        return EnsembleConfig(
            response=d["response"],
            sources=tuple(d["sources"]),
            include_exp=d.get("include_exp", True),
            spline_count=d.get("spline_count", 4),
            nspline_count=d.get("nspline_count", 4),
            interaction_pool=d.get("interaction_pool", 50),
            lasso_n_lambdas=d.get("lasso_n_lambdas", 12),
            lasso_ratio=d.get("lasso_ratio", 1e-3),
            variants=tuple(d.get("variants", ("M1", "M2", "M3"))),
            corrector=d.get("corrector", "preset"),
            horizon_overrides={int(k): v for k, v in d.get("horizon_overrides", {}).items()},
        )


def available_sources(frame: TimeFrame, sources, h: int) -> tuple[str, ...]:
    """Drop sources whose availability class cannot drive horizon h."""
    out = []
    for name in sources:
        tag = frame.tag(name)
        if tag is AvailabilityClass.SHORT_TERM_FORECAST and h > 6:
            continue
        if tag is AvailabilityClass.WEATHER_FORECAST and h <= 6:
            continue
        out.append(name)
    if not out:
        raise ConfigError(f"no sources available at horizon {h}")
    return tuple(out)


def _recipe_for(variant: str, frame: TimeFrame, config: EnsembleConfig, h: int,
                pool=None) -> Recipe:
    return Recipe(
        variant=variant,
        response=config.response,
        sources=available_sources(frame, config.sources, h),
        include_exp=config.include_exp,
        spline_count=config.spline_count,
        nspline_count=config.nspline_count,
        interaction_pool=config.interaction_pool,
        pool=pool,
    )


def matrix_splits(fm: FeatureMatrix, plan: CvPlan):
    """Map a frame-level CV plan onto matrix rows by *target* time.

    A design row with origin t carries the response at t+h, so it belongs to
    a range iff t+h falls inside. This keeps future responses out of every
    training fit.
    """
    targets = fm.origins + fm.h
    pairs = []
    test_sets = []
    for split in plan.splits:
        train = np.nonzero(targets < split.train[1])[0]
        val = np.nonzero((targets >= split.validation[0]) & (targets < split.validation[1]))[0]
        test = np.nonzero((targets >= split.test[0]) & (targets < split.test[1]))[0]
        if train.size == 0 or val.size == 0:
            raise DataError("a CV split has no usable training or validation rows")
        pairs.append((train, val))
        test_sets.append(test)
    return pairs, test_sets


def split_signature(plan: CvPlan) -> tuple:
    return tuple((s.train, s.validation, s.test) for s in plan.splits)


# ----------------------------------------------------------------------
# Base model pipelines
# ----------------------------------------------------------------------

@dataclass
class MemberPipeline:
    """One fitted base model: selected provenance plus its OLS fit."""

    variant: str
    h: int
    response: str
    recipe: Recipe
    provenance: tuple[dict, ...]
    model: LinearModel
    val_rmse: tuple[float, ...]
    test_rmse: tuple[float, ...]
    splits: tuple
    selection: SelectionReport | None = field(default=None, repr=False)
    # per-split predictions on (targets, validation preds, test targets, preds);
    # transient, used to score the ensemble on the test sets
    split_predictions: list | None = field(default=None, repr=False)

    @property
    def mean_val_rmse(self) -> float:
        return sum(self.val_rmse) / len(self.val_rmse)

    def design_rows(self, frame: TimeFrame) -> np.ndarray:
        """Design rows (with intercept) over every origin; NaN = unavailable."""
        x = evaluate_columns(list(self.provenance), frame, self.h)
        return add_intercept(x)

    def predict_series(self, frame: TimeFrame) -> tuple[np.ndarray, np.ndarray]:
        """(point, coefficient-variance) per origin, NaN where features miss."""
        z = self.design_rows(frame)
        point = z @ self.model.beta
        lever = np.einsum("ij,jk,ik->i", z, self.model.xtx_inv, z)
        return point, self.model.sigma2 * lever

    def first_missing_label(self, frame: TimeFrame, origin: int) -> str | None:
        x = evaluate_columns(list(self.provenance), frame, self.h)
        row = x[origin]
        bad = np.nonzero(np.isnan(row))[0]
        return column_label(self.provenance[bad[0]]) if bad.size else None

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "h": self.h,
            "response": self.response,
            "recipe": self.recipe.to_dict(),
            "provenance": [dict(p) for p in self.provenance],
            "model": self.model.to_dict(),
            "val_rmse": list(self.val_rmse),
            "test_rmse": list(self.test_rmse),
            "splits": [list(map(list, s)) for s in self.splits],
            "selection": self.selection.to_dict() if self.selection else None,
        }

    @staticmethod
    def from_dict(d: dict) -> "MemberPipeline":
        selection = d.get("selection")
        report = None
        if selection:
            from .featsel import SelectionRound
            report = SelectionReport(
                rounds=[SelectionRound(**r) for r in selection["rounds"]],
                final_columns=tuple(selection["final_columns"]),
            )
        return MemberPipeline(
            variant=d["variant"],
            h=d["h"],
            response=d["response"],
            recipe=Recipe.from_dict(d["recipe"]),
            provenance=tuple(d["provenance"]),
            model=LinearModel.from_dict(d["model"]),
            val_rmse=tuple(d["val_rmse"]),
            test_rmse=tuple(d["test_rmse"]),
            splits=tuple(tuple(tuple(r) for r in s) for s in d["splits"]),
            selection=report,
        )


def rank_feature_pool(frame: TimeFrame, h: int, plan: CvPlan,
                      config: EnsembleConfig) -> tuple[dict, ...]:
    """Interaction pool for M2/M3: the M0 columns ranked by the absolute
    standardized LASSO coefficient at the CV-chosen penalty (ties broken by
    column label)."""
    recipe = _recipe_for("M0", frame, config, h)
    fit_end = plan.splits[-1].validation[1]
    fm, y = build_design(frame, h, recipe, fit_end=fit_end)
    pairs, _ = matrix_splits(fm, plan)
    selection = select_lambda(fm.data, y, pairs,
                              n_lambdas=config.lasso_n_lambdas, ratio=config.lasso_ratio)
    rows = np.nonzero(fm.origins + h < fit_end)[0]
    x_std, _, _ = standardize(fm.data[rows])
    fit = fit_lasso(x_std, y[rows] - y[rows].mean(), selection.lam,
                    check_standardization=False)
    if fit.active_set.size == 0:
        raise NumericalError(f"LASSO kept no M0 features at h={h}; pool is empty")
    order = sorted(fit.active_set,
                   key=lambda j: (-abs(fit.beta[j]), fm.labels[int(j)]))
    top = order[: config.interaction_pool]
    return tuple(fm.provenance[int(j)] for j in top)


def build_base_model(variant: str, frame: TimeFrame, h: int, plan: CvPlan,
                     config: EnsembleConfig, pool=None) -> MemberPipeline:
    """Design -> feature selection -> OLS for one variant at one horizon.

    M2/M3 take their interaction pool from the LASSO-ranked M0 features
    (computed here when not supplied). The final model is fitted on all
    train+validation rows; per-split refits provide the validation RMSEs the
    ensemble weights come from.
    """
    if variant in ("M2", "M3") and pool is None:
        pool = rank_feature_pool(frame, h, plan, config)
    recipe = _recipe_for(variant, frame, config, h, pool=pool)
    fit_end = plan.splits[-1].validation[1]
    fm, y = build_design(frame, h, recipe, fit_end=fit_end)
    pairs, test_sets = matrix_splits(fm, plan)

    selected, report = select_features(
        fm, y, pairs, n_lambdas=config.lasso_n_lambdas, ratio=config.lasso_ratio)

    labels = ("intercept",) + selected.labels
    targets = selected.origins + h
    val_scores, test_scores, split_preds = [], [], []
    for (train_idx, val_idx), test_idx in zip(pairs, test_sets):
        zt = add_intercept(selected.data[train_idx])
        model_k = fit_ols(zt, y[train_idx], labels=labels)
        val_pred = add_intercept(selected.data[val_idx]) @ model_k.beta
        val_scores.append(rmse(y[val_idx], val_pred))
        if test_idx.size:
            test_pred = add_intercept(selected.data[test_idx]) @ model_k.beta
            test_scores.append(rmse(y[test_idx], test_pred))
        else:
            test_pred = np.zeros(0)
            test_scores.append(float("nan"))
        split_preds.append({
            "val_targets": targets[val_idx], "val_pred": val_pred, "val_true": y[val_idx],
            "test_targets": targets[test_idx], "test_pred": test_pred, "test_true": y[test_idx],
        })

    rows = np.nonzero(targets < fit_end)[0]
    final = fit_ols(add_intercept(selected.data[rows]), y[rows], labels=labels)

    return MemberPipeline(
        variant=variant, h=h, response=config.response,
        recipe=recipe, provenance=selected.provenance, model=final,
        val_rmse=tuple(val_scores), test_rmse=tuple(test_scores),
        splits=split_signature(plan), selection=report,
        split_predictions=split_preds,
    )


# ----------------------------------------------------------------------
# Weighted ensemble
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSeries:
    """Per-origin forecast series of an ensemble over a frame."""

    point: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    half_coef: np.ndarray  # interval half-width from coefficient uncertainty only


@dataclass
class WeightedEnsemble:
    h: int
    members: tuple[MemberPipeline, ...]
    weights: np.ndarray
    source_rmse: np.ndarray
    test_rmse: tuple[float, ...] = ()  # per split, weighted members
    level: float = 0.95

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape[0] != len(self.members):
            raise ConfigError("one weight per member required")
        if abs(float(w.sum()) - 1.0) > 1e-12 or np.any(w <= 0):
            raise ConfigError("weights must be positive and sum to 1")

    def predict_series(self, frame: TimeFrame) -> EnsembleSeries:
        point = None
        half = None
        half_coef = None
        for w, member in zip(self.weights, self.members):
            p, var_coef = member.predict_series(frame)
            t_q = float(stats.t.ppf(0.5 + self.level / 2.0, member.model.dof))
            member_half = t_q * np.sqrt(member.model.sigma2 + var_coef)
            member_half_coef = t_q * np.sqrt(var_coef)
            if point is None:
                point = w * p
                half = w * member_half
                half_coef = w * member_half_coef
            else:
                point += w * p
                half += w * member_half
                half_coef += w * member_half_coef
        return EnsembleSeries(point=point, lo=point - half, hi=point + half,
                              half_coef=half_coef)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "weights": [float(w) for w in self.weights],
            "source_rmse": [float(r) for r in self.source_rmse],
            "test_rmse": [float(r) for r in self.test_rmse],
            "level": self.level,
            "members": [m.to_dict() for m in self.members],
        }

    @staticmethod
    def from_dict(d: dict) -> "WeightedEnsemble":
        return WeightedEnsemble(
            h=d["h"],
            members=tuple(MemberPipeline.from_dict(m) for m in d["members"]),
            weights=np.asarray(d["weights"], dtype=float),
            source_rmse=np.asarray(d["source_rmse"], dtype=float),
            test_rmse=tuple(d.get("test_rmse", ())),
            level=d.get("level", 0.95),
        )


def build_weighted(members) -> WeightedEnsemble:
    """Combine members with Softmax weights over their mean validation RMSE.

    Members must have been evaluated on identical splits at the same horizon.
    The per-split ensemble test RMSE is computed on the targets every member
    could predict.
    """
    members = tuple(members)
    if not members:
        raise DataError("ensemble needs at least one member")
    h = members[0].h
    sig = members[0].splits
    for m in members[1:]:
        if m.h != h:
            raise ConfigError("ensemble members disagree on the horizon")
        if m.splits != sig:
            raise ConfigError("ensemble members were evaluated on mismatched splits")
    source = np.asarray([m.mean_val_rmse for m in members])
    weights = softmax_weights(source)

    test_scores: list[float] = []
    if all(m.split_predictions for m in members):
        n_splits = len(members[0].split_predictions)
        for k in range(n_splits):
            common = members[0].split_predictions[k]["test_targets"]
            for m in members[1:]:
                common = np.intersect1d(common, m.split_predictions[k]["test_targets"])
            if common.size == 0:
                test_scores.append(float("nan"))
                continue
            blend = np.zeros(common.size)
            truth = None
            for w, m in zip(weights, members):
                sp = m.split_predictions[k]
                pos = np.searchsorted(sp["test_targets"], common)
                blend += w * sp["test_pred"][pos]
                truth = sp["test_true"][pos]
            test_scores.append(rmse(truth, blend))

    return WeightedEnsemble(h=h, members=members, weights=weights,
                            source_rmse=source, test_rmse=tuple(test_scores))


# ----------------------------------------------------------------------
# Horizon plan and compound forecaster
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HorizonPlan:
    """Forecaster id per horizon 1..24: 'wa<h>' or 'arima6'."""

    route: tuple[tuple[int, str], ...]

    def __post_init__(self):
        mapping = dict(self.route)
        if sorted(mapping) != list(HORIZONS):
            raise ConfigError("horizon plan must map each horizon 1..24 exactly once")
        for h, ident in mapping.items():
            if ident != "arima6" and ident != f"wa{h}":
                raise ConfigError(f"horizon {h} routed to unknown forecaster {ident!r}")
        object.__setattr__(self, "route", tuple(sorted(mapping.items())))

    def mapping(self) -> dict[int, str]:
        return dict(self.route)

    def ensemble_horizons(self) -> tuple[int, ...]:
        needed = {h for h, ident in self.route if ident == f"wa{h}"}
        if self.uses_corrector():
            needed.add(CORRECTED_BASE_H)
        return tuple(sorted(needed))

    def uses_corrector(self) -> bool:
        return any(ident == "arima6" for _, ident in self.route)

    def to_dict(self) -> dict:
        return {str(h): ident for h, ident in self.route}

    @staticmethod
    def from_dict(d: dict) -> "HorizonPlan":
        return HorizonPlan(route=tuple((int(k), v) for k, v in d.items()))


def make_horizon_plan(kind: str, overrides: dict | None = None) -> HorizonPlan:
    """Default routing per response kind, optionally overridden per horizon."""
    if kind not in RESPONSE_KINDS:
        raise ConfigError(f"unknown response kind {kind!r}")
    route = {}
    for h in HORIZONS:
        if kind == "average":
            route[h] = f"wa{h}" if h <= 2 or h >= 7 else "arima6"
        else:
            route[h] = "arima6" if h <= 6 else f"wa{h}"
    for h, ident in (overrides or {}).items():
        route[int(h)] = ident
    return HorizonPlan(route=tuple(route.items()))


@dataclass
class ResidualCorrector:
    base_h: int
    model: arima_mod.ArimaModel

    def to_dict(self) -> dict:
        return {"base_h": self.base_h, "arima": self.model.to_dict()}

    @staticmethod
    def from_dict(d: dict) -> "ResidualCorrector":
        return ResidualCorrector(base_h=d["base_h"],
                                 model=arima_mod.ArimaModel.from_dict(d["arima"]))


@dataclass
class CompoundForecaster:
    kind: str
    response: str
    plan: HorizonPlan
    ensembles: dict[int, WeightedEnsemble]
    corrector: ResidualCorrector | None
    config: EnsembleConfig
    level: float = 0.95

    def residual_series(self, frame: TimeFrame) -> np.ndarray:
        """Response minus the 6-hour ensemble prediction, indexed by target
        time (NaN where either side is unavailable)."""
        base = self.ensembles[CORRECTED_BASE_H].predict_series(frame)
        y = frame.column(self.response)
        r = np.full(frame.n_rows, np.nan)
        r[CORRECTED_BASE_H:] = y[CORRECTED_BASE_H:] - base.point[:-CORRECTED_BASE_H]
        return r


def _finite_suffix_start(x: np.ndarray) -> int:
    """Index where the trailing all-finite run of x begins."""
    bad = np.nonzero(np.isnan(x))[0]
    return int(bad[-1]) + 1 if bad.size else 0


def fit_corrector(frame: TimeFrame, ensemble: WeightedEnsemble, response: str,
                  kind: str, spec, fit_end: int) -> ResidualCorrector:
    """Seasonal ARIMA on the 6-hour ensemble's training residuals."""
    series = ensemble.predict_series(frame)
    y = frame.column(response)
    r = np.full(frame.n_rows, np.nan)
    r[CORRECTED_BASE_H:] = y[CORRECTED_BASE_H:] - series.point[:-CORRECTED_BASE_H]
    r = r[:fit_end]
    start = _finite_suffix_start(r)
    train = r[start:]
    if spec == "preset":
        order = arima_mod.PRESET_ORDERS[kind]
        model = arima_mod.fit_arima(train, order)
    elif spec == "auto":
        model = arima_mod.auto_fit(train)
    else:
        model = arima_mod.fit_arima(train, arima_mod.ArimaOrder.from_dict(spec))
    return ResidualCorrector(base_h=CORRECTED_BASE_H, model=model)


def build_compound(frame: TimeFrame, kind: str, plan: CvPlan,
                   config: EnsembleConfig) -> CompoundForecaster:
    """Fit per-horizon ensembles and the residual corrector per the plan."""
    horizon_plan = make_horizon_plan(kind, config.horizon_overrides)
    fit_end = plan.splits[-1].validation[1]
    ensembles: dict[int, WeightedEnsemble] = {}
    for h in horizon_plan.ensemble_horizons():
        pool = None
        if any(v in ("M2", "M3") for v in config.variants):
            pool = rank_feature_pool(frame, h, plan, config)
        members = [
            build_base_model(variant, frame, h, plan, config, pool=pool)
            for variant in config.variants
        ]
        ensembles[h] = build_weighted(members)
        logger.info("h=%d ensemble: weights %s", h,
                    np.array2string(ensembles[h].weights, precision=3))
    corrector = None
    if horizon_plan.uses_corrector():
        corrector = fit_corrector(frame, ensembles[CORRECTED_BASE_H], config.response,
                                  kind, config.corrector, fit_end)
    return CompoundForecaster(kind=kind, response=config.response, plan=horizon_plan,
                              ensembles=ensembles, corrector=corrector, config=config)


def forecast_paths(fc: CompoundForecaster, frame: TimeFrame,
                   origins) -> np.ndarray:
    """Forecast 24-hour paths from many origins at once.

    Returns an array of shape (len(origins), 24, 3) holding (point, lo, hi)
    per horizon. Raises DataError naming the horizon (and a missing column
    when identifiable) if some required feature is unavailable.
    """
    origins = np.asarray(origins, dtype=int)
    series = {h: ens.predict_series(frame) for h, ens in fc.ensembles.items()}
    plan = fc.plan.mapping()

    uses_corr = fc.plan.uses_corrector()
    if uses_corr:
        if fc.corrector is None:
            raise DataError("plan routes horizons to the corrector but none was fitted")
        model = fc.corrector.model
        r = fc.residual_series(frame)
        start = _finite_suffix_start(r)
        r_valid = r[start:]
        order = model.order
        diff_len = order.d + order.D * order.M
        ar_window = model.ar_poly().shape[0] - 1
        n_char = model.char_poly().shape[0] - 1
        n_ma = model.ma_poly().shape[0] - 1
        if r_valid.shape[0] <= diff_len + ar_window:
            raise DataError("residual history too short for the corrector")
        eps = arima_mod.filter_innovations(model, r_valid)
        z_level = float(stats.norm.ppf(0.5 + fc.level / 2.0))

    out = np.full((origins.shape[0], len(HORIZONS), 3), np.nan)
    for i, t in enumerate(origins):
        for h in HORIZONS:
            ident = plan[h]
            if ident != "arima6":
                s = series[h]
                if t >= s.point.shape[0] or np.isnan(s.point[t]):
                    label = fc.ensembles[h].members[0].first_missing_label(frame, t) if t < frame.n_rows else None
                    raise DataError(
                        f"missing features at origin {t} for horizon {h}"
                        + (f" (column {label})" if label else ""))
                out[i, h - 1] = (s.point[t], s.lo[t], s.hi[t])
            else:
                base_origin = t + h - CORRECTED_BASE_H
                s6 = series[CORRECTED_BASE_H]
                if base_origin < 0 or base_origin >= s6.point.shape[0] or np.isnan(s6.point[base_origin]):
                    raise DataError(f"missing 6-hour base features at origin {t} for horizon {h}")
                hist_len = t - start + 1
                if hist_len < n_char or hist_len <= diff_len + ar_window:
                    raise DataError(f"residual history too short at origin {t} for horizon {h}")
                y_tail = r_valid[hist_len - n_char: hist_len]
                n_eps = hist_len - diff_len - ar_window
                eps_tail = eps[:n_eps][-n_ma:] if n_ma else np.zeros(0)
                if n_ma and eps_tail.shape[0] < n_ma:
                    eps_tail = np.concatenate([np.zeros(n_ma - eps_tail.shape[0]), eps_tail])
                refreshed = replace(model,
                                    y_tail=tuple(float(v) for v in y_tail),
                                    eps_tail=tuple(float(v) for v in eps_tail))
                points, variances = arima_mod.forecast(refreshed, h)
                point = float(s6.point[base_origin] + points[h - 1])
                half = float(np.sqrt(s6.half_coef[base_origin] ** 2
                                     + (z_level ** 2) * variances[h - 1]))
                out[i, h - 1] = (point, point - half, point + half)
    return out


def forecast_24h(fc: CompoundForecaster, frame: TimeFrame, t: int) -> list[tuple[int, float, float, float]]:
    """24 rows of (horizon, point, lo95, hi95) for one forecast origin."""
    if not 0 <= t < frame.n_rows:
        raise DataError(f"origin {t} outside the frame")
    path = forecast_paths(fc, frame, [t])[0]
    return [(h, float(path[h - 1, 0]), float(path[h - 1, 1]), float(path[h - 1, 2]))
            for h in HORIZONS]


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------

def save_compound(fc: CompoundForecaster, directory) -> None:
    """Write the forecaster as a directory of JSON models plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}
    for h, ens in sorted(fc.ensembles.items()):
        name = f"wa{h}.json"
        atomic_write_json(directory / name, ens.to_dict())
        files[f"wa{h}"] = name
    if fc.corrector is not None:
        atomic_write_json(directory / "corrector.json", fc.corrector.to_dict())
        files["corrector"] = "corrector.json"
    manifest = {
        "kind": fc.kind,
        "response": fc.response,
        "level": fc.level,
        "plan": fc.plan.to_dict(),
        "config": fc.config.to_dict(),
        "files": files,
    }
    atomic_write_json(directory / "manifest.json", manifest)


def load_compound(directory) -> CompoundForecaster:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"incomplete model directory: missing {manifest_path.name}")
    manifest = json.loads(manifest_path.read_text())
    plan = HorizonPlan.from_dict(manifest["plan"])
    missing = [name for name in manifest["files"].values()
               if not (directory / name).exists()]
    if missing:
        raise DataError("incomplete model directory: missing " + ", ".join(sorted(missing)))
    ensembles = {}
    for key, name in manifest["files"].items():
        if key == "corrector":
            continue
        data = json.loads((directory / name).read_text())
        ensembles[int(key[2:])] = WeightedEnsemble.from_dict(data)
    corrector = None
    if "corrector" in manifest["files"]:
        corrector = ResidualCorrector.from_dict(
            json.loads((directory / manifest["files"]["corrector"]).read_text()))
    return CompoundForecaster(
        kind=manifest["kind"],
        response=manifest["response"],
        plan=plan,
        ensembles=ensembles,
        corrector=corrector,
        config=EnsembleConfig.from_dict(manifest["config"]),
        level=manifest.get("level", 0.95),
    )
