"""Design-matrix assembly with executable column provenance.

Every feature column is described by a JSON-able spec (a nested dict) that
can be re-evaluated against a TimeFrame, so fitted models serialize to plain
data and forecasting rebuilds exactly the columns that were trained on.
Rows of a design are indexed by the forecast origin t; a column spec plus the
pipeline horizon h determines the value available at origin t for predicting
the response at t+h.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import basis
from .errors import ConfigError, DataError, NumericalError
from .timeseries import AvailabilityClass, TimeFrame, lag, moving_average
from ._util import atomic_write_text, fmt17

logger = logging.getLogger(__name__)

VARIANTS = ("M0", "M1", "M2", "M3")
SHORT_TERM_MAX_HORIZON = 6


# ----------------------------------------------------------------------
# Column specs
# ----------------------------------------------------------------------

def spec_key(spec: dict) -> str:
    return json.dumps(spec, sort_keys=True)


def column_label(spec: dict) -> str:
    """Readable, unique-within-a-design name for a column spec."""
    kind = spec["kind"]
    if kind == "target":
        return f"{spec['source']}[t+h]"
    if kind == "lag":
        k = spec["k"]
        return f"{spec['source']}[t]" if k == 0 else f"{spec['source']}[t-{k}]"
    if kind == "ma":
        return f"ma{spec['window']}({spec['source']})"
    if kind == "exp":
        return f"exp*({column_label(spec['base'])})"
    if kind == "fourier":
        unit = "m" if spec["clock"] == "month" else "h"
        return f"{spec['component']}{spec['order']}_{spec['period']:g}{unit}"
    if kind == "tau":
        return basis.TAU_LABELS[spec["index"]]
    if kind == "bspline":
        return f"bs{spec['index']}({column_label(spec['base'])})"
    if kind == "nspline":
        return f"ns{spec['index']}({column_label(spec['base'])})"
    if kind == "product":
        return f"{column_label(spec['a'])}*{column_label(spec['b'])}"
    if kind == "raw":
        return spec["label"]
    raise ConfigError(f"unknown column kind {kind!r}")


def _epoch_hours(frame: TimeFrame) -> int:
    return int(frame.start.timestamp() // 3600)


def _spline_matrix(spec: dict, frame: TimeFrame, h: int, memo: dict) -> np.ndarray:
    """Full (n, count) spline design for a bspline/nspline spec, NaN-safe."""
    key = "matrix:" + spec_key({k: spec[k] for k in ("kind", "base", "knots", "count")})
    if key in memo:
        return memo[key]
    base = _evaluate(spec["base"], frame, h, memo)
    knots = basis.KnotVector.from_dict(spec["knots"])
    missing = np.isnan(base)
    safe = np.where(missing, knots.lo, base)
    if spec["kind"] == "bspline":
        values = basis.bspline_design(safe, knots, spec["count"])
    else:
        values = basis.natural_spline_basis(safe, knots, spec["count"])
    values[missing] = np.nan
    memo[key] = values
    return values


def _tau_target_block(frame: TimeFrame, h: int, memo: dict) -> np.ndarray:
    key = f"tau-block:{h}"
    if key not in memo:
        hours, weekdays, months = frame.calendar_arrays(shift=h)
        memo[key] = basis.tau_block(hours, weekdays, months)
    return memo[key]


def _evaluate(spec: dict, frame: TimeFrame, h: int, memo: dict) -> np.ndarray:
    key = spec_key(spec)
    if key in memo:
        return memo[key]
    kind = spec["kind"]
    n = frame.n_rows
    if kind == "target":
        col = frame.column(spec["source"])
        out = np.full(n, np.nan)
        out[: n - h] = col[h:] if h > 0 else col
    elif kind == "lag":
        out = lag(frame, spec["source"], spec["k"])
    elif kind == "ma":
        out = moving_average(frame, spec["source"], spec["window"])
    elif kind == "exp":
        base = _evaluate(spec["base"], frame, h, memo)
        out = np.exp((base - spec["mean"]) / spec["std"])
    elif kind == "fourier":
        if spec["clock"] == "month":
            _, _, months = frame.calendar_arrays(shift=h)
            t = months.astype(float)
        else:
            t = _epoch_hours(frame) + np.arange(n, dtype=float) + h
        angle = 2.0 * np.pi * spec["order"] * t / spec["period"]
        out = np.sin(angle) if spec["component"] == "sin" else np.cos(angle)
    elif kind == "tau":
        out = _tau_target_block(frame, h, memo)[:, spec["index"]]
    elif kind in ("bspline", "nspline"):
        out = _spline_matrix(spec, frame, h, memo)[:, spec["index"]]
    elif kind == "product":
        out = _evaluate(spec["a"], frame, h, memo) * _evaluate(spec["b"], frame, h, memo)
    elif kind == "raw":
        raise DataError(f"raw column {spec['label']!r} cannot be re-evaluated from a frame")
    else:
        raise ConfigError(f"unknown column kind {kind!r}")
    memo[key] = out
    return out


def evaluate_column(spec: dict, frame: TimeFrame, h: int) -> np.ndarray:
    """Re-evaluate one provenance spec over all origins (NaN = unavailable)."""
    return _evaluate(spec, frame, h, {})


def evaluate_columns(specs: list[dict], frame: TimeFrame, h: int,
                     memo: dict | None = None) -> np.ndarray:
    """Evaluate many specs at once, sharing intermediate results."""
    if memo is None:
        memo = {}
    cols = [_evaluate(spec, frame, h, memo) for spec in specs]
    return np.stack(cols, axis=1) if cols else np.empty((frame.n_rows, 0))


# ----------------------------------------------------------------------
# FeatureMatrix
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureMatrix:
    """Complete-case numeric design matrix with per-column provenance.

    ``origins[i]`` is the frame row (forecast origin) behind matrix row i;
    the response for that row lives at frame row origins[i] + h.
    """

    data: np.ndarray
    provenance: tuple[dict, ...]
    origins: np.ndarray
    h: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DataError("feature matrix must be 2-D")
        if np.isnan(data).any():
            raise DataError("feature matrix contains missing values")
        if len(self.provenance) != data.shape[1]:
            raise DataError("provenance length does not match column count")
        labels = tuple(column_label(s) for s in self.provenance)
        if len(set(labels)) != len(labels):
            raise DataError("provenance does not uniquely identify columns")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "_labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def subset(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=int)
        return FeatureMatrix(
            data=self.data[:, idx],
            provenance=tuple(self.provenance[int(j)] for j in idx),
            origins=self.origins,
            h=self.h,
        )

    @staticmethod
    def from_array(data: np.ndarray, labels: list[str] | None = None,
                   h: int = 0) -> "FeatureMatrix":
        """Wrap a plain array (columns become opaque 'raw' provenance)."""
        data = np.asarray(data, dtype=float)
        if labels is None:
            labels = [f"x{j}" for j in range(data.shape[1])]
        return FeatureMatrix(
            data=data,
            provenance=tuple({"kind": "raw", "label": lbl} for lbl in labels),
            origins=np.arange(data.shape[0]),
            h=h,
        )


def export_csv(fm: FeatureMatrix, path) -> None:
    """Feature-matrix CSV with provenance header comments."""
    lines = [f"# column {j}: {lbl} :: {spec_key(s)}"
             for j, (lbl, s) in enumerate(zip(fm.labels, fm.provenance))]
    lines.append("origin," + ",".join(fm.labels))
    for i in range(fm.n):
        lines.append(str(int(fm.origins[i])) + "," + ",".join(fmt17(v) for v in fm.data[i]))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# Recipes
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Recipe:
    """What goes into a design matrix for one model variant."""

    variant: str
    response: str
    sources: tuple[str, ...]
    include_exp: bool = True
    fourier: tuple[tuple[int, float, str], ...] = (
        (2, 24.0, "hour"),    # daily
        (1, 168.0, "hour"),   # weekly (7 days in hours)
        (2, 12.0, "month"),   # yearly at month resolution
    )
    spline_count: int = 4
    nspline_count: int = 4
    interaction_pool: int = 50
    pool: tuple[dict, ...] | None = None  # ranked M0 provenance, M2/M3 only

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown model variant {self.variant!r}")
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "fourier", tuple(tuple(f) for f in self.fourier))
        if self.pool is not None:
            object.__setattr__(self, "pool", tuple(self.pool))

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "response": self.response,
            "sources": list(self.sources),
            "include_exp": self.include_exp,
            "fourier": [list(f) for f in self.fourier],
            "spline_count": self.spline_count,
            "nspline_count": self.nspline_count,
            "interaction_pool": self.interaction_pool,
            "pool": [dict(p) for p in self.pool] if self.pool is not None else None,
        }

    @staticmethod
    def from_dict(d: dict) -> "Recipe":
        return Recipe(
            variant=d["variant"],
            response=d["response"],
            sources=tuple(d["sources"]),
            include_exp=d.get("include_exp", True),
            fourier=tuple(tuple(f) for f in d.get("fourier", ((2, 24.0, "hour"), (1, 168.0, "hour"), (2, 12.0, "month")))),
            spline_count=d.get("spline_count", 4),
            nspline_count=d.get("nspline_count", 4),
            interaction_pool=d.get("interaction_pool", 50),
            pool=tuple(d["pool"]) if d.get("pool") else None,
        )


def check_availability(frame: TimeFrame, sources, h: int) -> None:
    """Availability rule: short-term forecasts only drive h <= 6, weather
    forecasts only h > 6."""
    offending = []
    for name in sources:
        tag = frame.tag(name)
        if tag is AvailabilityClass.SHORT_TERM_FORECAST and h > SHORT_TERM_MAX_HORIZON:
            offending.append(f"{name} ({tag.value} unusable at h={h})")
        if tag is AvailabilityClass.WEATHER_FORECAST and h <= SHORT_TERM_MAX_HORIZON:
            offending.append(f"{name} ({tag.value} unusable at h={h})")
    if offending:
        raise ConfigError("recipe uses columns unavailable at this horizon: " + "; ".join(offending))


def _base_specs(frame: TimeFrame, recipe: Recipe, h: int) -> list[dict]:
    """The core regressor block: forecast values at t+h, trailing means and
    the raw value at the origin for real-time columns, plus lag(y)."""
    check_availability(frame, recipe.sources, h)
    specs: list[dict] = []
    for name in recipe.sources:
        if name == recipe.response:
            raise ConfigError("the response cannot be one of the recipe sources")
        tag = frame.tag(name)
        if tag is AvailabilityClass.REAL_TIME:
            specs.append({"kind": "lag", "source": name, "k": 0})
            specs.append({"kind": "ma", "source": name, "window": 24})
            specs.append({"kind": "ma", "source": name, "window": 48})
        else:
            specs.append({"kind": "target", "source": name})
    specs.append({"kind": "lag", "source": recipe.response, "k": 0})
    return specs


def _fourier_specs(recipe: Recipe) -> list[dict]:
    specs = []
    for order, period, clock in recipe.fourier:
        for i in range(1, order + 1):
            for comp in ("sin", "cos"):
                specs.append({"kind": "fourier", "component": comp, "order": i,
                              "period": float(period), "clock": clock})
    return specs


def _tau_specs() -> list[dict]:
    return [{"kind": "tau", "index": i} for i in range(len(basis.TAU_LABELS))]


def _fit_mask(values: np.ndarray, origins_plus_h: np.ndarray, fit_end: int) -> np.ndarray:
    return (origins_plus_h < fit_end) & ~np.isnan(values)


def _exp_spec(base: dict, values: np.ndarray, mask: np.ndarray) -> dict | None:
    usable = values[mask]
    if usable.size < 2:
        return None
    mean = float(usable.mean())
    std = float(usable.std())
    if std < 1e-12:
        return None  # constant column; the plain version gets dropped anyway
    return {"kind": "exp", "base": base, "mean": mean, "std": std}


def _knots_for(values: np.ndarray, mask: np.ndarray, n_interior: int) -> basis.KnotVector | None:
    usable = values[mask]
    try:
        return basis.quantile_knots(usable, n_interior)
    except NumericalError:
        return None


def _spline_block(base: dict, values, mask, count: int, kind: str) -> list[dict]:
    n_interior = count - basis.SPLINE_DEGREE - 1 if kind == "bspline" else count - 1
    knots = _knots_for(values, mask, n_interior)
    if knots is None:
        logger.warning("spline block dropped for constant column %s", column_label(base))
        return []
    return [{"kind": kind, "base": base, "knots": knots.to_dict(), "index": j, "count": count}
            for j in range(count)]


def build_design(frame: TimeFrame, h: int, recipe: Recipe,
                 fit_end: int | None = None) -> tuple[FeatureMatrix, np.ndarray]:
    """Assemble the design matrix and aligned response for one variant.

    ``fit_end`` bounds the rows (by target time t+h) used for data-dependent
    parameters: the standardization inside exp terms and the spline knot
    quantiles. Defaults to the full frame. Rows of the result are the
    complete cases; the response is y[t+h].
    """
    if h < 1:
        raise ConfigError("horizon must be at least 1 hour")
    if fit_end is None:
        fit_end = frame.n_rows
    n = frame.n_rows
    memo: dict = {}
    origins_plus_h = np.arange(n) + h

    base = _base_specs(frame, recipe, h)
    base_values = {spec_key(s): _evaluate(s, frame, h, memo) for s in base}

    specs: list[dict] = []
    if recipe.variant in ("M0", "M1"):
        specs.extend(base)
        if recipe.include_exp:
            for s in base:
                values = base_values[spec_key(s)]
                es = _exp_spec(s, values, _fit_mask(values, origins_plus_h, fit_end))
                if es is not None:
                    specs.append(es)
        specs.extend(_fourier_specs(recipe))

    if recipe.variant == "M1":
        specs.extend(_tau_specs())
        for s in base:
            values = base_values[spec_key(s)]
            mask = _fit_mask(values, origins_plus_h, fit_end)
            specs.extend(_spline_block(s, values, mask, recipe.spline_count, "bspline"))
            specs.extend(_spline_block(s, values, mask, recipe.nspline_count, "nspline"))

    if recipe.variant in ("M2", "M3"):
        if not recipe.pool:
            raise ConfigError(f"{recipe.variant} needs a ranked feature pool (fit M0 + LASSO first)")
        pool = list(recipe.pool)[: recipe.interaction_pool]
        taus = _tau_specs()
        singles = pool + taus
        products = [{"kind": "product", "a": pool[i], "b": pool[j]}
                    for i in range(len(pool)) for j in range(i + 1, len(pool))]
        products += [{"kind": "product", "a": p, "b": t} for p in pool for t in taus]
        if recipe.variant == "M2":
            specs.extend(singles)
            specs.extend(products)
        else:
            for s in singles + products:
                values = _evaluate(s, frame, h, memo)
                mask = _fit_mask(values, origins_plus_h, fit_end)
                specs.extend(_spline_block(s, values, mask, recipe.spline_count, "bspline"))

    matrix = evaluate_columns(specs, frame, h, memo)

    response = np.full(n, np.nan)
    y = frame.column(recipe.response)
    response[: n - h] = y[h:]

    # drop constant columns (over rows that are otherwise complete)
    complete = ~np.isnan(matrix).any(axis=1) & ~np.isnan(response)
    if not complete.any():
        raise DataError("no complete rows: every origin lacks some feature or the response")
    keep: list[int] = []
    for j in range(matrix.shape[1]):
        col = matrix[complete, j]
        if col.max() - col.min() < 1e-12:
            logger.info("dropping constant column %s", column_label(specs[j]))
        else:
            keep.append(j)
    if not keep:
        raise DataError("every design column is constant")
    specs = [specs[j] for j in keep]
    matrix = matrix[:, keep]
    complete = ~np.isnan(matrix).any(axis=1) & ~np.isnan(response)

    fm = FeatureMatrix(
        data=matrix[complete],
        provenance=tuple(specs),
        origins=np.nonzero(complete)[0],
        h=h,
    )
    return fm, response[complete]


def count_design_columns(frame: TimeFrame, recipe: Recipe, h: int) -> int:
    """Structural column count implied by a recipe, before constant-column
    cleanup (M0/M1 only; interaction variants depend on the fitted pool)."""
    per_source = {
        AvailabilityClass.REAL_TIME: 3,
    }
    total = sum(per_source.get(frame.tag(s), 1) for s in recipe.sources)
    total += 1  # lag of the response
    if recipe.include_exp:
        total *= 2
    total += sum(2 * order for order, _, _ in recipe.fourier)
    if recipe.variant == "M1":
        total += len(basis.TAU_LABELS)
        n_base = sum(per_source.get(frame.tag(s), 1) for s in recipe.sources) + 1
        total += n_base * (recipe.spline_count + recipe.nspline_count)
    return total
