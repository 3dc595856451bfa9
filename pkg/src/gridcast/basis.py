"""Deterministic feature expansions.

Fourier seasonality terms, clamped cubic B-splines (Cox-de Boor), natural
cubic splines (linear beyond the boundary knots), quantile knot placement,
the 15-column periodic time-variable block, and interaction constructions.
All functions are pure and vectorized over evaluation points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError

logger = logging.getLogger(__name__)

SPLINE_DEGREE = 3


@dataclass(frozen=True)
class KnotVector:
    """Interior knots plus [lo, hi] boundary knots, strictly ascending."""

    boundary: tuple[float, float]
    interior: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        lo, hi = self.boundary
        if not np.isfinite(lo) or not np.isfinite(hi) or lo >= hi:
            raise NumericalError(f"degenerate knot boundary [{lo}, {hi}]")
        interior = tuple(sorted(set(float(k) for k in self.interior)))
        for k in interior:
            if not lo < k < hi:
                raise NumericalError(f"interior knot {k} outside ({lo}, {hi})")
        object.__setattr__(self, "boundary", (float(lo), float(hi)))
        object.__setattr__(self, "interior", interior)

    @property
    def lo(self) -> float:
        return self.boundary[0]

    @property
    def hi(self) -> float:
        return self.boundary[1]

    def to_dict(self) -> dict:
        return {"boundary": list(self.boundary), "interior": list(self.interior)}

    @staticmethod
    def from_dict(d: dict) -> "KnotVector":
        return KnotVector(boundary=tuple(d["boundary"]), interior=tuple(d["interior"]))


def quantile_knots(values: np.ndarray, n_interior: int) -> KnotVector:
    """Boundary knots at min/max, interior knots at the k/(n+1) quantiles.

    Quantiles use linear interpolation between order statistics. Raises when
    the column is constant (it should have been dropped before this point).
    """
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    if x.size < 2 or x.min() == x.max():
        raise NumericalError("need at least 2 distinct values to place knots")
    qs = [k / (n_interior + 1) for k in range(1, n_interior + 1)]
    interior = np.quantile(x, qs, method="linear") if qs else []
    return KnotVector(boundary=(float(x.min()), float(x.max())), interior=tuple(interior))


def _open_knot_sequence(knots: KnotVector, count: int) -> np.ndarray:
    n_interior = count - SPLINE_DEGREE - 1
    if n_interior < 0:
        raise NumericalError(f"basis count {count} below degree+1")
    if len(knots.interior) != n_interior:
        raise NumericalError(
            f"basis count {count} needs {n_interior} interior knots, got {len(knots.interior)}"
        )
    reps = SPLINE_DEGREE + 1
    return np.concatenate([
        np.full(reps, knots.lo),
        np.asarray(knots.interior, dtype=float),
        np.full(reps, knots.hi),
    ])


def bspline_design(x: np.ndarray, knots: KnotVector, count: int = 4) -> np.ndarray:
    """Cubic B-spline basis values, shape (len(x), count).

    Open (clamped) knot sequence: boundary knots with multiplicity 4 plus the
    interior knots needed so the basis has ``count`` members. Inputs outside
    [lo, hi] are clamped to the boundary; the basis is a partition of unity
    on the interval.
    """
    t = _open_knot_sequence(knots, count)
    xv = np.clip(np.asarray(x, dtype=float), knots.lo, knots.hi)
    flat = xv.ravel()
    deg = SPLINE_DEGREE

    span = np.searchsorted(t, flat, side="right") - 1
    span = np.clip(span, deg, count - 1)

    # Cox-de Boor triangle over all points at once
    n_pts = flat.shape[0]
    basis = np.zeros((deg + 1, n_pts))
    basis[0] = 1.0
    left = np.zeros((deg + 1, n_pts))
    right = np.zeros((deg + 1, n_pts))
    for j in range(1, deg + 1):
        left[j] = flat - t[span + 1 - j]
        right[j] = t[span + j] - flat
        saved = np.zeros(n_pts)
        for r in range(j):
            temp = basis[r] / (right[r + 1] + left[j - r])
            basis[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        basis[j] = saved

    out = np.zeros((n_pts, count))
    cols = span[None, :] - deg + np.arange(deg + 1)[:, None]
    np.put_along_axis(out, cols.T, basis.T, axis=1)
    return out.reshape(xv.shape + (count,)) if xv.ndim else out.reshape(count)


def bspline_basis(x: float, knots: KnotVector, count: int = 4) -> np.ndarray:
    """Basis values at a single point (see :func:`bspline_design`)."""
    return bspline_design(np.asarray([x]), knots, count)[0]


def natural_spline_basis(x, knots: KnotVector, count: int) -> np.ndarray:
    """Natural cubic spline basis: cubic inside, linear beyond the boundaries.

    Truncated-power construction with the constant member dropped (the
    regression intercept owns it), so ``count`` functions need count-1
    interior knots. Unlike the clamped B-splines, inputs are NOT clamped:
    the basis extrapolates linearly, which is the point of natural splines.
    """
    if count < 2:
        raise NumericalError("natural spline basis needs count >= 2")
    if len(knots.interior) != count - 1:
        raise NumericalError(
            f"natural spline count {count} needs {count - 1} interior knots, "
            f"got {len(knots.interior)}"
        )
    z = np.asarray([knots.lo, *knots.interior, knots.hi])
    big_k = z.shape[0]
    xv = np.asarray(x, dtype=float)
    flat = xv.ravel()

    def d(j: int) -> np.ndarray:
        num = np.maximum(flat - z[j], 0.0) ** 3 - np.maximum(flat - z[big_k - 1], 0.0) ** 3
        return num / (z[big_k - 1] - z[j])

    cols = [flat]
    d_last = d(big_k - 2)
    for j in range(big_k - 2):
        cols.append(d(j) - d_last)
    out = np.stack(cols, axis=1)
    return out.reshape(xv.shape + (count,)) if xv.ndim else out.reshape(count)


def fourier_terms(t_index, n_order: int, period: float) -> np.ndarray:
    """[sin_1, cos_1, ..., sin_n, cos_n] of 2*pi*t/period and its harmonics.

    The constant term is not emitted; the regression intercept owns it.
    Accepts a scalar index (returns shape (2n,)) or an array (rows of 2n).
    """
    if n_order < 1:
        raise DataError("fourier order must be at least 1")
    if period <= 0:
        raise DataError("fourier period must be positive")
    t = np.asarray(t_index, dtype=float)
    orders = np.arange(1, n_order + 1)
    angle = 2.0 * np.pi * t[..., None] * orders / period
    out = np.empty(angle.shape[:-1] + (2 * n_order,))
    out[..., 0::2] = np.sin(angle)
    out[..., 1::2] = np.cos(angle)
    return out


def interaction(z_i: np.ndarray, z_j: np.ndarray) -> np.ndarray:
    """Interaction triple [z_i, z_j, z_i * z_j] as an (n, 3) array."""
    a = np.asarray(z_i, dtype=float)
    b = np.asarray(z_j, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"interaction length mismatch: {a.shape} vs {b.shape}")
    return np.stack([a, b, a * b], axis=-1)


def spline_interaction(z_i: np.ndarray, z_j: np.ndarray,
                       count: int = 4) -> tuple[np.ndarray, list[tuple[str, KnotVector]]]:
    """Spline-wrapped interaction: bs blocks of z_i, z_j, and their product.

    Returns (values, blocks) where blocks lists the surviving (source, knots)
    pairs in column order; sources are "i", "j", "product". A constant
    product column cannot carry a spline block and is dropped with a warning,
    so the generic 12 columns shrink to 8 in that case.
    """
    triple = interaction(z_i, z_j)
    parts: list[np.ndarray] = []
    blocks: list[tuple[str, KnotVector]] = []
    for tag, col in zip(("i", "j", "product"), triple.T):
        try:
            knots = quantile_knots(col, count - SPLINE_DEGREE - 1)
        except NumericalError:
            logger.warning("spline interaction: %s column is constant, block dropped", tag)
            continue
        parts.append(bspline_design(col, knots, count))
        blocks.append((tag, knots))
    return np.concatenate(parts, axis=1), blocks


# Periodic time variables: raw hour/weekday/month, their sine encodings, and
# three clamped cubic spline values per period (5 splines, outer two dropped).
# The spline domain is [0, period] with one interior knot at period/2.

_TAU_SPLINES = (
    ("hour", 24.0, 0),    # (name, period, raw offset subtracted before spline)
    ("weekday", 7.0, 0),
    ("month", 12.0, 1),   # months are 1..12; spline input is month-1
)

TAU_LABELS = (
    "tau_hour", "tau_weekday", "tau_month",
    "tau_sin_hour", "tau_sin_weekday", "tau_sin_month",
    "tau_bs_hour_2", "tau_bs_hour_3", "tau_bs_hour_4",
    "tau_bs_weekday_2", "tau_bs_weekday_3", "tau_bs_weekday_4",
    "tau_bs_month_2", "tau_bs_month_3", "tau_bs_month_4",
)


def _tau_knots(period: float) -> KnotVector:
    return KnotVector(boundary=(0.0, period), interior=(period / 2.0,))


def tau_block(hours, weekdays, months) -> np.ndarray:
    """15 periodic time-variable columns for arrays of calendar components."""
    hours = np.asarray(hours, dtype=float)
    weekdays = np.asarray(weekdays, dtype=float)
    months = np.asarray(months, dtype=float)
    raws = (hours, weekdays, months)
    cols = [hours, weekdays, months]
    for raw, (_, period, offset) in zip(raws, _TAU_SPLINES):
        cols.append(np.sin(2.0 * np.pi * raw / period))
    for raw, (_, period, offset) in zip(raws, _TAU_SPLINES):
        values = bspline_design(raw - offset, _tau_knots(period), count=5)
        # drop the outer splines (1 and 5); keep 2..4
        cols.extend(values[:, k] for k in (1, 2, 3))
    return np.stack(cols, axis=1)


def tau_matrix(t_index, calendar) -> np.ndarray:
    """Row(s) of the 15-column time-variable block.

    ``calendar`` maps a time index to (hour-of-day, weekday 0-6, month 1-12);
    it is usually ``frame.timestamp``-derived. Accepts a scalar index or a
    sequence of indices.
    """
    scalar = np.isscalar(t_index)
    idx = [t_index] if scalar else list(t_index)
    parts = [calendar(i) for i in idx]
    hours = [p[0] for p in parts]
    weekdays = [p[1] for p in parts]
    months = [p[2] for p in parts]
    block = tau_block(hours, weekdays, months)
    return block[0] if scalar else block
