"""Seasonal ARIMA estimation and h-step forecasting for residual correction.

Estimation is by conditional sum of squares: the series is differenced,
pre-sample innovations are taken as zero, and a derivative-free simplex
search minimizes the innovation sum of squares with a stationarity /
invertibility barrier. Forecasting runs the recursion on the original scale
using the combined characteristic polynomial (AR x seasonal-AR x differencing
operators), which also yields the psi-weights for per-step forecast variance.

Sign conventions are the standard ones: y_t = phi_1 y_{t-1} + ... + eps_t
+ theta_1 eps_{t-1} + ..., i.e. AR polynomial 1 - phi_1 B - ... and MA
polynomial 1 + theta_1 B + ....
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, signal, stats

from .errors import ConfigError, ConvergenceError, DataError, NumericalError

logger = logging.getLogger(__name__)

UNIT_ROOT_MARGIN = 1e-6
SEASON_HOURS = 24


@dataclass(frozen=True)
class ArimaOrder:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    M: int = 1

    def __post_init__(self):
        values = (self.p, self.d, self.q, self.P, self.D, self.Q)
        if any(v < 0 for v in values) or self.M < 1:
            raise ConfigError(f"invalid order {self}")
        if (self.P or self.D or self.Q) and self.M <= 1:
            raise ConfigError("seasonal terms need a season length M > 1")

    @property
    def n_params(self) -> int:
        return self.p + self.q + self.P + self.Q

    def label(self) -> str:
        return f"({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})_{self.M}"

    def to_dict(self) -> dict:
        return {"p": self.p, "d": self.d, "q": self.q,
                "P": self.P, "D": self.D, "Q": self.Q, "M": self.M}

    @staticmethod
    def from_dict(d: dict) -> "ArimaOrder":
        return ArimaOrder(**d)


# the orders the h = 6 residual correctors ship with
PRESET_ORDERS = {
    "average": ArimaOrder(3, 0, 0, 0, 1, 2, SEASON_HOURS),
    "marginal": ArimaOrder(5, 1, 0, 2, 0, 0, SEASON_HOURS),
}


def _expand(coeffs: np.ndarray, season: int, sign: float) -> np.ndarray:
    """Polynomial 1 + sign*c_1 B^s + sign*c_2 B^2s + ... as a coefficient array."""
    out = np.zeros(len(coeffs) * season + 1)
    out[0] = 1.0
    for i, c in enumerate(coeffs, start=1):
        out[i * season] = sign * c
    return out


def _min_root_abs(poly: np.ndarray) -> float:
    """Smallest root magnitude of c_0 + c_1 z + ...; inf for degree 0."""
    coeffs = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if coeffs.size <= 1:
        return np.inf
    roots = np.roots(coeffs[::-1])
    return float(np.min(np.abs(roots))) if roots.size else np.inf


def difference(series: np.ndarray, d: int, D: int = 0, M: int = 1) -> np.ndarray:
    """Apply (1-B)^d (1-B^M)^D; output length shrinks by d + D*M."""
    x = np.asarray(series, dtype=float)
    if x.shape[0] <= d + D * M:
        raise DataError(f"series too short to difference: {x.shape[0]} <= {d + D * M}")
    for _ in range(d):
        x = x[1:] - x[:-1]
    for _ in range(D):
        x = x[M:] - x[:-M]
    return x


@dataclass(frozen=True)
class ArimaModel:
    """Fitted seasonal ARIMA with the state needed for h-step forecasts."""

    order: ArimaOrder
    ar: tuple[float, ...]
    ma: tuple[float, ...]
    sar: tuple[float, ...]
    sma: tuple[float, ...]
    innovation_variance: float
    y_tail: tuple[float, ...]    # last values of the *original* series
    eps_tail: tuple[float, ...]  # last innovations on the differenced scale

    def __post_init__(self):
        if self.innovation_variance < 0:
            raise NumericalError("negative innovation variance")
        for name, coeffs, sign in (("ar", self.ar, -1.0), ("seasonal ar", self.sar, -1.0),
                                   ("ma", self.ma, 1.0), ("seasonal ma", self.sma, 1.0)):
            if coeffs and _min_root_abs(_expand(np.asarray(coeffs), 1, sign)) <= 1.0 + UNIT_ROOT_MARGIN:
                raise NumericalError(f"{name} polynomial has a root inside the unit circle")

    def ar_poly(self) -> np.ndarray:
        """Combined stationary AR polynomial phi(B) * PHI(B^M)."""
        return np.convolve(_expand(np.asarray(self.ar), 1, -1.0),
                           _expand(np.asarray(self.sar), self.order.M, -1.0))

    def ma_poly(self) -> np.ndarray:
        """Combined MA polynomial theta(B) * THETA(B^M)."""
        return np.convolve(_expand(np.asarray(self.ma), 1, 1.0),
                           _expand(np.asarray(self.sma), self.order.M, 1.0))

    def char_poly(self) -> np.ndarray:
        """AR polynomial times the differencing operators (original scale)."""
        poly = self.ar_poly()
        for _ in range(self.order.d):
            poly = np.convolve(poly, [1.0, -1.0])
        seasonal_diff = np.zeros(self.order.M + 1)
        seasonal_diff[0], seasonal_diff[-1] = 1.0, -1.0
        for _ in range(self.order.D):
            poly = np.convolve(poly, seasonal_diff)
        return poly

    def to_dict(self) -> dict:
        return {
            "order": self.order.to_dict(),
            "ar": list(self.ar), "ma": list(self.ma),
            "sar": list(self.sar), "sma": list(self.sma),
            "innovation_variance": float(self.innovation_variance),
            "y_tail": list(self.y_tail), "eps_tail": list(self.eps_tail),
        }

    @staticmethod
    def from_dict(d: dict) -> "ArimaModel":
        return ArimaModel(
            order=ArimaOrder.from_dict(d["order"]),
            ar=tuple(d["ar"]), ma=tuple(d["ma"]),
            sar=tuple(d["sar"]), sma=tuple(d["sma"]),
            innovation_variance=float(d["innovation_variance"]),
            y_tail=tuple(d["y_tail"]), eps_tail=tuple(d["eps_tail"]),
        )


def _css_innovations(w: np.ndarray, ar_full: np.ndarray, ma_full: np.ndarray) -> np.ndarray:
    """Innovations of the differenced series with zero pre-sample values."""
    la = ar_full.shape[0] - 1
    if w.shape[0] <= la:
        raise DataError(f"differenced series length {w.shape[0]} <= AR window {la}")
    u = np.convolve(w, ar_full)[la: w.shape[0]]
    if ma_full.shape[0] > 1:
        return signal.lfilter([1.0], ma_full, u)
    return u


def _unpack(params: np.ndarray, order: ArimaOrder):
    p, q, P, Q = order.p, order.q, order.P, order.Q
    ar = params[:p]
    ma = params[p:p + q]
    sar = params[p + q:p + q + P]
    sma = params[p + q + P:p + q + P + Q]
    return ar, ma, sar, sma


def fit_arima(series: np.ndarray, order: ArimaOrder) -> ArimaModel:
    """CSS fit of a given order. No constant term is estimated: the input is
    expected to be a (roughly) zero-mean residual series, or differencing
    removes the level."""
    x = np.asarray(series, dtype=float)
    if np.isnan(x).any():
        raise DataError("series contains missing values")
    w = difference(x, order.d, order.D, order.M)
    min_len = 10 * (order.n_params + 1)
    if w.shape[0] <= min_len:
        raise DataError(f"need more than {min_len} differenced observations, have {w.shape[0]}")

    def build(params):
        ar, ma, sar, sma = _unpack(np.asarray(params, dtype=float), order)
        ar_full = np.convolve(_expand(ar, 1, -1.0), _expand(sar, order.M, -1.0))
        ma_full = np.convolve(_expand(ma, 1, 1.0), _expand(sma, order.M, 1.0))
        return ar, ma, sar, sma, ar_full, ma_full

    css_zero = float(w @ w)
    barrier_scale = 1e6 * max(1.0, css_zero)

    def objective(params):
        ar, ma, sar, sma, ar_full, ma_full = build(params)
        violation = 0.0
        for coeffs, sign in ((ar, -1.0), (sar, -1.0), (ma, 1.0), (sma, 1.0)):
            if coeffs.size:
                r = _min_root_abs(_expand(coeffs, 1, sign))
                if r <= 1.0 + UNIT_ROOT_MARGIN:
                    violation += (1.0 + UNIT_ROOT_MARGIN) - r + 1e-9
        if violation > 0.0:
            return barrier_scale * (1.0 + violation)
        eps = _css_innovations(w, ar_full, ma_full)
        css = float(eps @ eps)
        if not np.isfinite(css):
            return barrier_scale
        return css

    k = order.n_params
    if k > 0:
        x0 = np.zeros(k)
        simplex = np.vstack([x0] + [x0 + 0.1 * np.eye(k)[i] for i in range(k)])
        result = optimize.minimize(
            objective, x0, method="Nelder-Mead",
            options={"initial_simplex": simplex, "xatol": 1e-5,
                     "fatol": 1e-9 * max(1.0, css_zero), "maxfev": 6000},
        )
        params = result.x
        if objective(params) >= barrier_scale:
            raise ConvergenceError(
                f"ARIMA {order.label()} optimum is non-stationary; "
                "consider a higher d or D")
    else:
        params = np.zeros(0)

    ar, ma, sar, sma, ar_full, ma_full = build(params)
    eps = _css_innovations(w, ar_full, ma_full)
    variance = float(eps @ eps) / eps.shape[0]

    char_len = ar_full.shape[0] - 1 + order.d + order.D * order.M
    ma_len = ma_full.shape[0] - 1
    y_tail = x[-char_len:] if char_len else np.zeros(0)
    eps_tail = eps[-ma_len:] if ma_len else np.zeros(0)
    if ma_len and eps_tail.shape[0] < ma_len:
        eps_tail = np.concatenate([np.zeros(ma_len - eps_tail.shape[0]), eps_tail])

    return ArimaModel(
        order=order,
        ar=tuple(float(v) for v in ar), ma=tuple(float(v) for v in ma),
        sar=tuple(float(v) for v in sar), sma=tuple(float(v) for v in sma),
        innovation_variance=variance,
        y_tail=tuple(float(v) for v in y_tail),
        eps_tail=tuple(float(v) for v in eps_tail),
    )


def psi_weights(model: ArimaModel, h: int) -> np.ndarray:
    """First h weights of the MA(infinity) representation on the original scale."""
    char = model.char_poly()
    ma_full = model.ma_poly()
    psi = np.zeros(h)
    psi[0] = 1.0
    for k in range(1, h):
        value = ma_full[k] if k < ma_full.shape[0] else 0.0
        for i in range(1, min(k, char.shape[0] - 1) + 1):
            value -= char[i] * psi[k - i]
        psi[k] = value
    return psi


def forecast(model: ArimaModel, h: int) -> tuple[np.ndarray, np.ndarray]:
    """h-step point forecasts and per-step forecast variances.

    Future innovations are zero; values recurse through the combined
    characteristic polynomial so differencing is undone implicitly. The
    variance at step k is innovation_variance times the cumulative sum of
    squared psi-weights, hence non-decreasing in k.
    """
    if h < 1:
        raise ConfigError("forecast horizon must be at least 1")
    char = model.char_poly()
    ma_full = model.ma_poly()
    n_char = char.shape[0] - 1
    n_ma = ma_full.shape[0] - 1
    if len(model.y_tail) < n_char:
        raise DataError("model tail too short for forecasting")

    y_buf = list(model.y_tail)
    e_buf = [0.0] * max(0, n_ma - len(model.eps_tail)) + list(model.eps_tail)
    points = np.empty(h)
    for step in range(h):
        value = 0.0
        for i in range(1, n_char + 1):
            value -= char[i] * y_buf[-i]
        for j in range(step + 1, n_ma + 1):
            value += ma_full[j] * e_buf[len(e_buf) - (j - step)]
        points[step] = value
        y_buf.append(value)

    psi = psi_weights(model, h)
    variances = model.innovation_variance * np.cumsum(psi ** 2)
    return points, variances


def filter_innovations(model: ArimaModel, series: np.ndarray) -> np.ndarray:
    """Innovations implied by the fitted coefficients over a fresh series.

    The series is differenced per the model order first; entry i of the
    result is the innovation at differenced index i + (AR window), i.e. at
    original index i + (AR window) + d + D*M. Causal: prefixes of the series
    yield prefixes of the innovations.
    """
    w = difference(np.asarray(series, dtype=float), model.order.d,
                   model.order.D, model.order.M)
    return _css_innovations(w, model.ar_poly(), model.ma_poly())


def forecast_from_history(model: ArimaModel, history: np.ndarray, h: int
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Forecast with the fitted coefficients but a fresh history.

    Re-filters the supplied series to recover innovations up to its end, then
    forecasts h steps ahead of it.
    """
    x = np.asarray(history, dtype=float)
    if np.isnan(x).any():
        raise DataError("residual history contains missing values")
    order = model.order
    ar_full = model.ar_poly()
    n_char = model.char_poly().shape[0] - 1
    n_ma = model.ma_poly().shape[0] - 1
    if x.shape[0] < max(n_char, order.d + order.D * order.M + ar_full.shape[0]):
        raise DataError("missing residual history: series shorter than the model memory")
    w = difference(x, order.d, order.D, order.M)
    eps = _css_innovations(w, ar_full, model.ma_poly())
    eps_tail = eps[-n_ma:] if n_ma else np.zeros(0)
    if n_ma and eps_tail.shape[0] < n_ma:
        eps_tail = np.concatenate([np.zeros(n_ma - eps_tail.shape[0]), eps_tail])
    refreshed = replace(model,
                        y_tail=tuple(float(v) for v in x[-n_char:]) if n_char else (),
                        eps_tail=tuple(float(v) for v in eps_tail))
    return forecast(refreshed, h)


def corrected_forecast(base_point: float, base_variance: float,
                       residual_model: ArimaModel, residual_history: np.ndarray,
                       h: int, level: float = 0.95) -> tuple[float, float, float]:
    """Add the h-step residual forecast to a base model's point forecast.

    The interval variance is the sum of the supplied base variance and the
    ARIMA step-h variance (the two error sources are treated as independent).
    Returns (point, lo, hi).
    """
    points, variances = forecast_from_history(residual_model, residual_history, h)
    point = float(base_point + points[h - 1])
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    half = z * float(np.sqrt(base_variance + variances[h - 1]))
    return point, point - half, point + half


# ----------------------------------------------------------------------
# Diagnostics and order selection
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AcfReport:
    lags: np.ndarray
    values: np.ndarray
    band: float  # +-1.96/sqrt(n)

    def inside_band(self) -> np.ndarray:
        return np.abs(self.values) <= self.band


def acf(series: np.ndarray, max_lag: int) -> AcfReport:
    """Sample autocorrelations with the biased 1/n normalization."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if not 1 <= max_lag < n:
        raise DataError(f"max_lag {max_lag} outside 1..{n - 1}")
    x = x - x.mean()
    c0 = float(x @ x) / n
    if c0 == 0.0:
        raise DataError("autocorrelation of a constant series is undefined")
    values = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        values[k - 1] = (x[k:] @ x[:-k]) / n / c0
    return AcfReport(lags=np.arange(1, max_lag + 1), values=values,
                     band=1.96 / np.sqrt(n))


# ordered by parameter count, then lexicographically; 30 entries
DEFAULT_CANDIDATES: tuple[ArimaOrder, ...] = tuple(
    ArimaOrder(*spec) for spec in (
        (0, 0, 0, 0, 0, 0, 1),
        (0, 0, 1, 0, 0, 0, 1), (0, 1, 1, 0, 0, 0, 1), (1, 0, 0, 0, 0, 0, 1),
        (1, 1, 0, 0, 0, 0, 1),
        (0, 0, 0, 0, 1, 1, SEASON_HOURS), (0, 0, 0, 1, 0, 0, SEASON_HOURS),
        (0, 0, 0, 0, 0, 1, SEASON_HOURS),
        (0, 0, 2, 0, 0, 0, 1), (1, 0, 1, 0, 0, 0, 1), (1, 1, 1, 0, 0, 0, 1),
        (2, 0, 0, 0, 0, 0, 1), (2, 1, 0, 0, 0, 0, 1),
        (1, 0, 0, 1, 0, 0, SEASON_HOURS), (1, 0, 0, 0, 0, 1, SEASON_HOURS),
        (1, 0, 0, 0, 1, 1, SEASON_HOURS),
        (1, 0, 2, 0, 0, 0, 1), (2, 0, 1, 0, 0, 0, 1), (3, 0, 0, 0, 0, 0, 1),
        (2, 0, 0, 1, 0, 0, SEASON_HOURS), (1, 0, 1, 1, 0, 1, SEASON_HOURS),
        (2, 0, 2, 0, 0, 0, 1), (3, 0, 1, 0, 0, 0, 1), (4, 0, 0, 0, 0, 0, 1),
        (2, 0, 0, 2, 0, 0, SEASON_HOURS), (3, 0, 0, 0, 1, 2, SEASON_HOURS),
        (5, 0, 0, 0, 0, 0, 1), (5, 1, 0, 0, 0, 0, 1),
        (5, 1, 0, 2, 0, 0, SEASON_HOURS), (2, 0, 2, 1, 0, 1, SEASON_HOURS),
    )
)


def aic(model: ArimaModel, n_effective: int) -> float:
    """n*ln(innovation variance) + 2*(p+q+P+Q+1)."""
    variance = max(model.innovation_variance, np.finfo(float).tiny)
    return n_effective * float(np.log(variance)) + 2.0 * (model.order.n_params + 1)


def auto_fit(series: np.ndarray, candidates=None) -> ArimaModel:
    """Fit every candidate order and keep the lowest-AIC model.

    Candidates that fail to fit are skipped; ties prefer fewer parameters.
    """
    if candidates is None:
        candidates = DEFAULT_CANDIDATES
    candidates = list(candidates)
    if not candidates:
        raise ConfigError("empty candidate list")
    x = np.asarray(series, dtype=float)
    best = None
    best_key = None
    for idx, order in enumerate(candidates):
        try:
            model = fit_arima(x, order)
        except (DataError, ConvergenceError, NumericalError) as exc:
            logger.info("auto_fit skips %s: %s", order.label(), exc)
            continue
        w_len = x.shape[0] - order.d - order.D * order.M
        eff = w_len - (model.ar_poly().shape[0] - 1)
        key = (aic(model, eff), order.n_params, idx)
        if best_key is None or key < best_key:
            best, best_key = model, key
    if best is None:
        raise NumericalError("every ARIMA candidate failed to fit")
    return best
