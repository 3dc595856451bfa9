"""Synthetic hourly data generator for tests and demos.

The response is a planted linear combination of AR(1) exogenous drivers plus
daily/weekly/yearly sinusoids, an AR(1)-structured residual, and white noise.
Everything is derived deterministically from one root seed, and the ground
truth (coefficients, amplitudes, autoregression parameters) is returned so
oracle tests can check recovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from ._util import derive_rng
from .errors import ConfigError
from .timeseries import AvailabilityClass, TimeFrame, parse_timestamp

# availability tags cycle over the drivers in this order
TAG_CYCLE = (
    AvailabilityClass.SHORT_TERM_FORECAST,
    AvailabilityClass.MARKET_DATA,
    AvailabilityClass.REAL_TIME,
    AvailabilityClass.WEATHER_FORECAST,
)

SEASONAL_PHASES = {"daily": 1.0, "weekly": 0.5, "yearly": 2.0}


@dataclass(frozen=True)
class SyntheticSpec:
    n_hours: int
    n_drivers: int = 6
    coefficients: tuple[float, ...] = ()
    daily_amplitude: float = 25.0
    weekly_amplitude: float = 10.0
    yearly_amplitude: float = 40.0
    residual_ar: float = 0.8
    residual_scale: float = 5.0  # marginal std of the AR residual
    noise_scale: float = 2.0
    driver_ar: float = 0.95
    driver_scale: float = 1.0
    base_level: float = 400.0
    start: str = "2016-01-01T00:00:00Z"
    response: str = "intensity"

    def __post_init__(self):
        if self.n_hours < 2:
            raise ConfigError("need at least 2 hours")
        if self.n_drivers < 1:
            raise ConfigError("need at least one driver")
        if self.noise_scale < 0 or self.residual_scale < 0:
            raise ConfigError("scales must be non-negative")
        if not -1 < self.residual_ar < 1 or not -1 < self.driver_ar < 1:
            raise ConfigError("AR parameters must be inside (-1, 1)")
        coeffs = tuple(self.coefficients) or tuple(
            round(8.0 - 1.5 * i, 3) for i in range(self.n_drivers))
        if len(coeffs) != self.n_drivers:
            raise ConfigError("one coefficient per driver required")
        object.__setattr__(self, "coefficients", coeffs)

    def to_dict(self) -> dict:
        return {
            "n_hours": self.n_hours, "n_drivers": self.n_drivers,
            "coefficients": list(self.coefficients),
            "daily_amplitude": self.daily_amplitude,
            "weekly_amplitude": self.weekly_amplitude,
            "yearly_amplitude": self.yearly_amplitude,
            "residual_ar": self.residual_ar, "residual_scale": self.residual_scale,
            "noise_scale": self.noise_scale, "driver_ar": self.driver_ar,
            "driver_scale": self.driver_scale, "base_level": self.base_level,
            "start": self.start, "response": self.response,
        }

    @staticmethod
    def from_dict(d: dict) -> "SyntheticSpec":
        known = {f.name for f in SyntheticSpec.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        return SyntheticSpec(**{k: v for k, v in d.items() if k in known})


def _ar1(rng: np.random.Generator, n: int, phi: float, marginal_std: float,
         burn: int = 500) -> np.ndarray:
    if marginal_std == 0.0:
        return np.zeros(n)
    innov_std = marginal_std * math.sqrt(1.0 - phi * phi)
    eta = rng.normal(0.0, innov_std, size=n + burn)
    series = signal.lfilter([1.0], [1.0, -phi], eta)
    return series[burn:]


def generate(spec: SyntheticSpec, seed: int) -> tuple[TimeFrame, dict]:
    """Build the synthetic frame plus its ground-truth description."""
    n = spec.n_hours
    start = parse_timestamp(spec.start)

    names = [f"driver_{i}" for i in range(spec.n_drivers)]
    tags = {name: TAG_CYCLE[i % len(TAG_CYCLE)] for i, name in enumerate(names)}

    drivers = np.empty((n, spec.n_drivers))
    for i in range(spec.n_drivers):
        rng = derive_rng(seed, 100 + i)
        drivers[:, i] = _ar1(rng, n, spec.driver_ar, spec.driver_scale) + 2.0 * i

    frame_probe = TimeFrame(start=start, names=("probe",), data=np.zeros((n, 1)))
    hours, weekdays, months = frame_probe.calendar_arrays()
    seasonal = (
        spec.daily_amplitude * np.sin(2 * np.pi * hours / 24.0 + SEASONAL_PHASES["daily"])
        + spec.weekly_amplitude * np.sin(2 * np.pi * weekdays / 7.0 + SEASONAL_PHASES["weekly"])
        + spec.yearly_amplitude * np.sin(2 * np.pi * months / 12.0 + SEASONAL_PHASES["yearly"])
    )

    residual = _ar1(derive_rng(seed, 1), n, spec.residual_ar, spec.residual_scale)
    noise = derive_rng(seed, 2).normal(0.0, spec.noise_scale, size=n) if spec.noise_scale else np.zeros(n)

    response = (spec.base_level + drivers @ np.asarray(spec.coefficients)
                + seasonal + residual + noise)

    frame = TimeFrame(
        start=start,
        names=tuple(names) + (spec.response,),
        data=np.hstack([drivers, response[:, None]]),
        tags={**tags, spec.response: AvailabilityClass.REAL_TIME},
    )
    truth = {
        "seed": seed,
        "spec": spec.to_dict(),
        "coefficients": {name: c for name, c in zip(names, spec.coefficients)},
        "tags": {name: tag.value for name, tag in tags.items()},
        "seasonal_phases": dict(SEASONAL_PHASES),
        "residual": {"phi": spec.residual_ar, "marginal_std": spec.residual_scale},
        "noise_std": spec.noise_scale,
        "base_level": spec.base_level,
    }
    return frame, truth


def schema_dict(frame: TimeFrame) -> dict:
    return {name: frame.tags[name].value for name in frame.names}
