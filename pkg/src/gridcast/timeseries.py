"""Hourly multivariate time-series container and its basic transforms.

A TimeFrame is an immutable block of aligned hourly columns: row i lives at
``start + i hours``, with no gaps and no duplicates. Missing values are NaN.
Transforms (lag, moving average) propagate missingness; model fitting is
expected to run on the output of :func:`drop_incomplete_rows`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from ._util import atomic_write_text, fmt17
from .errors import DataError

HOUR = timedelta(hours=1)
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:00:00Z"


class AvailabilityClass(Enum):
    """When a column's values become available relative to the forecast origin.

    short_term_forecast columns may only drive horizons h <= 6; weather
    forecasts only h > 6; market data is day-ahead and usable everywhere;
    real-time columns are only known up to the origin itself.
    """

    SHORT_TERM_FORECAST = "short_term_forecast"
    WEATHER_FORECAST = "weather_forecast"
    MARKET_DATA = "market_data"
    REAL_TIME = "real_time"


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 UTC hourly timestamp ``YYYY-MM-DDTHH:00:00Z``."""
    try:
        ts = datetime.strptime(text.strip(), TIMESTAMP_FORMAT)
    except ValueError as exc:
        raise DataError(f"bad timestamp {text!r}: expected YYYY-MM-DDTHH:00:00Z") from exc
    return ts.replace(tzinfo=timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


@dataclass(frozen=True)
class TimeFrame:
    """Aligned hourly columns starting at ``start`` (UTC, hour-truncated).

    Immutable after construction; safe to share between threads.
    """

    start: datetime
    names: tuple[str, ...]
    data: np.ndarray  # shape (n_rows, n_columns), float64, NaN = missing
    tags: dict[str, AvailabilityClass] = field(default_factory=dict)

    def __post_init__(self):
        if self.start.tzinfo is None or self.start.minute or self.start.second or self.start.microsecond:
            raise DataError("frame start must be a tz-aware UTC timestamp on the hour")
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.names):
            raise DataError("data shape does not match column names")
        if data.shape[0] < 1:
            raise DataError("frame must contain at least one row")
        if len(set(self.names)) != len(self.names):
            raise DataError("column names must be unique")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        """Read-only view of one column; raises DataError for unknown names."""
        try:
            j = self.names.index(name)
        except ValueError:
            raise DataError(f"unknown column {name!r}") from None
        return self.data[:, j]

    def tag(self, name: str) -> AvailabilityClass:
        if name not in self.names:
            raise DataError(f"unknown column {name!r}")
        try:
            return self.tags[name]
        except KeyError:
            raise DataError(f"column {name!r} has no availability tag") from None

    def timestamp(self, row: int) -> datetime:
        return self.start + row * HOUR

    def hour_of_day(self, row: int) -> int:
        return self.timestamp(row).hour

    def weekday(self, row: int) -> int:
        return self.timestamp(row).weekday()

    def month(self, row: int) -> int:
        return self.timestamp(row).month

    def calendar_arrays(self, shift: int = 0,
                        n: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(hour-of-day, weekday 0-6, month 1-12) for rows shift .. shift+n-1.

        Pure calendar arithmetic, so the index range may extend past the data.
        """
        if n is None:
            n = self.n_rows
        base = np.datetime64(self.start.replace(tzinfo=None), "h")
        stamps = base + np.arange(shift, shift + n)
        days = stamps.astype("datetime64[D]")
        hours = (stamps - days).astype(np.int64)
        weekdays = (days.astype(np.int64) + 3) % 7  # 1970-01-01 was a Thursday
        months = stamps.astype("datetime64[M]").astype(np.int64) % 12 + 1
        return hours, weekdays, months

    def with_columns(self, extra: dict[str, np.ndarray],
                     tags: dict[str, AvailabilityClass] | None = None) -> "TimeFrame":
        """New frame with additional columns appended (originals untouched)."""
        cols = [np.asarray(v, dtype=float).reshape(-1, 1) for v in extra.values()]
        for name, col in zip(extra, cols):
            if col.shape[0] != self.n_rows:
                raise DataError(f"column {name!r} has length {col.shape[0]}, expected {self.n_rows}")
        merged_tags = dict(self.tags)
        if tags:
            merged_tags.update(tags)
        return TimeFrame(
            start=self.start,
            names=self.names + tuple(extra),
            data=np.hstack([self.data] + cols),
            tags=merged_tags,
        )


def _load_schema(schema) -> dict[str, tuple[AvailabilityClass, tuple[float, float] | None]]:
    """Normalize a schema mapping; values are either a class name or
    ``{"class": name, "clip": [lo, hi]}``."""
    if isinstance(schema, (str, Path)):
        with open(schema, encoding="utf-8") as fh:
            schema = json.load(fh)
    out = {}
    for name, value in schema.items():
        clip = None
        if isinstance(value, dict):
            tag = value.get("class")
            if "clip" in value:
                lo, hi = value["clip"]
                clip = (float(lo), float(hi))
        else:
            tag = value
        try:
            cls = AvailabilityClass(tag)
        except ValueError:
            raise DataError(f"column {name!r}: unknown availability class {tag!r}") from None
        out[name] = (cls, clip)
    return out


def ingest_csv(path: str | Path, schema, permissive: bool = False) -> TimeFrame:
    """Read an hourly CSV into a TimeFrame.

    The first column must be named ``timestamp`` and hold ISO-8601 UTC hourly
    stamps. Rows are sorted by time and interior gaps are filled with
    all-missing rows. ``schema`` maps column names to availability classes
    (optionally with a per-column clip range); unknown columns are rejected
    unless ``permissive`` is set, in which case they are tagged real_time.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    spec = _load_schema(schema)

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0] != "timestamp":
            raise DataError(f"{path}: first header must be 'timestamp'")
        names = header[1:]
        if len(set(names)) != len(names):
            raise DataError(f"{path}: duplicate column names in header")
        for name in names:
            if name not in spec and not permissive:
                raise DataError(
                    f"{path}: column {name!r} absent from schema "
                    "(pass the permissive flag to tag it real_time)"
                )
        rows: list[tuple[datetime, list[float]]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(names) + 1:
                raise DataError(f"{path}:{lineno}: expected {len(names) + 1} cells, got {len(row)}")
            ts = parse_timestamp(row[0])
            values = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if cell == "":
                    values.append(np.nan)
                else:
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise DataError(f"{path}:{lineno}: bad numeric cell {cell!r} in {name!r}") from None
            rows.append((ts, values))

    if not rows:
        raise DataError(f"{path}: no data rows")
    rows.sort(key=lambda item: item[0])
    for (t0, _), (t1, _) in zip(rows, rows[1:]):
        if t0 == t1:
            raise DataError(f"{path}: duplicate timestamp {format_timestamp(t0)}")

    start, end = rows[0][0], rows[-1][0]
    span = end - start
    if span % HOUR != timedelta(0):
        raise DataError(f"{path}: non-hourly cadence between {format_timestamp(start)} and {format_timestamp(end)}")
    n = span // HOUR + 1
    data = np.full((n, len(names)), np.nan)
    for ts, values in rows:
        offset = ts - start
        if offset % HOUR != timedelta(0):
            raise DataError(f"{path}: timestamp {format_timestamp(ts)} is not on the hourly grid")
        data[offset // HOUR, :] = values

    tags = {}
    for j, name in enumerate(names):
        cls, clip = spec.get(name, (AvailabilityClass.REAL_TIME, None))
        tags[name] = cls
        if clip is not None:
            data[:, j] = np.clip(data[:, j], clip[0], clip[1])
    return TimeFrame(start=start, names=tuple(names), data=data, tags=tags)


def write_csv(frame: TimeFrame, path: str | Path) -> None:
    """Write a frame back to CSV (17 significant digits, empty = missing)."""
    lines = ["timestamp," + ",".join(frame.names)]
    ts = frame.start
    for i in range(frame.n_rows):
        cells = [format_timestamp(ts)]
        cells.extend(fmt17(v) for v in frame.data[i])
        lines.append(",".join(cells))
        ts += HOUR
    atomic_write_text(path, "\n".join(lines) + "\n")


def moving_average(frame: TimeFrame, column: str, n: int) -> np.ndarray:
    """Trailing mean of the ``n`` most recent values ending at each row.

    output[t] = mean(x[t-n+1 .. t]); missing while fewer than n values exist
    or whenever the window contains a missing value. The pipeline uses
    n = 24 and n = 48.
    """
    if n == 0:
        raise DataError("moving average window must be at least 1")
    x = frame.column(column)
    if not 1 <= n <= x.shape[0]:
        raise DataError(f"window {n} outside 1..{x.shape[0]}")
    out = np.full_like(x, np.nan)
    # direct window sums: a NaN poisons exactly the windows containing it
    out[n - 1:] = np.convolve(x, np.ones(n), mode="valid") / n
    return out


def lag(frame: TimeFrame, column: str, k: int) -> np.ndarray:
    """Shift a column back by ``k`` hours: output[t] = input[t-k]."""
    if k < 0:
        raise DataError("lag must be non-negative")
    x = frame.column(column)
    out = np.full_like(x, np.nan)
    if k < x.shape[0]:
        if k == 0:
            out[:] = x
        else:
            out[k:] = x[:-k]
    return out


def drop_incomplete_rows(frame: TimeFrame, columns: list[str] | None = None) -> tuple[TimeFrame, np.ndarray]:
    """Remove rows with any missing value among ``columns`` (default: all).

    Returns the reduced frame plus the original row index of each surviving
    row, so downstream forecasts can re-align to wall-clock time. Raises
    DataError when nothing survives.
    """
    if columns is None:
        columns = list(frame.names)
    cols = np.stack([frame.column(c) for c in columns], axis=1)
    keep = ~np.isnan(cols).any(axis=1)
    index_map = np.nonzero(keep)[0]
    if index_map.size == 0:
        raise DataError("no complete rows in the requested columns; data range unusable")
    # note: the reduced frame is no longer hourly-contiguous relative to
    # `start`; the index map is the only valid way back to wall-clock time
    reduced = TimeFrame(
        start=frame.start,
        names=frame.names,
        data=frame.data[keep],
        tags=dict(frame.tags),
    )
    return reduced, index_map
