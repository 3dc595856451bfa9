"""Rolling-forward cross-validation.

Eight growing-train splits by default: each round's training window absorbs
the previous round's validation and test rows, while validation and test are
always fresh, later data. Ranges are half-open row intervals in chronological
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_N_SPLITS = 8
DEFAULT_SEGMENT_HOURS = 672  # 4 weeks


@dataclass(frozen=True)
class CvSplit:
    train: tuple[int, int]
    validation: tuple[int, int]
    test: tuple[int, int]

    def __post_init__(self):
        t0, t1 = self.train
        v0, v1 = self.validation
        s0, s1 = self.test
        if not (0 <= t0 < t1 == v0 < v1 == s0 < s1):
            raise ConfigError(f"malformed split ranges {self}")


@dataclass(frozen=True)
class CvPlan:
    n_rows: int
    splits: tuple[CvSplit, ...]

    def __post_init__(self):
        if not self.splits:
            raise ConfigError("plan needs at least one split")
        prev = None
        for split in self.splits:
            if split.test[1] > self.n_rows:
                raise ConfigError("split extends past the data")
            if prev is not None and split.train[1] < prev.validation[1]:
                raise ConfigError("training window must absorb the previous validation set")
            prev = split

    @property
    def n_splits(self) -> int:
        return len(self.splits)

    def index_pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(train_indices, validation_indices) per split, for row-aligned data."""
        return [
            (np.arange(*s.train), np.arange(*s.validation))
            for s in self.splits
        ]

    def selection_rows(self) -> np.ndarray:
        """All rows employed for model building: final train + validation."""
        return np.arange(0, self.splits[-1].validation[1])


def make_plan(n_rows: int, n_splits: int = DEFAULT_N_SPLITS,
              validation_len: int = DEFAULT_SEGMENT_HOURS,
              test_len: int = DEFAULT_SEGMENT_HOURS,
              min_train_len: int | None = None) -> CvPlan:
    """Build the rolling-forward plan.

    Split k trains on [0, min_train_len + (k-1)*(validation_len + test_len)),
    validates on the next validation_len rows, and tests on the test_len rows
    after that. When min_train_len is omitted, it takes whatever remains after
    the validation/test segments.
    """
    if n_splits < 1 or validation_len < 1 or test_len < 1:
        raise ConfigError("split counts and segment lengths must be positive")
    budget = n_splits * (validation_len + test_len)
    if min_train_len is None:
        min_train_len = n_rows - budget
    if min_train_len < 1:
        raise ConfigError("min_train_len must be positive")
    required = min_train_len + budget
    if n_rows < required:
        raise DataError(f"need at least {required} rows for this plan, have {n_rows}")
    splits = []
    for k in range(n_splits):
        train_end = min_train_len + k * (validation_len + test_len)
        splits.append(CvSplit(
            train=(0, train_end),
            validation=(train_end, train_end + validation_len),
            test=(train_end + validation_len, train_end + validation_len + test_len),
        ))
    return CvPlan(n_rows=n_rows, splits=tuple(splits))


@dataclass
class EvaluationResult:
    per_split: list[dict]
    mean_validation: float | None
    mean_test: float | None
    complete: bool

    def to_dict(self) -> dict:
        return {
            "per_split": self.per_split,
            "mean_validation": self.mean_validation,
            "mean_test": self.mean_test,
            "complete": self.complete,
        }


def evaluate(pipeline_factory, frame, plan: CvPlan, metric) -> EvaluationResult:
    """Refit a pipeline from scratch on each split and score it.

    The factory builds a fresh pipeline exposing ``fit(frame, train_end)``,
    ``predict_targets(frame, targets) -> array`` and a ``response`` column
    name. Metrics are computed over validation and test rows whose response
    is present. Split failures are recorded and excluded from the means.
    """
    per_split: list[dict] = []
    val_scores: list[float] = []
    test_scores: list[float] = []
    complete = True
    for k, split in enumerate(plan.splits):
        record: dict = {"split": k}
        try:
            pipeline = pipeline_factory()
            pipeline.fit(frame, split.train[1])
            y = frame.column(pipeline.response)
            for name, (lo, hi) in (("validation", split.validation), ("test", split.test)):
                targets = np.arange(lo, hi)
                targets = targets[~np.isnan(y[targets])]
                pred = pipeline.predict_targets(frame, targets)
                record[name] = float(metric(y[targets], pred))
            val_scores.append(record["validation"])
            test_scores.append(record["test"])
        except Exception as exc:  # recorded, not fatal: the mean flags it
            record["error"] = f"{type(exc).__name__}: {exc}"
            complete = False
        per_split.append(record)
    mean_val = sum(val_scores) / len(val_scores) if val_scores else None
    mean_test = sum(test_scores) / len(test_scores) if test_scores else None
    return EvaluationResult(per_split=per_split, mean_validation=mean_val,
                            mean_test=mean_test, complete=complete)
