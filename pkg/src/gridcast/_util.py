"""Shared helpers: float formatting, atomic writes, seed derivation."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact for f64)."""
    if np.isnan(x):
        return ""
    return format(float(x), ".17g")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a file atomically (temp file in same dir, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def derive_rng(root_seed: int, stream: int) -> np.random.Generator:
    """Deterministic per-component generator derived from one root seed.

    Each (root_seed, stream) pair yields an independent stream; the same
    pair always yields the same sequence.
    """
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=(stream,)))
