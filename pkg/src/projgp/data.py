"""Series ingestion and generation: CSV loading, splits, synthetic draws.

CSV files are comma-separated UTF-8 with an optional header row; columns
are selected by index or, when a header is present, by name.  Parsing is
strict: a bad cell aborts with its line number rather than being dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gp import Dataset, Predictive, sample_prior
from .kernels import KernelSpec


def _resolve_column(selector, header, path):
    if isinstance(selector, int):
        return selector
    if header is None:
        raise ValueError(
            f"{path}: column {selector!r} referenced by name but the file has no header"
        )
    try:
        return header.index(selector)
    except ValueError:
        raise ValueError(f"{path}: no column named {selector!r} in header {header}") from None


def load_csv(path, x_column=0, y_column=1, limit_n: Optional[int] = None) -> Dataset:
    """Read (x, y) pairs in file order, optionally truncated to ``limit_n``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [(i + 1, row) for i, row in enumerate(reader) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: no data rows")

    header = None
    first_line, first_row = rows[0]
    probe = max(
        c if isinstance(c, int) else 0 for c in (x_column, y_column)
    )
    try:
        if len(first_row) > probe:
            float(first_row[probe])
        has_header = False
    except ValueError:
        has_header = True
    named = isinstance(x_column, str) or isinstance(y_column, str)
    if named and not has_header:
        raise ValueError(
            f"{path}: column referenced by name but the file has no header"
        )
    if has_header:
        header = [c.strip() for c in first_row]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: header only, no data rows")

    xi = _resolve_column(x_column, header, path)
    yi = _resolve_column(y_column, header, path)

    xs, ys = [], []
    for line, row in rows:
        if limit_n is not None and len(xs) >= limit_n:
            break
        try:
            xv = float(row[xi])
            yv = float(row[yi])
        except (ValueError, IndexError):
            raise ValueError(f"{path}: unparsable row at line {line}: {row}") from None
        if not (np.isfinite(xv) and np.isfinite(yv)):
            raise ValueError(f"{path}: non-finite value at line {line}")
        xs.append(xv)
        ys.append(yv)
    return Dataset(np.array(xs), np.array(ys))


def split(data: Dataset, train_fraction: float, seed=None, mode: str = "Prefix"):
    """Partition into (train, validation); validation may be empty at 1.0.

    ``Prefix`` keeps temporal order, ``Random`` shuffles with the seed.
    """
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must be in (0, 1]")
    if mode not in ("Prefix", "Random"):
        raise ValueError("mode must be 'Prefix' or 'Random'")
    n_train = int(np.floor(train_fraction * data.n + 0.5))
    if n_train == 0:
        raise ValueError("training split is empty")
    if mode == "Random":
        order = np.random.default_rng(seed).permutation(data.n)
    else:
        order = np.arange(data.n)
    head, tail = order[:n_train], order[n_train:]
    train = Dataset(data.x[head], data.y[head])
    if tail.size == 0:
        return train, None
    return train, Dataset(data.x[tail], data.y[tail])


def synthetic(spec: KernelSpec, n: int, x_range, seed) -> Dataset:
    """n equispaced inputs over ``x_range`` with a seeded prior draw as outputs."""
    lo, hi = float(x_range[0]), float(x_range[1])
    x = np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2.0])
    return Dataset(x, sample_prior(spec, x, seed))


def rmse(pred, truth, normalise: bool = False) -> float:
    """Root mean squared error of the predictive mean against the truth.

    With ``normalise`` the error is divided by the standard deviation of
    the truth (relative normalised variant).
    """
    mean = np.asarray(pred.mean if isinstance(pred, Predictive) else pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if mean.shape != truth.shape:
        raise ValueError(f"length mismatch: {mean.shape} vs {truth.shape}")
    value = float(np.sqrt(np.mean((mean - truth) ** 2)))
    if normalise:
        scale = float(np.std(truth))
        if scale == 0.0:
            raise ValueError("cannot normalise by a constant truth vector")
        value /= scale
    return value


def sunspots_like(n: int = 3319, seed: int = 0) -> Dataset:
    """Deterministic stand-in for a monthly sunspot-count series.

    Amplitude-modulated ~11-year (132-month) cycles, rectified and with
    positive observation noise; x is the month index 0..n-1.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    phase = 2 * np.pi * t / 132.0 + 1.2 * np.sin(2 * np.pi * t / 1580.0)
    envelope = 90.0 + 55.0 * np.sin(2 * np.pi * t / 2750.0 + 0.7)
    cycle = np.maximum(np.sin(phase), 0.0) ** 1.3
    y = envelope * cycle + 6.0 * rng.standard_normal(n) * (0.4 + cycle)
    return Dataset(t, np.maximum(y, 0.0))


def eeg_like(n: int = 10000, seed: int = 0) -> Dataset:
    """Deterministic stand-in for a single-channel EEG trace.

    A few drifting oscillatory bands plus broadband noise; x is the
    sample index 0..n-1.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    y = np.zeros(n)
    for freq, amp in ((0.011, 1.0), (0.027, 0.6), (0.043, 0.35)):
        drift = np.cumsum(rng.standard_normal(n)) * 0.002
        y += amp * np.sin(2 * np.pi * freq * t + drift)
    y += 0.25 * rng.standard_normal(n)
    return Dataset(t, y)


@dataclass
class SeriesSource:
    """Declarative description of where a series comes from.

    ``load()`` returns (train, validation); validation is None when the
    whole series is kept for training.  Centring subtracts the mean of
    the full loaded series from y.
    """

    kind: str  # "SyntheticGP" | "CsvFile"
    path: Optional[str] = None
    x_column: object = 0
    y_column: object = 1
    spec: Optional[KernelSpec] = None
    n: Optional[int] = None
    x_range: tuple = (0.0, 1.0)
    data_seed: int = 0
    centre_y: bool = True
    limit_n: Optional[int] = None
    train_fraction: float = 1.0
    split_seed: int = 0
    split_mode: str = "Prefix"

    def __post_init__(self):
        if self.kind not in ("SyntheticGP", "CsvFile"):
            raise ValueError(f"unknown series kind {self.kind!r}")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must be in (0, 1]")

    def load(self):
        if self.kind == "CsvFile":
            data = load_csv(self.path, self.x_column, self.y_column, self.limit_n)
        else:
            if self.spec is None or self.n is None:
                raise ValueError("SyntheticGP source needs a spec and n")
            data = synthetic(self.spec, self.n, self.x_range, self.data_seed)
            if self.limit_n is not None:
                data = Dataset(data.x[: self.limit_n], data.y[: self.limit_n])
        if self.centre_y:
            data = Dataset(data.x, data.y - np.mean(data.y))
        if self.train_fraction == 1.0:
            return data, None
        return split(data, self.train_fraction, self.split_seed, self.split_mode)
