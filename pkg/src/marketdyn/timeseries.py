"""Price series data model, CSV ingestion, log returns and trailing moving averages.

Time is an integer step index (trading days). Calendar dates read from CSV are
kept as opaque labels so files round-trip byte-identically; no date arithmetic
is ever performed on them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import LengthError, ParameterError, ParseError, ValidationError


def _frozen_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    arr.flags.writeable = False
    return arr


def _frozen_int_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """A strictly positive price path on a strictly increasing integer time grid.

    ``labels`` carries the original date strings from a CSV file (or None for
    synthetic series); they are opaque and only used when writing CSV back out.
    """

    index: np.ndarray
    values: np.ndarray
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "index", _frozen_int_array(self.index))
        object.__setattr__(self, "values", _frozen_float_array(self.values))
        if len(self.index) != len(self.values):
            raise ValidationError(
                f"index length {len(self.index)} != values length {len(self.values)}"
            )
        if len(self.values) < 1:
            raise LengthError("a price series needs at least one point")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("prices must be finite")
        if np.any(self.values <= 0.0):
            bad = int(np.argmax(self.values <= 0.0))
            raise ValidationError(f"price at step {int(self.index[bad])} is not strictly positive")
        if len(self.index) > 1 and not np.all(np.diff(self.index) > 0):
            raise ValidationError("time index must be strictly increasing")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
            if len(self.labels) != len(self.values):
                raise ValidationError("labels length does not match values")

    def __len__(self) -> int:
        return len(self.values)

    @staticmethod
    def from_values(values, start: int = 0, labels=None) -> "PriceSeries":
        values = np.asarray(values, dtype=np.float64)
        return PriceSeries(np.arange(start, start + len(values)), values, labels)


@dataclass(frozen=True)
class ReturnSeries:
    """Log returns; one entry per consecutive price pair of the source series."""

    index: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "index", _frozen_int_array(self.index))
        object.__setattr__(self, "values", _frozen_float_array(self.values))
        if len(self.index) != len(self.values):
            raise ValidationError("index length does not match values length")

    def __len__(self) -> int:
        return len(self.values)


def log_returns(p: PriceSeries) -> ReturnSeries:
    """Per-step log returns ln(p[t+1]/p[t]), indexed by the step the return starts at."""
    if len(p) < 2:
        raise LengthError("log returns need at least two prices")
    values = np.diff(np.log(p.values))
    return ReturnSeries(p.index[:-1], values)


def moving_average(p: PriceSeries, m: int) -> PriceSeries:
    """Trailing mean over the last ``m`` prices; defined from step index m-1 onward.

    This is the quasi-static support-level estimate used by the ratchet trader.
    """
    if m < 1:
        raise ParameterError(f"window must be >= 1, got {m}")
    if m > len(p):
        raise LengthError(f"window {m} exceeds series length {len(p)}")
    kernel = np.full(m, 1.0 / m)
    ma = np.convolve(p.values, kernel, mode="valid")
    # guard sub-ulp rounding so the output provably stays inside [min, max]
    ma = np.clip(ma, p.values.min(), p.values.max())
    return PriceSeries(p.index[m - 1:], ma)


def load_csv(path, date_column: str = "date", close_column: str = "close") -> PriceSeries:
    """Read a ``date,close`` CSV into a PriceSeries.

    Row numbers in error messages are 1-based file lines (the header is line 1).
    """
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if date_column not in header or close_column not in header:
            raise ParseError(
                f"{path}: header {header} lacks required columns "
                f"({date_column!r}, {close_column!r})"
            )
        date_i = header.index(date_column)
        close_i = header.index(close_column)
        labels: list[str] = []
        prices: list[float] = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) <= max(date_i, close_i):
                raise ParseError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            raw = row[close_i].strip()
            try:
                price = float(raw)
            except ValueError:
                raise ParseError(f"{path}: row {row_no}: cannot parse price {raw!r}") from None
            if not np.isfinite(price) or price <= 0.0:
                raise ValidationError(f"{path}: row {row_no}: price {raw} is not strictly positive")
            labels.append(row[date_i])
            prices.append(price)
    if not prices:
        raise LengthError(f"{path}: no data rows")
    return PriceSeries(np.arange(len(prices)), np.asarray(prices), tuple(labels))


def save_csv(p: PriceSeries, path, date_column: str = "date", close_column: str = "close") -> None:
    """Write a PriceSeries in the same ``date,close`` format load_csv reads.

    Prices are written with repr so a save/load round trip is bit-identical.
    """
    path = Path(path)
    labels = p.labels if p.labels is not None else tuple(str(int(t)) for t in p.index)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([date_column, close_column])
        for label, price in zip(labels, p.values):
            writer.writerow([label, repr(float(price))])
