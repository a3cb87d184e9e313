"""Moving averages and price CSV ingestion.

A k-day moving average is the plain mean of the last k closes. There are
no partial windows: the first k-1 positions are undefined and carried as
NaN so indicator arrays stay aligned with their source series.
"""

import csv
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, TextIO

import numpy as np

from .errors import DataError, InsufficientDataError, ParameterError, ParseError
from .gbm import TRADING_DT, GbmParams, PricePath, calibrate_gbm


def moving_average(close: np.ndarray, k: int) -> np.ndarray:
    """Mean of each trailing k-window, NaN where fewer than k points exist."""
    close = np.asarray(close, dtype=np.float64)
    if close.ndim != 1:
        raise DataError("close must be a 1-d series")
    if k < 1:
        raise ParameterError(f"window must be >= 1, got {k}")
    if k > close.size:
        raise InsufficientDataError(
            f"window {k} exceeds series length {close.size}"
        )
    out = np.full(close.size, np.nan)
    windows = np.lib.stride_tricks.sliding_window_view(close, k)
    out[k - 1 :] = windows.mean(axis=-1)
    return out


@dataclass
class IndicatorSet:
    """Moving averages derived from one price path, keyed by window length."""

    source: PricePath
    ma: Dict[int, np.ndarray]

    @classmethod
    def compute(cls, path: PricePath, windows: Iterable[int]) -> "IndicatorSet":
        return cls(source=path, ma={k: moving_average(path.close, k) for k in sorted(set(windows))})


def _parse_price(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row}: cannot parse {column} value {text!r}") from None
    if not np.isfinite(value) or value <= 0.0:
        raise DataError(f"row {row}: {column} price must be positive, got {text!r}")
    return value


def _degenerate_params(close: np.ndarray, dt: float) -> GbmParams:
    # Too short for a sample variance; treat as noiseless drift.
    r = float(np.diff(np.log(close)).mean()) / dt if close.size > 1 else 0.0
    return GbmParams(r=r, sigma=0.0, dt=dt, s0=float(close[0]))


def ingest_price_csv(stream: TextIO, dt: float = TRADING_DT) -> PricePath:
    """Read a price series from CSV with a 'close' column.

    An 'open' column is used when present; other columns are ignored. Data
    rows are numbered from 1 in error messages. Parameters are calibrated
    from the closes, falling back to a zero-volatility fit when the file is
    too short to calibrate.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise InsufficientDataError("empty CSV: no header row") from None
    names = [h.strip().lower() for h in header]
    if "close" not in names:
        raise ParseError("header must contain a 'close' column")
    close_col = names.index("close")
    open_col = names.index("open") if "open" in names else None

    closes, opens = [], []
    for row_num, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= close_col or (open_col is not None and len(row) <= open_col):
            raise ParseError(f"row {row_num}: expected {len(names)} columns, got {len(row)}")
        closes.append(_parse_price(row[close_col], row_num, "close"))
        if open_col is not None:
            opens.append(_parse_price(row[open_col], row_num, "open"))
    if not closes:
        raise InsufficientDataError("CSV has a header but no data rows")

    close = np.asarray(closes)
    try:
        params = calibrate_gbm(close, dt=dt)
    except InsufficientDataError:
        params = _degenerate_params(close, dt)
    return PricePath(
        params=params,
        seed=0,
        close=close,
        open=np.asarray(opens) if open_col is not None else None,
    )


def write_price_csv(path: PricePath, stream: TextIO) -> None:
    """Write a path as CSV with full-precision decimals.

    repr() of a float round-trips exactly, so ingest(write(path)) preserves
    every price bit for bit.
    """
    writer = csv.writer(stream, lineterminator="\n")
    if path.open is not None:
        writer.writerow(["open", "close"])
        for o, c in zip(path.open, path.close):
            writer.writerow([repr(float(o)), repr(float(c))])
    else:
        writer.writerow(["close"])
        for c in path.close:
            writer.writerow([repr(float(c))])
