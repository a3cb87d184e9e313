"""Trading-rule labels for chart windows.

A window covers days [start, end] of a path; its label looks H days past
the end. All comparisons are inclusive: landing exactly on a threshold
takes the action. Encoding is Sell = -1, Hold = 0, Buy = +1, with dense
class indices 0, 1, 2 in that order for the classifier head.

Rules:
  price-threshold   Buy when close[end+H] >= close[end] * (1 + buy_th),
                    Sell when close[end+H] <= close[end] * (1 - sell_th),
                    otherwise Hold.
  next-day          price-threshold with H fixed to 1.
  ma-alignment      at day e = end + H, Buy when ma_fast[e] >= ma_mid[e] *
                    (1 + buy_th) and ma_mid[e] >= ma_slow[e] * (1 + buy_th);
                    Sell mirrors with (1 - sell_th); otherwise Hold.
  open-close-gap    Buy when open[end+H] >= close[end] * (1 + buy_th),
                    Sell when open[end+H] <= close[end] * (1 - sell_th),
                    otherwise Hold.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import DataError, OutOfRangeError, ParameterError
from .gbm import PricePath
from .series import IndicatorSet

STRATEGY_KINDS = ("price-threshold", "next-day", "ma-alignment", "open-close-gap")


class Label(enum.IntEnum):
    SELL = -1
    HOLD = 0
    BUY = 1

    @property
    def class_index(self) -> int:
        return int(self) + 1

    @staticmethod
    def from_class_index(index: int) -> "Label":
        if index not in (0, 1, 2):
            raise ParameterError(f"class index must be 0, 1, or 2, got {index}")
        return Label(index - 1)


CLASS_ORDER = (Label.SELL, Label.HOLD, Label.BUY)
CLASS_NAMES = ("sell", "hold", "buy")


@dataclass(frozen=True)
class StrategySpec:
    """Which rule labels a window and with what geometry and thresholds."""

    kind: str
    window: int
    holding: int = 1
    buy_th: float = 0.01
    sell_th: float = 0.01
    ma_fast: Optional[int] = None
    ma_mid: Optional[int] = None
    ma_slow: Optional[int] = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ParameterError(f"unknown strategy kind {self.kind!r}")
        if self.window < 2:
            raise ParameterError(f"window must be >= 2, got {self.window}")
        if self.holding < 1:
            raise ParameterError(f"holding must be >= 1, got {self.holding}")
        if self.kind == "next-day" and self.holding != 1:
            raise ParameterError("next-day strategy has a fixed holding of 1")
        for name, th in (("buy_th", self.buy_th), ("sell_th", self.sell_th)):
            if not math.isfinite(th) or th <= 0.0:
                raise ParameterError(f"{name} must be > 0, got {th}")
        if self.kind == "ma-alignment":
            mas = (self.ma_fast, self.ma_mid, self.ma_slow)
            if any(m is None for m in mas):
                raise ParameterError("ma-alignment needs ma_fast, ma_mid, ma_slow")
            if not (0 < self.ma_fast < self.ma_mid < self.ma_slow):
                raise ParameterError(
                    f"moving averages must be increasing, got {mas}"
                )

    @property
    def ma_windows(self) -> tuple:
        if self.kind != "ma-alignment":
            return ()
        return (self.ma_fast, self.ma_mid, self.ma_slow)


def _ma_at(indicators: IndicatorSet, k: int, day: int) -> float:
    if indicators is None or k not in indicators.ma:
        raise DataError(f"ma{k} is required but was not computed")
    value = indicators.ma[k][day]
    if math.isnan(value):
        raise DataError(f"ma{k} is undefined at day {day}")
    return float(value)


def label_window(
    path: PricePath,
    indicators: Optional[IndicatorSet],
    end: int,
    spec: StrategySpec,
) -> Label:
    """Label the window whose last day is `end` under the given strategy."""
    if end < 0:
        raise OutOfRangeError(f"end must be >= 0, got {end}")
    e = end + spec.holding
    if e >= len(path):
        raise OutOfRangeError(
            f"label day {e} is past the end of a length-{len(path)} path"
        )

    if spec.kind in ("price-threshold", "next-day"):
        ref = path.close[end]
        fut = path.close[e]
        if fut >= ref * (1.0 + spec.buy_th):
            return Label.BUY
        if fut <= ref * (1.0 - spec.sell_th):
            return Label.SELL
        return Label.HOLD

    if spec.kind == "open-close-gap":
        if path.open is None:
            raise DataError("open-close-gap needs a path with open prices")
        ref = path.close[end]
        fut = path.open[e]
        if fut >= ref * (1.0 + spec.buy_th):
            return Label.BUY
        if fut <= ref * (1.0 - spec.sell_th):
            return Label.SELL
        return Label.HOLD

    fast = _ma_at(indicators, spec.ma_fast, e)
    mid = _ma_at(indicators, spec.ma_mid, e)
    slow = _ma_at(indicators, spec.ma_slow, e)
    if fast >= mid * (1.0 + spec.buy_th) and mid >= slow * (1.0 + spec.buy_th):
        return Label.BUY
    if fast <= mid * (1.0 - spec.sell_th) and mid <= slow * (1.0 - spec.sell_th):
        return Label.SELL
    return Label.HOLD
