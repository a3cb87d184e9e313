"""Geometric Brownian motion simulation and calibration.

Prices evolve in log space: with X = ln S,

    X[t] = X[t-1] + (r - sigma**2 / 2) * dt + sigma * sqrt(dt) * b[t]

where the b[t] are i.i.d. standard normals. Daily paths use dt = 1/252.
Open prices, when requested, are taken from the same process sampled at
half steps: open[t] is the price after half-step 2t-1 and close[t] after
half-step 2t, so opens and closes interleave on one consistent path.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DataError, InsufficientDataError, ParameterError
from .seeding import GaussianStream

TRADING_DT = 1.0 / 252.0


@dataclass(frozen=True)
class GbmParams:
    """Model parameters: yearly drift r, yearly volatility sigma, step size
    dt in years, and initial price s0."""

    r: float
    sigma: float
    dt: float = TRADING_DT
    s0: float = 100.0

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise ParameterError(f"r must be finite, got {self.r}")
        if not np.isfinite(self.sigma) or self.sigma < 0.0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if not np.isfinite(self.dt) or self.dt <= 0.0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if not np.isfinite(self.s0) or self.s0 <= 0.0:
            raise ParameterError(f"s0 must be > 0, got {self.s0}")


@dataclass
class PricePath:
    """A simulated or ingested price series.

    close[0] is always the initial price. open is present only for paths
    simulated (or ingested) with open prices and then has the same length
    as close, with open[0] = close[0] by convention.
    """

    params: GbmParams
    seed: int
    close: np.ndarray
    open: Optional[np.ndarray] = None
    path_id: int = 0

    def __post_init__(self):
        self.close = np.asarray(self.close, dtype=np.float64)
        if self.close.ndim != 1 or self.close.size < 1:
            raise DataError("close must be a 1-d series of length >= 1")
        if not np.all(np.isfinite(self.close)) or np.any(self.close <= 0.0):
            raise DataError("close prices must be finite and positive")
        if self.open is not None:
            self.open = np.asarray(self.open, dtype=np.float64)
            if self.open.shape != self.close.shape:
                raise DataError("open and close must have equal length")
            if not np.all(np.isfinite(self.open)) or np.any(self.open <= 0.0):
                raise DataError("open prices must be finite and positive")

    def __len__(self) -> int:
        return int(self.close.size)


def _log_increments(params: GbmParams, dt: float, normals: np.ndarray) -> np.ndarray:
    drift = (params.r - 0.5 * params.sigma**2) * dt
    vol = params.sigma * np.sqrt(dt)
    return drift + vol * normals


def simulate_path(
    params: GbmParams,
    n_steps: int,
    seed: int,
    normals: Optional[Callable[[int], np.ndarray]] = None,
) -> PricePath:
    """Simulate n_steps daily closes after the initial price.

    Returns a path of length n_steps + 1 with close[0] = s0. The normals
    argument lets tests inject a deterministic shock sequence; by default
    shocks come from the seeded Gaussian stream.
    """
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    draw = normals if normals is not None else GaussianStream(seed).draw
    b = np.asarray(draw(n_steps), dtype=np.float64)
    if b.shape != (n_steps,):
        raise ParameterError("normal source returned wrong number of shocks")
    x = np.log(params.s0) + np.cumsum(_log_increments(params, params.dt, b))
    close = np.concatenate([[params.s0], np.exp(x)])
    return PricePath(params=params, seed=seed, close=close)


def simulate_ohlc_path(
    params: GbmParams,
    n_steps: int,
    seed: int,
    normals: Optional[Callable[[int], np.ndarray]] = None,
) -> PricePath:
    """Simulate opens and closes from one path sampled at half steps.

    Each day consumes two half-steps of size dt/2: the first lands on the
    day's open, the second on its close. With sigma = 0 this gives
    open[t] = close[t-1] * exp(r * dt / 2) for every t >= 1.
    """
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    draw = normals if normals is not None else GaussianStream(seed).draw
    b = np.asarray(draw(2 * n_steps), dtype=np.float64)
    if b.shape != (2 * n_steps,):
        raise ParameterError("normal source returned wrong number of shocks")
    x = np.log(params.s0) + np.cumsum(_log_increments(params, params.dt / 2.0, b))
    half = np.exp(x)
    opens = np.concatenate([[params.s0], half[0::2]])
    closes = np.concatenate([[params.s0], half[1::2]])
    return PricePath(params=params, seed=seed, close=closes, open=opens)


def calibrate_gbm(close: np.ndarray, dt: float = TRADING_DT) -> GbmParams:
    """Recover (r, sigma) from a close series by moment matching.

    sigma_hat**2 is the sample variance (ddof=1) of log returns divided by
    dt, and r_hat adds the half-variance correction back onto the mean log
    return. Needs at least 3 prices for the variance to exist.
    """
    close = np.asarray(close, dtype=np.float64)
    if close.ndim != 1:
        raise DataError("close must be a 1-d series")
    if close.size < 3:
        raise InsufficientDataError(
            f"calibration needs at least 3 prices, got {close.size}"
        )
    if not np.all(np.isfinite(close)) or np.any(close <= 0.0):
        raise DataError("close prices must be finite and positive")
    if dt <= 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    d = np.diff(np.log(close))
    sigma2 = float(np.var(d, ddof=1)) / dt
    r = float(np.mean(d)) / dt + 0.5 * sigma2
    return GbmParams(r=r, sigma=float(np.sqrt(sigma2)), dt=dt, s0=float(close[0]))
