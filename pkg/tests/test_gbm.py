import numpy as np
import pytest

from chartcnn.errors import DataError, InsufficientDataError, ParameterError
from chartcnn.gbm import (
    TRADING_DT,
    GbmParams,
    PricePath,
    calibrate_gbm,
    simulate_ohlc_path,
    simulate_path,
)


def test_trading_dt():
    assert TRADING_DT == 1 / 252


class TestGbmParams:
    def test_valid(self, params):
        assert params.sigma == 0.2

    @pytest.mark.parametrize(
        "kw",
        [
            {"sigma": -0.1},
            {"dt": 0.0},
            {"dt": -1.0},
            {"s0": 0.0},
            {"s0": -5.0},
            {"r": float("nan")},
            {"sigma": float("inf")},
        ],
    )
    def test_invalid(self, kw):
        base = dict(r=0.05, sigma=0.2, dt=1 / 252, s0=100.0)
        base.update(kw)
        with pytest.raises(ParameterError):
            GbmParams(**base)

    def test_zero_sigma_allowed(self):
        p = GbmParams(r=0.05, sigma=0.0, dt=1 / 252, s0=100.0)
        path = simulate_path(p, 10, seed=0)
        # no volatility: pure exponential drift
        expected = 100.0 * np.exp(0.05 * np.arange(11) / 252)
        np.testing.assert_allclose(path.close, expected, rtol=1e-12)


class TestPricePath:
    def test_length(self, short_path):
        assert len(short_path) == 61

    def test_rejects_nonpositive(self, params):
        with pytest.raises(DataError):
            PricePath(params, 0, close=[100.0, -1.0])

    def test_rejects_open_length_mismatch(self, params):
        with pytest.raises(DataError):
            PricePath(params, 0, close=[100.0, 101.0], open=[100.0])


class TestSimulatePath:
    def test_length_and_start(self, params):
        path = simulate_path(params, 30, seed=9)
        assert path.close.shape == (31,)
        assert path.close[0] == params.s0

    def test_log_recurrence_against_manual_loop(self, params):
        # independent oracle: sequential multiply, one step at a time
        normals = [0.5, -1.0, 2.0]
        inject = lambda n: np.array(normals[:n])
        path = simulate_path(params, 3, seed=0, normals=inject)
        drift = (params.r - 0.5 * params.sigma**2) * params.dt
        vol = params.sigma * np.sqrt(params.dt)
        manual = [params.s0]
        for b in normals:
            manual.append(manual[-1] * np.exp(drift + vol * b))
        np.testing.assert_allclose(path.close, manual, rtol=1e-12)

    def test_seed_determinism(self, params):
        a = simulate_path(params, 50, seed=123).close
        b = simulate_path(params, 50, seed=123).close
        np.testing.assert_array_equal(a, b)

    def test_frozen_regression_values(self, params):
        got = simulate_path(params, 5, seed=123).close
        expected = [
            100.0,
            100.10341423948441,
            98.42720885031984,
            97.65577032720122,
            96.8826487979772,
            96.55229481648591,
        ]
        np.testing.assert_array_equal(got, expected)

    def test_distinct_seeds_differ(self, params):
        a = simulate_path(params, 20, seed=1).close
        b = simulate_path(params, 20, seed=2).close
        assert not np.array_equal(a, b)

    def test_positive_prices(self, params):
        path = simulate_path(params, 2000, seed=4)
        assert np.all(path.close > 0)

    def test_rejects_bad_steps(self, params):
        with pytest.raises(ParameterError):
            simulate_path(params, 0, seed=0)


class TestSimulateOhlc:
    def test_half_step_consistency(self, params):
        # the open/close pair comes from one path on a dt/2 grid
        normals = [0.5, -1.0, 2.0, 0.25, -0.5, 1.0]
        inject = lambda n: np.array(normals[:n])
        path = simulate_ohlc_path(params, 3, seed=0, normals=inject)
        drift = (params.r - 0.5 * params.sigma**2) * (params.dt / 2)
        vol = params.sigma * np.sqrt(params.dt / 2)
        h = [params.s0]
        for b in normals:
            h.append(h[-1] * np.exp(drift + vol * b))
        np.testing.assert_allclose(path.open, [h[0], h[1], h[3], h[5]], rtol=1e-12)
        np.testing.assert_allclose(path.close, [h[0], h[2], h[4], h[6]], rtol=1e-12)

    def test_shapes_and_anchor(self, params):
        path = simulate_ohlc_path(params, 40, seed=3)
        assert path.open.shape == path.close.shape == (41,)
        assert path.open[0] == path.close[0] == params.s0

    def test_frozen_regression_values(self, params):
        path = simulate_ohlc_path(params, 3, seed=77)
        np.testing.assert_array_equal(
            path.open,
            [100.0, 100.49897636509054, 100.68222397114917, 102.18001390104195],
        )
        np.testing.assert_array_equal(
            path.close,
            [100.0, 100.89658501841738, 101.965887620979, 102.16892462727887],
        )

    def test_close_only_stream_is_not_shared(self, params):
        # OHLC consumes two normals per day, so closes differ from the
        # daily-grid path under the same seed
        daily = simulate_path(params, 20, seed=8).close
        ohlc = simulate_ohlc_path(params, 20, seed=8).close
        assert not np.array_equal(daily, ohlc)


class TestCalibrate:
    def test_formulas(self):
        close = np.array([100.0, 101.0, 99.5, 102.0, 103.0])
        dt = 1 / 252
        cal = calibrate_gbm(close, dt)
        lr = np.diff(np.log(close))
        sig2 = lr.var(ddof=1) / dt
        assert cal.sigma == pytest.approx(np.sqrt(sig2), rel=1e-12)
        assert cal.r == pytest.approx(lr.mean() / dt + sig2 / 2, rel=1e-12)
        assert cal.dt == dt
        assert cal.s0 == 100.0

    def test_recovers_generating_parameters(self, params):
        path = simulate_path(params, 100000, seed=5)
        cal = calibrate_gbm(path.close, params.dt)
        assert cal.sigma == pytest.approx(params.sigma, abs=0.002)
        assert cal.r == pytest.approx(params.r, abs=0.02)

    def test_needs_three_prices(self):
        with pytest.raises(InsufficientDataError):
            calibrate_gbm(np.array([100.0, 101.0]), 1 / 252)
