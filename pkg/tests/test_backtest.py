import numpy as np
import pytest

from farxts import baselines, io
from farxts.backtest import FORECAST_COLUMNS, MODELS, SCORE_COLUMNS, backtest, window_seed
from farxts.errors import InsufficientDataError, InvalidArgumentError
from farxts.io import StationDataset
from farxts.simulate import synthetic_station


def fast_config(**extra):
    over = {"model.k_grid": [5, 6], "model.component_grid": [1, 2, 3], "bootstrap.B": 20}
    over.update(extra)
    return io.load_config(None, over)


@pytest.fixture(scope="module")
def report():
    return backtest(synthetic_station(1), fast_config())


class TestBacktestReport:
    def test_seven_curves_per_model(self, report):
        assert report.test_years == list(range(2007, 2014))
        for name in MODELS:
            assert report.curves(name) == report.test_years, name

    def test_intervals_present(self, report):
        for r in report.forecasts:
            assert set(r) == set(FORECAST_COLUMNS)
            if r["model"] == "naive_monthly":
                assert r["lower"] is None
            else:
                assert r["lower"] <= r["upper"]

    def test_score_rows(self, report):
        assert len(report.scores) == 7 * len(MODELS)
        assert all(list(r) == list(SCORE_COLUMNS) for r in report.scores)

    def test_frozen_and_trace(self, report):
        assert report.frozen["farx"]["window"] == 2007
        assert report.selection["selected"] == report.frozen["farx"]["selected"]
        assert report.frozen["far"]["selected"] == ["lag"]
        assert {r["model"] for r in report.hyperparameters} == {"farx", "far"}
        assert not report.failures

    def test_summary_statistics_included(self, report):
        assert set(report.summary) == {"river_flow", "rainfall", "temperature", "evaporation"}


class TestBacktestProperties:
    def test_periodic_data_perfect_baselines(self):
        rng = np.random.default_rng(0)
        years = list(range(1990, 2004))
        variables = {name: np.tile(rng.uniform(1, 5, 12), (len(years), 1))
                     for name in ("river_flow", "rainfall", "temperature", "evaporation")}
        rep = backtest(StationDataset("p", variables, years),
                       fast_config(**{"split.train_end": 2000, "split.test_end": 2003}))
        for r in rep.scores:
            if r["model"] in ("seasonal_naive", "mean_curve", "farx", "far"):
                assert r["rmspe"] == pytest.approx(0.0, abs=1e-10), r["model"]

    def test_variable_order_irrelevant(self):
        ds = synthetic_station(2, n_years=20)
        cfg = fast_config(**{"split.train_end": 1992, "split.test_end": 1994,
                             "model.select": False})
        a = backtest(ds, cfg)
        cfg2 = dict(cfg, **{"model.variables": cfg["model.variables"][::-1]})
        b = backtest(ds, cfg2)
        pa = [r["point"] for r in a.forecasts if r["model"] == "farx"]
        pb = [r["point"] for r in b.forecasts if r["model"] == "farx"]
        np.testing.assert_allclose(pa, pb, rtol=0, atol=1e-9)

    def test_insufficient_training(self):
        ds = synthetic_station(3, n_years=8)
        with pytest.raises(InsufficientDataError):
            backtest(ds, fast_config(**{"split.train_end": 1980, "split.test_end": 1984}))

    def test_unknown_variable(self):
        with pytest.raises(InvalidArgumentError):
            backtest(synthetic_station(0, n_years=10), fast_config(**{"model.variables": ["snow"]}))

    def test_window_seed_distinct(self):
        seeds = {window_seed(0, y, m) for y in range(2000, 2010) for m in range(2)}
        assert len(seeds) == 20


class TestBaselines:
    def test_seasonal_naive(self):
        h = np.arange(36.0).reshape(3, 12)
        out = baselines.seasonal_naive(h)
        np.testing.assert_array_equal(out["point"], h[-1])
        np.testing.assert_allclose(out["upper"] - out["lower"], 0.0)

    def test_mean_curve(self):
        h = np.random.default_rng(0).normal(size=(6, 12))
        np.testing.assert_allclose(baselines.mean_curve(h)["point"], h.mean(axis=0))

    def test_naive_monthly(self):
        h = np.arange(12.0)[None, :]
        target = np.arange(12.0) + 100
        np.testing.assert_array_equal(baselines.naive_monthly(h, target)["point"],
                                      np.concatenate([[11.0], target[:-1]]))
