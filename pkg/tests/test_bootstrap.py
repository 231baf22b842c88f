import numpy as np
import pytest

from farxts import bootstrap, farx, fda
from farxts.errors import BootstrapFailedError, InvalidArgumentError, RankDeficientError
from farxts.farx import LAG
from farxts.fda import FunctionalSeries


def noisy_problem(seed=0, n=30, K=6, exact=False):
    rng = np.random.default_rng(seed)
    grid = fda.monthly_grid()
    basis = fda.make_bspline_basis(K)
    A = 0.6 * np.linalg.qr(rng.normal(size=(K, K)))[0]
    coeffs = np.empty((n, K))
    coeffs[0] = rng.normal(size=K)
    for t in range(1, n):
        coeffs[t] = coeffs[t - 1] @ A + (0 if exact else 0.3 * rng.normal(size=K))
    raw = coeffs @ basis.evaluate(grid).T
    if not exact:
        raw = raw + 0.05 * rng.normal(size=raw.shape)
    resp = fda.smooth(raw, grid, basis)
    design = farx.build_design(resp, {}, [LAG])
    return raw, resp, design, grid


@pytest.fixture(scope="module")
def fitted():
    raw, resp, design, grid = noisy_problem()
    model = farx.fit(design, 3)
    sres = bootstrap.smoothing_residuals(raw, resp, grid)
    return model, design, sres, grid


class TestQuantiles:
    def test_single_path(self):
        path = np.arange(12.0)[None, :]
        lo, hi = bootstrap.pointwise_quantiles(path, 0.05)
        np.testing.assert_array_equal(lo, path[0])
        np.testing.assert_array_equal(hi, path[0])

    def test_order_statistic_arithmetic(self):
        paths = np.tile(np.arange(100.0)[:, None], (1, 12))
        lo, hi = bootstrap.pointwise_quantiles(paths, 0.5)
        # linear interpolation: position 0.25 * 99 and 0.75 * 99
        np.testing.assert_allclose(lo, 24.75)
        np.testing.assert_allclose(hi, 74.25)
        np.testing.assert_allclose(bootstrap.empirical_quantile(paths, 0.5), 49.5)

    def test_uniform_paths(self):
        paths = np.random.default_rng(0).uniform(size=(10000, 12))
        lo, hi = bootstrap.pointwise_quantiles(paths, 0.05)
        assert np.all(np.abs(lo - 0.025) < 0.02) and np.all(np.abs(hi - 0.975) < 0.02)


class TestSmoothingResiduals:
    def test_in_span(self):
        raw, resp, _, grid = noisy_problem(exact=True)
        assert np.max(np.abs(bootstrap.smoothing_residuals(raw, resp, grid))) <= 1e-8

    def test_constant_basis(self):
        grid = fda.monthly_grid()
        raw = np.random.default_rng(1).normal(size=(5, 12))
        resp = fda.smooth(raw, grid, fda.make_bspline_basis(1, 1))
        res = bootstrap.smoothing_residuals(raw, resp, grid)
        np.testing.assert_allclose(res, raw - raw.mean(axis=1, keepdims=True), atol=1e-12)

    def test_column_means_small(self):
        raw, resp, _, grid = noisy_problem(seed=3, n=200)
        res = bootstrap.smoothing_residuals(raw, resp, grid)
        assert np.max(np.abs(res.mean(axis=0))) < 4 * 0.05 / np.sqrt(200)


class TestBootstrapForecast:
    def test_deterministic(self, fitted):
        model, design, sres, grid = fitted
        a = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=30, seed=7)
        b = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=30, seed=7)
        np.testing.assert_array_equal(a.paths, b.paths)
        np.testing.assert_array_equal(a.lower, b.lower)
        c = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=30, seed=8)
        assert not np.array_equal(a.paths, c.paths)

    def test_parallel_matches_serial(self, fitted):
        model, design, sres, grid = fitted
        a = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=20, seed=3, n_jobs=1)
        b = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=20, seed=3, n_jobs=2)
        np.testing.assert_array_equal(a.paths, b.paths)

    def test_shapes_and_point(self, fitted):
        model, design, sres, grid = fitted
        fr = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=25, seed=1)
        assert fr.paths.shape == (25, 12)
        expected = farx.predict_next(model, design.latest).evaluate(grid)[0]
        np.testing.assert_allclose(fr.point, expected, rtol=0, atol=1e-12)
        assert len(fr.table()) == 12

    def test_point_inside_interval(self, fitted):
        model, design, sres, grid = fitted
        fr = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=100, seed=2)
        assert np.all(fr.lower <= fr.point) and np.all(fr.point <= fr.upper)

    @pytest.mark.parametrize("wide,narrow", [(0.05, 0.2), (0.01, 0.1), (0.1, 0.5)])
    def test_alpha_monotone(self, fitted, wide, narrow):
        model, design, sres, grid = fitted
        a = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=50, alpha=wide, seed=4)
        b = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=50, alpha=narrow, seed=4)
        assert np.all(b.upper - b.lower <= a.upper - a.lower + 1e-12)

    def test_noise_free_zero_width(self):
        raw, resp, design, grid = noisy_problem(exact=True, K=6)
        model = farx.fit(design, 6)
        sres = bootstrap.smoothing_residuals(raw, resp, grid)
        fr = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=40, seed=0)
        assert np.max(fr.upper - fr.lower) < 1e-6
        assert np.max(np.abs(fr.paths - fr.point)) < 1e-6

    def test_shifted(self, fitted):
        model, design, sres, grid = fitted
        fr = bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=5, seed=0)
        s = fr.shifted(np.full(12, 10.0))
        np.testing.assert_allclose(s.lower - fr.lower, 10.0)
        np.testing.assert_allclose(s.paths - fr.paths, 10.0)

    def test_invalid_arguments(self, fitted):
        model, design, sres, grid = fitted
        with pytest.raises(InvalidArgumentError):
            bootstrap.bootstrap_forecast(model, design, B=0)
        with pytest.raises(InvalidArgumentError):
            bootstrap.bootstrap_forecast(model, design, alpha=1.0)

    def test_all_refits_fail(self, fitted, monkeypatch):
        model, design, sres, grid = fitted

        def broken(*args, **kwargs):
            raise RankDeficientError("forced")

        monkeypatch.setattr(bootstrap.farx, "fit", broken)
        with pytest.raises(BootstrapFailedError):
            bootstrap.bootstrap_forecast(model, design, None, sres, grid, B=3, seed=0)
