import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farxts.errors import InvalidArgumentError, NoValidPointsError, ShapeError
from farxts.metrics import (
    curve_scores,
    interval_scores,
    pbias_conventional,
    relative_errors,
    rmse_conventional,
)


def spreadsheet_scores(obs, pred, eps=1e-8):
    """Row-by-row recomputation with plain Python arithmetic."""
    r = [abs(p - o) / abs(o) for o, p in zip(obs, pred) if abs(o) > eps]
    n = len(r)
    srt = sorted(r)
    med = srt[n // 2] if n % 2 else 0.5 * (srt[n // 2 - 1] + srt[n // 2])
    return {"rmspe": sum(math.sqrt(x * x) for x in r) / n, "mape": sum(r) / n,
            "rmespe": med, "pbias": sum(r), "re": 100 * sum(r) / n, "n_valid": n}


class TestCurveScores:
    def test_perfect(self):
        obs = np.linspace(1, 3, 12)
        s = curve_scores(obs, obs)
        assert s.rmspe == s.mape == s.rmespe == s.pbias == s.re == 0.0
        assert s.n_valid == 12

    def test_double(self):
        obs = np.linspace(1, 3, 12)
        s = curve_scores(obs, 2 * obs)
        assert s.mape == 1 and s.rmspe == 1 and s.rmespe == 1
        assert s.re == 100 and s.pbias == 12

    @pytest.mark.parametrize("seed", range(20))
    def test_recomputation_oracle(self, seed):
        rng = np.random.default_rng(seed)
        obs = rng.normal(size=12) * 5
        obs[seed % 12] = 0.0  # excluded point
        pred = obs + rng.normal(size=12)
        got = curve_scores(obs, pred).as_dict()
        for key, val in spreadsheet_scores(obs.tolist(), pred.tolist()).items():
            assert abs(got[key] - val) <= 1e-12 * max(1.0, abs(val)), key

    @given(st.integers(min_value=0, max_value=2 ** 31),
           st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        obs = rng.uniform(1, 10, 12)
        pred = obs * rng.uniform(0.5, 1.5, 12)
        a = curve_scores(obs, pred).as_dict()
        b = curve_scores(c * obs, c * pred).as_dict()
        for k in a:
            assert b[k] == pytest.approx(a[k], rel=1e-9, abs=1e-12)

    @given(st.integers(min_value=0, max_value=2 ** 31))
    @settings(max_examples=40, deadline=None)
    def test_scalar_norm_reading(self, seed):
        rng = np.random.default_rng(seed)
        s = curve_scores(rng.normal(size=12), rng.normal(size=12))
        assert abs(s.rmspe - s.mape) <= 1e-15
        assert s.re == pytest.approx(100 * s.mape, rel=1e-15)

    def test_all_zero_observed(self):
        with pytest.raises(NoValidPointsError):
            curve_scores(np.zeros(12), np.ones(12))

    def test_shape(self):
        with pytest.raises(ShapeError):
            curve_scores(np.ones(12), np.ones(11))

    def test_relative_errors_skip_small(self):
        r = relative_errors([0.0, 2.0, 1e-9], [1.0, 3.0, 5.0])
        np.testing.assert_allclose(r, [0.5])

    def test_conventional(self):
        obs = np.array([1.0, 2.0, 3.0])
        pred = np.array([2.0, 2.0, 5.0])
        assert rmse_conventional(obs, pred) == pytest.approx(math.sqrt(5 / 3))
        assert pbias_conventional(obs, pred) == pytest.approx(50.0)


class TestIntervalScores:
    def test_all_covered(self):
        obs = np.zeros(12)
        s = interval_scores(obs, obs - 1, obs + 2, 0.05)
        assert s.score == 3.0
        assert s.cpd == abs(0.95 - 1.0)

    def test_zero_width_at_observations(self):
        obs = np.arange(12.0)
        s = interval_scores(obs, obs, obs, 0.05)
        assert s.score == 0.0
        assert s.cpd == abs(0.95 - 1.0)

    def test_one_miss_above(self):
        obs = np.zeros(12)
        obs[4] = 1.0
        bounds = np.zeros(12)
        s = interval_scores(obs, bounds, bounds, 0.05)
        assert s.score == (2 / 0.05) * 1 / 12
        assert s.score == pytest.approx(10 / 3, rel=1e-15)
        assert s.cpd == abs(0.95 - 11 / 12)

    def test_miss_below(self):
        s = interval_scores([0.0], [1.0], [2.0], 0.2)
        assert s.score == 1.0 + (2 / 0.2) * 1.0

    @given(st.integers(min_value=0, max_value=2 ** 31), st.floats(min_value=0.01, max_value=1.0))
    @settings(max_examples=40, deadline=None)
    def test_widening_covering_interval_increases_score(self, seed, extra):
        rng = np.random.default_rng(seed)
        obs = rng.normal(size=12)
        lo = obs - rng.uniform(0, 1, 12)
        hi = obs + rng.uniform(0, 1, 12)
        a = interval_scores(obs, lo, hi, 0.05).score
        b = interval_scores(obs, lo - extra, hi, 0.05).score
        assert b > a

    def test_invalid(self):
        with pytest.raises(InvalidArgumentError):
            interval_scores([0.0], [1.0], [0.0], 0.05)
        with pytest.raises(InvalidArgumentError):
            interval_scores([0.0], [0.0], [1.0], 1.5)
        with pytest.raises(ShapeError):
            interval_scores([0.0, 1.0], [0.0], [1.0], 0.05)
