import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farxts.errors import DegeneratePredictorError, InvalidArgumentError, ShapeError
from farxts.pls import nipals_fit, pls_predict


def _centered(a):
    return a - a.mean(axis=0)


def orthonormal_design(n, p, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(_centered(rng.normal(size=(n, p))))
    return Q


class TestNipals:
    def test_exact_scalar_relation(self):
        rng = np.random.default_rng(0)
        Z = rng.normal(size=(20, 1))
        fit = nipals_fit(Z, 3.5 * Z, 1)
        np.testing.assert_allclose(fit.coefficient, [[3.5]], atol=1e-12)
        assert np.max(np.abs(fit.fitted() - 3.5 * Z)) <= 1e-10

    @pytest.mark.parametrize("n,p,q", [(30, 5, 3), (12, 11, 4), (50, 8, 1)])
    def test_ols_oracle_orthonormal(self, n, p, q):
        Z = orthonormal_design(n, p, n * p)
        Y = np.random.default_rng(q).normal(size=(n, q))
        fit = nipals_fit(Z, Y, p)
        ols = np.linalg.solve(Z.T @ Z, Z.T @ _centered(Y))
        assert np.max(np.abs(fit.coefficient - ols)) <= 1e-8

    def test_first_component_beats_random_directions(self):
        rng = np.random.default_rng(5)
        Z = _centered(rng.normal(size=(40, 6)))
        Y = _centered(Z @ rng.normal(size=(6, 3)) + rng.normal(size=(40, 3)))
        fit = nipals_fit(Z, Y, 1)
        w = fit.x_weights[:, 0]
        # best response direction for w is the normalised Y't
        cov_best = np.sum((Y.T @ (Z @ w)) ** 2)
        for _ in range(1000):
            a = rng.normal(size=6)
            b = rng.normal(size=3)
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            assert cov_best >= ((Z @ a) @ (Y @ b)) ** 2 - 1e-9

    def test_sign_convention(self):
        rng = np.random.default_rng(2)
        fit = nipals_fit(rng.normal(size=(20, 5)), rng.normal(size=(20, 2)), 3)
        for w in fit.x_weights.T:
            assert w[np.argmax(np.abs(w))] > 0

    def test_weights_orthonormal(self):
        rng = np.random.default_rng(3)
        fit = nipals_fit(rng.normal(size=(25, 7)), rng.normal(size=(25, 3)), 5)
        np.testing.assert_allclose(fit.x_weights.T @ fit.x_weights, np.eye(5), atol=1e-10)
        T = fit.scores
        offdiag = T.T @ T - np.diag(np.diag(T.T @ T))
        assert np.max(np.abs(offdiag)) < 1e-9

    @given(st.integers(min_value=0, max_value=2 ** 31))
    @settings(max_examples=25, deadline=None)
    def test_rss_nonincreasing(self, seed):
        rng = np.random.default_rng(seed)
        Z = rng.normal(size=(15, 6))
        Y = rng.normal(size=(15, 2))
        rss = [np.sum((Y - nipals_fit(Z, Y, c).fitted()) ** 2) for c in range(1, 7)]
        assert all(b <= a + 1e-9 for a, b in zip(rss, rss[1:]))

    def test_full_rank_matches_projection(self):
        rng = np.random.default_rng(4)
        Z = rng.normal(size=(20, 5))
        Y = rng.normal(size=(20, 3))
        Zc = _centered(Z)
        proj = Zc @ np.linalg.lstsq(Zc, _centered(Y), rcond=None)[0] + Y.mean(0)
        assert np.max(np.abs(nipals_fit(Z, Y, 5).fitted() - proj)) <= 1e-6

    @pytest.mark.parametrize("c", [-3.0, 0.5, 7.0])
    def test_linear_in_response(self, c):
        rng = np.random.default_rng(6)
        Z = rng.normal(size=(18, 4))
        Y = rng.normal(size=(18, 2))
        a = nipals_fit(Z, Y, 3).coefficient
        b = nipals_fit(Z, c * Y, 3).coefficient
        np.testing.assert_allclose(b, c * a, rtol=1e-10, atol=1e-12)

    def test_invalid_components(self):
        Z = np.random.default_rng(0).normal(size=(5, 3))
        with pytest.raises(InvalidArgumentError):
            nipals_fit(Z, Z[:, 0], 0)
        with pytest.raises(InvalidArgumentError):
            nipals_fit(Z, Z[:, 0], 4)

    def test_degenerate(self):
        with pytest.raises(DegeneratePredictorError):
            nipals_fit(np.ones((6, 3)), np.arange(6.0), 1)

    def test_shape(self):
        with pytest.raises(ShapeError):
            nipals_fit(np.ones((6, 3)), np.ones(5), 1)

    def test_stops_when_space_exhausted(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(12, 2))
        Z = np.hstack([base, base @ rng.normal(size=(2, 3))])
        fit = nipals_fit(Z, rng.normal(size=(12, 2)), 4)
        assert fit.n_components == 2


class TestPredict:
    def test_training_rows(self):
        rng = np.random.default_rng(8)
        Z = rng.normal(size=(20, 4))
        Y = rng.normal(size=(20, 3))
        fit = nipals_fit(Z, Y, 2)
        assert np.max(np.abs(pls_predict(fit, Z) - fit.fitted())) <= 1e-8

    def test_mean_row(self):
        rng = np.random.default_rng(9)
        Z = rng.normal(size=(20, 4))
        Y = rng.normal(size=(20, 3))
        fit = nipals_fit(Z, Y, 2)
        np.testing.assert_allclose(pls_predict(fit, fit.x_mean[None, :])[0], fit.y_mean, atol=1e-12)

    def test_exact_linear(self):
        rng = np.random.default_rng(10)
        Z = rng.normal(size=(25, 3))
        b = rng.normal(size=(3, 2))
        fit = nipals_fit(Z, Z @ b, 3)
        Znew = rng.normal(size=(4, 3))
        assert np.max(np.abs(pls_predict(fit, Znew) - Znew @ b)) <= 1e-8
