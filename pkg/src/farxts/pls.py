"""Partial least squares regression by NIPALS.

Each component takes the X-weight that maximises the squared covariance
between ``Z w`` and ``Y v`` over unit vectors, on the data deflated by the
previous components. The regression matrix is ``W (P'W)^-1 Q'``.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegeneratePredictorError, InvalidArgumentError, ShapeError

TOL = 1e-12
MAX_ITER = 500
# Relative size of Z'Y below which the response counts as fully explained.
EXHAUSTED = 1e-10


@dataclass(frozen=True, eq=False)
class PlsFit:
    n_components: int
    x_weights: np.ndarray
    scores: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    coefficient: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray
    n_iter: tuple = ()

    def fitted(self) -> np.ndarray:
        """NIPALS fitted values ``T Q' + y_mean``."""
        return self.scores @ self.y_loadings.T + self.y_mean


def _sign_fix(w):
    k = int(np.argmax(np.abs(w)))
    return -w if w[k] < 0 else w


def _dominant_weight(Zk, Yk, cross_scale):
    M = Zk.T @ Yk
    if np.linalg.norm(M) <= EXHAUSTED * cross_scale:
        # Y carries nothing more that Z can explain; a power iteration here
        # would chase round-off, so take the leading direction of Z itself.
        return _sign_fix(np.linalg.svd(Zk, full_matrices=False)[2][0]), 0
    w, it = kernels.nipals_weights(np.ascontiguousarray(Zk), np.ascontiguousarray(Yk), TOL, MAX_ITER)
    if it >= MAX_ITER or not np.all(np.isfinite(w)) or not np.any(w):
        w, it = np.linalg.svd(M, full_matrices=False)[0][:, 0], 0
    return _sign_fix(w), int(it)


def nipals_fit(Z, Y, n_components: int) -> PlsFit:
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Z.ndim != 2 or Y.shape[0] != Z.shape[0]:
        raise ShapeError(f"Z {Z.shape} and Y {Y.shape} must have the same number of rows")
    n, p = Z.shape
    if n < 2:
        raise InvalidArgumentError("PLS needs at least 2 observations")
    if not 1 <= n_components <= min(n - 1, p):
        raise InvalidArgumentError(
            f"n_components must be in [1, {min(n - 1, p)}], got {n_components}")

    x_mean = Z.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Zk = Z - x_mean
    Yk = Y - y_mean
    z_scale = np.abs(Zk).max()
    if z_scale == 0 or not np.isfinite(z_scale):
        raise DegeneratePredictorError("predictor matrix has zero variance")

    cross_scale = np.linalg.norm(Zk.T @ Yk)
    W, T, P, Q, iters = [], [], [], [], []
    for _ in range(n_components):
        w, it = _dominant_weight(Zk, Yk, cross_scale)
        t = Zk @ w
        tt = t @ t
        if tt <= (1e-13 * z_scale) ** 2 * n:
            # predictor space exhausted; later components would be noise
            break
        p_load = Zk.T @ t / tt
        q_load = Yk.T @ t / tt
        Zk = Zk - np.outer(t, p_load)
        Yk = Yk - np.outer(t, q_load)
        W.append(w)
        T.append(t)
        P.append(p_load)
        Q.append(q_load)
        iters.append(it)

    if not W:
        raise DegeneratePredictorError("no PLS component could be extracted")
    W = np.column_stack(W)
    T = np.column_stack(T)
    P = np.column_stack(P)
    Q = np.column_stack(Q)
    coefficient = W @ np.linalg.solve(P.T @ W, Q.T)
    return PlsFit(W.shape[1], W, T, P, Q, coefficient, x_mean, y_mean, tuple(iters))


def pls_predict(fit: PlsFit, Z_new) -> np.ndarray:
    Z_new = np.atleast_2d(np.asarray(Z_new, dtype=float))
    if Z_new.shape[1] != fit.coefficient.shape[0]:
        raise ShapeError(f"expected {fit.coefficient.shape[0]} predictor columns, got {Z_new.shape[1]}")
    return (Z_new - fit.x_mean) @ fit.coefficient + fit.y_mean
