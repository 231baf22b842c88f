"""Residual bootstrap prediction intervals for one-step curve forecasts.

Two residual pools feed the bootstrap: fitted-model residual curves (in
coefficient space) and smoothing residuals (raw minus smoothed values on
the observation grid). Each replicate resamples whole residual curves,
rebuilds a response, refits the coefficient surface with the parent
model's hyperparameters and forecasts with fresh residual draws added.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import farx, fda
from .errors import BootstrapFailedError, FarxError, InvalidArgumentError, ShapeError
from .fda import FunctionalSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ForecastResult:
    point_coeffs: np.ndarray
    point: np.ndarray
    paths: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    grid: np.ndarray
    alpha: float
    B: int
    seed: int

    def shifted(self, offset) -> "ForecastResult":
        """Add a fixed grid vector to the point, paths and bounds."""
        offset = np.asarray(offset, dtype=float)
        return replace(self, point=self.point + offset, paths=self.paths + offset,
                       lower=self.lower + offset, upper=self.upper + offset)

    def table(self):
        """Rows ``(index, point, lower, upper)`` over the grid."""
        return [(j + 1, float(p), float(lo), float(hi))
                for j, (p, lo, hi) in enumerate(zip(self.point, self.lower, self.upper))]


def smoothing_residuals(raw, smoothed: FunctionalSeries, grid) -> np.ndarray:
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    fitted = smoothed.evaluate(grid, with_mean=True)
    if raw.shape != fitted.shape:
        raise ShapeError(f"raw values {raw.shape} do not match smoothed curves {fitted.shape}")
    return raw - fitted


def empirical_quantile(paths, level):
    return np.quantile(np.asarray(paths, dtype=float), level, axis=0, method="linear")


def pointwise_quantiles(paths, alpha: float):
    """Columnwise ``alpha/2`` and ``1 - alpha/2`` quantiles (linear interpolation)."""
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    if paths.shape[0] < 1:
        raise InvalidArgumentError("need at least one path")
    lower, upper = np.quantile(paths, [alpha / 2, 1 - alpha / 2], axis=0, method="linear")
    return lower, upper


def _replicate_path(model, design, latest, smooth_res, grid_basis, seed, b, max_attempts):
    residuals = model.fitted_residual_coeffs
    n_res = residuals.shape[0]
    n_comp = model.hyperparams["n_components_requested"]
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, b, attempt])
        draw = residuals[rng.integers(0, n_res, size=n_res)]
        try:
            refit = farx.fit(design.with_response(model.fitted_coeffs + draw), n_comp)
        except FarxError as exc:
            logger.debug("replicate %d attempt %d failed: %s", b, attempt, exc)
            continue
        coeffs = refit.predict_coeffs(latest)[0] + residuals[rng.integers(0, n_res)]
        path = grid_basis @ coeffs
        if smooth_res is not None:
            path = path + smooth_res[rng.integers(0, smooth_res.shape[0])]
        return path, attempt + 1
    return None, max_attempts


def _replicate_chunk(args):
    model, design, latest, smooth_res, grid_basis, seed, indices, max_attempts = args
    return [_replicate_path(model, design, latest, smooth_res, grid_basis, seed, b, max_attempts)
            for b in indices]


def bootstrap_forecast(model: farx.FarxModel, design: farx.LaggedDesign, latest=None,
                       smoothing_resids=None, grid=None, B: int = 100, alpha: float = 0.05,
                       seed: int = 0, n_jobs: int = 1) -> ForecastResult:
    """Point forecast plus ``B`` bootstrap future curves and their quantiles.

    ``latest`` defaults to ``design.latest``; ``smoothing_resids`` is a
    pool of grid-length rows (``None`` leaves that error source out).
    Replicate ``b`` draws from the stream ``(seed, b, attempt)``, so serial
    and parallel runs agree exactly. A failed refit is redrawn; more than
    ``3 B`` attempts in total is an error.
    """
    if B < 1:
        raise InvalidArgumentError(f"B must be >= 1, got {B}")
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must be in (0, 1), got {alpha}")
    if model.fitted_coeffs.shape != design.response.shape:
        raise ShapeError("model was not fitted on this design")
    grid = fda.monthly_grid() if grid is None else np.asarray(grid, dtype=float)
    row = np.ascontiguousarray(model.stack(design.latest if latest is None else latest))
    grid_basis = np.ascontiguousarray(model.response_basis.evaluate(grid))
    if smoothing_resids is not None:
        smoothing_resids = np.ascontiguousarray(np.atleast_2d(np.asarray(smoothing_resids, dtype=float)))
        if smoothing_resids.shape[1] != len(grid):
            raise ShapeError("smoothing residual rows must match the grid")

    point_coeffs = model.predict_coeffs(row)[0]
    max_attempts = 3 * B
    if n_jobs > 1 and B > 1:
        chunks = np.array_split(np.arange(B), min(n_jobs, B))
        jobs = [(model, design, row, smoothing_resids, grid_basis, seed, c.tolist(), max_attempts)
                for c in chunks]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = [r for chunk in pool.map(_replicate_chunk, jobs) for r in chunk]
    else:
        results = _replicate_chunk((model, design, row, smoothing_resids, grid_basis, seed,
                                    range(B), max_attempts))

    if any(path is None for path, _ in results) or sum(n for _, n in results) > max_attempts:
        raise BootstrapFailedError(f"bootstrap refits failed beyond {max_attempts} attempts")
    paths = np.vstack([path for path, _ in results])
    lower, upper = pointwise_quantiles(paths, alpha)
    return ForecastResult(point_coeffs, grid_basis @ point_coeffs, paths, lower, upper,
                          grid, float(alpha), int(B), int(seed))
