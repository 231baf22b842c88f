"""Point-forecast and interval metrics for one predicted curve.

The relative-error metrics follow the published definitions, where each
per-month relative error is wrapped in an L2 norm. For a scalar that norm is
the absolute value, so RMSPE and MAPE coincide and RE is 100 * MAPE. The
conventional RMSE and percent bias are available separately.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgumentError, NoValidPointsError, ShapeError

EPSILON = 1e-8

POINT_METRICS = ("rmspe", "mape", "rmespe", "pbias", "re")
INTERVAL_METRICS = ("score", "cpd")


@dataclass(frozen=True)
class CurveScore:
    rmspe: float
    mape: float
    rmespe: float
    pbias: float
    re: float
    n_valid: int

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class IntervalScore:
    score: float
    cpd: float

    def as_dict(self):
        return asdict(self)


def _pair(observed, predicted):
    obs = np.asarray(observed, dtype=float).ravel()
    pred = np.asarray(predicted, dtype=float).ravel()
    if obs.shape != pred.shape:
        raise ShapeError(f"observed {obs.shape} and predicted {pred.shape} differ")
    return obs, pred


def relative_errors(observed, predicted, epsilon: float = EPSILON) -> np.ndarray:
    """``|pred - obs| / |obs|`` at points where ``|obs| > epsilon``."""
    obs, pred = _pair(observed, predicted)
    keep = np.abs(obs) > epsilon
    return np.abs((pred[keep] - obs[keep]) / obs[keep])


def curve_scores(observed, predicted, epsilon: float = EPSILON) -> CurveScore:
    a = relative_errors(observed, predicted, epsilon)
    if a.size == 0:
        raise NoValidPointsError("every observed value is within epsilon of zero")
    mean = float(np.mean(a))
    return CurveScore(
        rmspe=float(np.mean(np.sqrt(a ** 2))),
        mape=mean,
        rmespe=float(np.median(np.sqrt(a ** 2))),
        pbias=float(np.sum(a)),
        re=100.0 * mean,
        n_valid=int(a.size),
    )


def interval_scores(observed, lower, upper, alpha: float) -> IntervalScore:
    obs = np.asarray(observed, dtype=float).ravel()
    lo = np.asarray(lower, dtype=float).ravel()
    hi = np.asarray(upper, dtype=float).ravel()
    if not (obs.shape == lo.shape == hi.shape):
        raise ShapeError("observed, lower and upper must have equal length")
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must be in (0, 1), got {alpha}")
    if np.any(lo > hi):
        raise InvalidArgumentError("lower bound exceeds upper bound")
    below = obs < lo
    above = obs > hi
    per_point = ((hi - lo)
                 + (2.0 / alpha) * (lo - obs) * below
                 + (2.0 / alpha) * (obs - hi) * above)
    covered = np.mean(~below & ~above)
    return IntervalScore(score=float(np.mean(per_point)),
                         cpd=float(abs((1.0 - alpha) - covered)))


def rmse_conventional(observed, predicted) -> float:
    obs, pred = _pair(observed, predicted)
    return float(np.sqrt(np.mean((pred - obs) ** 2)))


def pbias_conventional(observed, predicted) -> float:
    """Hydrology-style percent bias ``100 * sum(pred - obs) / sum(obs)``."""
    obs, pred = _pair(observed, predicted)
    return float(100.0 * np.sum(pred - obs) / np.sum(obs))
