"""Reference forecasts: repeat last year, monthly climatology, last month."""
import numpy as np

from .bootstrap import pointwise_quantiles


def seasonal_naive(history, alpha: float = 0.05):
    """Last observed curve; bounds from past year-over-year changes."""
    history = np.atleast_2d(np.asarray(history, dtype=float))
    point = history[-1].copy()
    out = {"point": point, "alpha": alpha, "lower": None, "upper": None}
    if len(history) >= 3:
        lo, hi = pointwise_quantiles(np.diff(history, axis=0), alpha)
        out["lower"], out["upper"] = point + lo, point + hi
    return out


def mean_curve(history, alpha: float = 0.05):
    """Monthly means of the history; bounds from the monthly spread."""
    history = np.atleast_2d(np.asarray(history, dtype=float))
    lo, hi = pointwise_quantiles(history, alpha)
    return {"point": history.mean(axis=0), "alpha": alpha, "lower": lo, "upper": hi}


def naive_monthly(history, target):
    """One-step monthly persistence: each month predicted by the month before.

    ``target`` is the year being predicted (its months feed later months);
    January uses December of the last history year.
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    target = np.asarray(target, dtype=float)
    prev = np.concatenate([[history[-1, -1]], target[:-1]])
    return {"point": prev, "alpha": None, "lower": None, "upper": None}
