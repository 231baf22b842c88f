"""End-to-end forecasting of the next annual curve from raw year x month data.

Steps: optional seasonal differencing, hyperparameter search, forward
selection, FARX fit, point forecast, bootstrap intervals, and the inverse
transform back to the observed scale.
"""
from dataclasses import asdict, dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from . import bootstrap, farx, fda
from .errors import InvalidArgumentError
from .selection import forward_select

DIFFERENCE_MODES = ("none", "response", "all")


@dataclass(frozen=True)
class PipelineConfig:
    K_grid: tuple = farx.DEFAULT_K_GRID
    comp_grid: tuple = farx.DEFAULT_COMPONENT_GRID
    validation_years: int = 3
    order: int = 4
    select: bool = True
    research_after_select: bool = True
    min_rel_improvement: float = 0.0
    difference: str = "all"
    intervals: bool = True
    B: int = 100
    alpha: float = 0.05
    n_jobs: int = 1

    def __post_init__(self):
        if self.difference not in DIFFERENCE_MODES:
            raise InvalidArgumentError(f"difference must be one of {DIFFERENCE_MODES}")

    def as_dict(self):
        d = asdict(self)
        d["K_grid"] = list(self.K_grid)
        d["comp_grid"] = list(self.comp_grid)
        return d


def year_difference(raw) -> np.ndarray:
    """Lag-12 differences of the monthly sequence, reshaped to years 2..N."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    period = raw.shape[1]
    return fda.seasonal_difference(raw.ravel(), period).reshape(-1, period)


def transform(raw_response, raw_exogenous: Mapping[str, np.ndarray], mode: str):
    """Map raw data to the modelling scale; returns ``(response, exogenous, offset)``.

    ``offset`` is added to model-scale forecasts to return to the raw scale.
    """
    raw_response = np.atleast_2d(np.asarray(raw_response, dtype=float))
    exo = {k: np.atleast_2d(np.asarray(v, dtype=float)) for k, v in raw_exogenous.items()}
    if mode == "none":
        return raw_response, exo, np.zeros(raw_response.shape[1])
    resp = year_difference(raw_response)
    if mode == "all":
        exo = {k: year_difference(v) for k, v in exo.items()}
    else:
        exo = {k: v[1:] for k, v in exo.items()}
    return resp, exo, raw_response[-1].copy()


@dataclass
class PipelineForecast:
    point: np.ndarray
    lower: Optional[np.ndarray]
    upper: Optional[np.ndarray]
    alpha: float
    K: int
    n_components: int
    selected: list
    selection: Optional[dict] = None
    search: Optional[dict] = None
    forecast: Optional[bootstrap.ForecastResult] = None
    model: Optional[farx.FarxModel] = None
    design: Optional[farx.LaggedDesign] = None

    def as_strategy_output(self):
        return {"point": self.point, "lower": self.lower, "upper": self.upper,
                "alpha": self.alpha, "selected": list(self.selected),
                "K": self.K, "n_components": self.n_components}


@dataclass
class FittedPipeline:
    """Model-scale objects needed to forecast, bootstrap and serialise."""
    model: farx.FarxModel
    design: farx.LaggedDesign
    response: fda.FunctionalSeries
    smoothing_resids: np.ndarray
    offset: np.ndarray
    grid: np.ndarray
    K: int
    n_components: int
    selected: list
    selection: Optional[dict] = None
    search: Optional[dict] = None


def fit_pipeline(raw_response, raw_exogenous: Mapping[str, np.ndarray], candidates: Sequence[str],
                 cfg: PipelineConfig, grid=None, K: Optional[int] = None,
                 n_components: Optional[int] = None,
                 selected: Optional[Sequence[str]] = None) -> FittedPipeline:
    """Fit on all supplied years.

    Passing ``K``/``n_components`` or ``selected`` freezes those choices
    instead of searching or selecting.
    """
    candidates = list(candidates)
    resp_raw, exo_raw, offset = transform(raw_response, raw_exogenous, cfg.difference)
    grid = fda.monthly_grid(resp_raw.shape[1]) if grid is None else np.asarray(grid, dtype=float)
    exo_raw = {k: v for k, v in exo_raw.items() if k in candidates}

    search = None
    if K is None or n_components is None:
        res = farx.hyperparameter_search(resp_raw, exo_raw, candidates, cfg.K_grid, cfg.comp_grid,
                                         cfg.validation_years, grid, cfg.order)
        K, n_components, search = res.K, res.n_components, res.as_dict()

    selection = None
    if selected is None:
        if cfg.select and len(candidates) > 1:
            sm = farx.smooth_all({farx.LAG: resp_raw, **exo_raw}, K, grid, cfg.order)
            resp = sm.pop(farx.LAG)
            trace = forward_select(resp, sm, n_components, candidates, cfg.min_rel_improvement)
            selected, selection = list(trace.selected), trace.as_dict()
            if cfg.research_after_select and selected != candidates and search is not None:
                res = farx.hyperparameter_search(resp_raw, exo_raw, selected, cfg.K_grid, cfg.comp_grid,
                                                 cfg.validation_years, grid, cfg.order)
                K, n_components = res.K, res.n_components
                search = {"initial": search, "after_selection": res.as_dict()}
        else:
            selected = candidates
    selected = list(selected)

    sm = farx.smooth_all({farx.LAG: resp_raw, **{k: v for k, v in exo_raw.items() if k in selected}},
                         K, grid, cfg.order)
    resp = sm.pop(farx.LAG)
    design = farx.build_design(resp, sm, selected)
    comps = min(n_components, design.n_rows - 1, design.n_columns)
    model = farx.fit(design, comps)
    sres = bootstrap.smoothing_residuals(resp_raw, resp, grid)
    return FittedPipeline(model, design, resp, sres, offset, grid, K, n_components, selected,
                          selection, search)


def forecast_fitted(fp: FittedPipeline, cfg: PipelineConfig, seed: int = 0) -> PipelineForecast:
    if cfg.intervals:
        fr = bootstrap.bootstrap_forecast(fp.model, fp.design, None, fp.smoothing_resids, fp.grid,
                                          cfg.B, cfg.alpha, seed, cfg.n_jobs).shifted(fp.offset)
        point, lower, upper = fr.point, fr.lower, fr.upper
    else:
        fr = None
        point = farx.predict_next(fp.model, fp.design.latest).evaluate(fp.grid)[0] + fp.offset
        lower = upper = None
    return PipelineForecast(point, lower, upper, cfg.alpha, fp.K, fp.n_components, fp.selected,
                            fp.selection, fp.search, fr, fp.model, fp.design)


def forecast_next(raw_response, raw_exogenous, candidates, cfg: PipelineConfig, seed: int = 0,
                  grid=None, K=None, n_components=None, selected=None) -> PipelineForecast:
    fp = fit_pipeline(raw_response, raw_exogenous, candidates, cfg, grid, K, n_components, selected)
    return forecast_fitted(fp, cfg, seed)
