"""Expanding-window backtest of FARX, FAR and baseline forecasts."""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import baselines
from .errors import FarxError, InsufficientDataError, InvalidArgumentError
from .farx import LAG
from .io import StationDataset, dataset_summary
from .metrics import curve_scores, interval_scores
from .pipeline import PipelineConfig, fit_pipeline, forecast_fitted

logger = logging.getLogger(__name__)

MIN_TRAINING_YEARS = 5
MODELS = ("farx", "far", "seasonal_naive", "mean_curve", "naive_monthly")
SCORE_COLUMNS = ("year", "model", "rmspe", "mape", "rmespe", "pbias", "re", "n_valid", "score", "cpd")
FORECAST_COLUMNS = ("year", "model", "month", "observed", "point", "lower", "upper")
HYPER_COLUMNS = ("model", "stage", "K", "n_components", "score", "status")


@dataclass
class BacktestReport:
    station: str
    test_years: list
    forecasts: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    hyperparameters: list = field(default_factory=list)
    selection: Optional[dict] = None
    frozen: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0

    def curves(self, model: str):
        return sorted({r["year"] for r in self.forecasts if r["model"] == model})

    def as_dict(self):
        return {"station": self.station, "test_years": self.test_years, "scores": self.scores,
                "selection": self.selection, "frozen": self.frozen, "failures": self.failures,
                "summary": self.summary, "config": self.config, "seed": self.seed}


def window_seed(seed: int, year: int, model_index: int) -> int:
    return int(np.random.SeedSequence([seed, year, model_index]).generate_state(1)[0])


def pipeline_config(cfg: dict, select: bool) -> PipelineConfig:
    return PipelineConfig(
        K_grid=tuple(int(k) for k in cfg["model.k_grid"]),
        comp_grid=tuple(int(c) for c in cfg["model.component_grid"]),
        validation_years=int(cfg["model.validation_years"]),
        select=select, min_rel_improvement=float(cfg["model.min_rel_improvement"]),
        difference=cfg["model.difference"], B=int(cfg["bootstrap.B"]),
        alpha=float(cfg["bootstrap.alpha"]), n_jobs=int(cfg["bootstrap.n_jobs"]))


def split_variables(ds: StationDataset, cfg: dict):
    response = cfg["model.response"]
    variables = list(cfg["model.variables"])
    missing = [v for v in [response, *variables] if v not in ds.variables]
    if missing:
        raise InvalidArgumentError(f"variables {missing} not in dataset (have {sorted(ds.variables)})")
    if response in variables or LAG in variables:
        raise InvalidArgumentError("model.variables must not contain the response or 'lag'")
    return response, variables


def _search_rows(model: str, search: Optional[dict]):
    if search is None:
        return []
    stages = search if "initial" in search else {"initial": search}
    return [{"model": model, "stage": stage, "K": r["K"], "n_components": r["n_components"],
             "score": r["score"], "status": r["status"]}
            for stage, res in stages.items() for r in res["table"]]


def backtest(dataset: StationDataset, cfg: dict) -> BacktestReport:
    """Forecast each test year from all earlier years.

    Hyperparameters and the selected variables come from the first window
    and stay frozen afterwards.
    """
    response, variables = split_variables(dataset, cfg)
    train_end, test_end = int(cfg["split.train_end"]), int(cfg["split.test_end"])
    seed = int(cfg["seed"])
    if test_end <= train_end:
        raise InvalidArgumentError("split.test_end must be after split.train_end")
    test_years = [y for y in dataset.years if train_end < y <= test_end]
    if not test_years:
        raise InvalidArgumentError(f"no data for test years {train_end + 1}..{test_end}")
    n_train_first = sum(y < test_years[0] for y in dataset.years)
    if n_train_first < MIN_TRAINING_YEARS:
        raise InsufficientDataError(f"{n_train_first} training years; need at least {MIN_TRAINING_YEARS}")

    report = BacktestReport(dataset.station, test_years, summary=dataset_summary(dataset),
                            config=dict(cfg), seed=seed)
    setups = {"farx": (pipeline_config(cfg, bool(cfg["model.select"])), [LAG, *variables]),
              "far": (pipeline_config(cfg, False), [LAG])}
    frozen = {}

    for year in test_years:
        idx = dataset.years.index(year)
        history = {k: v[:idx] for k, v in dataset.variables.items()}
        observed = dataset.variables[response][idx]
        outputs = {}
        for m_index, (name, (pcfg, candidates)) in enumerate(setups.items()):
            try:
                fz = frozen.get(name, {})
                fp = fit_pipeline(history[response], {v: history[v] for v in variables}, candidates,
                                  pcfg, K=fz.get("K"), n_components=fz.get("n_components"),
                                  selected=fz.get("selected"))
                if name not in frozen:
                    frozen[name] = {"K": fp.K, "n_components": fp.n_components,
                                    "selected": list(fp.selected), "window": year}
                    report.hyperparameters.extend(_search_rows(name, fp.search))
                    if name == "farx":
                        report.selection = fp.selection
                fc = forecast_fitted(fp, pcfg, window_seed(seed, year, m_index))
                outputs[name] = {"point": fc.point, "lower": fc.lower, "upper": fc.upper}
            except FarxError as exc:
                logger.warning("%s failed for %d: %s", name, year, exc)
                report.failures.append({"year": year, "model": name, "error": str(exc),
                                        "code": exc.code})
        alpha = float(cfg["bootstrap.alpha"])
        outputs["seasonal_naive"] = baselines.seasonal_naive(history[response], alpha)
        outputs["mean_curve"] = baselines.mean_curve(history[response], alpha)
        outputs["naive_monthly"] = baselines.naive_monthly(history[response], observed)

        for name in MODELS:
            out = outputs.get(name)
            if out is None:
                continue
            lower, upper = out.get("lower"), out.get("upper")
            for j in range(len(observed)):
                report.forecasts.append({
                    "year": year, "model": name, "month": j + 1, "observed": float(observed[j]),
                    "point": float(out["point"][j]),
                    "lower": None if lower is None else float(lower[j]),
                    "upper": None if upper is None else float(upper[j])})
            row = {"year": year, "model": name}
            try:
                row.update(curve_scores(observed, out["point"]).as_dict())
            except FarxError as exc:
                report.failures.append({"year": year, "model": name, "error": str(exc),
                                        "code": exc.code})
                continue
            if lower is not None:
                row.update(interval_scores(observed, lower, upper, alpha).as_dict())
            report.scores.append({c: row.get(c) for c in SCORE_COLUMNS})
    report.frozen = frozen
    return report
