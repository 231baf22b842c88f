"""Forward selection of predictor blocks by in-sample functional MSE."""
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import farx
from .errors import AlignmentError, FarxError, InvalidArgumentError, SelectionFailedError
from .fda import FunctionalSeries

logger = logging.getLogger(__name__)

MSE_GRID_POINTS = 256


def functional_mse(observed: FunctionalSeries, predicted: FunctionalSeries,
                   n_points: int = MSE_GRID_POINTS) -> float:
    """Mean over curves of the squared L2 distance, by a midpoint Riemann sum."""
    if len(observed) != len(predicted):
        raise AlignmentError(f"{len(observed)} observed curves vs {len(predicted)} predicted")
    a, b = observed.basis.domain
    if tuple(predicted.basis.domain) != (a, b):
        raise AlignmentError("observed and predicted curves live on different domains")
    pts = a + (np.arange(n_points) + 0.5) * (b - a) / n_points
    diff = observed.evaluate(pts, with_mean=True) - predicted.evaluate(pts, with_mean=True)
    return float(np.mean(np.sum(diff ** 2, axis=1) * (b - a) / n_points))


def in_sample_mse(response: FunctionalSeries, exogenous: Mapping[str, FunctionalSeries],
                  include: Sequence[str], n_components: int) -> float:
    design = farx.build_design(response, exogenous, include)
    comps = min(n_components, design.n_rows - 1, design.n_columns)
    model = farx.fit(design, comps)
    return functional_mse(design.response_series(), farx.fitted_series(model, design))


@dataclass
class SelectionTrace:
    steps: list = field(default_factory=list)
    selected: list = field(default_factory=list)
    final_mse: float = float("nan")
    warnings: list = field(default_factory=list)
    accepted_mse: list = field(default_factory=list)

    def as_dict(self):
        return {"steps": [dict(s) for s in self.steps], "selected": list(self.selected),
                "final_mse": self.final_mse, "warnings": list(self.warnings),
                "accepted_mse": list(self.accepted_mse)}


def forward_select(response: FunctionalSeries, exogenous: Mapping[str, FunctionalSeries],
                   n_components: int, candidates: Optional[Sequence[str]] = None,
                   min_rel_improvement: float = 0.0) -> SelectionTrace:
    """Greedy forward selection over the lag and the exogenous variables.

    The first step fits one single-block model per candidate and keeps the
    best; each later step adds the candidate giving the lowest MSE, provided
    it beats the incumbent by more than ``min_rel_improvement`` (relative).
    Ties go to the earlier candidate. ``n_components`` is capped per model
    at what the design supports.
    """
    if candidates is None:
        candidates = [farx.LAG, *exogenous]
    candidates = list(candidates)
    if not candidates:
        raise InvalidArgumentError("no candidates given")
    if len(set(candidates)) != len(candidates):
        raise InvalidArgumentError("duplicate candidate names")
    if min_rel_improvement < 0:
        raise InvalidArgumentError("min_rel_improvement must be >= 0")

    trace = SelectionTrace()
    incumbent = None
    step = 0
    while len(trace.selected) < len(candidates):
        step += 1
        best_name, best_mse = None, None
        for name in candidates:
            if name in trace.selected:
                continue
            include = trace.selected + [name]
            try:
                mse = in_sample_mse(response, exogenous, include, n_components)
            except FarxError as exc:
                msg = f"step {step}: candidate {name!r} skipped ({exc})"
                logger.warning(msg)
                trace.warnings.append(msg)
                continue
            trace.steps.append({"step": step, "candidate": name, "variables": include, "mse": mse})
            if best_mse is None or mse < best_mse:
                best_name, best_mse = name, mse
        if best_name is None:
            if incumbent is None:
                raise SelectionFailedError("every candidate model failed to fit")
            break
        if incumbent is not None and not best_mse < incumbent * (1.0 - min_rel_improvement):
            break
        trace.selected.append(best_name)
        trace.accepted_mse.append(best_mse)
        incumbent = best_mse
    trace.final_mse = float(incumbent)
    return trace
