"""Lag-1 functional regression with exogenous curves, estimated by PLS.

The next response curve is regressed on the current response curve and the
current curves of the chosen exogenous variables. Each predictor variable is
a separate block in the stacked predictor; blocks are centred, mapped to L2
coordinates by their Gram square roots, and the covariance-maximising PLS
fit is mapped back to a coefficient surface ``theta`` in the tensor basis.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from . import fda
from .errors import (
    AlignmentError,
    FarxError,
    InvalidArgumentError,
    SearchFailedError,
    ShapeError,
)
from .fda import BasisSystem, FunctionalSeries, GramPair
from .pls import PlsFit, nipals_fit

logger = logging.getLogger(__name__)

LAG = "lag"
DEFAULT_K_GRID = tuple(range(4, 11))
DEFAULT_COMPONENT_GRID = tuple(range(1, 11))

_gram_cache: Dict[tuple, GramPair] = {}


def cached_gram(basis: BasisSystem) -> GramPair:
    key = (basis.order, tuple(basis.domain), basis.knots.tobytes())
    pair = _gram_cache.get(key)
    if pair is None:
        pair = fda.gram_pair(basis)
        _gram_cache[key] = pair
    return pair


@dataclass(frozen=True, eq=False)
class LaggedDesign:
    """Predictor rows at times ``1..N-1`` aligned with responses at ``2..N``.

    ``predictors`` and ``response`` hold uncentred coefficients; the column
    means used for centring are stored alongside. ``latest`` is the stacked
    predictor row at time N, the input for forecasting curve N+1.
    """

    names: tuple
    block_map: tuple
    block_bases: tuple
    block_gram: GramPair
    response_basis: BasisSystem
    response_gram: GramPair
    predictors: np.ndarray
    response: np.ndarray
    latest: np.ndarray
    labels: np.ndarray
    predictor_mean: np.ndarray = field(init=False)
    response_mean: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("predictors", "response", "latest"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "predictor_mean", self.predictors.mean(axis=0))
        object.__setattr__(self, "response_mean", self.response.mean(axis=0))

    @property
    def n_rows(self) -> int:
        return self.predictors.shape[0]

    @property
    def n_columns(self) -> int:
        return self.predictors.shape[1]

    @property
    def predictors_centered(self) -> np.ndarray:
        return self.predictors - self.predictor_mean

    @property
    def response_centered(self) -> np.ndarray:
        return self.response - self.response_mean

    def response_series(self) -> FunctionalSeries:
        return FunctionalSeries(self.response_basis, self.response, self.labels)

    def with_response(self, response_coeffs) -> "LaggedDesign":
        """Same predictors, new response coefficients (means recomputed)."""
        response_coeffs = np.asarray(response_coeffs, dtype=float)
        if response_coeffs.shape != self.response.shape:
            raise ShapeError("replacement response has the wrong shape")
        return replace(self, response=response_coeffs)

    def stack(self, rows: Mapping[str, np.ndarray]) -> np.ndarray:
        """Concatenate one coefficient row per block into a predictor row."""
        parts = []
        for name, start, stop in self.block_map:
            if name not in rows:
                raise ShapeError(f"missing latest row for block {name!r}")
            r = np.asarray(rows[name], dtype=float).ravel()
            if r.size != stop - start:
                raise ShapeError(f"block {name!r} expects {stop - start} coefficients, got {r.size}")
            parts.append(r)
        return np.concatenate(parts)


def _check_aligned(response: FunctionalSeries, exogenous: Mapping[str, FunctionalSeries]):
    for name, series in exogenous.items():
        if len(series) != len(response):
            raise AlignmentError(f"{name!r} has {len(series)} curves, response has {len(response)}")
        if not np.array_equal(np.asarray(series.labels), np.asarray(response.labels)):
            raise AlignmentError(f"{name!r} time labels differ from the response's")


def build_design(response: FunctionalSeries, exogenous: Mapping[str, FunctionalSeries],
                 include: Sequence[str]) -> LaggedDesign:
    """Stack the lagged response and the included exogenous curves.

    ``include`` names the blocks in order; ``"lag"`` is the lagged response.
    """
    include = list(include)
    if not include:
        raise InvalidArgumentError("include must name at least one variable")
    if len(set(include)) != len(include):
        raise InvalidArgumentError(f"duplicate names in include: {include}")
    if len(response) < 3:
        raise InvalidArgumentError("need at least 3 curves to build a lag-1 design")
    _check_aligned(response, exogenous)

    response = response.add_back()
    blocks, bases, grams, block_map = [], [], [], []
    col = 0
    for name in include:
        if name == LAG:
            series = response
        elif name in exogenous:
            series = exogenous[name].add_back()
        else:
            raise InvalidArgumentError(f"unknown variable {name!r}")
        k = series.basis.n_basis
        blocks.append(series.coeffs)
        bases.append(series.basis)
        grams.append(cached_gram(series.basis))
        block_map.append((name, col, col + k))
        col += k

    stacked = np.hstack(blocks)
    return LaggedDesign(
        names=tuple(include),
        block_map=tuple(block_map),
        block_bases=tuple(bases),
        block_gram=fda.block_gram_pair(grams),
        response_basis=response.basis,
        response_gram=cached_gram(response.basis),
        predictors=stacked[:-1],
        response=response.coeffs[1:],
        latest=stacked[-1],
        labels=np.asarray(response.labels)[1:],
    )


@dataclass(frozen=True, eq=False)
class FarxModel:
    """Fitted model.

    ``theta_coeffs`` (predictor columns x response basis) represents the
    coefficient surface ``theta(v, s) = Psi(v)' theta_coeffs Phi(s)``;
    ``transfer`` is the equivalent map from centred predictor coefficients
    to centred response coefficients, ``Psi^1/2 Omega Phi^-1/2``.
    """

    names: tuple
    block_map: tuple
    block_bases: tuple
    response_basis: BasisSystem
    block_gram: GramPair
    response_gram: GramPair
    omega: np.ndarray
    theta_coeffs: np.ndarray
    transfer: np.ndarray
    predictor_mean: np.ndarray
    response_mean: np.ndarray
    hyperparams: dict
    fitted_coeffs: np.ndarray
    fitted_residual_coeffs: np.ndarray
    pls: Optional[PlsFit] = None

    def __post_init__(self):
        for name in ("omega", "theta_coeffs", "transfer", "predictor_mean", "response_mean",
                     "fitted_coeffs", "fitted_residual_coeffs"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))

    def predict_coeffs(self, predictor_rows) -> np.ndarray:
        X = np.atleast_2d(np.asarray(predictor_rows, dtype=float))
        if X.shape[1] != self.transfer.shape[0]:
            raise ShapeError(f"expected {self.transfer.shape[0]} predictor coefficients, got {X.shape[1]}")
        return (X - self.predictor_mean) @ self.transfer + self.response_mean

    def stack(self, rows) -> np.ndarray:
        if isinstance(rows, Mapping):
            parts = []
            for name, start, stop in self.block_map:
                if name not in rows:
                    raise ShapeError(f"missing latest row for block {name!r}")
                r = np.asarray(rows[name], dtype=float).ravel()
                if r.size != stop - start:
                    raise ShapeError(f"block {name!r} expects {stop - start} coefficients, got {r.size}")
                parts.append(r)
            return np.concatenate(parts)
        row = np.asarray(rows, dtype=float).ravel()
        if row.size != self.transfer.shape[0]:
            raise ShapeError(f"expected {self.transfer.shape[0]} predictor coefficients, got {row.size}")
        return row


def fit(design: LaggedDesign, n_components: int) -> FarxModel:
    max_comp = min(design.n_rows - 1, design.n_columns)
    if not 1 <= n_components <= max_comp:
        raise InvalidArgumentError(f"n_components must be in [1, {max_comp}], got {n_components}")
    Xc = design.predictors_centered
    scale = max(1.0, float(np.abs(design.predictors).max()))
    if np.abs(Xc).max() <= 1e-12 * scale:
        # Every predictor curve is the same: nothing to regress on, so the
        # surface is zero and the forecast is the response mean.
        logger.debug("constant predictors; fitting the mean-only model")
        pls = None
        omega = np.zeros((design.n_columns, design.response.shape[1]))
        response_mean = design.response_mean
        used = 0
    else:
        Z = Xc @ design.block_gram.sqrt
        Y = design.response_centered @ design.response_gram.sqrt
        pls = nipals_fit(Z, Y, n_components)
        omega = pls.coefficient
        used = pls.n_components
        # PLS re-centres internally; fold its (round-off sized) means in so
        # that the coefficient map reproduces the PLS fitted values exactly.
        response_mean = (design.response_mean
                         + (pls.y_mean - pls.x_mean @ omega) @ design.response_gram.sqrt_inv)
    theta = design.block_gram.sqrt_inv @ omega @ design.response_gram.sqrt_inv
    transfer = design.block_gram.sqrt @ omega @ design.response_gram.sqrt_inv
    fitted = Xc @ transfer + response_mean
    hyper = {
        "K_response": design.response_basis.n_basis,
        "K_predictor": [b.n_basis for b in design.block_bases],
        "n_components": int(used),
        "n_components_requested": int(n_components),
    }
    return FarxModel(
        names=design.names,
        block_map=design.block_map,
        block_bases=design.block_bases,
        response_basis=design.response_basis,
        block_gram=design.block_gram,
        response_gram=design.response_gram,
        omega=omega,
        theta_coeffs=theta,
        transfer=transfer,
        predictor_mean=design.predictor_mean,
        response_mean=response_mean,
        hyperparams=hyper,
        fitted_coeffs=fitted,
        fitted_residual_coeffs=design.response - fitted,
        pls=pls,
    )


def predict_next(model: FarxModel, latest) -> FunctionalSeries:
    """One-step-ahead curve from the latest stacked predictor row.

    ``latest`` is either a mapping of block name to coefficient row or the
    already stacked row.
    """
    row = model.stack(latest)
    return FunctionalSeries(model.response_basis, model.predict_coeffs(row))


def fit_far(response: FunctionalSeries, n_components: int) -> FarxModel:
    return fit(build_design(response, {}, [LAG]), n_components)


def fitted_series(model: FarxModel, design: LaggedDesign) -> FunctionalSeries:
    return FunctionalSeries(model.response_basis, model.fitted_coeffs, design.labels)


# --- hyperparameter search -------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    K: int
    n_components: int
    score: float
    table: tuple

    def as_dict(self):
        return {"K": self.K, "n_components": self.n_components, "score": self.score,
                "table": [dict(r) for r in self.table]}


def smooth_all(raw: Mapping[str, np.ndarray], K: int, grid, order: int = 4,
               labels=None) -> Dict[str, FunctionalSeries]:
    basis = fda.make_bspline_basis(K, order, (0.0, 1.0))
    return {name: fda.smooth(vals, grid, basis, labels) for name, vals in raw.items()}


def hyperparameter_search(raw_response, raw_exogenous: Mapping[str, np.ndarray], include,
                          K_grid=DEFAULT_K_GRID, comp_grid=DEFAULT_COMPONENT_GRID,
                          validation_years: int = 3, grid=None, order: int = 4) -> SearchResult:
    """Pick ``(K, n_components)`` by expanding-window validation RMSPE.

    The last ``validation_years`` curves are predicted one at a time, each
    from a model fitted on all earlier curves; the score is the mean RMSPE
    against the raw observations. Ties go to smaller K, then fewer
    components.
    """
    from .metrics import curve_scores

    raw_response = np.asarray(raw_response, dtype=float)
    grid = fda.monthly_grid(raw_response.shape[1]) if grid is None else np.asarray(grid, dtype=float)
    K_grid = sorted(set(int(k) for k in K_grid))
    comp_grid = sorted(set(int(c) for c in comp_grid))
    if not K_grid or not comp_grid:
        raise InvalidArgumentError("K_grid and comp_grid must be nonempty")
    N = raw_response.shape[0]
    if validation_years < 1 or N - validation_years < 3:
        raise InvalidArgumentError(f"{N} curves leave too little training data for {validation_years} validation years")
    include = list(include)
    raw = {LAG: raw_response}
    raw.update({k: np.asarray(v, dtype=float) for k, v in raw_exogenous.items() if k in include})

    table = []
    for K in K_grid:
        if K > len(grid) or K < order:
            for c in comp_grid:
                table.append({"K": K, "n_components": c, "score": None,
                              "status": f"infeasible: K={K} outside [{order}, {len(grid)}]"})
            continue
        smoothed = smooth_all(raw, K, grid, order)
        response = smoothed.pop(LAG)
        errors = {c: [] for c in comp_grid}
        status = {c: "ok" for c in comp_grid}
        for target in range(N - validation_years, N):
            sub = slice(0, target)
            design = build_design(response.subset(sub), {k: s.subset(sub) for k, s in smoothed.items()},
                                  include)
            max_comp = min(design.n_rows - 1, design.n_columns)
            for c in comp_grid:
                if status[c] != "ok":
                    continue
                if c > max_comp:
                    status[c] = f"infeasible: n_components={c} > {max_comp}"
                    continue
                try:
                    model = fit(design, c)
                    pred = predict_next(model, design.latest).evaluate(grid)[0]
                    errors[c].append(curve_scores(raw_response[target], pred).rmspe)
                except FarxError as exc:
                    status[c] = f"failed: {exc}"
        for c in comp_grid:
            score = float(np.mean(errors[c])) if status[c] == "ok" else None
            table.append({"K": K, "n_components": c, "score": score, "status": status[c]})

    best = None
    for row in table:
        if row["score"] is None or not np.isfinite(row["score"]):
            continue
        if best is None or row["score"] < best["score"]:
            best = row
    if best is None:
        raise SearchFailedError("no feasible (K, n_components) pair")
    return SearchResult(best["K"], best["n_components"], best["score"], tuple(table))
