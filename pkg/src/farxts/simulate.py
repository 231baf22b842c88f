"""Monte Carlo data-generating process and experiment runner.

Five predictor curve series ``X_m = intercept + V_m + U_m`` are simulated
on a 12-point grid, where ``V_m`` is a functional AR(1) with an exponential
kernel driven by Brownian-motion innovations and ``U_m`` a noisy cosine.
The response accumulates integrals of ``X_1``, ``X_3`` and ``X_5`` against
fixed coefficient surfaces, so ``X_2`` and ``X_4`` are pure distractors.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from . import fda
from .errors import ExperimentFailedError, FarxError, InvalidArgumentError
from .metrics import INTERVAL_METRICS, POINT_METRICS, curve_scores, interval_scores

logger = logging.getLogger(__name__)

ACTIVE_PREDICTORS = (1, 3, 5)
_EPS_STREAM = 1000


@dataclass(frozen=True)
class DgpConfig:
    n_curves: int = 100
    grid_points: int = 12
    n_predictors: int = 5
    kernel_coeff: float = 0.34
    intercept: float = 5.0
    cosine_amp: float = 2.0
    noise_sd_u: float = 0.1
    noise_sd_eps: float = 0.1
    brownian: bool = True
    kernel_exponent: str = "literal"
    burn_in: int = 20
    max_spectral_radius: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.n_curves < 1 or self.grid_points < 1 or self.n_predictors < 1 or self.burn_in < 0:
            raise InvalidArgumentError("DGP counts must be positive")
        if self.noise_sd_u < 0 or self.noise_sd_eps < 0:
            raise InvalidArgumentError("standard deviations must be nonnegative")
        if self.kernel_exponent not in ("literal", "symmetric"):
            raise InvalidArgumentError("kernel_exponent must be 'literal' or 'symmetric'")
        if self.n_predictors < max(ACTIVE_PREDICTORS):
            raise InvalidArgumentError(f"the response uses predictors {ACTIVE_PREDICTORS}")

    def as_dict(self):
        return asdict(self)


def dgp_grid(cfg: DgpConfig) -> np.ndarray:
    return fda.monthly_grid(cfg.grid_points)


def kernel(v, u, coeff: float = 0.34, exponent: str = "literal"):
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if exponent == "literal":
        return coeff * np.exp(0.5 * v ** 2 + u ** 2)
    return coeff * np.exp(0.5 * (v ** 2 + u ** 2))


def beta1(v, s):
    return 2.0 * np.sin((1.0 - v) ** 2 * (s - 0.5) ** 2)


def beta3(v, s):
    return 2.0 * np.cos(np.exp(-5.0 * (v - 0.5) - 5.0 * (s - 0.5))
                        + 8.0 * np.exp(5.0 * (v - 1.5) - 5.0 * (s - 0.5)))


def beta5(v, s):
    return 2.0 * np.cos(np.sqrt(v * s))


BETAS = {1: beta1, 3: beta3, 5: beta5}


def riemann_integral_operator(fun, grid) -> np.ndarray:
    """``M[k, j] = fun(grid[k], grid[j]) / J`` so that ``x @ M`` integrates over v."""
    v, s = np.meshgrid(grid, grid, indexing="ij")
    return fun(v, s) / len(grid)


def kernel_operator(cfg: DgpConfig) -> np.ndarray:
    """Discretised AR operator ``A`` with ``V_t = A @ V_{t-1} + noise``.

    Rescaled to ``max_spectral_radius`` if its spectral radius reaches 1.
    """
    grid = dgp_grid(cfg)
    A = kernel(grid[:, None], grid[None, :], cfg.kernel_coeff, cfg.kernel_exponent) / len(grid)
    rho = float(np.max(np.abs(np.linalg.eigvals(A)))) if cfg.kernel_coeff else 0.0
    if rho >= 1.0:
        logger.warning("kernel spectral radius %.3f >= 1, rescaling to %.2f", rho, cfg.max_spectral_radius)
        A = A * (cfg.max_spectral_radius / rho)
    return A


def predictor_seed(cfg: DgpConfig, m: int) -> list:
    return [cfg.seed, m]


def gen_predictor(cfg: DgpConfig, m: int, seed=None) -> np.ndarray:
    """Raw ``n_curves x grid_points`` matrix for predictor ``m`` (1-based)."""
    rng = np.random.default_rng(predictor_seed(cfg, m) if seed is None else seed)
    grid = dgp_grid(cfg)
    J = len(grid)
    A = kernel_operator(cfg)
    steps = np.diff(np.concatenate([[0.0], grid]))
    total = cfg.burn_in + cfg.n_curves
    V = np.zeros((total + 1, J))
    for t in range(1, total + 1):
        innov = np.cumsum(rng.standard_normal(J) * np.sqrt(steps)) if cfg.brownian else 0.0
        V[t] = A @ V[t - 1] + innov
    V = V[cfg.burn_in + 1:]
    j = np.arange(1, J + 1)
    U = cfg.cosine_amp * np.cos(np.pi * j / m)[None, :] + cfg.noise_sd_u * rng.standard_normal((cfg.n_curves, J))
    return cfg.intercept + V + U


def gen_predictors(cfg: DgpConfig) -> List[np.ndarray]:
    return [gen_predictor(cfg, m) for m in range(1, cfg.n_predictors + 1)]


def gen_response(predictors, cfg: DgpConfig) -> np.ndarray:
    """Integrated response driven by predictors 1, 3 and 5."""
    grid = dgp_grid(cfg)
    rng = np.random.default_rng([cfg.seed, _EPS_STREAM])
    drive = sum(np.asarray(predictors[m - 1]) @ riemann_integral_operator(BETAS[m], grid)
                for m in ACTIVE_PREDICTORS)
    eps = cfg.noise_sd_eps * rng.standard_normal(drive.shape)
    out = np.zeros_like(drive)
    for t in range(1, len(out)):
        out[t] = out[t - 1] + drive[t - 1] + eps[t]
    return out


@dataclass(frozen=True)
class DgpSample:
    grid: np.ndarray
    response: np.ndarray
    predictors: Dict[str, np.ndarray]
    config: DgpConfig


def generate(cfg: DgpConfig) -> DgpSample:
    preds = gen_predictors(cfg)
    return DgpSample(dgp_grid(cfg), gen_response(preds, cfg),
                     {f"X{m}": p for m, p in enumerate(preds, start=1)}, cfg)


def replicate_seed(seed: int, replication: int) -> int:
    return int(np.random.SeedSequence([seed, replication]).generate_state(1)[0])


# --- experiment runner -----------------------------------------------------

@dataclass
class MonteCarloResult:
    records: list
    failures: list
    n_replications: int
    config: dict
    extras: list = field(default_factory=list)

    def values(self, model: str, metric: str) -> np.ndarray:
        return np.array([r["value"] for r in self.records
                         if r["model"] == model and r["metric"] == metric])

    def median(self, model: str, metric: str) -> float:
        return float(np.median(self.values(model, metric)))

    def models(self):
        seen = []
        for r in self.records:
            if r["model"] not in seen:
                seen.append(r["model"])
        return seen


def _run_one(args):
    cfg, replication, models = args
    sample = generate(cfg)
    observed = sample.response[-1]
    history = DgpSample(sample.grid, sample.response[:-1],
                        {k: v[:-1] for k, v in sample.predictors.items()}, cfg)
    records, failures, extras = [], [], []
    for name, strategy in models.items():
        try:
            out = strategy(history, replication)
            if out.get("selected") is not None:
                extras.append({"replication": replication, "model": name,
                               "selected": list(out["selected"]),
                               "K": out.get("K"), "n_components": out.get("n_components")})
            point = np.asarray(out["point"], dtype=float)
            scores = curve_scores(observed, point).as_dict()
            for metric in POINT_METRICS:
                records.append({"replication": replication, "model": name,
                                "metric": metric, "value": scores[metric]})
            if out.get("lower") is not None:
                iv = interval_scores(observed, out["lower"], out["upper"], out["alpha"]).as_dict()
                iv["coverage"] = float(np.mean((observed >= out["lower"]) & (observed <= out["upper"])))
                for metric in (*INTERVAL_METRICS, "coverage"):
                    records.append({"replication": replication, "model": name,
                                    "metric": metric, "value": iv[metric]})
        except FarxError as exc:
            failures.append({"replication": replication, "model": name, "error": str(exc)})
    return records, failures, extras


def run_monte_carlo(cfg: DgpConfig, n_replications: int, models: Mapping[str, Callable],
                    n_jobs: int = 1, max_failure_rate: float = 0.10) -> MonteCarloResult:
    """Fit each strategy on the first N-1 curves and score the N-th.

    A strategy is ``callable(history: DgpSample, replication) -> dict`` with
    key ``point`` (grid values) and optionally ``lower``, ``upper``,
    ``alpha``. Strategies must be picklable when ``n_jobs > 1``.
    """
    if n_replications < 1:
        raise InvalidArgumentError("n_replications must be >= 1")
    jobs = [(replace(cfg, seed=replicate_seed(cfg.seed, r)), r, dict(models))
            for r in range(n_replications)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outputs = list(pool.map(_run_one, jobs))
    else:
        outputs = [_run_one(j) for j in jobs]
    records = [r for rec, _, _ in outputs for r in rec]
    failures = [f for _, fail, _ in outputs for f in fail]
    extras = [e for _, _, ext in outputs for e in ext]
    total = n_replications * len(models)
    if total and len(failures) / total > max_failure_rate:
        raise ExperimentFailedError(f"{len(failures)} of {total} model runs failed")
    return MonteCarloResult(records, failures, n_replications, cfg.as_dict(), extras)


# --- default strategies ----------------------------------------------------

@dataclass(frozen=True)
class FarxStrategy:
    """FARX pipeline on simulated data; ``candidates=("lag",)`` gives FAR(1)."""

    pipeline: "PipelineConfig"
    candidates: tuple = ("lag", "X1", "X2", "X3", "X4", "X5")

    def __call__(self, history: DgpSample, replication: int) -> dict:
        from .pipeline import forecast_next

        fc = forecast_next(history.response, history.predictors, list(self.candidates),
                           self.pipeline, seed=history.config.seed, grid=history.grid)
        return fc.as_strategy_output()


@dataclass(frozen=True)
class BaselineStrategy:
    kind: str = "seasonal_naive"
    alpha: float = 0.05

    def __call__(self, history: DgpSample, replication: int) -> dict:
        from . import baselines

        return getattr(baselines, self.kind)(history.response, self.alpha)


def default_models(B: int = 100, alpha: float = 0.05, intervals: bool = True,
                   K_grid=None, comp_grid=None, difference: str = "response") -> dict:
    """FARX (with selection), FAR(1), seasonal naive and mean-curve strategies."""
    from . import farx
    from .pipeline import PipelineConfig

    common = dict(B=B, alpha=alpha, intervals=intervals, difference=difference,
                  K_grid=tuple(K_grid or farx.DEFAULT_K_GRID),
                  comp_grid=tuple(comp_grid or farx.DEFAULT_COMPONENT_GRID))
    return {
        "farx": FarxStrategy(PipelineConfig(select=True, **common)),
        "far": FarxStrategy(PipelineConfig(select=False, **common), ("lag",)),
        "seasonal_naive": BaselineStrategy("seasonal_naive", alpha),
        "mean_curve": BaselineStrategy("mean_curve", alpha),
    }


# --- synthetic station data ------------------------------------------------

def synthetic_station(seed: int = 0, first_year: int = 1977, n_years: int = 37,
                      station: str = "synthetic"):
    """Monthly river flow, rainfall, temperature and evaporation for one station.

    Flow carries over part of the previous year's curve and responds to
    rainfall; all series share an annual cycle. Values stay positive.
    """
    from .io import StationDataset

    rng = np.random.default_rng([seed, 77])
    month = np.arange(12)
    wet = np.cos(2 * np.pi * (month - 2) / 12)
    temp = 20 - 12 * np.cos(2 * np.pi * (month - 0.5) / 12)
    rain = np.empty((n_years, 12))
    t_air = np.empty((n_years, 12))
    evap = np.empty((n_years, 12))
    flow = np.empty((n_years, 12))
    prev = 500 + 300 * wet
    for t in range(n_years):
        rain[t] = np.maximum(40 + 35 * wet + 12 * rng.standard_normal(12), 0.5)
        t_air[t] = temp + 0.6 * rng.standard_normal(12)
        evap[t] = np.maximum(4 * t_air[t] + 5 * rng.standard_normal(12), 1.0)
        flow[t] = np.maximum(0.4 * prev + 200 + 6 * rain[t] - 1.5 * evap[t]
                             + 40 * rng.standard_normal(12), 10.0)
        prev = flow[t]
    variables = {"river_flow": flow, "rainfall": rain, "temperature": t_air, "evaporation": evap}
    return StationDataset(station, variables, list(range(first_year, first_year + n_years)))
