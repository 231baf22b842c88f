"""CSV ingestion, configuration documents and model serialisation."""
import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import fda
from .errors import IngestionError, InvalidArgumentError
from .farx import FarxModel, LaggedDesign
from .fda import BasisSystem, FunctionalSeries, GramPair

CSV_HEADER = ["station", "variable", "year", "month", "value"]
MODEL_SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "data.path": None,
    "data.station": None,
    "split.train_end": 2006,
    "split.test_end": 2013,
    "model.response": "river_flow",
    "model.variables": ["rainfall", "temperature", "evaporation"],
    "model.k_grid": list(range(4, 11)),
    "model.component_grid": list(range(1, 11)),
    "model.validation_years": 3,
    "model.select": True,
    "model.min_rel_improvement": 0.0,
    "model.difference": "all",
    "bootstrap.B": 100,
    "bootstrap.alpha": 0.05,
    "bootstrap.n_jobs": 1,
    "simulate.replications": 100,
    "simulate.n_curves": 100,
    "simulate.difference": "response",
    "simulate.intervals": True,
    "simulate.n_jobs": 1,
    "seed": 0,
    "output.dir": "out",
}


# --- datasets --------------------------------------------------------------

@dataclass
class StationDataset:
    station: str
    variables: Dict[str, np.ndarray]
    years: List[int]

    def subset_years(self, first: int, last: int) -> "StationDataset":
        keep = [i for i, y in enumerate(self.years) if first <= y <= last]
        return StationDataset(self.station, {k: v[keep] for k, v in self.variables.items()},
                              [self.years[i] for i in keep])


def summary_statistics(values) -> dict:
    """Pooled min/mean/max/sd (n-1), moment skewness and (non-excess) kurtosis."""
    x = np.asarray(values, dtype=float).ravel()
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev ** 2))
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    skew = float(np.mean(dev ** 3) / m2 ** 1.5) if m2 > 0 else None
    kurt = float(np.mean(dev ** 4) / m2 ** 2) if m2 > 0 else None
    return {"min": float(x.min()), "mean": mean, "max": float(x.max()), "sd": sd,
            "skewness": skew, "kurtosis": kurt, "n": int(x.size)}


def dataset_summary(ds: StationDataset) -> dict:
    return {name: summary_statistics(v) for name, v in ds.variables.items()}


def ingest_csv(path, station: Optional[str] = None) -> StationDataset:
    """Read ``station,variable,year,month,value`` rows into year x 12 matrices."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    cells = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise IngestionError(f"{path}: header must be exactly {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise IngestionError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            st, var, year, month, value = (c.strip() for c in row)
            try:
                year_i = int(year)
                month_i = int(month)
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: year and month must be integers") from None
            if not 1 <= month_i <= 12:
                raise IngestionError(f"{path}:{lineno}: month {month_i} outside 1..12")
            try:
                val = float(value)
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: non-numeric value {value!r}") from None
            if not math.isfinite(val):
                raise IngestionError(f"{path}:{lineno}: non-finite value {value!r}")
            key = (st, var, year_i, month_i)
            if key in cells:
                raise IngestionError(f"{path}:{lineno}: duplicate entry for {st}/{var}/{year_i}-{month_i:02d}")
            cells[key] = val

    stations = sorted({k[0] for k in cells})
    if not stations:
        raise IngestionError(f"{path}: no data rows")
    if station is None:
        if len(stations) > 1:
            raise IngestionError(f"{path}: several stations {stations}; choose one")
        station = stations[0]
    elif station not in stations:
        raise IngestionError(f"{path}: station {station!r} not found (have {stations})")

    mine = {k: v for k, v in cells.items() if k[0] == station}
    names = sorted({k[1] for k in mine})
    years = sorted({k[2] for k in mine})
    years = list(range(years[0], years[-1] + 1))
    variables, missing = {}, []
    for name in names:
        mat = np.full((len(years), 12), np.nan)
        for i, y in enumerate(years):
            for m in range(1, 13):
                v = mine.get((station, name, y, m))
                if v is None:
                    missing.append(f"{name}/{y}-{m:02d}")
                else:
                    mat[i, m - 1] = v
        variables[name] = mat
    if missing:
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        raise IngestionError(f"{path}: {len(missing)} missing cells for station {station!r}: {shown}")
    return StationDataset(station, variables, years)


def write_dataset_csv(path, ds: StationDataset):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for name, mat in ds.variables.items():
            for i, y in enumerate(ds.years):
                for m in range(12):
                    w.writerow([ds.station, name, y, m + 1, repr(float(mat[i, m]))])


# --- configuration ---------------------------------------------------------

def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_config(path=None, overrides: Optional[dict] = None) -> dict:
    """Defaults, then the JSON document (flat dotted or nested keys), then overrides."""
    cfg = dict(DEFAULT_CONFIG)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgumentError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise InvalidArgumentError("config must be a JSON object")
        flat = _flatten(doc)
        unknown = sorted(set(flat) - set(DEFAULT_CONFIG))
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {unknown}")
        cfg.update(flat)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# --- JSON helpers ----------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot read {path}: {exc}") from exc


# --- model serialisation ---------------------------------------------------

def _gram_to_dict(g: GramPair):
    return {"gram": g.gram, "sqrt": g.sqrt, "sqrt_inv": g.sqrt_inv}


def _gram_from_dict(d) -> GramPair:
    return GramPair(np.asarray(d["gram"], float), np.asarray(d["sqrt"], float),
                    np.asarray(d["sqrt_inv"], float))


def model_to_dict(model: FarxModel, design: LaggedDesign) -> dict:
    return {
        "names": list(model.names),
        "block_map": [[n, a, b] for n, a, b in model.block_map],
        "block_bases": [b.to_dict() for b in model.block_bases],
        "response_basis": model.response_basis.to_dict(),
        "block_gram": _gram_to_dict(model.block_gram),
        "response_gram": _gram_to_dict(model.response_gram),
        "omega": model.omega,
        "theta_coeffs": model.theta_coeffs,
        "transfer": model.transfer,
        "predictor_mean": model.predictor_mean,
        "response_mean": model.response_mean,
        "hyperparams": model.hyperparams,
        "fitted_coeffs": model.fitted_coeffs,
        "fitted_residual_coeffs": model.fitted_residual_coeffs,
        "design": {
            "predictors": design.predictors,
            "response": design.response,
            "latest": design.latest,
            "labels": design.labels,
        },
    }


def model_from_dict(d: dict):
    """Rebuild ``(FarxModel, LaggedDesign)`` from :func:`model_to_dict` output."""
    arr = lambda k, src=d: np.asarray(src[k], dtype=float)  # noqa: E731
    block_bases = tuple(BasisSystem.from_dict(b) for b in d["block_bases"])
    response_basis = BasisSystem.from_dict(d["response_basis"])
    block_map = tuple((n, int(a), int(b)) for n, a, b in d["block_map"])
    block_gram = _gram_from_dict(d["block_gram"])
    response_gram = _gram_from_dict(d["response_gram"])
    model = FarxModel(
        names=tuple(d["names"]), block_map=block_map, block_bases=block_bases,
        response_basis=response_basis, block_gram=block_gram, response_gram=response_gram,
        omega=np.atleast_2d(arr("omega")), theta_coeffs=np.atleast_2d(arr("theta_coeffs")),
        transfer=np.atleast_2d(arr("transfer")), predictor_mean=arr("predictor_mean"),
        response_mean=arr("response_mean"), hyperparams=dict(d["hyperparams"]),
        fitted_coeffs=np.atleast_2d(arr("fitted_coeffs")),
        fitted_residual_coeffs=np.atleast_2d(arr("fitted_residual_coeffs")),
    )
    dd = d["design"]
    design = LaggedDesign(
        names=tuple(d["names"]), block_map=block_map, block_bases=block_bases,
        block_gram=block_gram, response_basis=response_basis, response_gram=response_gram,
        predictors=np.atleast_2d(arr("predictors", dd)), response=np.atleast_2d(arr("response", dd)),
        latest=arr("latest", dd), labels=np.asarray(dd["labels"]),
    )
    return model, design
