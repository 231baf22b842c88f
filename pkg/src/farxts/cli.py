"""``farxts`` command-line interface.

Every command reads the JSON config (``--config``) plus flags and writes
CSV/JSON artifacts to the output directory. Failures print a JSON error
object on stderr and exit nonzero.
"""
import argparse
import csv
import hashlib
import io as _stringio
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, fda, farx, io
from .backtest import FORECAST_COLUMNS, HYPER_COLUMNS, SCORE_COLUMNS, backtest, pipeline_config, split_variables
from .bootstrap import bootstrap_forecast
from .errors import FarxError, InvalidArgumentError
from .pipeline import fit_pipeline, transform
from .selection import forward_select

logger = logging.getLogger("farxts")

# Keys that change where or how fast results are produced, never what they are.
HASH_EXCLUDE = ("output.dir", "bootstrap.n_jobs", "simulate.n_jobs")
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- artifact helpers ------------------------------------------------------

def effective_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in HASH_EXCLUDE}


def meta(cfg: dict) -> dict:
    return {"config_sha256": io.config_hash(effective_config(cfg)), "seed": int(cfg["seed"]),
            "version": __version__}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if np.isfinite(v) else ""
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return str(v)


def write_csv(path: Path, columns, rows, cfg: dict):
    m = meta(cfg)
    buf = _stringio.StringIO()
    buf.write(f"# config_sha256={m['config_sha256']} seed={m['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path) -> list:
    """Rows of an artifact CSV as dicts, skipping ``#`` comment lines."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read {path}: {exc}") from exc
    return list(csv.DictReader(line for line in lines if not line.startswith("#")))


def write_artifact(path: Path, payload: dict, cfg: dict):
    io.write_json(path, {"meta": meta(cfg), **payload})


def _outdir(cfg) -> Path:
    out = Path(cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset(cfg):
    if not cfg.get("data.path"):
        raise InvalidArgumentError("no input data: set data.path or pass --data")
    return io.ingest_csv(cfg["data.path"], cfg.get("data.station"))


def _training(ds, cfg):
    last = int(cfg["split.train_end"])
    sub = ds.subset_years(ds.years[0], last)
    if not sub.years:
        raise InvalidArgumentError(f"no data on or before split.train_end={last}")
    return sub


# --- commands --------------------------------------------------------------

def cmd_fit(cfg, args):
    ds = _training(_dataset(cfg), cfg)
    response, variables = split_variables(ds, cfg)
    pcfg = pipeline_config(cfg, bool(cfg["model.select"]))
    fp = fit_pipeline(ds.variables[response], {v: ds.variables[v] for v in variables},
                      [farx.LAG, *variables], pcfg)
    last_raw = {name: ds.variables[name][-1] for name in [response, *variables]}
    doc = {
        "schema_version": io.MODEL_SCHEMA_VERSION,
        "station": ds.station,
        "response": response,
        "variables": variables,
        "selected": fp.selected,
        "difference": pcfg.difference,
        "order": pcfg.order,
        "K": fp.K,
        "n_components": fp.n_components,
        "grid": fp.grid,
        "last_year": ds.years[-1],
        "last_raw": last_raw,
        "offset": fp.offset,
        "smoothing_residuals": fp.smoothing_resids,
        "selection": fp.selection,
        "search": fp.search,
        "model": io.model_to_dict(fp.model, fp.design),
    }
    out = _outdir(cfg)
    write_artifact(out / "model.json", doc, cfg)
    rows = []
    stages = fp.search if fp.search and "initial" in fp.search else {"initial": fp.search}
    for stage, res in stages.items():
        for r in (res or {}).get("table", []):
            rows.append({"model": "farx", "stage": stage, **r})
    write_csv(out / "fit_hyperparameters.csv", HYPER_COLUMNS, rows, cfg)
    return {"model": str(out / "model.json"), "K": fp.K, "n_components": fp.n_components,
            "selected": fp.selected}


def _new_year_inputs(doc, model, ds):
    """Latest stacked row and raw-scale offset from one new year of data."""
    year = int(doc["last_year"]) + 1
    if year not in ds.years:
        raise InvalidArgumentError(f"new data must contain year {year}")
    i = ds.years.index(year)
    response = doc["response"]
    raw_resp = np.vstack([doc["last_raw"][response], ds.variables[response][i]])
    rows = {}
    for name, basis in zip(model.names, model.block_bases):
        var = response if name == farx.LAG else name
        if var not in ds.variables:
            raise InvalidArgumentError(f"new data lacks variable {var!r}")
        raw = np.vstack([doc["last_raw"][var], ds.variables[var][i]])
        exo = {} if var == response else {var: raw}
        resp_t, exo_t, _ = transform(raw_resp, exo, doc["difference"])
        vals = resp_t[-1] if var == response else exo_t[var][-1]
        rows[name] = fda.smooth(vals[None, :], np.asarray(doc["grid"]), basis).coeffs[0]
    offset = ds.variables[response][i] if doc["difference"] != "none" else np.zeros(len(doc["grid"]))
    return model.stack(rows), offset, year + 1


def cmd_forecast(cfg, args):
    if not args.model:
        raise UsageError("forecast requires --model")
    doc = io.read_json(args.model)
    if doc.get("schema_version") != io.MODEL_SCHEMA_VERSION:
        raise InvalidArgumentError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    model, design = io.model_from_dict(doc["model"])
    grid = np.asarray(doc["grid"], dtype=float)
    if cfg.get("data.path"):
        latest, offset, target = _new_year_inputs(doc, model, _dataset(cfg))
    else:
        latest, offset, target = design.latest, np.asarray(doc["offset"]), int(doc["last_year"]) + 1
    fr = bootstrap_forecast(model, design, latest, np.asarray(doc["smoothing_residuals"]), grid,
                            int(cfg["bootstrap.B"]), float(cfg["bootstrap.alpha"]), int(cfg["seed"]),
                            int(cfg["bootstrap.n_jobs"])).shifted(offset)
    out = _outdir(cfg)
    rows = [{"month": m, "point": p, "lower": lo, "upper": hi} for m, p, lo, hi in fr.table()]
    write_csv(out / "forecast.csv", ("month", "point", "lower", "upper"), rows, cfg)
    write_artifact(out / "forecast.json", {"year": target, "alpha": fr.alpha, "B": fr.B,
                                           "point": fr.point, "lower": fr.lower, "upper": fr.upper}, cfg)
    return {"forecast": str(out / "forecast.csv"), "year": target}


def cmd_backtest(cfg, args):
    report = backtest(_dataset(cfg), cfg)
    out = _outdir(cfg)
    write_csv(out / "backtest_forecasts.csv", FORECAST_COLUMNS, report.forecasts, cfg)
    write_csv(out / "backtest_scores.csv", SCORE_COLUMNS, report.scores, cfg)
    write_csv(out / "backtest_hyperparameters.csv", HYPER_COLUMNS, report.hyperparameters, cfg)
    payload = report.as_dict()
    payload["config"] = effective_config(cfg)
    write_artifact(out / "backtest_report.json", payload, cfg)
    return {"scores": str(out / "backtest_scores.csv"), "test_years": report.test_years,
            "failures": len(report.failures)}


def cmd_simulate(cfg, args):
    from .simulate import DgpConfig, default_models, run_monte_carlo

    dgp = DgpConfig(n_curves=int(cfg["simulate.n_curves"]), seed=int(cfg["seed"]))
    models = default_models(int(cfg["bootstrap.B"]), float(cfg["bootstrap.alpha"]),
                            bool(cfg["simulate.intervals"]), cfg["model.k_grid"],
                            cfg["model.component_grid"], cfg["simulate.difference"])
    res = run_monte_carlo(dgp, int(cfg["simulate.replications"]), models, int(cfg["simulate.n_jobs"]))
    out = _outdir(cfg)
    write_csv(out / "simulate_metrics.csv", ("replication", "model", "metric", "value"), res.records, cfg)
    write_csv(out / "simulate_selection.csv", ("replication", "model", "selected", "K", "n_components"),
              res.extras, cfg)
    medians = {m: {k: res.median(m, k) for k in sorted({r["metric"] for r in res.records if r["model"] == m})}
               for m in res.models()}
    target = {"X1", "X3", "X5"}
    farx_sel = [set(e["selected"]) - {farx.LAG} for e in res.extras if e["model"] == "farx"]
    success = float(np.mean([s == target for s in farx_sel])) if farx_sel else None
    write_artifact(out / "simulate_summary.json", {"dgp": res.config, "n_replications": res.n_replications,
                                                   "medians": medians, "failures": res.failures,
                                                   "selection_success": success}, cfg)
    return {"metrics": str(out / "simulate_metrics.csv"), "selection_success": success}


def cmd_select(cfg, args):
    ds = _training(_dataset(cfg), cfg)
    response, variables = split_variables(ds, cfg)
    pcfg = pipeline_config(cfg, True)
    resp_raw, exo_raw, _ = transform(ds.variables[response], {v: ds.variables[v] for v in variables},
                                     pcfg.difference)
    grid = fda.monthly_grid(resp_raw.shape[1])
    candidates = [farx.LAG, *variables]
    search = farx.hyperparameter_search(resp_raw, exo_raw, candidates, pcfg.K_grid, pcfg.comp_grid,
                                        pcfg.validation_years, grid, pcfg.order)
    sm = farx.smooth_all({farx.LAG: resp_raw, **exo_raw}, search.K, grid, pcfg.order)
    resp = sm.pop(farx.LAG)
    trace = forward_select(resp, sm, search.n_components, candidates, pcfg.min_rel_improvement)
    out = _outdir(cfg)
    write_artifact(out / "selection.json", {"K": search.K, "n_components": search.n_components,
                                            "trace": trace.as_dict()}, cfg)
    write_csv(out / "selection_steps.csv", ("step", "candidate", "variables", "mse"), trace.steps, cfg)
    return {"selected": trace.selected}


def summarize_rows(rows) -> list:
    """Per (model, metric): count, median and mean over rows with a value."""
    if not rows:
        return []
    values = {}
    if "metric" in rows[0]:
        for r in rows:
            if r["value"] != "":
                values.setdefault((r["model"], r["metric"]), []).append(float(r["value"]))
    else:
        metrics = [c for c in SCORE_COLUMNS if c not in ("year", "model") and c in rows[0]]
        for r in rows:
            for m in metrics:
                if r[m] != "":
                    values.setdefault((r["model"], m), []).append(float(r[m]))
    return [{"model": model, "metric": metric, "n": len(v), "median": float(np.median(v)),
             "mean": float(np.mean(v))} for (model, metric), v in values.items()]


def cmd_summarize(cfg, args):
    src = Path(args.input) if args.input else Path(cfg["output.dir"]) / "backtest_scores.csv"
    rows = summarize_rows(read_csv(src))
    out = _outdir(cfg)
    write_csv(out / "summary.csv", ("model", "metric", "n", "median", "mean"), rows, cfg)
    with open(src, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    write_artifact(out / "summary.json", {"source_sha256": digest, "rows": rows}, cfg)
    return {"summary": str(out / "summary.csv"), "rows": len(rows)}


COMMANDS = {"fit": cmd_fit, "forecast": cmd_forecast, "backtest": cmd_backtest,
            "simulate": cmd_simulate, "select": cmd_select, "summarize": cmd_summarize}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (flat dotted or nested keys)")
    common.add_argument("--out", dest="output_dir", help="output directory (output.dir)")
    common.add_argument("--seed", type=int, help="random seed (seed)")
    common.add_argument("--data", help="input CSV (data.path)")
    common.add_argument("--station", help="station to read when the CSV holds several")
    common.add_argument("--B", type=int, help="bootstrap replicates (bootstrap.B)")
    common.add_argument("--alpha", type=float, help="interval level (bootstrap.alpha)")
    common.add_argument("--n-jobs", type=int, help="worker processes for bootstrap and simulation")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="farxts", description="FARX(1) functional forecasting")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("fit", parents=[common], help="fit and serialise a model")
    p = sub.add_parser("forecast", parents=[common], help="forecast the next curve from a model")
    p.add_argument("--model", help="model.json written by fit")
    sub.add_parser("backtest", parents=[common], help="expanding-window backtest")
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiment")
    p.add_argument("--replications", type=int)
    sub.add_parser("select", parents=[common], help="forward variable selection trace")
    p = sub.add_parser("summarize", parents=[common], help="aggregate a scores or metrics CSV")
    p.add_argument("--input", help="CSV to aggregate (default: <out>/backtest_scores.csv)")
    return parser


def _overrides(args) -> dict:
    ov = {"output.dir": args.output_dir, "seed": args.seed, "data.path": args.data,
          "data.station": args.station, "bootstrap.B": args.B, "bootstrap.alpha": args.alpha,
          "bootstrap.n_jobs": args.n_jobs, "simulate.n_jobs": args.n_jobs}
    if getattr(args, "replications", None) is not None:
        ov["simulate.replications"] = args.replications
    return ov


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}, sort_keys=True) + "\n")
    return status


def _check_readable(args, cfg):
    paths = [("--config", args.config), ("data.path", cfg.get("data.path")),
             ("--model", getattr(args, "model", None)), ("--input", getattr(args, "input", None))]
    for label, path in paths:
        if path and not Path(path).is_file():
            raise UsageError(f"{label}: cannot read {path}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.config and not Path(args.config).is_file():
            raise UsageError(f"--config: cannot read {args.config}")
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = io.load_config(args.config, _overrides(args))
        _check_readable(args, cfg)
        result = COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except FarxError as exc:
        return _fail(exc.code, str(exc), EXIT_FAILURE)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_FAILURE)
    sys.stdout.write(io.dumps({"command": args.command, **result}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
