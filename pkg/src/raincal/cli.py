"""Command line interface: simulate, fit, predict, verify, report.

A run is driven by a JSON config file; flags override the config where
both are given.  The pipeline is split so every stage leaves an artifact
on disk:

    raincal simulate --config c.json --out run/          data.csv + truth.csv
    raincal fit      --config c.json --out run/          models/<method>/*.json
    raincal predict  --config c.json --out run/          predictions_<method>.jsonl
    raincal verify   --config c.json --out run/          report_<method>.json
    raincal report   --out summary.csv run/report_*.json merged table

All outputs are byte-reproducible for a fixed config and seed, also
with ``--jobs`` above one: work is distributed over stations but
collected in sorted station order, every random stream is derived from
the config seed with explicit integer subkeys, and artifacts are
serialized with sorted keys and no timestamps.

Exit codes: 0 success, 1 runtime failure (data or fit problems),
2 usage or config errors.

Config keys (all sections optional unless a stage needs them)::

    {
      "version": 1,
      "seed": 0,
      "scenario":   {"n_days": 400, "n_members": 35, "n_stations": 1, ...},
      "data":       {"path": "run/data.csv"},
      "method":     "qrf",
      "cv":         {"scheme": "holdout", "train_fraction": 0.5},
      "predictors": {"set": "available"} | {"set": "C"} | {"columns": [...]},
      "forest":     {"n_trees": 100, "min_node_size": 10, "mtry": null},
      "emos":       {"n_restarts": 20, "max_evals": 200},
      "analogs":    {"n_analogs": 25, "t_tilde": 1},
      "selection":  {"max_k": 4, "corr_threshold": 0.9, "n_trees": 50},
      "verify":     {"thresholds": [0.1, 5.0], "baseline": "raw", "k_ref": null}
    }

Methods: raw, analogs, analogs_c, analogs_cor, analogs_vsf, qrf, gf,
emos_csg, emos_gev, emos_egp, qrf_egp_tail, gf_egp_tail.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analogs import AnalogConfig, build_station_archive, find_analogs
from .data import (
    Dataset,
    PredictorSet,
    SchemaError,
    available_predictors,
    load_dataset,
    make_cv_plan,
    set_c,
)
from .emos import EmosConfig, EmosModel, emos_features, emos_fit, station_xi_climatology
from .forests import Forest, ForestHyper, grow_forest
from .prediction import EnsemblePrediction, prediction_from_dict
from .selection import predictor_frequency, select_predictors
from .simulate import ScenarioSpec, simulate_scenario, truth_frame
from .tail import fit_egp_tail
from .verification import build_report, fair_crps, stable_mean

METHODS = (
    "raw",
    "analogs",
    "analogs_c",
    "analogs_cor",
    "analogs_vsf",
    "qrf",
    "gf",
    "emos_csg",
    "emos_gev",
    "emos_egp",
    "qrf_egp_tail",
    "gf_egp_tail",
)

_FOREST_METHODS = {"qrf": "cart", "gf": "gf", "qrf_egp_tail": "cart", "gf_egp_tail": "gf"}
_EMOS_METHODS = {"emos_csg": "csg", "emos_gev": "cgev", "emos_egp": "egp"}
_ANALOG_MODES = {"analogs": "uniform", "analogs_c": "uniform",
                 "analogs_cor": "correlation", "analogs_vsf": "vsf"}


class UsageError(Exception):
    """Bad flags or config content; maps to exit code 2."""


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    version = cfg.get("version", 1)
    if version != 1:
        raise UsageError(f"unsupported config version {version!r}")
    return cfg


def _seed_of(cfg: dict, args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(cfg.get("seed", 0))


def _method_of(cfg: dict, args) -> str:
    method = getattr(args, "method", None) or cfg.get("method")
    if method is None:
        raise UsageError("no method given (config key 'method' or flag --method)")
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return method


def _dataset_of(cfg: dict) -> Dataset:
    data_cfg = cfg.get("data") or {}
    path = data_cfg.get("path")
    if not path:
        raise UsageError("config needs data.path")
    return load_dataset(path)


def _predictors_of(cfg: dict, ds: Dataset, method: str) -> PredictorSet:
    if method == "analogs_c":
        return set_c()
    pc = cfg.get("predictors") or {}
    if "columns" in pc:
        return PredictorSet("custom", tuple(pc["columns"]))
    name = pc.get("set", "available")
    if name == "C":
        return set_c()
    if name == "available":
        return available_predictors(ds)
    raise UsageError(f"unknown predictor set {name!r}")


def _plan_of(cfg: dict, ds: Dataset):
    cv = cfg.get("cv") or {}
    scheme = cv.get("scheme", "holdout")
    return make_cv_plan(ds, scheme, train_fraction=cv.get("train_fraction", 0.5))


def _analog_config(cfg: dict, method: str, frequencies=None) -> AnalogConfig:
    ac = cfg.get("analogs") or {}
    return AnalogConfig(
        n_analogs=ac.get("n_analogs", 25),
        t_tilde=ac.get("t_tilde", 1),
        mode=_ANALOG_MODES[method],
        frequencies=frequencies,
    )


def _forest_hyper(cfg: dict) -> ForestHyper:
    fc = cfg.get("forest") or {}
    return ForestHyper(
        n_trees=fc.get("n_trees", 100),
        mtry=fc.get("mtry"),
        min_node_size=fc.get("min_node_size", 10),
    )


def _emos_config(cfg: dict) -> EmosConfig:
    ec = cfg.get("emos") or {}
    return EmosConfig(
        n_restarts=ec.get("n_restarts", 20),
        max_evals=ec.get("max_evals", 200),
    )


def _subseed(seed: int, *keys) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _iso(t) -> str:
    return t.item().strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _station_fold(ds: Dataset, fold, sid: str):
    """Train and validation subsets of one station under one fold."""
    train_idx, val_idx = fold
    train = ds.subset(train_idx)
    val = ds.subset(val_idx)
    return train.for_station(sid), val.for_station(sid)


# ----------------------------------------------------------------------
# fit stage


def _fit_one(payload):
    """Fit one (method, fold, station) task; returns a JSON-able artifact."""
    method, train_s, cfg, seed = payload
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if method in _FOREST_METHODS:
            from .data import derive_matrix

            predictors = PredictorSet("custom", tuple(cfg["predictor_columns"]))
            keep = np.isfinite(train_s.obs)
            X = derive_matrix(train_s.subset(np.nonzero(keep)[0]), predictors)
            y = train_s.obs[keep]
            forest = grow_forest(X, y, _FOREST_METHODS[method], ForestHyper(**cfg["forest"]),
                                 seed=seed, feature_names=predictors.columns)
            return forest.to_dict()
        if method in _EMOS_METHODS:
            family = _EMOS_METHODS[method]
            keep = np.isfinite(train_s.obs)
            sub = train_s.subset(np.nonzero(keep)[0])
            feats = emos_features(sub)
            xi = None
            if family == "egp":
                xi = station_xi_climatology(sub.obs)
            model = emos_fit(family, feats, sub.obs, xi_fixed=xi,
                             config=EmosConfig(**cfg["emos"]), seed=seed)
            return model.to_dict()
        if method in _ANALOG_MODES:
            predictors = PredictorSet("custom", tuple(cfg["predictor_columns"]))
            acfg = AnalogConfig(**cfg["analogs"])
            archive = build_station_archive(train_s, predictors, acfg)
            return {
                "format": "raincal-analogs",
                "mode": acfg.mode,
                "weights": dict(zip(archive.names, archive.weights.tolist())),
            }
        return {"format": "raincal-raw"}


def _select_one(payload):
    """Predictor selection for one station (the vsf pre-pass)."""
    train_s, columns, sel_cfg, seed = payload
    from .data import derive_matrix

    predictors = PredictorSet("custom", tuple(columns))
    keep = np.isfinite(train_s.obs)
    sub = train_s.subset(np.nonzero(keep)[0])
    X = derive_matrix(sub, predictors)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = select_predictors(X, sub.obs, predictors.columns, seed=seed, **sel_cfg)
    return res.chosen


def _run_tasks(worker, payloads, jobs: int):
    if jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))


def _selection_cfg(cfg: dict) -> dict:
    sc = cfg.get("selection") or {}
    return {
        "max_k": sc.get("max_k", 4),
        "corr_threshold": sc.get("corr_threshold", 0.9),
        "n_trees": sc.get("n_trees", 50),
    }


def _vsf_frequencies(cfg, ds, plan, predictors, fold_idx, fold, stations, seed, jobs):
    payloads = []
    for s_idx, sid in enumerate(stations):
        train_s, _ = _station_fold(ds, fold, sid)
        payloads.append((train_s, predictors.columns, _selection_cfg(cfg),
                         _subseed(seed, 7, fold_idx, s_idx)))
    chosen = _run_tasks(_select_one, payloads, jobs)
    table = predictor_frequency({sid: ch for sid, ch in zip(stations, chosen)})
    return dict(table)


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    method = _method_of(cfg, args)
    seed = _seed_of(cfg, args)
    ds = _dataset_of(cfg)
    if not np.any(ds.has_obs):
        raise SchemaError("fitting needs verified observations")
    plan = _plan_of(cfg, ds)
    predictors = _predictors_of(cfg, ds, method)
    stations = sorted(set(ds.station_ids))

    out = Path(args.out)
    model_dir = out / "models" / method
    model_dir.mkdir(parents=True, exist_ok=True)

    hyper = _forest_hyper(cfg)
    ecfg = _emos_config(cfg)
    small = {
        "predictor_columns": list(predictors.columns),
        "forest": {"n_trees": hyper.n_trees, "mtry": hyper.mtry,
                   "min_node_size": hyper.min_node_size},
        "emos": {"n_restarts": ecfg.n_restarts, "max_evals": ecfg.max_evals},
        "analogs": None,
    }

    manifest = {"method": method, "seed": seed, "scheme": plan.scheme,
                "predictors": list(predictors.columns), "folds": {}}
    for fold_idx, fold in enumerate(plan.folds):
        frequencies = None
        if method == "analogs_vsf":
            frequencies = _vsf_frequencies(cfg, ds, plan, predictors, fold_idx, fold,
                                           stations, seed, args.jobs)
        acfg = _analog_config(cfg, method, frequencies) if method in _ANALOG_MODES else None
        small["analogs"] = (
            {"n_analogs": acfg.n_analogs, "t_tilde": acfg.t_tilde,
             "mode": acfg.mode, "frequencies": acfg.frequencies}
            if acfg is not None else None
        )
        payloads, names = [], []
        for s_idx, sid in enumerate(stations):
            train_s, _ = _station_fold(ds, fold, sid)
            if train_s.n_cases == 0:
                continue
            payloads.append((method, train_s, dict(small), _subseed(seed, 1, fold_idx, s_idx)))
            names.append(sid)
        artifacts = _run_tasks(_fit_one, payloads, args.jobs)
        fold_entry = {}
        for sid, art in zip(names, artifacts):
            fname = f"f{fold_idx:03d}_{sid}.json"
            _write_json(model_dir / fname, art)
            fold_entry[sid] = fname
        if frequencies is not None:
            fold_entry["_frequencies"] = frequencies
        manifest["folds"][str(fold_idx)] = fold_entry
    _write_json(out / f"fit_{method}.json", manifest)
    print(f"fit: {method}, {len(plan.folds)} fold(s), {len(stations)} station(s) -> {model_dir}")
    return 0


# ----------------------------------------------------------------------
# predict stage


def _predict_one(payload):
    """Predictions of one (method, fold, station) task as JSONL-ready rows."""
    method, train_s, val_s, artifact, cfg, seed = payload
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if method == "raw":
            for i in range(val_s.n_cases):
                pred = EnsemblePrediction(val_s.members[i])
                rows.append((_iso(val_s.valid_times[i]), pred.to_dict(), None))
        elif method in _FOREST_METHODS:
            from .data import derive_matrix
            from .prediction import EcdfPrediction

            predictors = PredictorSet("custom", tuple(cfg["predictor_columns"]))
            forest = Forest.from_dict(artifact)
            X = derive_matrix(val_s, predictors)
            ecdfs = forest.predict_ecdf(np.atleast_2d(X)) if val_s.n_cases else []
            tail = method.endswith("_egp_tail")
            for i, e in enumerate(ecdfs):
                pred = fit_egp_tail(e) if tail else EcdfPrediction(e)
                rows.append((_iso(val_s.valid_times[i]), pred.to_dict(), None))
        elif method in _EMOS_METHODS:
            model = EmosModel.from_dict(artifact)
            feats = emos_features(val_s)
            for i, pred in enumerate(model.predict(feats)):
                rows.append((_iso(val_s.valid_times[i]), pred.to_dict(), None))
        else:  # analog family
            predictors = PredictorSet("custom", tuple(cfg["predictor_columns"]))
            acfg = AnalogConfig(**cfg["analogs"])
            archive = build_station_archive(train_s, predictors, acfg, query_ds=val_s)
            for i in range(val_s.n_cases):
                try:
                    pred = find_analogs(archive, val_s.valid_times[i], acfg)
                    rows.append((_iso(val_s.valid_times[i]), pred.to_dict(), None))
                except (ValueError, KeyError) as exc:
                    rows.append((_iso(val_s.valid_times[i]), None, str(exc)))
    return rows


def cmd_predict(args) -> int:
    cfg = _load_config(args.config)
    method = _method_of(cfg, args)
    seed = _seed_of(cfg, args)
    ds = _dataset_of(cfg)
    plan = _plan_of(cfg, ds)
    predictors = _predictors_of(cfg, ds, method)
    stations = sorted(set(ds.station_ids))

    out = Path(args.out)
    model_dir = Path(args.models) if args.models else out / "models" / method
    manifest_path = out / f"fit_{method}.json"
    if method != "raw":
        if not manifest_path.exists():
            raise UsageError(f"no fit manifest {manifest_path}; run fit first")
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        if manifest.get("method") != method:
            raise UsageError("fit manifest belongs to a different method")
    else:
        manifest = {"folds": {}}

    lines = []
    for fold_idx, fold in enumerate(plan.folds):
        fold_entry = manifest["folds"].get(str(fold_idx), {})
        frequencies = fold_entry.get("_frequencies")
        acfg = _analog_config(cfg, method, frequencies) if method in _ANALOG_MODES else None
        small = {
            "predictor_columns": list(predictors.columns),
            "analogs": (
                {"n_analogs": acfg.n_analogs, "t_tilde": acfg.t_tilde,
                 "mode": acfg.mode, "frequencies": acfg.frequencies}
                if acfg is not None else None
            ),
        }
        payloads, metas = [], []
        for s_idx, sid in enumerate(stations):
            train_s, val_s = _station_fold(ds, fold, sid)
            if val_s.n_cases == 0:
                continue
            artifact = None
            if method != "raw":
                fname = fold_entry.get(sid)
                if fname is None:
                    raise UsageError(f"no fitted model for station {sid} in fold {fold_idx}")
                with open(model_dir / fname) as fh:
                    artifact = json.load(fh)
            payloads.append((method, train_s, val_s, artifact, dict(small),
                             _subseed(seed, 2, fold_idx, s_idx)))
            metas.append((sid, val_s))
        results = _run_tasks(_predict_one, payloads, args.jobs)
        for (sid, val_s), rows in zip(metas, results):
            obs_map = {_iso(val_s.valid_times[i]):
                       (float(val_s.obs[i]) if np.isfinite(val_s.obs[i]) else None)
                       for i in range(val_s.n_cases)}
            for iso, pred_dict, note in rows:
                line = {"station": sid, "valid_time": iso, "fold": fold_idx,
                        "method": method, "obs": obs_map[iso], "prediction": pred_dict}
                if note is not None:
                    line["note"] = note
                lines.append(line)

    lines.sort(key=lambda d: (d["station"], d["valid_time"], d["fold"]))
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"predictions_{method}.jsonl"
    with open(path, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    n_ok = sum(1 for l in lines if l["prediction"] is not None)
    print(f"predict: {method}, {n_ok}/{len(lines)} cases -> {path}")
    return 0


# ----------------------------------------------------------------------
# verify stage


def _baseline_raw_crps(ds: Dataset, keys) -> float:
    """Mean fair CRPS of the raw ensemble over the given (station, time) keys."""
    lookup = {}
    for i in range(ds.n_cases):
        lookup[(ds.station_ids[i], _iso(ds.valid_times[i]))] = i
    vals = []
    for sid, iso, y in keys:
        i = lookup.get((sid, iso))
        if i is None:
            raise ValueError(f"case ({sid}, {iso}) not found in the data file")
        vals.append(fair_crps(ds.members[i], y))
    return stable_mean(vals)


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    seed = _seed_of(cfg, args)
    vc = cfg.get("verify") or {}
    pred_path = Path(args.predictions)
    if not pred_path.exists():
        raise UsageError(f"predictions file {pred_path} does not exist")

    methods = set()
    preds, obs, keys, n_skipped = [], [], [], 0
    with open(pred_path) as fh:
        for raw_line in fh:
            raw_line = raw_line.strip()
            if not raw_line:
                continue
            line = json.loads(raw_line)
            methods.add(line.get("method"))
            if line.get("prediction") is None:
                n_skipped += 1
                continue
            if line.get("obs") is None:
                n_skipped += 1
                continue
            preds.append(prediction_from_dict(line["prediction"]))
            obs.append(float(line["obs"]))
            keys.append((line["station"], line["valid_time"], float(line["obs"])))
    if len(methods) != 1:
        raise UsageError(f"predictions file mixes methods: {sorted(methods)}")
    method = methods.pop()
    if not preds:
        raise ValueError("no scorable predictions (all skipped or unverified)")

    baseline = None
    if vc.get("baseline") == "raw":
        baseline = _baseline_raw_crps(_dataset_of(cfg), keys)

    report = build_report(
        method, preds, np.array(obs),
        baseline_crps=baseline,
        seed=seed,
        thresholds=tuple(vc.get("thresholds", (0.1, 5.0))),
        k_ref=vc.get("k_ref"),
        alpha=vc.get("alpha", 0.05),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"report": report.to_dict(), "n_skipped": n_skipped,
               "baseline_crps": baseline, "seed": seed}
    path = out / f"report_{method}.json"
    _write_json(path, payload)
    with open(out / f"rank_histogram_{method}.csv", "w") as fh:
        fh.write("rank,count\n")
        for r, c in enumerate(report.rank_counts, start=1):
            fh.write(f"{r},{c}\n")
    print(f"verify: {method}, n={report.n_cases}, mean CRPS {report.mean_crps:.4f} -> {path}")
    return 0


# ----------------------------------------------------------------------
# simulate and report stages


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    seed = _seed_of(cfg, args)
    sc = cfg.get("scenario") or {}
    try:
        spec = ScenarioSpec(**sc)
    except TypeError as exc:
        raise UsageError(f"bad scenario section: {exc}") from exc
    result = simulate_scenario(spec, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.dataset.to_csv(out / "data.csv")
    truth_frame(result).to_csv(out / "truth.csv", index=False)
    _write_json(out / "scenario.json", {"spec": asdict(spec), "seed": seed})
    print(f"simulate: {result.dataset.n_cases} cases, {spec.n_members} members -> {out}")
    return 0


_SUMMARY_PREFIX = ("method", "n_cases", "k_ref", "mean_crps", "ci_lo", "ci_hi",
                   "crpss", "ez", "vz", "omega", "flatness_reject", "n_skipped")


def cmd_report(args) -> int:
    import pandas as pd

    rows = []
    for path in args.reports:
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read report {path}: {exc}") from exc
        rep = payload.get("report", payload)
        row = {
            "method": rep["method"],
            "n_cases": rep["n_cases"],
            "k_ref": rep["k_ref"],
            "mean_crps": rep["mean_crps"],
            "ci_lo": rep["crps_ci"][0],
            "ci_hi": rep["crps_ci"][1],
            "crpss": rep.get("crpss"),
            "ez": rep["ez"],
            "vz": rep["vz"],
            "omega": rep["omega"],
            "flatness_reject": (rep["flatness"] or {}).get("reject"),
            "n_skipped": payload.get("n_skipped", 0),
        }
        for thr, roc in sorted((rep.get("roc") or {}).items(), key=lambda t: float(t[0])):
            tag = f"{float(thr):g}"
            row[f"auc_{tag}"] = None if roc is None else roc["auc"]
            row[f"peirce_{tag}"] = None if roc is None else roc["peirce_max"]
        rows.append(row)
    if not rows:
        raise UsageError("no report files given")
    extra = sorted({k for r in rows for k in r} - set(_SUMMARY_PREFIX))
    frame = pd.DataFrame(rows, columns=list(_SUMMARY_PREFIX) + extra)
    frame.to_csv(args.out, index=False)
    print(f"report: {len(rows)} method(s) -> {args.out}")
    return 0


# ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raincal",
        description="Ensemble rainfall post-processing: simulate, fit, predict, verify, report.",
    )
    parser.add_argument("--version", action="version", version=f"raincal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, models=False, predictions=False):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes over stations")
        if models:
            p.add_argument("--method", default=None, help="override the config method")
            p.add_argument("--models", default=None,
                           help="model directory (default <out>/models/<method>)")
        if predictions:
            p.add_argument("--predictions", required=True, help="predictions JSONL file")

    p_sim = sub.add_parser("simulate", help="draw a synthetic scenario")
    common(p_sim)

    p_fit = sub.add_parser("fit", help="fit one method per fold and station")
    common(p_fit, models=True)

    p_pred = sub.add_parser("predict", help="emit validation predictions")
    common(p_pred, models=True)

    p_ver = sub.add_parser("verify", help="score a predictions file")
    common(p_ver, predictions=True)

    p_rep = sub.add_parser("report", help="merge verification reports into a CSV")
    p_rep.add_argument("--out", required=True, help="summary CSV path")
    p_rep.add_argument("reports", nargs="+", help="report_*.json files")
    return parser


_HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to exit 1
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
