"""Command-line front end.

One declarative JSON config drives every command; flags only override
config keys, and the effective config is embedded in anything a command
writes so runs are reproducible. Unknown config keys are rejected.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

Commands: synth, extract, smooth, select, train, predict, eval, topo.
The report-producing commands (eval, topo) render figures next to their
delimited outputs unless --no-figures is given. EEGEMO_OUT sets the
default output directory.
"""

from __future__ import annotations

import argparse
import glob as _glob
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import plots
from .classify import ModelFormatError
from .evaluate import cross_session_matrix, export_topo_grid, kfold_cv, leave_one_subject_out
from .features import FEATURE_KINDS, extract_features
from .pipeline import (
    PipelineConfig, fit_pipeline, load_pipeline, prepare_tensors, save_pipeline,
)
from .reduction import correlation_rank, mrmr_select, ranking_to_csv
from .smoothing import fit_lds, lds_smooth, moving_average
from .spectral import BAND_TABLES
from .synthetic import generate_synthetic, load_spec
from .tensor import FeatureTensor, load_feature_csv, save_feature_csv, stack_windows
from .trials import TrialFormatError, load_trial, save_trial

ENV_OUT = "EEGEMO_OUT"


class ConfigError(ValueError):
    """Bad configuration or unusable inputs; maps to exit code 2."""


_TOP_KEYS = {
    "inputs", "output_dir", "jobs", "figures", "seed",
    "protocol", "pipeline", "select", "smooth", "topo_bands",
}
_PROTOCOL_KEYS = {"name", "k"}
_SELECT_KEYS = {"method", "k"}
_SMOOTH_KEYS = {"method", "window", "max_iters", "tol"}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for section, allowed in (
        ("protocol", _PROTOCOL_KEYS), ("select", _SELECT_KEYS), ("smooth", _SMOOTH_KEYS),
    ):
        extra = set(doc.get(section, {})) - allowed
        if extra:
            raise ConfigError(f"unknown {section} keys: {sorted(extra)}")
    return doc


def _pipeline_config(doc: dict, seed: int) -> PipelineConfig:
    merged = dict(doc.get("pipeline", {}))
    merged.setdefault("seed", seed)
    try:
        return PipelineConfig.from_dict(merged)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"pipeline config: {e}")


def _resolve_inputs(args, cfg) -> list[Path]:
    pattern = args.inputs or cfg.get("inputs")
    if pattern is None:
        raise ConfigError("no inputs given (flag --inputs or config key 'inputs')")
    if isinstance(pattern, str):
        patterns = [pattern]
    else:
        patterns = list(pattern)
    paths: list[Path] = []
    for p in patterns:
        hits = sorted(_glob.glob(p))
        if hits:
            paths.extend(Path(h) for h in hits)
        elif Path(p).exists():
            paths.append(Path(p))
    if not paths:
        raise ConfigError(f"inputs matched no files: {pattern}")
    return paths


def _resolve_out(args, cfg) -> Path:
    out = args.out or cfg.get("output_dir") or os.environ.get(ENV_OUT) or "."
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _want_figures(args, cfg) -> bool:
    if args.no_figures:
        return False
    return bool(cfg.get("figures", True))


def _load_items(paths: list[Path]):
    """Trials from .json sidecars, feature tensors from .csv files."""
    items = []
    for p in paths:
        if p.suffix == ".json":
            items.append(load_trial(p))
        elif p.suffix == ".csv":
            items.append(load_feature_csv(p))
        elif p.suffix == ".f32":
            continue
        else:
            raise ConfigError(f"cannot classify input file {p} (expect .json or .csv)")
    if not items:
        raise ConfigError("inputs contained no loadable trials or feature files")
    return items


# ----------------------------------------------------------------- commands


def cmd_synth(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    try:
        spec = load_spec(args.spec)
    except FileNotFoundError:
        raise ConfigError(f"spec file not found: {args.spec}")
    except (ValueError, TypeError) as e:
        raise ConfigError(f"synthetic spec: {e}")
    trials = generate_synthetic(spec)
    rows = ["trial_id,label,path"]
    for t in trials:
        base = out / f"{t.subject_id}_{t.session_id}_{t.trial_id}"
        save_trial(t, base)
        rows.append(f"{t.trial_id},{t.label},{base.name}.json")
    (out / "labels.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {len(trials)} trials to {out}")
    return 0


def cmd_extract(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    pconf = _pipeline_config(cfg, seed)
    if args.feature:
        if args.feature not in FEATURE_KINDS:
            raise ConfigError(f"unknown feature {args.feature!r}")
        pconf.feature = args.feature
    bands = BAND_TABLES[pconf.band_table]
    paths = [p for p in _resolve_inputs(args, cfg) if p.suffix == ".json"]
    if not paths:
        raise ConfigError("extract needs trial .json inputs")
    jobs = args.jobs or int(cfg.get("jobs", 1))

    def one(p: Path):
        trial = load_trial(p)
        ft = extract_features(trial, pconf.feature, bands, pconf.window_seconds)
        dest = out / f"{p.stem}.features.csv"
        save_feature_csv(ft, dest)
        return {
            "input": str(p), "output": dest.name, "trial_id": trial.trial_id,
            "subject_id": trial.subject_id, "session_id": trial.session_id,
            "label": trial.label, "n_windows": ft.n_windows,
            "n_columns": ft.n_columns,
        }

    entries, failures = [], []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [(p, pool.submit(one, p)) for p in paths]
            for p, fut in futures:
                try:
                    entries.append(fut.result())
                except Exception as e:
                    failures.append({"input": str(p), "error": str(e)})
    else:
        for p in paths:
            try:
                entries.append(one(p))
            except Exception as e:
                failures.append({"input": str(p), "error": str(e)})

    manifest = {
        "feature": pconf.feature,
        "band_table": pconf.band_table,
        "window_seconds": pconf.window_seconds,
        "files": sorted(entries, key=lambda e: e["input"]),
        "failures": sorted(failures, key=lambda e: e["input"]),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"extracted {len(entries)} of {len(paths)} trials to {out}")
    for f in failures:
        print(f"FAILED {f['input']}: {f['error']}", file=sys.stderr)
    return 1 if failures else 0


def cmd_smooth(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    section = dict(cfg.get("smooth", {}))
    method = args.method or section.get("method", "lds")
    window = args.window or int(section.get("window", 5))
    if method not in ("moving_average", "lds"):
        raise ConfigError(f"unknown smoothing method {method!r}")
    paths = [p for p in _resolve_inputs(args, cfg) if p.suffix == ".csv"]
    if not paths:
        raise ConfigError("smooth needs feature .csv inputs")
    for p in paths:
        ft = load_feature_csv(p)
        if method == "moving_average":
            sm = moving_average(ft, window)
        else:
            fit = fit_lds(
                ft,
                int(section.get("max_iters", 50)),
                float(section.get("tol", 1e-4)),
            )
            sm = lds_smooth(ft, fit.params)
        save_feature_csv(sm, out / f"{p.stem}.smoothed.csv")
    print(f"smoothed {len(paths)} feature files to {out}")
    return 0


def cmd_select(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    section = dict(cfg.get("select", {}))
    method = args.method or section.get("method", "mrmr")
    n_select = args.k or int(section.get("k", 20))
    if method not in ("mrmr", "correlation"):
        raise ConfigError(f"unknown selection method {method!r}")
    tensors = [load_feature_csv(p) for p in _resolve_inputs(args, cfg)
               if p.suffix == ".csv"]
    if not tensors:
        raise ConfigError("select needs feature .csv inputs")
    X, y = stack_windows(tensors)
    pooled = FeatureTensor(X, tensors[0].columns, tensors[0].window_seconds)
    if method == "mrmr":
        ranking = mrmr_select(pooled, y, n_select)
    else:
        ranking = correlation_rank(pooled, y, n_select)
    dest = out / "ranking.csv"
    ranking_to_csv(ranking, dest)
    print(f"wrote {dest}")
    return 0


def cmd_train(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    pconf = _pipeline_config(cfg, seed)
    items = _load_items(_resolve_inputs(args, cfg))
    tensors = prepare_tensors(items, pconf)
    pipe = fit_pipeline(tensors, pconf)
    save_pipeline(pipe, out)
    print(f"trained pipeline saved to {out}")
    return 0


def cmd_predict(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    try:
        pipe = load_pipeline(args.model)
    except (FileNotFoundError, ModelFormatError) as e:
        raise ConfigError(f"cannot load model: {e}")
    items = _load_items(_resolve_inputs(args, cfg))
    tensors = prepare_tensors(items, pipe.config)
    rows = ["trial_id,window,true_label,predicted"]
    for t in tensors:
        preds = pipe.predict_windows(t)
        for w, p in enumerate(preds):
            rows.append(f"{t.trial_id},{w},{t.label},{int(p)}")
    dest = out / "predictions.csv"
    dest.write_text("\n".join(rows) + "\n")
    print(f"wrote {dest}")
    return 0


def cmd_eval(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    pconf = _pipeline_config(cfg, seed)
    protocol = dict(cfg.get("protocol", {}))
    name = args.protocol or protocol.get("name", "kfold")
    k = int(protocol.get("k", 5))
    items = _load_items(_resolve_inputs(args, cfg))

    if name == "kfold":
        report = kfold_cv(items, pconf, k=k, seed=seed)
    elif name == "cross_session":
        by_session: dict[str, list] = {}
        for item in items:
            by_session.setdefault(item.session_id, []).append(item)
        if len(by_session) < 2:
            raise ConfigError(
                f"cross_session needs >= 2 sessions, inputs have {len(by_session)}"
            )
        sessions = [by_session[s] for s in sorted(by_session)]
        report = cross_session_matrix(sessions, pconf, k=k, seed=seed)
    elif name == "loso":
        report = leave_one_subject_out(items, pconf, seed=seed)
    else:
        raise ConfigError(f"unknown protocol {name!r}")

    paths = report.save(out)
    if _want_figures(args, cfg):
        paths.append(plots.save_cell_accuracies(report, out / "report_accuracy.png"))
        if report.grid_keys:
            paths.append(plots.save_accuracy_matrix(report, out / "report_matrix.png"))
    print(f"mean accuracy {report.mean_accuracy:.2f} +/- {report.std_accuracy:.2f} %")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_topo(args, cfg) -> int:
    out = _resolve_out(args, cfg)
    tensors = [load_feature_csv(p) for p in _resolve_inputs(args, cfg)
               if p.suffix == ".csv"]
    if not tensors:
        raise ConfigError("topo needs DE feature .csv inputs")
    bands = tuple(args.bands) if args.bands else (
        tuple(cfg["topo_bands"]) if "topo_bands" in cfg else None
    )
    grids = export_topo_grid(tensors, bands=bands, out_dir=out)
    if _want_figures(args, cfg):
        for g in grids:
            plots.save_topo_figure(g, out / f"topo_class{g.label}_{g.band}.png")
    print(f"wrote {len(grids)} topo grids to {out}")
    return 0


# -------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eegemo",
        description="EEG emotion-recognition pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, inputs=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or .)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
        if inputs:
            p.add_argument("--inputs", help="input glob or path")

    p = sub.add_parser("synth", help="generate synthetic trials from a spec file")
    p.add_argument("spec", help="synthetic spec JSON")
    common(p, inputs=False)

    p = sub.add_parser("extract", help="extract feature tensors from trials")
    common(p)
    p.add_argument("--feature", choices=FEATURE_KINDS, default=None)
    p.add_argument("--jobs", type=int, default=None, help="parallel workers")

    p = sub.add_parser("smooth", help="smooth feature files")
    common(p)
    p.add_argument("--method", choices=("moving_average", "lds"), default=None)
    p.add_argument("--window", type=int, default=None)

    p = sub.add_parser("select", help="rank features by MRMR or correlation")
    common(p)
    p.add_argument("--method", choices=("mrmr", "correlation"), default=None)
    p.add_argument("--k", type=int, default=None)

    p = sub.add_parser("train", help="fit a pipeline on feature or trial files")
    common(p)

    p = sub.add_parser("predict", help="predict with a trained pipeline")
    common(p)
    p.add_argument("--model", required=True, help="pipeline directory")

    p = sub.add_parser("eval", help="run an evaluation protocol")
    common(p)
    p.add_argument("--protocol", choices=("kfold", "cross_session", "loso"),
                   default=None)

    p = sub.add_parser("topo", help="export topographic grids from DE features")
    common(p)
    p.add_argument("--bands", nargs="*", default=None)
    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "smooth": cmd_smooth,
    "select": cmd_select,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "topo": cmd_topo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (TrialFormatError, ModelFormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
