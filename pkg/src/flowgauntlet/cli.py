"""Batch command-line driver.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 runtime failure. Written artifact paths go to stdout, diagnostics to
stderr. ``FLOWGAUNTLET_LOG`` sets the log level (error, warn, info, debug).
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .advcraft import cw_batch, write_attack_manifest
from .config import RunConfig, load_config
from .conformal import (
    alpha_sweep,
    calibrate,
    conformal_scores,
    quantile_threshold,
    write_sweep_csv,
    write_verdict_csv,
)
from .errors import ConfigError, DataError
from .featselect import ig_report, select_by_threshold, threshold_sweep
from .featselect import write_sweep_csv as write_ig_sweep
from .flowdata import fit_scaler, load_flow_csv, split, transform, write_flow_csv
from .hyperopt import (
    DEFAULT_SPACES,
    canonical_kind,
    classifier_fitness_fn,
    ga_optimize,
    pso_optimize,
    random_search,
    write_best_json,
    write_trace_csv,
)
from .models import evaluate, save_model, train_model
from .pipeline import (
    adversarial_retrain,
    emit_report,
    generate_synthetic_flows,
    prepare_inputs,
    read_campaign_csv,
    run_attack_campaign,
    write_manifest,
)

log = logging.getLogger("flowgauntlet")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this driver reserves 2 for data errors."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def _json_dump(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _dataset(cfg):
    path = cfg.data_path()
    if path is not None:
        if not path.exists():
            raise DataError(f"data.path: file not found: {path}")
        return load_flow_csv(path)
    return generate_synthetic_flows(cfg.synthetic_spec())


def _prepared(cfg):
    parts = split(_dataset(cfg), cfg.split_spec())
    scaler = fit_scaler(parts.train)
    std = {name: transform(scaler, ds) for name, ds in
           zip(("train", "validation", "calibration", "test"), parts)}
    return parts, scaler, std


def _seed(cfg):
    return cfg.seed if cfg.seed is not None else 0


def _metrics_dict(m):
    return None if m is None else {k: getattr(m, k) for k in
                                   ("accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn")}


def _finish(args, cfg, out_dir, artifacts):
    artifacts = [Path(a) for a in artifacts]
    manifest = write_manifest(Path(out_dir) / "manifest.json", cfg.raw, cfg.seed, artifacts,
                              command=args.command_name)
    return artifacts + [manifest]


def _train_selected(cfg, std):
    kind = canonical_kind(cfg.model_kind())
    return kind, train_model(kind, std["train"], cfg.model_params(), _seed(cfg))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_prepare(args, cfg):
    parts, scaler, _ = _prepared(cfg)
    out = Path(args.out)
    files = [write_flow_csv(ds, out / f"{name}.csv") for name, ds in
             zip(("train", "validation", "calibration", "test"), parts)]
    files.append(scaler.save(out / "scaler.json"))
    return _finish(args, cfg, out, files)


def cmd_synth(args, cfg):
    target = Path(args.out)
    if target.suffix.lower() != ".csv":
        target = target / "flows.csv"
    path = write_flow_csv(generate_synthetic_flows(cfg.synthetic_spec()), target)
    return _finish(args, cfg, target.parent, [path])


def cmd_select_features(args, cfg):
    parts, _, _ = _prepared(cfg)
    bins = cfg.features.get("bins", 10)
    threshold = cfg.features.get("threshold", 0.09)
    report = ig_report(parts.train, bins)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ig_path = out / "ig.csv"
    lines = ["feature,information_gain"] + [f"{n},{report.gains[n]!r}" for n in report.order]
    ig_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    files = [ig_path]
    selected = select_by_threshold(report, threshold)
    files.append(_json_dump({"threshold": threshold, "bins": bins, "selected": selected},
                            out / "selected.json"))
    if "thresholds" in cfg.features:
        rows = threshold_sweep(parts.train, parts.validation, cfg.features["thresholds"], bins=bins)
        files.append(write_ig_sweep(rows, out / "threshold_sweep.csv"))
    return _finish(args, cfg, out, files)


def cmd_train(args, cfg):
    _, scaler, std = _prepared(cfg)
    kind, model = _train_selected(cfg, std)
    out = Path(args.out)
    files = [save_model(model, out / "model.json"), scaler.save(out / "scaler.json")]
    files.append(_json_dump({"kind": kind, "test": _metrics_dict(evaluate(model, std["test"]))},
                            out / "metrics.json"))
    return _finish(args, cfg, out, files)


def cmd_tune(args, cfg):
    t = cfg.tuner_settings()
    kind = canonical_kind(t["kind"])
    _, _, std = _prepared(cfg)
    space = DEFAULT_SPACES[kind]
    fitness = classifier_fitness_fn(std["train"], std["validation"], kind, space, seed=_seed(cfg))
    if args.method == "rs":
        result = random_search(space, t["budget"], fitness, t["seed"])
    elif args.method == "ga":
        result = ga_optimize(space, t["population"], t["generations"], t["tournament"],
                             t["mutation_prob"], fitness, t["seed"])
    else:
        result = pso_optimize(space, t["particles"], t["iterations"], t["w"], t["c1"], t["c2"],
                              fitness, t["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = [write_trace_csv(result.trace, out / "trace.csv"),
             write_best_json(result.best, space, out / "best.json",
                             {"kind": kind, "method": args.method})]
    return _finish(args, cfg, out, files)


def cmd_attack(args, cfg):
    ccfg = cfg.campaign_config(args.method)
    out = Path(args.out)
    report = run_attack_campaign(ccfg, batch_dir=out)
    files = list(report.batch_files)
    files.append(write_attack_manifest(out / "attack_manifest.json", ccfg, {"seed": ccfg.seed},
                                       failed=[f"{r.feature}@{r.checkpoint}" for r in report.rows
                                               if r.failed]))
    return _finish(args, cfg, out, files)


def _evasive(inputs, X, y, ccfg):
    """C&W adversaries for every configured feature, kept where the surrogate is fooled."""
    sur = inputs.surrogate
    pool = X[(y == 1) & (sur.predict_array(X) == 1)]
    out = []
    for j, feature in enumerate(ccfg.features):
        last = ccfg.checkpoints[-1]
        adv = cw_batch(sur, inputs.scaler, pool, 0, feature, inputs.bounds, seed=[ccfg.seed, j],
                       cfg=ccfg.cw, checkpoints=[last])[last].perturbed
        out.append(adv[sur.predict_array(adv) == 0])
    return np.vstack(out) if out else np.empty((0, X.shape[1]))


def cmd_retrain(args, cfg):
    ccfg = cfg.campaign_config("cw")
    inputs = prepare_inputs(ccfg)
    std_val = inputs.validation
    kind = canonical_kind(cfg.model_kind())
    adv = {name: _evasive(inputs, ds.X, ds.y, ccfg) for name, ds in
           (("train", inputs.train), ("validation", std_val), ("test", inputs.test))}
    before = train_model(kind, inputs.train, cfg.model_params(), _seed(cfg))
    ga = cfg.ga_config() if cfg.tuner is not None else None
    result = adversarial_retrain(inputs.train, adv["train"], kind, ga, validation=std_val,
                                 test=inputs.test, adversarial_validation=adv["validation"],
                                 adversarial_eval=adv["test"], seed=_seed(cfg))
    out = Path(args.out)
    doc = {
        "kind": kind,
        "adversarial_counts": {k: int(len(v)) for k, v in adv.items()},
        "before": {"clean": _metrics_dict(evaluate(before, inputs.test)),
                   "evasive_fraction": (float(np.mean(before.predict_array(adv["test"]) == 0))
                                        if len(adv["test"]) else None)},
        "after": {"clean": _metrics_dict(result.clean),
                  "adversarial": _metrics_dict(result.adversarial)},
        "best_hyperparameters": {k: (v.item() if isinstance(v, np.generic) else v)
                                 for k, v in zip(DEFAULT_SPACES[kind].names,
                                                 result.search.best.values)},
    }
    files = [save_model(result.model, out / "model.json"), _json_dump(doc, out / "metrics.json")]
    return _finish(args, cfg, out, files)


def cmd_conformal(args, cfg):
    c = cfg.conformal_settings()
    _, _, std = _prepared(cfg)
    _, model = _train_selected(cfg, std)
    cal, test = std["calibration"], std["test"]
    if len(cal) == 0:
        raise DataError("calibration split is empty; raise data.split.calibration_fraction_of_train")
    p_cal = model.predict_proba_array(cal.X)
    p_test = model.predict_proba_array(test.X)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.action == "calibrate":
        calib = calibrate(p_cal, cal.y, c["alpha"])
        files = [_json_dump({"alpha": calib.alpha, "q_hat": calib.q_hat, "n": len(calib.scores),
                             "scores": list(calib.scores)}, out / "calibration.json")]
    elif args.action == "sweep":
        preds = (p_test >= 0.5).astype(int)
        rows, best = alpha_sweep(p_cal, cal.y, p_test, preds, test.y, c["alpha_lo"],
                                 c["alpha_hi"], c["n_points"])
        best_row = next(r for r in rows if r.alpha == best)
        files = [write_sweep_csv(rows, out / "sweep.csv"),
                 _json_dump({"best_alpha": best, "q_hat": best_row.q_hat,
                             "harmonic_mean": best_row.harmonic_mean}, out / "sweep_best.json")]
    else:
        q = quantile_threshold(conformal_scores(p_cal, cal.y), c["alpha"])
        preds = (p_test >= 0.5).astype(int)
        files = [write_verdict_csv(test.ids, p_test, preds, q, out / "verdicts.csv")]
    return _finish(args, cfg, out, files)


def cmd_campaign(args, cfg):
    ccfg = cfg.campaign_config()
    out = Path(args.out)
    report = run_attack_campaign(ccfg)
    files = emit_report(report, out)
    return _finish(args, cfg, out, files)


def cmd_report(args, cfg):
    out = Path(args.out)
    src = cfg.report.get("campaign")
    src = cfg.resolve(src) if src else out / "campaign.csv"
    if not Path(src).exists():
        raise DataError(f"report.campaign: file not found: {src}")
    files = emit_report(read_campaign_csv(src), out)
    return _finish(args, cfg, out, files)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed_arg(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _common(p):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--seed", type=_seed_arg, metavar="N", help="global seed (overrides config)")
    p.add_argument("--jobs", type=_positive_int, metavar="N", default=os.cpu_count() or 1,
                   help="upper bound on worker processes (default: available cores)")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory (synth: .csv file ok)")


def build_parser():
    parser = _Parser(prog="flowgauntlet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        p.set_defaults(handler=handler, command_name=name)
        return p

    add("prepare", cmd_prepare, "ingest or synthesize flows, split and fit the scaler")
    add("synth", cmd_synth, "generate synthetic flows")
    add("select-features", cmd_select_features, "rank features by information gain")
    add("train", cmd_train, "train the configured model")
    p = add("tune", cmd_tune, "hyperparameter search")
    p.add_argument("method", choices=("rs", "ga", "pso"))
    p = add("attack", cmd_attack, "craft per-feature adversarial batches")
    p.add_argument("method", choices=("cw", "gan"))
    add("retrain", cmd_retrain, "adversarial retraining with GA re-tuning")
    p = add("conformal", cmd_conformal, "conformal calibration, alpha sweep or verdicts")
    p.add_argument("action", choices=("calibrate", "sweep", "apply"))
    add("campaign", cmd_campaign, "checkpointed attack campaign with report")
    add("report", cmd_report, "re-render charts from an existing campaign.csv")
    return parser


def _setup_logging():
    level = os.environ.get("FLOWGAUNTLET_LOG", "warn").lower()
    if level not in LOG_LEVELS:
        raise UsageError(f"FLOWGAUNTLET_LOG must be one of {', '.join(LOG_LEVELS)}")
    logging.basicConfig(level=LOG_LEVELS[level], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.raw = {**cfg.raw, "seed": args.seed}
        paths = args.handler(args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error ({exc.key}): {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except Exception as exc:  # noqa: BLE001 - map every other failure to exit 3
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
