"""Command-line entry point exposing the full pipeline.

Every subcommand writes its outputs plus a run manifest under --out.
Stochastic subcommands require an explicit --seed: the experiments are
comparisons across conditions, and silent nondeterminism would poison
them.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .errors import AgentprintError, ConfigError
from .evaluation import (
    closed_set_eval,
    open_set_loo,
    open_set_report,
    permutation_importance,
    training_fraction_curve,
    truncation_curve,
)
from .features import FEATURE_NAMES
from .ingest import build_dataset, load_split_manifest, scan_corpus, write_features_csv
from .manifest import write_manifest
from .models import (
    GbtConfig,
    ForestConfig,
    LinearConfig,
    cross_validated_search,
    gbt_search_space,
    linear_search_space,
    load_model,
    rf_search_space,
    save_model,
    train_forest,
    train_gbt,
    train_linear,
)
from .perturbation import DelayBudget, delay_robustness_experiment, inject_delays
from .simulator import generate_corpus, load_profiles, preset_suites, save_profiles
from .trace import LabeledDataset

REPORT_SCHEMA = "agentprint-report/v1"

MODEL_CHOICES = ("gbt", "forest", "linear-l1", "linear-l2")


def _dump_json(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))


def _table(rows: list[list[str]], header: list[str]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    def fmt(row):
        return "  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def _load_corpus(corpus: str, dataset: str | None):
    result = scan_corpus(corpus, dataset)
    for err in result.errors:
        print(f"warning: {err.path}: {err.error}", file=sys.stderr)
    return result


def _load_datasets(corpus: str, manifest: str | None, dataset: str | None):
    result = _load_corpus(corpus, dataset)
    manifest_path = Path(manifest) if manifest else Path(corpus) / "splits.json"
    if not manifest_path.is_file():
        raise ConfigError(f"split manifest not found: {manifest_path}")
    spec = load_split_manifest(manifest_path)
    train, val, test = build_dataset(list(result.traces), spec)
    return result, train, val, test, manifest_path


def _fixed_config(name: str, overrides: Mapping[str, Any]):
    if name == "gbt":
        return GbtConfig(**overrides)
    if name == "forest":
        return ForestConfig(**overrides)
    if name == "linear-l1":
        return LinearConfig(penalty="l1", **overrides)
    return LinearConfig(penalty="l2", **overrides)


def _trainer_for(name: str):
    if name == "gbt":
        return lambda ds, cfg, seed: train_gbt(ds, GbtConfig(**cfg) if isinstance(cfg, Mapping) else cfg, seed)
    if name == "forest":
        return lambda ds, cfg, seed: train_forest(ds, ForestConfig(**cfg) if isinstance(cfg, Mapping) else cfg, seed)

    def linear_trainer(ds, cfg, seed):
        config = LinearConfig(**cfg) if isinstance(cfg, Mapping) else cfg
        return train_linear(ds, config, seed)

    return linear_trainer


def _search_space_for(name: str, seed: int):
    if name == "gbt":
        return gbt_search_space(seed)
    if name == "forest":
        return rf_search_space()
    return linear_search_space("l1" if name == "linear-l1" else "l2")


def _train_model(name: str, train: LabeledDataset, seed: int, search: bool,
                 overrides: Mapping[str, Any], threads: int):
    trainer = _trainer_for(name)
    if search:
        space = _search_space_for(name, seed)
        result = cross_validated_search(train, space, trainer, seed, threads=threads)
        info = {
            "search": {
                "n_configs": len(space.configs),
                "folds": space.folds,
                "n_fits": result.n_fits,
                "best_config": {k: v for k, v in result.best_config.items()},
                "best_cv_accuracy": result.best_score,
            }
        }
        return result.model, info
    config = _fixed_config(name, overrides)
    model = trainer(train, config, seed)
    return model, {"config": {k: v for k, v in vars(config).items()}}


def _parse_overrides(raw: str | None) -> dict:
    if not raw:
        return {}
    doc = json.loads(raw)
    if not isinstance(doc, dict):
        raise ConfigError("--config must be a JSON object")
    return doc


# -- subcommand implementations ----------------------------------------------


def cmd_simulate(args) -> int:
    if args.profiles:
        profiles = load_profiles(args.profiles)
        inputs = {"profiles": args.profiles}
    else:
        suites = preset_suites()
        if args.suite not in suites:
            raise ConfigError(f"unknown suite {args.suite!r}; have {', '.join(sorted(suites))}")
        profiles = suites[args.suite]
        inputs = {}
    out = Path(args.out)
    episodes = tuple(args.episodes)
    generate_corpus(profiles, episodes, out, seed=args.seed, dataset=args.dataset)
    save_profiles(profiles, out / "profiles.yaml")
    config = {
        "suite": args.suite,
        "profiles_file": args.profiles,
        "episodes": list(episodes),
        "dataset": args.dataset,
        "n_agents": len(profiles),
    }
    write_manifest(out, "simulate", config, args.seed, inputs)
    print(f"wrote {len(profiles) * sum(episodes)} episodes to {out}")
    return 0


def cmd_ingest(args) -> int:
    result = _load_corpus(args.corpus, args.dataset)
    out = Path(args.out)
    doc = {
        "schema": REPORT_SCHEMA,
        "kind": "ingest",
        "n_traces": len(result.traces),
        "n_errors": len(result.errors),
        "errors": [{"path": str(e.path), "error": str(e.error)} for e in result.errors],
        "agents": sorted({t.meta.agent_id for t in result.traces}),
    }
    _dump_json(doc, out / "ingest_report.json")
    write_manifest(out, "ingest", {"dataset": args.dataset}, None, {"corpus": args.corpus})
    print(f"parsed {doc['n_traces']} traces ({doc['n_errors']} errors) from {args.corpus}")
    return 0 if not result.errors or args.lenient else 1


def cmd_featurize(args) -> int:
    result = _load_corpus(args.corpus, args.dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "features.csv"
    write_features_csv(list(result.traces), csv_path)
    write_manifest(out, "featurize", {"dataset": args.dataset}, None, {"corpus": args.corpus})
    print(f"wrote {len(result.traces)} rows x {len(FEATURE_NAMES)} features to {csv_path}")
    return 0


def cmd_train(args) -> int:
    _, train, _, _, manifest_path = _load_datasets(args.corpus, args.manifest, args.dataset)
    model, info = _train_model(
        args.model, train, args.seed, not args.no_search, _parse_overrides(args.config), args.threads
    )
    out = Path(args.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    model_path = out / "models" / "model.json"
    save_model(model, model_path)
    doc = {
        "schema": REPORT_SCHEMA,
        "kind": "train",
        "model_type": args.model,
        "classes": list(model.class_names),
        "n_train_rows": len(train),
        **info,
    }
    _dump_json(doc, out / "train_report.json")
    config = {"model": args.model, "search": not args.no_search,
              "overrides": _parse_overrides(args.config), "dataset": args.dataset}
    write_manifest(out, "train", config, args.seed,
                   {"corpus": args.corpus, "manifest": manifest_path})
    print(f"trained {args.model} on {len(train)} rows -> {model_path}")
    return 0


def _print_closed(report) -> None:
    rows = [[name, f"{report.per_class_f1[name]:.4f}", f"{report.per_class_precision[name]:.4f}",
             f"{report.per_class_recall[name]:.4f}"] for name in report.per_class_f1]
    print(_table(rows, ["agent", "f1", "precision", "recall"]))
    print(f"\nmacro F1 = {report.macro_f1:.4f}   accuracy = {report.accuracy:.4f}")


def cmd_eval_closed(args) -> int:
    _, _, _, test, manifest_path = _load_datasets(args.corpus, args.manifest, args.dataset)
    model = load_model(args.model)
    report = closed_set_eval(model, test)
    out = Path(args.out)
    doc = {"schema": REPORT_SCHEMA, "kind": "closed_set", "classes": list(model.class_names)}
    doc.update(report.to_doc())
    _dump_json(doc, out / "closed_set_report.json")
    write_manifest(out, "eval-closed", {"dataset": args.dataset}, None,
                   {"corpus": args.corpus, "manifest": manifest_path, "model": args.model})
    _print_closed(report)
    return 0


def cmd_eval_open(args) -> int:
    _, train, _, test, manifest_path = _load_datasets(args.corpus, args.manifest, args.dataset)
    overrides = _parse_overrides(args.config)
    base_trainer = _trainer_for(args.model)
    fixed = _fixed_config(args.model, overrides)
    trainer = lambda ds, seed: base_trainer(ds, fixed, seed)
    out = Path(args.out)
    if args.heldout:
        auc = open_set_loo(train, test, args.heldout, trainer, args.seed)
        per_agent = {args.heldout: auc}
    else:
        per_agent = dict(open_set_report(train, test, trainer, args.seed, threads=args.threads).per_heldout_auroc)
    doc = {"schema": REPORT_SCHEMA, "kind": "open_set", "per_heldout_auroc": per_agent}
    _dump_json(doc, out / "open_set_report.json")
    config = {"model": args.model, "overrides": overrides, "heldout": args.heldout, "dataset": args.dataset}
    write_manifest(out, "eval-open", config, args.seed,
                   {"corpus": args.corpus, "manifest": manifest_path})
    rows = [[a, f"{v:.4f}"] for a, v in per_agent.items()]
    print(_table(rows, ["held-out agent", "auroc"]))
    return 0


def cmd_importance(args) -> int:
    _, _, _, test, manifest_path = _load_datasets(args.corpus, args.manifest, args.dataset)
    model = load_model(args.model)
    imp = permutation_importance(model, test, repeats=args.repeats, seed=args.seed)
    out = Path(args.out)
    doc = {
        "schema": REPORT_SCHEMA,
        "kind": "permutation_importance",
        "repeats": args.repeats,
        "importances": {k: {"mean_f1_drop": m, "std": s} for k, (m, s) in imp.items()},
    }
    _dump_json(doc, out / "importance_report.json")
    write_manifest(out, "importance", {"repeats": args.repeats, "dataset": args.dataset},
                   args.seed, {"corpus": args.corpus, "manifest": manifest_path, "model": args.model})
    ranked = sorted(imp.items(), key=lambda kv: kv[1][0], reverse=True)
    rows = [[n, f"{m:.4f}", f"{s:.4f}"] for n, (m, s) in ranked[:15]]
    print(_table(rows, ["feature", "mean f1 drop", "std"]))
    return 0


def _emit_plot_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_curves(args) -> int:
    result, train, _, test, manifest_path = _load_datasets(args.corpus, args.manifest, args.dataset)
    overrides = _parse_overrides(args.config)
    base_trainer = _trainer_for(args.model)
    fixed = _fixed_config(args.model, overrides)
    trainer = lambda ds, seed: base_trainer(ds, fixed, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    trace_by_id = {t.meta.episode_id: t for t in result.traces}
    test_traces = [trace_by_id[e] for e in test.episode_ids]
    train_traces = [trace_by_id[e] for e in train.episode_ids]

    if args.mode == "train-fraction":
        points = training_fraction_curve(train, test, args.fractions, trainer, args.seed)
        series = [("fraction", "macro_f1"), *points]
    else:
        ks = args.ks or _default_ks(test_traces)
        if args.mode == "truncation-test":
            model = trainer(train, args.seed)
            points = truncation_curve(ks, "test_side", test_traces, train.class_names, model=model)
        else:
            points = truncation_curve(
                ks, "train_side", test_traces, train.class_names,
                trainer=trainer, train_traces=train_traces, seed=args.seed,
            )
        series = [("k", "macro_f1"), *points]

    doc = {
        "schema": REPORT_SCHEMA,
        "kind": f"curve/{args.mode}",
        "points": [{series[0][0]: a, "macro_f1": b} for a, b in series[1:]],
    }
    _dump_json(doc, out / "curve_report.json")
    if args.emit_plot_data:
        _emit_plot_csv(out / "curve.csv", list(series[0]), series[1:])
    config = {"mode": args.mode, "model": args.model, "overrides": overrides,
              "fractions": args.fractions, "ks": args.ks, "dataset": args.dataset}
    write_manifest(out, "curves", config, args.seed,
                   {"corpus": args.corpus, "manifest": manifest_path})
    print(_table([[f"{a}", f"{b:.4f}"] for a, b in series[1:]], [series[0][0], "macro_f1"]))
    return 0


def _default_ks(traces) -> list[int]:
    mean_len = float(np.mean([len(t) for t in traces]))
    ks = sorted({1, 2, 4, 8, 12, 16, 24, 32, 48, 64, int(np.ceil(0.4 * mean_len))})
    return [k for k in ks if k >= 1]


def cmd_perturb(args) -> int:
    result = _load_corpus(args.corpus, args.dataset)
    from .ingest import serialize_episode  # local to keep module load light

    out = Path(args.out)
    budget = DelayBudget(args.budget)
    root = Path(args.corpus)
    n = 0
    for trace in result.traces:
        delayed = inject_delays(trace, budget, args.seed)
        rel = (
            Path(trace.meta.agent_id)
            / (trace.meta.dataset or "default")
            / f"s{args.seed:010d}"
            / f"{trace.meta.episode_id}.json"
        )
        dest = out / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(serialize_episode(delayed))
        n += 1
    splits = root / "splits.json"
    if splits.is_file():
        (out / "splits.json").write_text(splits.read_text())
    write_manifest(out, "perturb", {"budget_ms": args.budget, "dataset": args.dataset},
                   args.seed, {"corpus": args.corpus})
    print(f"wrote {n} delayed episodes (budget {args.budget} ms) to {out}")
    return 0


def cmd_delay_experiment(args) -> int:
    result, train, _, test, manifest_path = _load_datasets(args.corpus, args.manifest, args.dataset)
    overrides = _parse_overrides(args.config)
    base_trainer = _trainer_for(args.model)
    fixed = _fixed_config(args.model, overrides)
    trainer = lambda ds, seed: base_trainer(ds, fixed, seed)
    trace_by_id = {t.meta.episode_id: t for t in result.traces}
    rows = delay_robustness_experiment(
        [trace_by_id[e] for e in train.episode_ids],
        [trace_by_id[e] for e in test.episode_ids],
        args.budgets,
        trainer,
        args.seed,
    )
    out = Path(args.out)
    doc = {"schema": REPORT_SCHEMA, "kind": "delay_robustness", "rows": rows}
    _dump_json(doc, out / "delay_report.json")
    if args.emit_plot_data:
        _emit_plot_csv(out / "delay.csv",
                       ["budget_ms", "clean_f1", "unadapted_f1", "adapted_f1"],
                       [tuple(r[k] for k in ("budget_ms", "clean_f1", "unadapted_f1", "adapted_f1")) for r in rows])
    config = {"model": args.model, "overrides": overrides,
              "budgets": list(args.budgets), "dataset": args.dataset}
    write_manifest(out, "delay-experiment", config, args.seed,
                   {"corpus": args.corpus, "manifest": manifest_path})
    print(_table(
        [[f"{r['budget_ms']:.0f}", f"{r['unadapted_f1']:.4f}", f"{r['adapted_f1']:.4f}"] for r in rows],
        ["budget_ms", "unadapted_f1", "adapted_f1"],
    ))
    return 0


def cmd_report(args) -> int:
    doc = json.loads(Path(args.input).read_text())
    kind = doc.get("kind", "?")
    if kind == "closed_set":
        rows = [[a, f"{v:.4f}"] for a, v in doc["per_class_f1"].items()]
        print(_table(rows, ["agent", "f1"]))
        print(f"\nmacro F1 = {doc['macro_f1']:.4f}")
    elif kind == "open_set":
        rows = [[a, f"{v:.4f}"] for a, v in doc["per_heldout_auroc"].items()]
        print(_table(rows, ["held-out agent", "auroc"]))
    elif kind == "permutation_importance":
        ranked = sorted(doc["importances"].items(), key=lambda kv: kv[1]["mean_f1_drop"], reverse=True)
        rows = [[n, f"{v['mean_f1_drop']:.4f}", f"{v['std']:.4f}"] for n, v in ranked]
        print(_table(rows, ["feature", "mean f1 drop", "std"]))
    elif kind.startswith("curve/"):
        key = [k for k in doc["points"][0] if k != "macro_f1"][0] if doc["points"] else "x"
        rows = [[str(p[key]), f"{p['macro_f1']:.4f}"] for p in doc["points"]]
        print(_table(rows, [key, "macro_f1"]))
        if args.emit_plot_data:
            _emit_plot_csv(Path(args.emit_plot_data), [key, "macro_f1"],
                           [(p[key], p["macro_f1"]) for p in doc["points"]])
    elif kind == "delay_robustness":
        rows = [[f"{r['budget_ms']:.0f}", f"{r['clean_f1']:.4f}", f"{r['unadapted_f1']:.4f}", f"{r['adapted_f1']:.4f}"]
                for r in doc["rows"]]
        print(_table(rows, ["budget_ms", "clean_f1", "unadapted_f1", "adapted_f1"]))
    else:
        print(json.dumps(doc, indent=1, sort_keys=True))
    return 0


# -- argument parsing ----------------------------------------------------------


def _add_common_eval_args(p, model_file: bool):
    p.add_argument("--corpus", required=True, help="corpus root directory")
    p.add_argument("--manifest", help="split manifest (default: <corpus>/splits.json)")
    p.add_argument("--dataset", help="only episodes of this dataset")
    p.add_argument("--out", required=True, help="run output directory")
    if model_file:
        p.add_argument("--model", required=True, help="trained model file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentprint",
        description="Identify which agent produced a web-browsing interaction trace.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic labeled corpus")
    p.add_argument("--suite", default="separable14", help="preset profile suite name")
    p.add_argument("--profiles", help="profile YAML file (overrides --suite)")
    p.add_argument("--episodes", nargs=3, type=int, default=[50, 25, 25],
                   metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--dataset", default="synthetic")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ingest", help="parse and validate a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--lenient", action="store_true",
                   help="exit 0 even when some files fail to parse")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("featurize", help="corpus -> feature CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_featurize)

    p = sub.add_parser("train", help="train a classifier (CV search by default)")
    _add_common_eval_args(p, model_file=False)
    p.add_argument("--model", choices=MODEL_CHOICES, default="gbt")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--no-search", action="store_true", help="fit one fixed config, no CV")
    p.add_argument("--config", help="JSON object of config overrides")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval-closed", help="closed-set F1 report")
    _add_common_eval_args(p, model_file=True)
    p.set_defaults(fn=cmd_eval_closed)

    p = sub.add_parser("eval-open", help="leave-one-agent-out AUROC")
    _add_common_eval_args(p, model_file=False)
    p.add_argument("--model", choices=MODEL_CHOICES, default="gbt")
    p.add_argument("--heldout", help="evaluate one held-out agent (default: all)")
    p.add_argument("--config", help="JSON object of trainer config overrides")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(fn=cmd_eval_open)

    p = sub.add_parser("importance", help="permutation feature importance")
    _add_common_eval_args(p, model_file=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=cmd_importance)

    p = sub.add_parser("curves", help="training-fraction and truncation curves")
    _add_common_eval_args(p, model_file=False)
    p.add_argument("--mode", choices=("train-fraction", "truncation-test", "truncation-train"),
                   required=True)
    p.add_argument("--model", choices=MODEL_CHOICES, default="gbt")
    p.add_argument("--config", help="JSON object of trainer config overrides")
    p.add_argument("--fractions", nargs="+", type=float,
                   default=[0.1, 0.2, 0.33, 0.5, 0.75, 1.0])
    p.add_argument("--ks", nargs="+", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--emit-plot-data", action="store_true")
    p.set_defaults(fn=cmd_curves)

    p = sub.add_parser("perturb", help="inject random delays into a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset")
    p.add_argument("--budget", type=int, required=True, help="max delay in ms")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_perturb)

    p = sub.add_parser("delay-experiment", help="attack/defense curves under delays")
    _add_common_eval_args(p, model_file=False)
    p.add_argument("--model", choices=MODEL_CHOICES, default="gbt")
    p.add_argument("--config", help="JSON object of trainer config overrides")
    p.add_argument("--budgets", nargs="+", type=int, default=[500, 1000, 2000, 5000])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--emit-plot-data", action="store_true")
    p.set_defaults(fn=cmd_delay_experiment)

    p = sub.add_parser("report", help="render a report JSON as a text table")
    p.add_argument("--input", required=True)
    p.add_argument("--emit-plot-data", help="also write the series as CSV to this path")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except AgentprintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
