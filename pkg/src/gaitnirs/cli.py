"""Command line entry point: ``gaitnirs <verb> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__, harness
from .classify import (
    Dataset,
    evaluate,
    load_model,
    parse_algorithm,
    save_model,
    split_dataset,
    train_timed,
)
from .core import Task
from .errors import GaitNirsError
from .features import FNIRS_MASK, FULL_MASK, build_table, read_features, write_features
from .io import read_cohort, read_epochs, read_exclusions, read_subjects, write_cohort, write_epochs, write_exclusions
from .preprocess.pipeline import PipelineConfig, load_pipeline_config
from .synthgen import generate_cohort

log = logging.getLogger("gaitnirs")


def _seeds(raw: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in raw.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be integers, got {raw!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, metavar="FILE", help="INI config file")
    parser.add_argument("--seed", type=_seeds, default=d, metavar="N[,N...]", help="seed or comma-separated seeds")
    parser.add_argument("--out", default=d, metavar="PATH", help="output file or directory")
    parser.add_argument("--split-mode", choices=("row", "subject"), default=d)
    parser.add_argument("--quiet", action="store_true", default=d if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitnirs", description="fNIRS gait-task classification toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort directory")
    p.add_argument("--n", type=int, default=451, help="number of subjects")
    p.add_argument("--truth", action="store_true", help="also write ground-truth concentrations")

    p = sub.add_parser("preprocess", parents=[common], help="raw intensities -> baseline-corrected epochs")
    p.add_argument("--in", dest="inp", required=True, metavar="COHORT_DIR")

    p = sub.add_parser("features", parents=[common], help="epochs -> encoded features.csv")
    p.add_argument("--in", dest="inp", required=True, metavar="EPOCHS_DIR")
    p.add_argument("--subjects", required=True, metavar="SUBJECTS_CSV")
    p.add_argument("--horizon", type=float, default=60.0, help="seconds of each epoch to use")

    p = sub.add_parser("train", parents=[common], help="train one classifier on the training split")
    p.add_argument("--features", required=True)
    p.add_argument("--algo", required=True, help="lr|dt|svm|rf:N|knn:K|mlp:A[,B]")
    p.add_argument("--split", type=float, default=0.2, help="test fraction")
    p.add_argument("--fnirs-only", action="store_true", help="drop gender and RBANS inputs")

    p = sub.add_parser("evaluate", parents=[common], help="score a saved model on its test split")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", default=None, help="JSON report path (default: stdout)")

    for verb, help_ in (
        ("sweep", "algorithm sweep with timing"),
        ("ablation", "feature-subset ablation"),
        ("reduce-subjects", "accuracy versus cohort fraction"),
        ("reduce-horizon", "accuracy versus epoch length"),
        ("all", "full reproduction run"),
    ):
        p = sub.add_parser(verb, parents=[common], help=help_)
        p.add_argument("--skip-synth", action="store_true", help="read --cohort instead of synthesizing")
        p.add_argument("--cohort", default=None, metavar="DIR")
    return parser


def _pipeline(args) -> PipelineConfig:
    return load_pipeline_config(args.config) if args.config else PipelineConfig()


def _out(args, default: str) -> Path:
    return Path(args.out if args.out else default)


def cmd_synth(args) -> None:
    seed = args.seed[0] if args.seed else 7
    effect = harness.load_experiment_config(args.config).effect if args.config else None
    subjects, recordings, truths = generate_cohort(args.n, seed, effect)
    out = _out(args, "cohort")
    write_cohort(out, subjects, recordings, truths if args.truth else None)
    log.info("wrote %d subjects to %s", len(subjects), out)


def cmd_preprocess(args) -> None:
    subjects, recordings = read_cohort(args.inp)
    workers = harness.ExperimentConfig().workers()
    epochs, exclusions = harness.preprocess_cohort(subjects, recordings, _pipeline(args), workers)
    out = _out(args, "epochs")
    out.mkdir(parents=True, exist_ok=True)
    for sid, pair in epochs.items():
        write_epochs(out / f"{sid}_epochs.csv", list(pair))
    write_exclusions(out / "exclusions.csv", exclusions)
    log.info("%d subjects preprocessed, %d excluded", len(epochs), len(exclusions))


def cmd_features(args) -> None:
    subjects = read_subjects(args.subjects)
    epoch_dir = Path(args.inp)
    epochs = {}
    for s in subjects:
        path = epoch_dir / f"{s.subject_id}_epochs.csv"
        if path.exists():
            by_task = read_epochs(path, s.subject_id)
            if Task.STW in by_task and Task.DTW in by_task:
                epochs[s.subject_id] = (by_task[Task.STW], by_task[Task.DTW])
    table, excluded = build_table(subjects, epochs, args.horizon)
    out = _out(args, "features.csv")
    write_features(out, table)
    prior = read_exclusions(epoch_dir / "exclusions.csv") if (epoch_dir / "exclusions.csv").exists() else []
    if excluded:
        write_exclusions(epoch_dir / "exclusions.csv", prior + excluded)
    log.info("%d feature rows written to %s; %d subjects excluded", len(table), out, len(prior) + len(excluded))


def _dataset(path, fnirs_only: bool) -> Dataset:
    return Dataset.from_table(read_features(path), FNIRS_MASK if fnirs_only else FULL_MASK)


def cmd_train(args) -> None:
    spec = parse_algorithm(args.algo)
    seed = args.seed[0] if args.seed else 0
    mode = args.split_mode or "row"
    data = _dataset(args.features, args.fnirs_only)
    train_set, _ = split_dataset(data, args.split, seed, mode)
    model, ms = train_timed(spec, train_set, seed)
    meta = {"split": {"test_fraction": args.split, "seed": seed, "mode": mode}, "fnirs_only": args.fnirs_only,
            "train_time_ms": ms}
    model = dataclasses.replace(model, meta=meta)
    out = _out(args, "model.bin")
    save_model(out, model)
    log.info("%s trained on %d rows in %.1f ms -> %s", spec.name, len(train_set), ms, out)


def cmd_evaluate(args) -> None:
    model = load_model(args.model)
    data = _dataset(args.features, bool(model.meta.get("fnirs_only", False)))
    split = model.meta.get("split")
    test = split_dataset(data, split["test_fraction"], split["seed"], split["mode"])[1] if split else data
    report = evaluate(model, test, float(model.meta.get("train_time_ms", 0.0)))
    text = json.dumps(report.as_dict(), indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)


def _experiment_config(args) -> harness.ExperimentConfig:
    overrides = {
        "seeds": args.seed,
        "out_dir": args.out,
        "split_mode": args.split_mode,
        "skip_synth": True if args.skip_synth else None,
        "cohort_dir": args.cohort,
    }
    return harness.load_experiment_config(args.config, **overrides)


def cmd_experiment(args) -> None:
    cfg = _experiment_config(args)
    if args.verb == "all":
        doc = harness.run_all(cfg)
    else:
        step = {
            "sweep": harness.run_sweep,
            "ablation": harness.run_ablation,
            "reduce-subjects": harness.run_subject_reduction,
            "reduce-horizon": harness.run_timelength_reduction,
        }[args.verb]
        doc = step(cfg, harness.prepare(cfg))
        harness.emit_report(doc, cfg.out_dir)
    for name, rows in doc.tables.items():
        for r in rows:
            label = r.get("algorithm", r.get("features"))
            log.info("%-8s %-18s %.4f", name, label, r["accuracy"])
    for name, points in doc.series.items():
        for pt in points:
            log.info("%-8s x=%-6g %.4f +- %.4f", name, pt["x"], pt["mean"], pt["sd"])
    log.info("report written to %s (config %s)", cfg.out_dir, doc.provenance["config_hash"][:12])


COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "features": cmd_features,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("config", "seed", "out", "split_mode"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(
        level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS.get(args.verb, cmd_experiment)(args)
    except GaitNirsError as exc:
        print(f"gaitnirs {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
