"""Experiment orchestration: cohort -> epochs -> features -> experiments -> report files."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    SWEEP_GRID,
    AlgorithmSpec,
    Dataset,
    accuracy,
    parse_algorithm,
    round_half_up,
    split_dataset,
    train_and_evaluate,
)
from .classify import train as train_model
from .core import validate_cohort
from .errors import ConfigError, DataError, GaitNirsError, TooSmall
from .features import ABLATION_MASKS, FULL_MASK, N_FEATURES, FeatureTable, build_table
from .io import read_cohort, write_cohort, write_exclusions
from .preprocess.pipeline import (
    PipelineConfig,
    _coerce,
    parse_sections,
    pipeline_config_from_parser,
    read_ini,
    run_pipeline,
)
from .synthgen import EffectConfig, generate_cohort

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
DEFAULT_HORIZONS = (30.0, 45.0, 60.0, 90.0)
MIN_SUBJECTS = 10
THREADS_ENV = "GAITNIRS_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    n_subjects: int = 451
    synth_seed: int = 7
    effect: EffectConfig = field(default_factory=EffectConfig)
    cohort_dir: str | None = None  # read this cohort instead of synthesizing when skip_synth is set
    skip_synth: bool = False
    write_cohort: bool = False
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    horizon: float = 60.0
    algorithms: tuple[AlgorithmSpec, ...] = SWEEP_GRID
    masks: dict = field(default_factory=lambda: dict(ABLATION_MASKS))
    sweep_mask: tuple[bool, ...] = tuple(FULL_MASK)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    split_mode: str = "row"
    test_fraction: float = 0.2
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    horizons: tuple[float, ...] = DEFAULT_HORIZONS
    reduction_algorithm: str = "lr"
    ablation_algorithm: str = "lr"
    timing_repeats: int = 5
    out_dir: str = "results"
    threads: int | None = None  # None: from GAITNIRS_THREADS, else 1

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.n_subjects < 1:
            raise ConfigError("n_subjects must be >= 1")
        if self.split_mode not in ("row", "subject"):
            raise ConfigError(f"split_mode must be 'row' or 'subject', got {self.split_mode!r}")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")
        for name, mask in self.masks.items():
            m = np.asarray(mask, dtype=bool)
            if m.shape != (N_FEATURES,) or not m.any():
                raise ConfigError(f"mask {name!r} must select at least one of {N_FEATURES} positions")
        if len(self.sweep_mask) != N_FEATURES or not any(self.sweep_mask):
            raise ConfigError("sweep_mask must select at least one of the feature positions")
        if any(not 0 < f <= 1 for f in self.fractions):
            raise ConfigError("fractions must lie in (0, 1]")
        if any(h <= 0 for h in self.horizons) or self.horizon <= 0:
            raise ConfigError("horizons must be positive")
        if self.timing_repeats < 1:
            raise ConfigError("timing_repeats must be >= 1")
        parse_algorithm(self.reduction_algorithm)
        parse_algorithm(self.ablation_algorithm)

    def canonical(self) -> dict:
        """Everything that can change an accuracy; output location and worker count excluded."""
        return {
            "n_subjects": self.n_subjects,
            "synth_seed": self.synth_seed,
            "effect": dataclasses.asdict(self.effect),
            "cohort_dir": self.cohort_dir if self.skip_synth else None,
            "skip_synth": self.skip_synth,
            "pipeline": self.pipeline.as_dict(),
            "horizon": self.horizon,
            "algorithms": [a.token for a in self.algorithms],
            "masks": {k: np.asarray(v, dtype=int).tolist() for k, v in sorted(self.masks.items())},
            "sweep_mask": [int(b) for b in self.sweep_mask],
            "seeds": list(self.seeds),
            "split_mode": self.split_mode,
            "test_fraction": self.test_fraction,
            "fractions": list(self.fractions),
            "horizons": list(self.horizons),
            "reduction_algorithm": self.reduction_algorithm,
            "ablation_algorithm": self.ablation_algorithm,
            "timing_repeats": self.timing_repeats,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def workers(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


# --- config files --------------------------------------------------------------

def _seq(raw: str, cast):
    return tuple(cast(v) for v in raw.replace(";", ",").split(",") if v.strip())


def experiment_config_from_parser(parser: configparser.ConfigParser, **overrides) -> ExperimentConfig:
    """``[experiment]`` and ``[effect]`` sections plus the pipeline sections."""
    kwargs: dict = {}
    if parser.has_section("experiment"):
        for key, raw in parser.items("experiment"):
            if key == "seeds":
                kwargs[key] = _seq(raw, int)
            elif key in ("fractions", "horizons"):
                kwargs[key] = _seq(raw, float)
            elif key == "algorithms":
                kwargs[key] = tuple(parse_algorithm(t) for t in raw.split())
            elif key in ("cohort_dir", "out_dir"):
                kwargs[key] = raw.strip()
            elif key in ("masks", "sweep_mask", "effect", "pipeline", "threads"):
                raise ConfigError(f"[experiment] {key} cannot be set from a config file")
            else:
                kwargs[key] = _coerce(ExperimentConfig, "experiment", key, raw)
    effect = parse_sections(parser, {"effect": EffectConfig}).get("effect")
    if effect is not None:
        kwargs["effect"] = effect
    kwargs["pipeline"] = pipeline_config_from_parser(parser)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


def load_experiment_config(path=None, **overrides) -> ExperimentConfig:
    parser = read_ini(path) if path else configparser.ConfigParser()
    return experiment_config_from_parser(parser, **overrides)


# --- cohort -> features --------------------------------------------------------

def _map(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def load_cohort(cfg: ExperimentConfig):
    """Subjects and recordings, synthesized or read from ``cohort_dir``."""
    if cfg.skip_synth:
        if not cfg.cohort_dir:
            raise DataError("skip_synth needs a cohort directory", stage="preprocess")
        try:
            return read_cohort(cfg.cohort_dir)
        except GaitNirsError as exc:
            exc.stage = "preprocess"
            raise
    subjects, recordings, _ = generate_cohort(cfg.n_subjects, cfg.synth_seed, cfg.effect)
    if cfg.write_cohort:
        write_cohort(Path(cfg.out_dir) / "cohort", subjects, recordings)
    return subjects, recordings


def _preprocess_one(job):
    subject, rec, pipeline = job
    try:
        return run_pipeline(rec, subject, pipeline), None
    except DataError as exc:
        return None, (subject.subject_id, exc.stage or "preprocess", exc.message)


def preprocess_cohort(subjects, recordings, pipeline: PipelineConfig, workers: int = 1):
    """Epochs per subject id and an exclusion list of (subject_id, stage, reason).

    Cohort-level validation failures and per-subject data errors exclude the
    subject; they never abort the run.
    """
    report = validate_cohort(subjects, recordings)
    by_id = {r.subject_id: r for r in recordings}
    exclusions, jobs = [], []
    seen = set()
    for s in subjects:
        if s.subject_id in seen:
            continue
        seen.add(s.subject_id)
        check = report.by_id(s.subject_id)
        if check.status == "fail":
            exclusions.append((s.subject_id, "validate", "; ".join(check.reasons)))
        else:
            jobs.append((s, by_id[s.subject_id], pipeline))
    epochs = {}
    for (s, _, _), (result, excl) in zip(jobs, _map(_preprocess_one, jobs, workers)):
        if excl is not None:
            exclusions.append(excl)
        else:
            epochs[s.subject_id] = result
    return epochs, exclusions


@dataclass
class Prepared:
    subjects: list
    epochs: dict
    exclusions: list
    tables: dict = field(default_factory=dict)  # horizon -> FeatureTable

    def table(self, horizon: float) -> FeatureTable:
        if horizon not in self.tables:
            table, excl = build_table(self.subjects, self.epochs, horizon)
            known = {(e[0], e[1]) for e in self.exclusions}
            self.exclusions += [e for e in excl if (e[0], e[1]) not in known]
            self.tables[horizon] = table
        return self.tables[horizon]


def prepare(cfg: ExperimentConfig) -> Prepared:
    subjects, recordings = load_cohort(cfg)
    epochs, exclusions = preprocess_cohort(subjects, recordings, cfg.pipeline, cfg.workers())
    if not epochs:
        raise DataError("no subject survived preprocessing", stage="preprocess")
    return Prepared(subjects, epochs, exclusions)


# --- experiments ---------------------------------------------------------------

@dataclass(frozen=True)
class Job:
    experiment: str
    row: str
    seed: int
    spec: AlgorithmSpec
    data: Dataset
    timed: bool
    repeats: int
    test_fraction: float
    split_mode: str


def run_job(job: Job) -> dict:
    train, test = split_dataset(job.data, job.test_fraction, job.seed, job.split_mode)
    try:
        if job.timed:
            _, rep = train_and_evaluate(job.spec, train, test, job.seed, job.repeats)
            return {"accuracy": rep.accuracy, "train_ms": rep.train_time_ms, "test_ms": rep.test_time_ms_per_1000}
        return {"accuracy": accuracy(train_model(job.spec, train, job.seed), test)}
    except GaitNirsError as exc:
        exc.args = (f"{job.experiment} row {job.row!r} seed {job.seed}: {exc.message}",)
        exc.message = exc.args[0]
        raise


@dataclass
class ReportDoc:
    provenance: dict
    tables: dict = field(default_factory=dict)  # name -> list of row dicts
    series: dict = field(default_factory=dict)  # name -> list of {x, mean, sd}
    cells: list = field(default_factory=list)  # per (experiment, row, seed) results
    exclusions: list = field(default_factory=list)

    def merge(self, other: ReportDoc) -> ReportDoc:
        self.tables.update(other.tables)
        self.series.update(other.series)
        self.cells += other.cells
        return self


def new_doc(cfg: ExperimentConfig, prepared: Prepared | None = None) -> ReportDoc:
    prov = {
        "config_hash": cfg.config_hash(),
        "seeds": list(cfg.seeds),
        "artifact_version": __version__,
        "config": cfg.canonical(),
        "timing_note": "train_ms/test_ms are wall-clock and environment-dependent; accuracies are reproducible",
    }
    doc = ReportDoc(prov)
    if prepared is not None:
        doc.exclusions = sorted(prepared.exclusions)
        prov["n_subjects_used"] = len(prepared.epochs)
    return doc


def _run_jobs(cfg: ExperimentConfig, jobs: list[Job], doc: ReportDoc) -> dict:
    """Run jobs, record per-seed cells, return {row: [result per seed]}."""
    results = _map(run_job, jobs, cfg.workers())
    grouped: dict = {}
    for job, res in zip(jobs, results):
        grouped.setdefault(job.row, []).append(res)
        doc.cells.append({"experiment": job.experiment, "row": job.row, "seed": job.seed, **res})
    return grouped


def _mean_sd(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std())


def _jobs(cfg, experiment, rows, timed=False) -> list[Job]:
    return [
        Job(experiment, row, seed, spec, data, timed, cfg.timing_repeats, cfg.test_fraction, cfg.split_mode)
        for row, spec, data in rows
        for seed in cfg.seeds
    ]


def run_sweep(cfg: ExperimentConfig, prepared: Prepared) -> ReportDoc:
    doc = new_doc(cfg, prepared)
    data = Dataset.from_table(prepared.table(cfg.horizon), np.array(cfg.sweep_mask))
    grouped = _run_jobs(cfg, _jobs(cfg, "sweep", [(a.name, a, data) for a in cfg.algorithms], timed=True), doc)
    rows = []
    for a in cfg.algorithms:
        res = grouped[a.name]
        acc, sd = _mean_sd([r["accuracy"] for r in res])
        rows.append({
            "algorithm": a.name,
            "accuracy": acc,
            "accuracy_sd": sd,
            "train_ms": float(np.mean([r["train_ms"] for r in res])),
            "test_ms": float(np.mean([r["test_ms"] for r in res])),
        })
    doc.tables["sweep"] = rows
    return doc


def run_ablation(cfg: ExperimentConfig, prepared: Prepared) -> ReportDoc:
    doc = new_doc(cfg, prepared)
    table = prepared.table(cfg.horizon)
    spec = parse_algorithm(cfg.ablation_algorithm)
    rows = [(name, spec, Dataset.from_table(table, mask)) for name, mask in cfg.masks.items()]
    grouped = _run_jobs(cfg, _jobs(cfg, "ablation", rows), doc)
    out = []
    for name, mask in cfg.masks.items():
        acc, sd = _mean_sd([r["accuracy"] for r in grouped[name]])
        out.append({"features": name, "n_features": int(np.sum(mask)), "accuracy": acc, "accuracy_sd": sd})
    doc.tables["ablation"] = out
    return doc


def subsample_subjects(subject_ids: list[str], fraction: float, seed: int) -> list[str]:
    """Seeded subset of ``round(fraction * n)`` subjects, in their original order."""
    n = round_half_up(fraction * len(subject_ids))
    if n < MIN_SUBJECTS:
        raise TooSmall(
            f"fraction {fraction} of {len(subject_ids)} subjects leaves {n} (< {MIN_SUBJECTS})", stage="reduce-subjects"
        )
    if n == len(subject_ids):
        return list(subject_ids)
    keep = np.sort(np.random.default_rng([seed, 1]).permutation(len(subject_ids))[:n])
    return [subject_ids[i] for i in keep]


def _series(cfg, experiment, xs, datasets_per_seed, doc) -> list[dict]:
    spec = parse_algorithm(cfg.reduction_algorithm)
    jobs = [
        Job(experiment, str(x), seed, spec, datasets_per_seed[(x, seed)], False, 1, cfg.test_fraction, cfg.split_mode)
        for x in xs
        for seed in cfg.seeds
    ]
    grouped = _run_jobs(cfg, jobs, doc)
    out = []
    for x in xs:
        mean, sd = _mean_sd([r["accuracy"] for r in grouped[str(x)]])
        out.append({"x": x, "mean": mean, "sd": sd})
    return out


def run_subject_reduction(cfg: ExperimentConfig, prepared: Prepared) -> ReportDoc:
    doc = new_doc(cfg, prepared)
    table = prepared.table(cfg.horizon)
    ids = table.unique_subjects()
    mask = np.array(cfg.sweep_mask)
    data = {
        (f, seed): Dataset.from_table(table.subset(subsample_subjects(ids, f, seed)), mask)
        for f in cfg.fractions
        for seed in cfg.seeds
    }
    doc.series["subject_reduction"] = _series(cfg, "subject_reduction", cfg.fractions, data, doc)
    return doc


def run_timelength_reduction(cfg: ExperimentConfig, prepared: Prepared) -> ReportDoc:
    doc = new_doc(cfg, prepared)
    mask = np.array(cfg.sweep_mask)
    per_h = {h: Dataset.from_table(prepared.table(h), mask) for h in cfg.horizons}
    data = {(h, seed): per_h[h] for h in cfg.horizons for seed in cfg.seeds}
    doc.series["horizon"] = _series(cfg, "horizon", cfg.horizons, data, doc)
    doc.exclusions = sorted(prepared.exclusions)
    return doc


def run_all(cfg: ExperimentConfig, emit: bool = True) -> ReportDoc:
    prepared = prepare(cfg)
    doc = new_doc(cfg, prepared)
    for step in (run_sweep, run_ablation, run_subject_reduction, run_timelength_reduction):
        doc.merge(step(cfg, prepared))
    doc.exclusions = sorted(prepared.exclusions)
    if emit:
        emit_report(doc, cfg.out_dir)
    return doc


# --- report files --------------------------------------------------------------

def _f(v: float, digits: int = 6) -> str:
    return f"{v:.{digits}f}"


TABLE_COLUMNS = {
    "sweep": (("algorithm", str), ("accuracy", _f), ("train_ms", lambda v: _f(v, 3)), ("test_ms", lambda v: _f(v, 3))),
    "ablation": (("features", str), ("n_features", str), ("accuracy", _f), ("accuracy_sd", _f)),
}


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def emit_report(doc: ReportDoc, out_dir) -> list[Path]:
    """Write report.json plus one CSV per table and series; returns the written paths.

    ``cells.csv`` holds every per-seed accuracy and is free of timing values,
    so it is byte-stable across machines.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, rows in doc.tables.items():
            cols = TABLE_COLUMNS.get(name)
            if cols is None:
                cols = tuple((k, str) for k in rows[0]) if rows else ()
            p = out / "tables" / f"{name}.csv"
            _write_csv(p, [c for c, _ in cols], ([fmt(r[c]) for c, fmt in cols] for r in rows))
            written.append(p)
        for name, points in doc.series.items():
            p = out / "series" / f"{name}.csv"
            _write_csv(p, ["x", "mean", "sd"], ([f"{pt['x']:g}", _f(pt["mean"]), _f(pt["sd"])] for pt in points))
            written.append(p)
        p = out / "cells.csv"
        _write_csv(
            p,
            ["experiment", "row", "seed", "accuracy", "config_hash"],
            (
                [c["experiment"], c["row"], c["seed"], _f(c["accuracy"]), doc.provenance["config_hash"]]
                for c in doc.cells
            ),
        )
        written.append(p)
        p = out / "exclusions.csv"
        write_exclusions(p, doc.exclusions)
        written.append(p)
        p = out / "report.json"
        body = {
            "provenance": doc.provenance,
            "tables": doc.tables,
            "series": doc.series,
            "cells": doc.cells,
            "exclusions": [list(e) for e in doc.exclusions],
        }
        p.write_text(json.dumps(_json_ready(body), indent=2, sort_keys=True) + "\n")
        written.append(p)
    except OSError as exc:
        raise ConfigError(f"cannot write report to {out}: {exc}", stage="emit") from None
    return written
