import dataclasses

import numpy as np
import pytest

from gaitnirs import harness
from gaitnirs.classify import parse_algorithm
from gaitnirs.errors import ConfigError, DataError, DegenerateLabels, TooSmall
from gaitnirs.harness import ExperimentConfig, subsample_subjects

SMALL = dict(
    n_subjects=40,
    seeds=(0, 1),
    algorithms=(parse_algorithm("lr"), parse_algorithm("dt"), parse_algorithm("knn:1")),
    timing_repeats=1,
)


@pytest.fixture(scope="module")
def small_cfg(tmp_path_factory):
    return ExperimentConfig(**SMALL, out_dir=str(tmp_path_factory.mktemp("run")))


@pytest.fixture(scope="module")
def prepared(small_cfg):
    return harness.prepare(small_cfg)


@pytest.fixture(scope="module")
def small_doc(small_cfg):
    return harness.run_all(small_cfg)


def test_hash_ignores_output_location_and_threads():
    a = ExperimentConfig(out_dir="x", threads=1)
    assert a.config_hash() == ExperimentConfig(out_dir="y", threads=4).config_hash()


@pytest.mark.parametrize(
    "change",
    [{"synth_seed": 8}, {"seeds": (0, 1)}, {"horizon": 45.0}, {"split_mode": "subject"}, {"test_fraction": 0.3}],
)
def test_hash_changes_with_any_key(change):
    assert ExperimentConfig().config_hash() != ExperimentConfig(**change).config_hash()


def test_hash_tracks_nested_configs():
    from gaitnirs.preprocess.wavelet import WaveletConfig

    base = ExperimentConfig()
    assert base.config_hash() != dataclasses.replace(base, effect=base.effect.quiet()).config_hash()
    pipe = dataclasses.replace(base.pipeline, wavelet=WaveletConfig(alpha=0.2))
    assert base.config_hash() != dataclasses.replace(base, pipeline=pipe).config_hash()


@pytest.mark.parametrize("kwargs", [{"seeds": ()}, {"split_mode": "fold"}, {"fractions": (0.0,)},
                                    {"masks": {"none": np.zeros(22, bool)}}, {"reduction_algorithm": "xgb"}])
def test_invalid_experiment_config(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "[experiment]\nn_subjects = 12\nseeds = 3, 4\nalgorithms = lr rf:5\nhorizons = 30, 60\n"
        "[effect]\nnoise_sd = 0.2\nstw_duration_range = 31, 39\n[fir]\ntaps = 81\n"
    )
    cfg = harness.load_experiment_config(path, seeds=(9,))
    assert cfg.n_subjects == 12 and cfg.seeds == (9,)
    assert [a.name for a in cfg.algorithms] == ["LR", "RF_5"]
    assert cfg.horizons == (30.0, 60.0)
    assert cfg.effect.noise_sd == 0.2 and cfg.effect.stw_duration_range == (31.0, 39.0)
    assert cfg.pipeline.fir.taps == 81


def test_unknown_experiment_key(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("[experiment]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        harness.load_experiment_config(path)


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("GAITNIRS_THREADS", "3")
    assert ExperimentConfig().workers() == 3
    assert ExperimentConfig(threads=2).workers() == 2
    monkeypatch.setenv("GAITNIRS_THREADS", "many")
    with pytest.raises(ConfigError):
        ExperimentConfig().workers()


def test_subsample_is_seeded_and_ordered():
    ids = [f"s{i:03d}" for i in range(100)]
    a = subsample_subjects(ids, 0.25, 3)
    assert len(a) == 25 and a == sorted(a) and a == subsample_subjects(ids, 0.25, 3)
    assert a != subsample_subjects(ids, 0.25, 4)
    assert subsample_subjects(ids, 1.0, 0) == ids


def test_subsample_too_small():
    with pytest.raises(TooSmall):
        subsample_subjects([f"s{i}" for i in range(30)], 0.25, 0)


def test_skip_synth_without_cohort_reports_preprocess(tmp_path):
    cfg = ExperimentConfig(skip_synth=True, cohort_dir=str(tmp_path / "missing"))
    with pytest.raises(DataError) as exc:
        harness.run_all(cfg, emit=False)
    assert exc.value.stage == "preprocess"


def test_all_default_synthetic_subjects_survive(prepared):
    assert prepared.exclusions == [] and len(prepared.epochs) == 40


def test_run_all_shapes(small_doc):
    assert [r["algorithm"] for r in small_doc.tables["sweep"]] == ["LR", "DT", "kNN_1"]
    assert len(small_doc.tables["ablation"]) == 7
    assert [p["x"] for p in small_doc.series["subject_reduction"]] == [0.25, 0.5, 0.75, 1.0]
    assert [p["x"] for p in small_doc.series["horizon"]] == [30.0, 45.0, 60.0, 90.0]
    cells = {(c["experiment"], c["row"], c["seed"]) for c in small_doc.cells}
    assert ("sweep", "LR", 1) in cells and ("horizon", "90.0", 0) in cells


def test_full_fraction_equals_sweep(small_doc):
    lr = next(r for r in small_doc.tables["sweep"] if r["algorithm"] == "LR")
    assert small_doc.series["subject_reduction"][-1]["mean"] == lr["accuracy"]


def test_emitted_files(small_cfg, small_doc):
    from pathlib import Path

    out = Path(small_cfg.out_dir)
    assert (out / "tables" / "sweep.csv").read_text().splitlines()[0] == "algorithm,accuracy,train_ms,test_ms"
    assert (out / "series" / "horizon.csv").read_text().splitlines()[0] == "x,mean,sd"
    assert (out / "report.json").exists() and (out / "exclusions.csv").exists()
    before = {p: p.read_bytes() for p in out.rglob("*.csv")}
    harness.emit_report(small_doc, out)
    assert before == {p: p.read_bytes() for p in out.rglob("*.csv")}


def test_unwritable_output(small_doc, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigError) as exc:
        harness.emit_report(small_doc, blocker / "sub")
    assert exc.value.stage == "emit"


ACCURACY_ARTIFACTS = ("cells.csv", "tables/ablation.csv", "series/subject_reduction.csv", "series/horizon.csv")


def test_accuracy_artifacts_identical_across_runs_and_workers(tmp_path, monkeypatch):
    cfg = dict(SMALL, n_subjects=24, fractions=(0.5, 1.0), algorithms=(parse_algorithm("rf:5"),))
    outputs = []
    for run, threads in enumerate(("1", "4", "1")):
        monkeypatch.setenv("GAITNIRS_THREADS", threads)
        out = tmp_path / f"run{run}"
        harness.run_all(ExperimentConfig(**cfg, out_dir=str(out)))
        outputs.append({name: (out / name).read_bytes() for name in ACCURACY_ARTIFACTS})
    assert outputs[0] == outputs[1] == outputs[2]


def test_training_failure_names_the_row(prepared):
    from gaitnirs.classify import Dataset

    only = prepared.table(60.0)
    data = Dataset(only.X, np.zeros(len(only), dtype=int), only.subject_ids)
    job = harness.Job("sweep", "LR", 0, parse_algorithm("lr"), data, False, 1, 0.2, "row")
    with pytest.raises(DegenerateLabels) as exc:
        harness.run_job(job)
    assert "sweep row 'LR' seed 0" in str(exc.value)
