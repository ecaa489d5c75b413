import json

import pytest

from gaitnirs.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "12", "--seed", "3", "--out", str(root / "cohort"), "--truth", "--quiet"]) == 0
    assert main(["preprocess", "--in", str(root / "cohort"), "--out", str(root / "epochs"), "--quiet"]) == 0
    assert main([
        "features", "--in", str(root / "epochs"), "--subjects", str(root / "cohort" / "subjects.csv"),
        "--out", str(root / "features.csv"), "--quiet",
    ]) == 0
    return root


def test_synth_writes_cohort(workspace):
    cohort = workspace / "cohort"
    assert (cohort / "subjects.csv").read_text().count("\n") == 13
    assert (cohort / "S0001_raw.csv").exists() and (cohort / "S0001_events.csv").exists()
    assert (cohort / "ground_truth" / "S0012.csv").exists()


def test_preprocess_and_features(workspace):
    assert (workspace / "epochs" / "S0005_epochs.csv").exists()
    assert (workspace / "epochs" / "exclusions.csv").read_text() == "subject_id,stage,reason\n"
    assert (workspace / "features.csv").read_text().count("\n") == 25


def test_train_then_evaluate(workspace, capsys):
    model = workspace / "m.bin"
    assert main(["train", "--features", str(workspace / "features.csv"), "--algo", "rf:5", "--seed", "2",
                 "--out", str(model), "--quiet"]) == 0
    report = workspace / "r.json"
    assert main(["evaluate", "--model", str(model), "--features", str(workspace / "features.csv"),
                 "--report", str(report), "--quiet"]) == 0
    doc = json.loads(report.read_text())
    assert doc["algorithm"] == "RF_5" and 0 <= doc["accuracy"] <= 1 and doc["test_time_ms_per_1000"] > 0


def test_fnirs_only_model(workspace):
    model = workspace / "f.bin"
    assert main(["train", "--features", str(workspace / "features.csv"), "--algo", "lr", "--fnirs-only",
                 "--out", str(model), "--quiet"]) == 0
    from gaitnirs.classify import load_model

    assert load_model(model).n_features == 20


def test_experiment_verb(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("[experiment]\nn_subjects = 16\nalgorithms = lr\ntiming_repeats = 1\n")
    assert main(["ablation", "--config", str(cfg), "--seed", "0,1", "--out", str(tmp_path / "res"), "--quiet"]) == 0
    assert (tmp_path / "res" / "tables" / "ablation.csv").exists()


def test_config_error_exit_code(tmp_path):
    assert main(["train", "--features", "x.csv", "--algo", "boost", "--quiet"]) == 2


def test_data_error_exit_code(tmp_path):
    assert main(["preprocess", "--in", str(tmp_path / "nothing"), "--out", str(tmp_path / "o"), "--quiet"]) == 3


def test_unpaired_features_exit_code(tmp_path):
    from gaitnirs.features import FEATURE_COLUMNS

    rows = ["subject_id,task," + ",".join(FEATURE_COLUMNS)]
    rows += [f"s{i},STW," + ",".join(["0"] * 22) for i in range(6)]
    path = tmp_path / "f.csv"
    path.write_text("\n".join(rows) + "\n")
    assert main(["train", "--features", str(path), "--algo", "lr", "--out", str(tmp_path / "m"), "--quiet"]) == 3


def test_training_error_exit_code(workspace, monkeypatch):
    from gaitnirs import cli
    from gaitnirs.errors import DegenerateLabels

    def fail(*args, **kwargs):
        raise DegenerateLabels("one class only", stage="train")

    monkeypatch.setattr(cli, "train_timed", fail)
    assert main(["train", "--features", str(workspace / "features.csv"), "--algo", "lr", "--quiet"]) == 4


def test_skip_synth_missing_cohort(tmp_path, capsys):
    code = main(["sweep", "--skip-synth", "--cohort", str(tmp_path / "none"), "--out", str(tmp_path), "--quiet"])
    assert code == 3
    assert "[preprocess]" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["nosuchverb"])
    assert exc.value.code == 2
