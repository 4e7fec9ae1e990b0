"""CLI surface: exit codes, file outputs, reproducibility, figures."""

import json
from pathlib import Path

import pytest

from eegemo.cli import main

SPEC = {
    "class_profiles": {
        "0": {},
        "1": {"gamma": {"temporal": 3.0}},
        "2": {"alpha": {"posterior": 3.0}},
    },
    "trials_per_class": 5,
    "noise_level": 0.8,
    "duration_seconds": 8.0,
    "channels": ["F3", "F4", "FT7", "FT8", "T7", "T8",
                 "C3", "C4", "P3", "P4", "O1", "O2"],
    "channel_groups": {
        "temporal": ["FT7", "FT8", "T7", "T8"],
        "posterior": ["P3", "P4", "O1", "O2"],
    },
    "seed": 3,
}


@pytest.fixture()
def workspace(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC))
    trials = tmp_path / "trials"
    assert main(["synth", str(spec_path), "--out", str(trials)]) == 0
    return tmp_path, spec_path, trials


def read_bytes_map(folder):
    return {p.name: p.read_bytes() for p in sorted(Path(folder).iterdir())}


class TestSynth:
    def test_writes_expected_trial_count(self, workspace):
        _, _, trials = workspace
        assert len(list(trials.glob("*.f32"))) == 15
        assert (trials / "labels.csv").exists()

    def test_same_seed_identical_bytes(self, workspace, tmp_path):
        _, spec_path, trials = workspace
        again = tmp_path / "again"
        assert main(["synth", str(spec_path), "--out", str(again)]) == 0
        assert read_bytes_map(trials) == read_bytes_map(again)

    def test_invalid_spec_exits_2(self, tmp_path):
        bad = dict(SPEC, noise_level=-1.0)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        assert main(["synth", str(path), "--out", str(tmp_path / "o")]) == 2


class TestExtract:
    def test_features_plus_manifest(self, workspace):
        tmp, _, trials = workspace
        out = tmp / "feats"
        assert main(["extract", "--inputs", f"{trials}/*.json",
                     "--out", str(out), "--feature", "DE"]) == 0
        files = list(out.glob("*.features.csv"))
        assert len(files) == 15
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["files"]) == 15
        assert manifest["failures"] == []

    def test_rerun_identical_bytes(self, workspace):
        tmp, _, trials = workspace
        out1, out2 = tmp / "f1", tmp / "f2"
        for out in (out1, out2):
            assert main(["extract", "--inputs", f"{trials}/*.json",
                         "--out", str(out), "--feature", "DE"]) == 0
        assert read_bytes_map(out1) == read_bytes_map(out2)

    def test_missing_glob_exits_2(self, tmp_path):
        assert main(["extract", "--inputs", f"{tmp_path}/nothing/*.json",
                     "--out", str(tmp_path / "o")]) == 2

    def test_partial_failure_exits_1(self, workspace):
        tmp, _, trials = workspace
        # corrupt one sidecar
        victim = sorted(trials.glob("*.json"))[0]
        victim.write_text(victim.read_text()[:30])
        out = tmp / "feats"
        assert main(["extract", "--inputs", f"{trials}/*.json",
                     "--out", str(out), "--feature", "DE"]) == 1
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["failures"]) == 1
        assert len(manifest["files"]) == 14

    def test_parallel_jobs_same_result(self, workspace):
        tmp, _, trials = workspace
        out1, out2 = tmp / "serial", tmp / "par"
        assert main(["extract", "--inputs", f"{trials}/*.json",
                     "--out", str(out1), "--feature", "DE"]) == 0
        assert main(["extract", "--inputs", f"{trials}/*.json",
                     "--out", str(out2), "--feature", "DE", "--jobs", "4"]) == 0
        assert read_bytes_map(out1) == read_bytes_map(out2)


class TestEval:
    def test_kfold_report_and_figures(self, workspace):
        tmp, _, trials = workspace
        cfg = tmp / "cfg.json"
        cfg.write_text(json.dumps({
            "pipeline": {"feature": "DE", "smoothing": "moving_average",
                         "classifier": "knn"},
            "protocol": {"name": "kfold", "k": 5},
        }))
        out = tmp / "eval"
        assert main(["eval", "--config", str(cfg),
                     "--inputs", f"{trials}/*.json", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["cells"]) == 5
        assert (out / "report_cells.csv").exists()
        png = out / "report_accuracy.png"
        assert png.exists() and png.stat().st_size > 0

    def test_no_figures_flag(self, workspace):
        tmp, _, trials = workspace
        cfg = tmp / "cfg.json"
        cfg.write_text(json.dumps({
            "pipeline": {"feature": "DE", "smoothing": "none",
                         "classifier": "knn"},
            "protocol": {"name": "kfold", "k": 3},
        }))
        out = tmp / "eval_nofig"
        assert main(["eval", "--config", str(cfg), "--inputs",
                     f"{trials}/*.json", "--out", str(out),
                     "--no-figures"]) == 0
        assert not (out / "report_accuracy.png").exists()

    def test_cross_session_grid(self, tmp_path):
        for s in (1, 2, 3):
            spec = dict(SPEC, seed=s)
            spec["session_id"] = f"sess{s}"
            p = tmp_path / f"spec{s}.json"
            p.write_text(json.dumps(spec))
            assert main(["synth", str(p), "--out", str(tmp_path / "trials")]) == 0
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "pipeline": {"feature": "DE", "smoothing": "none",
                         "classifier": "knn"},
            "protocol": {"name": "cross_session", "k": 2},
        }))
        out = tmp_path / "grid"
        assert main(["eval", "--config", str(cfg),
                     "--inputs", f"{tmp_path}/trials/*.json",
                     "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["cells"]) == 9
        assert (out / "report_matrix.png").exists()

    def test_bad_classifier_name_exits_2(self, workspace):
        tmp, _, trials = workspace
        cfg = tmp / "cfg.json"
        cfg.write_text(json.dumps({"pipeline": {"classifier": "svm"}}))
        assert main(["eval", "--config", str(cfg),
                     "--inputs", f"{trials}/*.json",
                     "--out", str(tmp / "x")]) == 2

    def test_unknown_config_key_exits_2(self, workspace):
        tmp, _, trials = workspace
        cfg = tmp / "cfg.json"
        cfg.write_text(json.dumps({"pipelines": {}}))
        assert main(["eval", "--config", str(cfg),
                     "--inputs", f"{trials}/*.json",
                     "--out", str(tmp / "x")]) == 2


class TestSmoothSelectTrainPredict:
    def test_full_command_chain(self, workspace):
        tmp, _, trials = workspace
        feats = tmp / "feats"
        assert main(["extract", "--inputs", f"{trials}/*.json",
                     "--out", str(feats), "--feature", "DE"]) == 0

        smoothed = tmp / "smoothed"
        assert main(["smooth", "--inputs", f"{feats}/*.features.csv",
                     "--out", str(smoothed), "--method", "moving_average",
                     "--window", "5"]) == 0
        assert len(list(smoothed.glob("*.smoothed.csv"))) == 15

        sel = tmp / "sel"
        assert main(["select", "--inputs", f"{smoothed}/*.csv",
                     "--out", str(sel), "--method", "correlation",
                     "--k", "10"]) == 0
        assert (sel / "ranking.csv").read_text().count("\n") == 12

        cfg = tmp / "train.json"
        cfg.write_text(json.dumps({
            "pipeline": {"feature": "DE", "smoothing": "none",
                         "classifier": "logreg", "logreg_l2": 1.0},
        }))
        model_dir = tmp / "model"
        assert main(["train", "--config", str(cfg),
                     "--inputs", f"{smoothed}/*.csv",
                     "--out", str(model_dir)]) == 0
        assert (model_dir / "pipeline.json").exists()

        pred_dir = tmp / "pred"
        assert main(["predict", "--model", str(model_dir),
                     "--inputs", f"{smoothed}/*.csv",
                     "--out", str(pred_dir)]) == 0
        lines = (pred_dir / "predictions.csv").read_text().strip().splitlines()
        assert lines[0] == "trial_id,window,true_label,predicted"
        assert len(lines) > 15


class TestTopo:
    def test_grids_and_figures(self, tmp_path):
        spec = {
            "class_profiles": {"0": {}, "1": {"gamma": {"all": 3.0}}},
            "trials_per_class": 2, "noise_level": 0.5,
            "duration_seconds": 5.0, "seed": 4,
        }
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(spec))
        assert main(["synth", str(p), "--out", str(tmp_path / "trials")]) == 0
        assert main(["extract", "--inputs", f"{tmp_path}/trials/*.json",
                     "--out", str(tmp_path / "feats"), "--feature", "DE"]) == 0
        out = tmp_path / "topo"
        assert main(["topo", "--inputs", f"{tmp_path}/feats/*.csv",
                     "--out", str(out), "--bands", "gamma"]) == 0
        assert (out / "topo_class0_gamma.csv").exists()
        assert (out / "topo_class1_gamma.png").stat().st_size > 0


class TestEnvVarDefaultOut(object):
    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(SPEC))
        target = tmp_path / "envout"
        monkeypatch.setenv("EEGEMO_OUT", str(target))
        assert main(["synth", str(spec_path)]) == 0
        assert (target / "labels.csv").exists()


class TestSynthNinetyTrials:
    def test_three_by_thirty_gives_ninety_files(self, tmp_path):
        spec = dict(SPEC, trials_per_class=30, duration_seconds=2.0)
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        out = tmp_path / "out"
        assert main(["synth", str(path), "--out", str(out)]) == 0
        assert len(list(out.glob("*.json"))) == 90
        assert len(list(out.glob("*.f32"))) == 90
