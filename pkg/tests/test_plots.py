"""Figure renderers write non-empty PNG files."""

from eegemo.evaluate import cross_session_matrix, export_topo_grid, kfold_cv
from eegemo.features import extract_features
from eegemo.pipeline import PipelineConfig
from eegemo.plots import (
    save_accuracy_matrix, save_cell_accuracies, save_spectrogram_figure,
    save_topo_figure,
)
from eegemo.spectral import stft_power
from eegemo.synthetic import SyntheticSpec, generate_synthetic

from conftest import small_spec, tone_trial


def test_cell_and_matrix_figures(tmp_path):
    trials = generate_synthetic(small_spec(trials_per_class=4, seconds=6.0, seed=1))
    cfg = PipelineConfig(feature="DE", smoothing="none", classifier="knn")
    report = kfold_cv(trials, cfg, k=2, seed=0)
    p1 = save_cell_accuracies(report, tmp_path / "cells.png")
    assert p1.stat().st_size > 0

    grid = cross_session_matrix([trials, trials], cfg, k=2, seed=0)
    p2 = save_accuracy_matrix(grid, tmp_path / "matrix.png")
    assert p2.stat().st_size > 0


def test_topo_figure(tmp_path):
    spec = SyntheticSpec(class_profiles={0: {}, 1: {}}, trials_per_class=1,
                         noise_level=0.5, duration_seconds=4.0, seed=2)
    tensors = [extract_features(t, "DE") for t in generate_synthetic(spec)]
    grids = export_topo_grid(tensors, bands=("alpha",))
    path = save_topo_figure(grids[0], tmp_path / "topo.png")
    assert path.stat().st_size > 0


def test_spectrogram_figure(tmp_path):
    s = stft_power(tone_trial(10.0, seconds=4.0), 1.0)
    path = save_spectrogram_figure(s, "CH1", tmp_path / "spec.png")
    assert path.stat().st_size > 0
