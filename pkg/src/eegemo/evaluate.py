"""Evaluation protocols and report assembly.

Protocols split at the trial level (all windows of a trial stay on one
side), fit the full pipeline on training partitions only, and score
held-out windows. Accuracy is the fraction of windows classified
correctly, recomputed from the confusion counts so the two can never
disagree. Reports serialize deterministically (sorted JSON keys, no
timestamps): identical config + data + seeds give identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .layout import ChannelLayout, default_layout
from .pipeline import PipelineConfig, TrainedPipeline, fit_pipeline, prepare_tensors
from .smoothing import fit_lds
from .tensor import FeatureTensor


@dataclass
class CellResult:
    """One protocol cell: a (train, test) evaluation with confusion counts."""

    name: str
    train_key: str
    test_key: str
    confusion: np.ndarray     # (classes, classes), rows = true label
    n_windows: int

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        if total == 0:
            return 0.0
        return 100.0 * float(np.trace(self.confusion)) / float(total)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "train": self.train_key,
            "test": self.test_key,
            "accuracy": self.accuracy,
            "n_windows": int(self.n_windows),
            "confusion": self.confusion.astype(int).tolist(),
        }


@dataclass
class EvalReport:
    protocol: str
    classes: tuple[int, ...]
    cells: list[CellResult]
    config: dict
    seed: int
    grid_keys: tuple[str, ...] = ()

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([c.accuracy for c in self.cells])

    @property
    def mean_accuracy(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std_accuracy(self) -> float:
        return float(self.accuracies.std())

    def accuracy_matrix(self) -> np.ndarray:
        """Train-by-test accuracy grid for matrix protocols."""
        if not self.grid_keys:
            raise ValueError(f"protocol {self.protocol!r} has no grid structure")
        keys = list(self.grid_keys)
        grid = np.full((len(keys), len(keys)), np.nan)
        for c in self.cells:
            grid[keys.index(c.train_key), keys.index(c.test_key)] = c.accuracy
        return grid

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "classes": list(self.classes),
            "seed": self.seed,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "grid_keys": list(self.grid_keys),
            "cells": [c.to_dict() for c in self.cells],
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_table(self) -> str:
        lines = [
            f"protocol: {self.protocol}",
            f"mean accuracy: {self.mean_accuracy:.2f} +/- {self.std_accuracy:.2f} %",
            "",
            f"{'cell':<24}{'train':<14}{'test':<14}{'acc %':>8}{'windows':>9}",
        ]
        for c in self.cells:
            lines.append(
                f"{c.name:<24}{c.train_key:<14}{c.test_key:<14}"
                f"{c.accuracy:>8.2f}{c.n_windows:>9d}"
            )
        return "\n".join(lines) + "\n"

    def save(self, out_dir: str | Path, basename: str = "report") -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / f"{basename}.json", out_dir / f"{basename}.txt",
                 out_dir / f"{basename}_cells.csv"]
        paths[0].write_text(self.to_json())
        paths[1].write_text(self.to_table())
        rows = ["name,train,test,accuracy,n_windows"]
        for c in self.cells:
            rows.append(f"{c.name},{c.train_key},{c.test_key},"
                        f"{c.accuracy!r},{c.n_windows}")
        paths[2].write_text("\n".join(rows) + "\n")
        return paths


def _confusion(classes, true_labels, pred_labels) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    m = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, pred_labels):
        m[index[int(t)], index[int(p)]] += 1
    return m


def _score_cell(
    pipe: TrainedPipeline, test: list[FeatureTensor], classes, trial_majority: bool
) -> tuple[np.ndarray, int]:
    conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
    n_windows = 0
    for t in test:
        preds = pipe.predict_windows(t)
        n_windows += len(preds)
        if trial_majority:
            votes = np.bincount(
                np.searchsorted(np.asarray(classes), preds), minlength=len(classes)
            )
            winner = classes[int(np.argmax(votes))]
            conf += _confusion(classes, [t.label], [winner])
        else:
            conf += _confusion(classes, np.full(len(preds), t.label), preds)
    return conf, n_windows


def _precompute_lds(tensors, config) -> list | None:
    if config.smoothing != "lds":
        return None
    return [fit_lds(t, config.lds_max_iters, config.lds_tol).params for t in tensors]


def stratified_trial_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified assignment of trial indices to k folds."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise ValueError(
                f"class {c} has {idx.size} trials, fewer than k={k}"
            )
        idx = rng.permutation(idx)
        for i, trial in enumerate(idx):
            folds[i % k].append(int(trial))
    return [np.array(sorted(f)) for f in folds]


def kfold_cv(items, config: PipelineConfig, k: int = 5, seed: int = 0,
             layout: ChannelLayout | None = None) -> EvalReport:
    """Stratified trial-level k-fold cross-validation."""
    tensors = prepare_tensors(items, config, layout)
    labels = [t.label for t in tensors]
    classes = tuple(int(c) for c in np.unique(labels))
    folds = stratified_trial_folds(labels, k, seed)
    lds_fits = _precompute_lds(tensors, config)

    cells = []
    for fi, fold in enumerate(folds):
        test_set = set(fold.tolist())
        train_idx = [i for i in range(len(tensors)) if i not in test_set]
        pipe = fit_pipeline(
            [tensors[i] for i in train_idx], config,
            lds_fits=None if lds_fits is None else [lds_fits[i] for i in train_idx],
        )
        conf, nw = _score_cell(
            pipe, [tensors[i] for i in fold], classes, config.trial_majority
        )
        cells.append(CellResult(
            name=f"fold{fi}", train_key="train", test_key=f"fold{fi}",
            confusion=conf, n_windows=nw,
        ))
    return EvalReport(
        protocol="kfold_cv", classes=classes, cells=cells,
        config={"pipeline": config.to_dict(), "k": k},
        seed=seed,
    )


def cross_session_matrix(sessions, config: PipelineConfig, k: int = 5, seed: int = 0,
                         layout: ChannelLayout | None = None) -> EvalReport:
    """Train-on-session-i / test-on-session-j accuracy grid.

    Diagonal cells are within-session k-fold results; off-diagonal cells
    train on the full source session and test on the full target session.
    """
    if len(sessions) < 2:
        raise ValueError(f"need at least 2 sessions, got {len(sessions)}")
    prepared = [prepare_tensors(s, config, layout) for s in sessions]
    label_sets = [frozenset(t.label for t in s) for s in prepared]
    if len(set(label_sets)) != 1:
        raise ValueError(f"sessions have mismatched label sets: {label_sets}")
    classes = tuple(sorted(label_sets[0]))
    keys = []
    for i, s in enumerate(prepared):
        sid = s[0].session_id or f"session{i}"
        keys.append(sid if sid not in keys else f"{sid}#{i}")
    lds_fits = [_precompute_lds(s, config) for s in prepared]

    cells = []
    for i, train_tensors in enumerate(prepared):
        pipe = fit_pipeline(train_tensors, config, lds_fits=lds_fits[i])
        for j, test_tensors in enumerate(prepared):
            if i == j:
                sub = kfold_cv(train_tensors, config, k=k, seed=seed, layout=layout)
                conf = np.sum([c.confusion for c in sub.cells], axis=0)
                nw = int(sum(c.n_windows for c in sub.cells))
            else:
                conf, nw = _score_cell(
                    pipe, test_tensors, classes, config.trial_majority
                )
            cells.append(CellResult(
                name=f"train:{keys[i]}/test:{keys[j]}",
                train_key=keys[i], test_key=keys[j],
                confusion=conf, n_windows=nw,
            ))
    return EvalReport(
        protocol="cross_session_matrix", classes=classes, cells=cells,
        config={"pipeline": config.to_dict(), "k": k},
        seed=seed, grid_keys=tuple(keys),
    )


def leave_one_subject_out(subjects, config: PipelineConfig, seed: int = 0,
                          layout: ChannelLayout | None = None) -> EvalReport:
    """Hold out each subject in turn, training on all others."""
    if isinstance(subjects, dict):
        groups = {str(k): list(v) for k, v in subjects.items()}
    else:
        groups = {}
        for item in subjects:
            sid = item.subject_id or "?"
            groups.setdefault(sid, []).append(item)
    if len(groups) < 2:
        raise ValueError(f"need at least 2 subjects, got {len(groups)}")
    names = sorted(groups)
    prepared = {s: prepare_tensors(groups[s], config, layout) for s in names}
    all_labels = sorted({t.label for s in names for t in prepared[s]})
    classes = tuple(all_labels)
    lds_fits = {s: _precompute_lds(prepared[s], config) for s in names}

    cells = []
    for held in names:
        train, fits = [], []
        for s in names:
            if s == held:
                continue
            train.extend(prepared[s])
            if lds_fits[s] is not None:
                fits.extend(lds_fits[s])
        pipe = fit_pipeline(train, config, lds_fits=fits or None)
        conf, nw = _score_cell(pipe, prepared[held], classes, config.trial_majority)
        cells.append(CellResult(
            name=f"held_out:{held}", train_key="rest", test_key=held,
            confusion=conf, n_windows=nw,
        ))
    return EvalReport(
        protocol="leave_one_subject_out", classes=classes, cells=cells,
        config={"pipeline": config.to_dict()}, seed=seed,
    )


def one_way_anova(groups) -> tuple[float, float]:
    """Classical one-way ANOVA: returns (F, p).

    The p-value is the upper tail of the F(k-1, N-k) distribution,
    evaluated via the regularized incomplete beta function.
    """
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least 2 groups")
    for g in arrays:
        if g.size < 2:
            raise ValueError("each group needs at least 2 values")
    all_vals = np.concatenate(arrays)
    grand = all_vals.mean()
    k = len(arrays)
    n = all_vals.size
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ssw = sum(float(np.sum((g - g.mean()) ** 2)) for g in arrays)
    dfb = k - 1
    dfw = n - k
    if ssw == 0.0:
        if ssb == 0.0:
            return 0.0, 1.0
        return float("inf"), 0.0
    f_stat = (ssb / dfb) / (ssw / dfw)
    p = float(betainc(dfw / 2.0, dfb / 2.0, dfw / (dfw + dfb * f_stat)))
    return float(f_stat), min(max(p, 0.0), 1.0)


@dataclass
class TopoGrid:
    """Per-channel scalar values with layout coordinates for one (class, band)."""

    label: int
    band: str
    values: dict[str, float]
    coordinates: dict[str, tuple[float, float]]

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        lines = [f"# label={self.label}", f"# band={self.band}", "channel,x,y,value"]
        for ch, v in self.values.items():
            x, y = self.coordinates[ch]
            lines.append(f"{ch},{x!r},{y!r},{v!r}")
        path.write_text("\n".join(lines) + "\n")
        return path


def export_topo_grid(
    tensors: list[FeatureTensor],
    bands: tuple[str, ...] | None = None,
    layout: ChannelLayout | None = None,
    out_dir: str | Path | None = None,
) -> list[TopoGrid]:
    """Per (class, band) channel means of DE tensors, plot-ready.

    Requires full cap coverage; missing channels are reported by name.
    Returns the grids and, when ``out_dir`` is given, writes one CSV each.
    """
    layout = layout if layout is not None else default_layout()
    if not tensors:
        raise ValueError("no tensors given")
    for t in tensors:
        if t.kinds != ("DE",):
            raise ValueError(f"topo export expects DE tensors, got kinds {t.kinds}")
    ref = tensors[0]
    present = {c.site for c in ref.columns}
    missing = [ch for ch in layout.channel_names if ch not in present]
    if missing:
        raise ValueError(f"tensors are missing cap channels: {missing}")
    band_names = bands if bands is not None else ref.bands
    for band in band_names:
        if band not in ref.bands:
            raise ValueError(f"band {band!r} not present (tensor has {ref.bands})")
    index = ref.column_index()

    by_label: dict[int, list[FeatureTensor]] = {}
    for t in tensors:
        if t.columns != ref.columns:
            raise ValueError("tensors have mismatched column layouts")
        by_label.setdefault(int(t.label), []).append(t)

    grids = []
    for label in sorted(by_label):
        stacked = np.vstack([t.values for t in by_label[label]])
        for band in band_names:
            vals = {
                ch: float(stacked[:, index[(ch, band)]].mean())
                for ch in layout.channel_names
            }
            grids.append(TopoGrid(
                label=label, band=band, values=vals,
                coordinates={ch: layout.coordinates[ch] for ch in layout.channel_names},
            ))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for g in grids:
            g.to_csv(out_dir / f"topo_class{g.label}_{g.band}.csv")
    return grids
