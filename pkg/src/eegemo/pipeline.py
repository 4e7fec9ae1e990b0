"""Configurable end-to-end pipeline used by the evaluation protocols and CLI.

A pipeline is fit strictly on training trials: smoothing parameters,
reducers and classifiers never see held-out data. For the state-space
smoother, each training trial is smoothed under parameters fit on that
trial alone; at prediction time held-out trials are smoothed under the
column-wise average of the training-trial parameters (re-anchored to the
sequence start), so no fitting happens on test data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import classify, reduction, smoothing
from .features import band_slice, extract_features, FEATURE_KINDS
from .layout import ChannelLayout, default_layout
from .spectral import BAND_TABLES
from .tensor import FeatureTensor, stack_windows
from .trials import TrialRecording

SMOOTHERS = ("none", "moving_average", "lds")
REDUCERS = ("none", "pca", "mrmr")
CLASSIFIERS = ("gelm", "knn", "logreg")


@dataclass
class PipelineConfig:
    feature: str = "DE"
    band: str = "total"
    band_table: str = "five"
    window_seconds: float = 1.0
    smoothing: str = "lds"
    smoothing_window: int = 5
    lds_max_iters: int = 50
    lds_tol: float = 1e-4
    reducer: str = "none"
    reducer_k: int = 0
    classifier: str = "gelm"
    gelm_lambda1: float = 1.0
    gelm_lambda2: float = 1.0
    gelm_hidden: int = 0          # 0 means 10x the input dimension
    knn_k: int = 5
    logreg_l2: float = 1.0
    trial_majority: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.feature not in FEATURE_KINDS:
            raise ValueError(f"unknown feature {self.feature!r}")
        if self.band_table not in BAND_TABLES:
            raise ValueError(f"unknown band_table {self.band_table!r}")
        if self.smoothing not in SMOOTHERS:
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.reducer not in REDUCERS:
            raise ValueError(f"unknown reducer {self.reducer!r}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.reducer != "none" and self.reducer_k < 1:
            raise ValueError("reducer_k must be >= 1 when a reducer is set")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown pipeline config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


def prepare_tensors(
    items, config: PipelineConfig, layout: ChannelLayout | None = None
) -> list[FeatureTensor]:
    """Extract features from raw trials (or band-slice ready tensors)."""
    layout = layout if layout is not None else default_layout()
    bands = BAND_TABLES[config.band_table]
    out = []
    for item in items:
        if isinstance(item, TrialRecording):
            t = extract_features(
                item, config.feature, bands, config.window_seconds, layout
            )
        elif isinstance(item, FeatureTensor):
            t = item
        else:
            raise TypeError(f"expected trials or feature tensors, got {type(item)}")
        out.append(band_slice(t, config.band))
    return out


@dataclass
class TrainedPipeline:
    config: PipelineConfig
    classes: tuple[int, ...]
    lds_params: smoothing.LdsParams | None = None
    pca: reduction.PcaModel | None = None
    selected: np.ndarray | None = None
    model: object = None

    def smooth(self, t: FeatureTensor) -> FeatureTensor:
        cfg = self.config
        if cfg.smoothing == "none":
            return t
        if cfg.smoothing == "moving_average":
            return smoothing.moving_average(t, cfg.smoothing_window)
        params = smoothing.params_for_sequence(self.lds_params, t)
        return smoothing.lds_denoise(t, params)

    def reduce(self, X: np.ndarray) -> np.ndarray:
        if self.pca is not None:
            return reduction.pca_transform(self.pca, X)
        if self.selected is not None:
            return X[:, self.selected]
        return X

    def predict_windows(self, t: FeatureTensor) -> np.ndarray:
        """Per-window class predictions for one held-out tensor."""
        X = self.reduce(self.smooth(t).values)
        cfg = self.config
        if cfg.classifier == "gelm":
            labels, _ = classify.gelm_predict(self.model, X)
            return labels
        if cfg.classifier == "knn":
            return classify.knn_predict(self.model, X)
        return classify.logreg_predict(self.model, X)


def _fit_smoothing(
    tensors: list[FeatureTensor], config: PipelineConfig, lds_fits=None
) -> tuple[list[FeatureTensor], smoothing.LdsParams | None]:
    if config.smoothing == "none":
        return tensors, None
    if config.smoothing == "moving_average":
        return [smoothing.moving_average(t, config.smoothing_window) for t in tensors], None
    if lds_fits is None:
        lds_fits = [
            smoothing.fit_lds(t, config.lds_max_iters, config.lds_tol).params
            for t in tensors
        ]
    smoothed = [smoothing.lds_denoise(t, p) for t, p in zip(tensors, lds_fits)]
    return smoothed, smoothing.average_params(lds_fits)


def fit_pipeline(
    train: list[FeatureTensor], config: PipelineConfig, lds_fits=None
) -> TrainedPipeline:
    """Fit smoothing/reduction/classifier on training tensors only.

    ``lds_fits`` optionally supplies precomputed per-trial smoother
    parameters (fitting a trial on itself is fold-independent, so
    protocols cache these across folds).
    """
    smoothed, theta = _fit_smoothing(train, config, lds_fits)
    X, y = stack_windows(smoothed)

    pipe = TrainedPipeline(
        config=config,
        classes=tuple(int(c) for c in np.unique(y)),
        lds_params=theta,
    )
    if config.reducer == "pca":
        pipe.pca = reduction.pca_fit(X, config.reducer_k)
    elif config.reducer == "mrmr":
        ranking = reduction.mrmr_select(_pooled_tensor(smoothed, X), y, config.reducer_k)
        pipe.selected = np.sort(ranking.indices)
    Xr = pipe.reduce(X)

    if config.classifier == "gelm":
        ts = classify.LabeledSet.from_labels(Xr, y)
        pipe.model = classify.gelm_train(
            ts, config.gelm_lambda1, config.gelm_lambda2,
            hidden=config.gelm_hidden or None, seed=config.seed,
        )
    elif config.classifier == "knn":
        pipe.model = classify.knn_train(Xr, y, config.knn_k)
    else:
        pipe.model = classify.logreg_train(Xr, y, config.logreg_l2)
    return pipe


def _pooled_tensor(tensors: list[FeatureTensor], X: np.ndarray) -> FeatureTensor:
    return FeatureTensor(X, tensors[0].columns, tensors[0].window_seconds)


def save_pipeline(pipe: TrainedPipeline, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": "eegemo-pipeline",
        "version": 1,
        "config": pipe.config.to_dict(),
        "classes": list(pipe.classes),
        "has_lds": pipe.lds_params is not None,
        "has_pca": pipe.pca is not None,
        "has_selection": pipe.selected is not None,
    }
    with open(out_dir / "pipeline.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if pipe.lds_params is not None:
        with open(out_dir / "smoother.json", "w") as fh:
            json.dump(pipe.lds_params.to_dict(), fh, sort_keys=True)
    if pipe.pca is not None:
        np.savez(out_dir / "reducer.npz", mean=pipe.pca.mean,
                 components=pipe.pca.components,
                 explained_variance=pipe.pca.explained_variance,
                 explained_ratio=pipe.pca.explained_ratio)
    if pipe.selected is not None:
        np.savez(out_dir / "selection.npz", selected=pipe.selected)
    classify.save_model(pipe.model, out_dir / "classifier")
    return out_dir / "pipeline.json"


def load_pipeline(out_dir: str | Path) -> TrainedPipeline:
    out_dir = Path(out_dir)
    with open(out_dir / "pipeline.json") as fh:
        meta = json.load(fh)
    if meta.get("format") != "eegemo-pipeline" or meta.get("version") != 1:
        raise classify.ModelFormatError(f"{out_dir}: not a supported pipeline directory")
    pipe = TrainedPipeline(
        config=PipelineConfig.from_dict(meta["config"]),
        classes=tuple(int(c) for c in meta["classes"]),
    )
    if meta["has_lds"]:
        with open(out_dir / "smoother.json") as fh:
            pipe.lds_params = smoothing.LdsParams.from_dict(json.load(fh))
    if meta["has_pca"]:
        arrays = np.load(out_dir / "reducer.npz")
        pipe.pca = reduction.PcaModel(
            mean=arrays["mean"], components=arrays["components"],
            explained_variance=arrays["explained_variance"],
            explained_ratio=arrays["explained_ratio"],
        )
    if meta["has_selection"]:
        pipe.selected = np.load(out_dir / "selection.npz")["selected"]
    pipe.model = classify.load_model(out_dir / "classifier")
    return pipe
