"""Dimensionality reduction: PCA, MRMR selection, correlation ranking.

PCA is fit by eigendecomposition of the sample covariance (ddof=1). MRMR
greedily selects features maximizing relevance minus mean redundancy,
both measured by plug-in mutual information over discretized columns;
the default discretization is three levels split at mean +/- 0.5 std per
column. Correlation ranking orders columns by absolute Pearson
correlation with the numeric label coding.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import FeatureColumn, FeatureTensor


@dataclass
class PcaModel:
    """Column means plus top-k orthonormal loadings (rows of ``components``)."""

    mean: np.ndarray
    components: np.ndarray            # (k, D)
    explained_variance: np.ndarray    # eigenvalues, non-increasing
    explained_ratio: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]


def pca_fit(X: np.ndarray, k: int) -> PcaModel:
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k={k} out of range for {n} rows x {d} columns")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (n - 1)
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval)[::-1]
    eigval = np.maximum(eigval[order], 0.0)
    components = eigvec[:, order].T
    # Deterministic sign: largest-magnitude entry of each loading is positive.
    for row in components:
        j = np.argmax(np.abs(row))
        if row[j] < 0:
            row *= -1.0
    total = eigval.sum()
    ratio = eigval / total if total > 0 else np.zeros_like(eigval)
    return PcaModel(
        mean=mean,
        components=components[:k],
        explained_variance=eigval[:k],
        explained_ratio=ratio[:k],
    )


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(f"{X.shape[1]} columns, model expects {model.mean.shape[0]}")
    return (X - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, Y: np.ndarray) -> np.ndarray:
    return np.asarray(Y, dtype=np.float64) @ model.components + model.mean


def mutual_information(xs: np.ndarray, ys: np.ndarray) -> float:
    """Plug-in MI (nats) over the joint histogram of two discrete sequences."""
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"length mismatch: {xs.shape} vs {ys.shape}")
    _, xi = np.unique(xs, return_inverse=True)
    _, yi = np.unique(ys, return_inverse=True)
    nx = xi.max() + 1
    ny = yi.max() + 1
    joint = np.zeros((nx, ny))
    np.add.at(joint, (xi, yi), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / np.outer(px, py)[nz])))
    return max(mi, 0.0)


def discretize_columns(
    X: np.ndarray, low_sigma: float = -0.5, high_sigma: float = 0.5
) -> np.ndarray:
    """Three levels per column, split at mean + low_sigma/high_sigma stds."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    out = np.ones(X.shape, dtype=np.int8)
    out[X < mean + low_sigma * std] = 0
    out[X > mean + high_sigma * std] = 2
    return out


@dataclass
class FeatureRanking:
    """Ordered feature subset with selection scores."""

    method: str
    indices: np.ndarray
    scores: np.ndarray
    columns: tuple[FeatureColumn, ...]

    def __post_init__(self):
        if len(set(self.indices.tolist())) != len(self.indices):
            raise ValueError("ranking contains duplicate columns")

    def __len__(self) -> int:
        return len(self.indices)


def _as_matrix(X) -> tuple[np.ndarray, tuple[FeatureColumn, ...]]:
    if isinstance(X, FeatureTensor):
        return X.values, X.columns
    X = np.asarray(X, dtype=np.float64)
    cols = tuple(FeatureColumn("raw", f"c{i}", "-") for i in range(X.shape[1]))
    return X, cols


def mrmr_select(X, labels: np.ndarray, n_select: int) -> FeatureRanking:
    """Greedy minimum-redundancy maximum-relevance selection.

    The first feature maximizes relevance I(x; c); each later pick
    maximizes I(x; c) minus the mean MI against the already-selected set.
    Ties break to the lowest column index.
    """
    values, columns = _as_matrix(X)
    labels = np.asarray(labels)
    d = values.shape[1]
    if not 1 <= n_select <= d:
        raise ValueError(f"n_select={n_select} out of range for {d} columns")
    if np.unique(labels).size < 2:
        raise ValueError("need at least 2 distinct labels")
    disc = discretize_columns(values)
    relevance = np.array([mutual_information(disc[:, j], labels) for j in range(d)])

    selected = [int(np.argmax(relevance))]
    scores = [float(relevance[selected[0]])]
    red_sum = np.zeros(d)
    available = np.ones(d, dtype=bool)
    available[selected[0]] = False
    while len(selected) < n_select:
        newest = selected[-1]
        for j in np.flatnonzero(available):
            red_sum[j] += mutual_information(disc[:, j], disc[:, newest])
        crit = relevance - red_sum / len(selected)
        crit[~available] = -np.inf
        pick = int(np.argmax(crit))
        selected.append(pick)
        scores.append(float(crit[pick]))
        available[pick] = False
    idx = np.array(selected)
    return FeatureRanking(
        method="MRMR",
        indices=idx,
        scores=np.array(scores),
        columns=tuple(columns[i] for i in idx),
    )


def correlation_rank(X, labels: np.ndarray, top_k: int) -> FeatureRanking:
    """Rank columns by |Pearson r| against the numeric label coding.

    Zero-variance columns score 0; ties break to the lowest column index.
    """
    values, columns = _as_matrix(X)
    y = np.asarray(labels, dtype=np.float64)
    d = values.shape[1]
    if not 1 <= top_k <= d:
        raise ValueError(f"top_k={top_k} out of range for {d} columns")
    yc = y - y.mean()
    sy = np.sqrt(np.sum(yc * yc))
    Xc = values - values.mean(axis=0)
    sx = np.sqrt(np.sum(Xc * Xc, axis=0))
    ok = (sx > 0) & (sy > 0)
    r = np.zeros(d)
    r[ok] = (Xc[:, ok].T @ yc) / (sx[ok] * sy)
    strength = np.abs(r)
    order = np.argsort(-strength, kind="stable")[:top_k]
    return FeatureRanking(
        method="correlation",
        indices=order,
        scores=strength[order],
        columns=tuple(columns[i] for i in order),
    )


def ranking_to_csv(ranking: FeatureRanking, path: str | Path) -> Path:
    path = Path(path)
    lines = [f"# method={ranking.method}", "descriptor,score"]
    for col, score in zip(ranking.columns, ranking.scores):
        lines.append(f"{col.descriptor()},{score!r}")
    path.write_text("\n".join(lines) + "\n")
    return path
