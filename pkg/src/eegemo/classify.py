"""Classifiers: graph-regularized ELM, k-nearest-neighbors, logistic regression.

The ELM variant draws a random hidden layer once (seeded uniform(-1, 1)
input weights and biases, sigmoid activation) and solves for the output
weights in closed form,

    beta = (H H' + l1 * H L H' + l2 * I)^{-1} H T,

where H is hidden-by-samples, T the one-hot target matrix, and L = D - W
the Laplacian of the class-block adjacency (W_ij = 1/N_t when samples i, j
share class t). The Laplacian term pulls outputs of same-class samples
together; l2 > 0 keeps the solve well posed.

Models serialize as a JSON metadata file plus an .npz weights file;
loading refuses mismatched format versions.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg as _linalg
from scipy import optimize as _optimize
from scipy.spatial.distance import cdist
from scipy.special import expit, logsumexp

MODEL_FORMAT = "eegemo-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Model file unreadable or of an incompatible version."""


@dataclass
class LabeledSet:
    """Training matrix with one-hot targets."""

    X: np.ndarray
    T: np.ndarray
    classes: tuple[int, ...]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.T = np.asarray(self.T, dtype=np.float64)
        if self.X.ndim != 2 or self.T.ndim != 2:
            raise ValueError("X and T must be 2-D")
        if self.X.shape[0] != self.T.shape[0]:
            raise ValueError("X and T row counts differ")
        if len(self.classes) < 2:
            raise ValueError("need at least 2 classes")
        if self.T.shape[1] != len(self.classes):
            raise ValueError("T column count != number of classes")
        if not np.allclose(self.T.sum(axis=1), 1.0):
            raise ValueError("target rows must sum to 1 (one-hot)")

    @classmethod
    def from_labels(cls, X, y, classes=None) -> "LabeledSet":
        y = np.asarray(y)
        if classes is None:
            classes = tuple(int(c) for c in np.unique(y))
        lookup = {c: i for i, c in enumerate(classes)}
        T = np.zeros((len(y), len(classes)))
        for i, label in enumerate(y):
            if int(label) not in lookup:
                raise ValueError(f"label {label} not in classes {classes}")
            T[i, lookup[int(label)]] = 1.0
        return cls(X=np.asarray(X), T=T, classes=tuple(classes))

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.classes)[np.argmax(self.T, axis=1)]


def class_adjacency(y: np.ndarray) -> np.ndarray:
    """Block adjacency: W_ij = 1/N_t when i and j share class t, else 0."""
    y = np.asarray(y)
    n = len(y)
    W = np.zeros((n, n))
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        W[np.ix_(idx, idx)] = 1.0 / idx.size
    return W


def graph_laplacian(W: np.ndarray) -> np.ndarray:
    """L = D - W with D the diagonal of column sums."""
    return np.diag(W.sum(axis=0)) - W


# ------------------------------------------------------------------ GELM


@dataclass
class GelmModel:
    input_weights: np.ndarray   # (hidden, D)
    biases: np.ndarray          # (hidden,)
    output_weights: np.ndarray  # (hidden, classes)
    lambda1: float
    lambda2: float
    classes: tuple[int, ...]
    seed: int

    @property
    def n_features(self) -> int:
        return self.input_weights.shape[1]

    @property
    def hidden(self) -> int:
        return self.input_weights.shape[0]


def hidden_activations(input_weights, biases, X) -> np.ndarray:
    """Sigmoid hidden layer, one column per sample (hidden x N)."""
    X = np.asarray(X, dtype=np.float64)
    return expit(input_weights @ X.T + biases[:, None])


def gelm_train(
    ts: LabeledSet,
    lambda1: float = 1.0,
    lambda2: float = 1.0,
    hidden: int | None = None,
    seed: int = 0,
) -> GelmModel:
    """Closed-form fit; hidden defaults to 10x the input dimension."""
    if lambda2 <= 0:
        raise ValueError(f"lambda2 must be > 0, got {lambda2}")
    if lambda1 < 0:
        raise ValueError(f"lambda1 must be >= 0, got {lambda1}")
    n, d = ts.X.shape
    if n < len(ts.classes):
        raise ValueError(f"{n} samples for {len(ts.classes)} classes")
    counts = ts.T.sum(axis=0)
    empty = [c for c, k in zip(ts.classes, counts) if k == 0]
    if empty:
        raise ValueError(f"classes with no training samples: {empty}")
    hidden = 10 * d if hidden is None else int(hidden)

    rng = np.random.default_rng(seed)
    W_in = rng.uniform(-1.0, 1.0, size=(hidden, d))
    b = rng.uniform(-1.0, 1.0, size=hidden)
    H = hidden_activations(W_in, b, ts.X)

    L = graph_laplacian(class_adjacency(ts.y))
    G = H @ H.T + lambda2 * np.eye(hidden)
    if lambda1 > 0:
        G += lambda1 * (H @ L) @ H.T
    try:
        cho = _linalg.cho_factor(G, check_finite=False)
        beta = _linalg.cho_solve(cho, H @ ts.T, check_finite=False)
    except _linalg.LinAlgError as e:
        raise RuntimeError(f"output-weight solve failed: {e}") from e
    return GelmModel(
        input_weights=W_in, biases=b, output_weights=beta,
        lambda1=lambda1, lambda2=lambda2, classes=ts.classes, seed=seed,
    )


def gelm_scores(model: GelmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise ValueError(f"{X.shape[1]} columns, model expects {model.n_features}")
    H = hidden_activations(model.input_weights, model.biases, X)
    return H.T @ model.output_weights


def gelm_predict(model: GelmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Argmax decoding; ties resolve to the lowest class index."""
    scores = gelm_scores(model, X)
    ids = np.argmax(scores, axis=1)
    return np.asarray(model.classes)[ids], scores


def gelm_objective(H, beta, L, T, lambda1, lambda2) -> float:
    """Value of the regularized least-squares objective at ``beta``."""
    resid = H.T @ beta - T
    out = H.T @ beta
    return float(
        np.sum(resid * resid)
        + lambda1 * np.trace(out.T @ L @ out)
        + lambda2 * np.sum(beta * beta)
    )


# ------------------------------------------------------------------- KNN


@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    classes: tuple[int, ...]


def knn_train(X, y, k: int = 5) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("empty training set")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return KnnModel(X=X, y=y, k=k, classes=tuple(int(c) for c in np.unique(y)))


def knn_predict(model: KnnModel, X) -> np.ndarray:
    """Majority vote among the k nearest by Euclidean distance.

    Distance ties resolve by training-sample index, vote ties by the
    smallest class index.
    """
    X = np.asarray(X, dtype=np.float64)
    if model.k > len(model.X):
        raise ValueError(f"k={model.k} exceeds {len(model.X)} training samples")
    if X.shape[1] != model.X.shape[1]:
        raise ValueError(f"{X.shape[1]} columns, model expects {model.X.shape[1]}")
    dist = cdist(X, model.X)
    class_of = np.searchsorted(np.asarray(model.classes), model.y)
    out = np.empty(len(X), dtype=np.int64)
    for i in range(len(X)):
        nearest = np.argsort(dist[i], kind="stable")[: model.k]
        votes = np.bincount(class_of[nearest], minlength=len(model.classes))
        out[i] = model.classes[int(np.argmax(votes))]
    return out


# ------------------------------------------- multinomial logistic regression


@dataclass
class LogregModel:
    weights: np.ndarray       # (D + 1, classes); last row is the bias
    classes: tuple[int, ...]
    l2: float
    converged: bool
    grad_norm: float
    n_iter: int


def _augment(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def logreg_nll_grad(w_flat, Xb, Y, l2) -> tuple[float, np.ndarray]:
    """Penalized negative log-likelihood and its gradient.

    All weights, bias included, carry the quadratic penalty, which makes
    the objective strictly convex and the optimum unique.
    """
    d1, m = Xb.shape[1], Y.shape[1]
    W = w_flat.reshape(d1, m)
    Z = Xb @ W
    lse = logsumexp(Z, axis=1)
    nll = float(-np.sum(Z[Y > 0]) + np.sum(lse) + 0.5 * l2 * np.sum(W * W))
    P = np.exp(Z - lse[:, None])
    grad = Xb.T @ (P - Y) + l2 * W
    return nll, grad.ravel()


def logreg_train(
    X, y, l2: float = 1.0, max_iter: int = 500, tol: float = 1e-6
) -> LogregModel:
    """Maximum penalized likelihood via L-BFGS from a zero start.

    Converged means the max-abs gradient component fell below ``tol``;
    otherwise a warning reports the final gradient norm.
    """
    ts = LabeledSet.from_labels(X, y)
    if ts.X.shape[0] < len(ts.classes):
        raise ValueError("fewer samples than classes")
    Xb = _augment(ts.X)
    d1, m = Xb.shape[1], len(ts.classes)
    res = _optimize.minimize(
        logreg_nll_grad,
        np.zeros(d1 * m),
        args=(Xb, ts.T, l2),
        method="L-BFGS-B",
        jac=True,
        options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15},
    )
    _, grad = logreg_nll_grad(res.x, Xb, ts.T, l2)
    grad_norm = float(np.max(np.abs(grad)))
    converged = grad_norm < tol
    if not converged:
        warnings.warn(
            f"logistic regression did not converge: gradient norm {grad_norm:.3e}"
        )
    return LogregModel(
        weights=res.x.reshape(d1, m),
        classes=ts.classes,
        l2=l2,
        converged=converged,
        grad_norm=grad_norm,
        n_iter=int(res.nit),
    )


def logreg_predict(model: LogregModel, X) -> np.ndarray:
    Xb = _augment(X)
    if Xb.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"{Xb.shape[1] - 1} columns, model expects {model.weights.shape[0] - 1}"
        )
    ids = np.argmax(Xb @ model.weights, axis=1)
    return np.asarray(model.classes)[ids]


# ------------------------------------------------------------ persistence


def save_model(model, base: str | Path) -> Path:
    base = Path(base)
    if isinstance(model, GelmModel):
        kind = "gelm"
        arrays = {
            "input_weights": model.input_weights,
            "biases": model.biases,
            "output_weights": model.output_weights,
        }
        hyper = {"lambda1": model.lambda1, "lambda2": model.lambda2,
                 "seed": model.seed}
    elif isinstance(model, KnnModel):
        kind = "knn"
        arrays = {"train_x": model.X, "train_y": model.y}
        hyper = {"k": model.k}
    elif isinstance(model, LogregModel):
        kind = "logreg"
        arrays = {"weights": model.weights}
        hyper = {"l2": model.l2, "converged": bool(model.converged),
                 "grad_norm": model.grad_norm, "n_iter": model.n_iter}
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "model_type": kind,
        "classes": list(model.classes),
        "hyperparams": hyper,
        "weights_file": base.name + ".npz",
    }
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    np.savez(base.with_suffix(".npz"), **arrays)
    return base.with_suffix(".json")


def load_model(base: str | Path):
    base = Path(base)
    if base.suffix in (".json", ".npz"):
        base = base.with_suffix("")
    try:
        with open(base.with_suffix(".json")) as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{base}.json: invalid JSON ({e})") from e
    if meta.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{base}.json: not a model file")
    if meta.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"{base}.json: version {meta.get('version')!r} unsupported "
            f"(expected {MODEL_VERSION})"
        )
    arrays = np.load(base.parent / meta["weights_file"])
    classes = tuple(int(c) for c in meta["classes"])
    hyper = meta["hyperparams"]
    kind = meta["model_type"]
    if kind == "gelm":
        return GelmModel(
            input_weights=arrays["input_weights"],
            biases=arrays["biases"],
            output_weights=arrays["output_weights"],
            lambda1=float(hyper["lambda1"]),
            lambda2=float(hyper["lambda2"]),
            classes=classes,
            seed=int(hyper["seed"]),
        )
    if kind == "knn":
        return KnnModel(
            X=arrays["train_x"], y=arrays["train_y"],
            k=int(hyper["k"]), classes=classes,
        )
    if kind == "logreg":
        return LogregModel(
            weights=arrays["weights"], classes=classes, l2=float(hyper["l2"]),
            converged=bool(hyper["converged"]),
            grad_norm=float(hyper["grad_norm"]), n_iter=int(hyper["n_iter"]),
        )
    raise ModelFormatError(f"{base}.json: unknown model type {kind!r}")
