"""Linear baselines over TF-IDF features: multinomial logistic regression and
one-vs-rest linear SVM, both trained by per-example SGD.

L2 shrinkage is applied as the proximal step ``W <- W / (1 + lr * l2)`` after
every example, which is stable for any regularisation strength.  It is kept
lazily as a scalar multiplier so an update only touches the columns present
in the current (sparse) example.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .features import SparseVec, to_csr
from .numerics import Rng, softmax

LOGISTIC = "logistic"
SVM_HINGE = "svm_hinge"


class BaselineError(RuntimeError):
    pass


@dataclass
class LinearModel:
    kind: str
    weights: np.ndarray          # (K, dim)
    bias: np.ndarray             # (K,)
    l2_strength: float
    meta: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def decision(self, X) -> np.ndarray:
        X = _as_csr(X, self.weights.shape[1])
        return np.asarray(X @ self.weights.T) + self.bias

    def scores(self, X) -> np.ndarray:
        s = self.decision(X)
        return softmax(s, axis=1) if self.kind == LOGISTIC else s


def _as_csr(X, dim=None) -> sp.csr_matrix:
    if isinstance(X, SparseVec):
        return to_csr([X], X.dim)
    if isinstance(X, (list, tuple)):
        return to_csr(list(X), dim)
    return sp.csr_matrix(X)


def _sgd(kind: str, X, y, K: int, epochs: int, learning_rate: float,
         l2_strength: float, seed: int):
    X = _as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    n, dim = X.shape
    if n == 0:
        raise BaselineError("empty training set")
    if y.size and (y.min() < 0 or y.max() >= K):
        raise BaselineError(f"labels must lie in [0, {K})")
    W = np.zeros((K, dim))
    b = np.zeros(K)
    scale = 1.0
    shrink = 1.0 / (1.0 + learning_rate * l2_strength)
    rng = Rng(seed)
    targets = np.where(np.arange(K)[None, :] == y[:, None], 1.0, -1.0)
    losses = []
    for epoch in range(epochs):
        for i in rng.permutation(n):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            cols, vals = X.indices[lo:hi], X.data[lo:hi]
            s = scale * (W[:, cols] @ vals) + b
            if kind == LOGISTIC:
                g = softmax(s)
                g[y[i]] -= 1.0
            else:
                g = np.where(targets[i] * s < 1.0, -targets[i], 0.0)
            scale *= shrink
            if scale < 1e-100:
                W *= scale
                scale = 1.0
            W[:, cols] -= (learning_rate / scale) * np.outer(g, vals)
            b -= learning_rate * g
        loss = objective(kind, scale * W, b, X, y, l2_strength)
        if not math.isfinite(loss):
            raise BaselineError(f"non-finite training loss at epoch {epoch + 1}")
        losses.append(loss)
    return scale * W, b, losses


def objective(kind: str, W, b, X, y, l2_strength: float) -> float:
    """Mean data loss plus ``l2/2 * ||W||^2``."""
    S = np.asarray(_as_csr(X) @ W.T) + b
    y = np.asarray(y)
    if kind == LOGISTIC:
        S = S - S.max(axis=1, keepdims=True)
        data = -(S[np.arange(len(y)), y] - np.log(np.exp(S).sum(axis=1)))
    else:
        t = np.where(np.arange(W.shape[0])[None, :] == y[:, None], 1.0, -1.0)
        data = np.maximum(0.0, 1.0 - t * S).sum(axis=1)
    return float(data.mean() + 0.5 * l2_strength * np.sum(W * W))


def train_logreg(X, y, K: int, epochs: int = 100, learning_rate: float = 0.1,
                 l2_strength: float = 1e-4, seed: int = 0) -> LinearModel:
    W, b, losses = _sgd(LOGISTIC, X, y, K, epochs, learning_rate, l2_strength, seed)
    return LinearModel(LOGISTIC, W, b, l2_strength,
                       {"epochs": epochs, "learning_rate": learning_rate, "seed": seed, "losses": losses})


def train_linear_svm(X, y, K: int, epochs: int = 100, learning_rate: float = 0.1,
                     l2_strength: float = 1e-4, seed: int = 0) -> LinearModel:
    """K one-vs-rest hinge classifiers, trained jointly example by example."""
    W, b, losses = _sgd(SVM_HINGE, X, y, K, epochs, learning_rate, l2_strength, seed)
    return LinearModel(SVM_HINGE, W, b, l2_strength,
                       {"epochs": epochs, "learning_rate": learning_rate, "seed": seed, "losses": losses})


def predict_linear(model: LinearModel, x: SparseVec):
    """``(label, scores)``: probabilities for logistic, raw margins for SVM."""
    s = model.scores(x)[0]
    return int(np.argmax(s)), s


def predict_linear_batch(model: LinearModel, X):
    s = model.scores(X)
    return np.argmax(s, axis=1), s
