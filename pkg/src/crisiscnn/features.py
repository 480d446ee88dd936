"""TF-IDF n-gram features and chi-squared feature selection.

TF is the raw in-document count, ``idf = ln((1 + N) / (1 + df)) + 1`` and each
document vector is L2-normalised.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


def extract_ngrams(tokens: Sequence[str], max_n: int = 3) -> Counter:
    grams: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            grams[" ".join(tokens[i:i + n])] += 1
    return grams


@dataclass
class SparseVec:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.size and (np.any(np.diff(self.indices) <= 0)
                                  or self.indices[0] < 0 or self.indices[-1] >= self.dim):
            raise ValueError("sparse indices must be strictly increasing and inside the dimension")

    def __len__(self) -> int:
        return self.indices.size

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))


@dataclass
class NgramVocab:
    ngrams: list[str]
    df: np.ndarray
    n_docs: int
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.df = np.asarray(self.df, dtype=np.int64)
        self.index = {g: i for i, g in enumerate(self.ngrams)}

    @property
    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.df)) + 1.0

    def __len__(self) -> int:
        return len(self.ngrams)

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("ngram\tindex\tdf\tidf\n")
            for i, (g, d, v) in enumerate(zip(self.ngrams, self.df, self.idf)):
                fh.write(f"{g}\t{i}\t{d}\t{v:.17g}\n")

    def to_dict(self) -> dict:
        return {"ngrams": self.ngrams, "df": self.df.tolist(), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d: dict) -> "NgramVocab":
        return cls(list(d["ngrams"]), d["df"], int(d["n_docs"]))


def fit_tfidf(docs: Iterable[Sequence[str]]) -> NgramVocab:
    """Collect every training n-gram with its document frequency.

    Columns are ordered by first appearance, which keeps the vocabulary
    deterministic for a given document order.
    """
    df: Counter = Counter()
    order: dict[str, None] = {}
    n_docs = 0
    for tokens in docs:
        n_docs += 1
        grams = extract_ngrams(tokens)
        for g in grams:
            order.setdefault(g, None)
        df.update(grams.keys())
    if n_docs == 0:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    ngrams = list(order)
    return NgramVocab(ngrams, [df[g] for g in ngrams], n_docs)


def transform_tfidf(vocab: NgramVocab, tokens: Sequence[str]) -> SparseVec:
    counts = extract_ngrams(tokens)
    pairs = sorted((vocab.index[g], c) for g, c in counts.items() if g in vocab.index)
    if not pairs:
        return SparseVec([], [], len(vocab))
    idx = np.array([i for i, _ in pairs], dtype=np.int64)
    vals = np.array([c for _, c in pairs], dtype=np.float64) * vocab.idf[idx]
    return SparseVec(idx, vals / np.linalg.norm(vals), len(vocab))


def to_csr(vectors: Sequence[SparseVec], dim: int | None = None) -> sp.csr_matrix:
    dim = dim if dim is not None else (vectors[0].dim if vectors else 0)
    indptr = np.cumsum([0] + [len(v) for v in vectors])
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def chi2_scores(X, y: Sequence[int]) -> np.ndarray:
    """Chi-squared statistic of every column against the class labels.

    Observed mass of feature j in class c is the column sum over that class;
    the expected mass is the column total times the class prior.  Terms with
    zero expectation are skipped.
    """
    X = to_csr(X) if isinstance(X, (list, tuple)) else sp.csr_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if X.nnz and X.data.min() < 0:
        raise ValueError("chi-squared selection needs non-negative feature values")
    classes = np.unique(y)
    onehot = (y[:, None] == classes[None, :]).astype(np.float64)       # (n, C)
    observed = np.asarray((X.T @ onehot)).T                             # (C, d)
    prior = onehot.sum(axis=0) / len(y)
    expected = prior[:, None] * np.asarray(X.sum(axis=0)).ravel()[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    return terms.sum(axis=0)


def chi2_select(X, y: Sequence[int], k: int) -> np.ndarray:
    """Sorted indices of the ``k`` highest-scoring columns (ties: lower index)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = chi2_scores(X, y)
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


@dataclass
class TfidfFeaturizer:
    """Fixed TF-IDF view of a tweet, optionally restricted to selected columns.

    Used both for the linear baselines (sparse) and for the extra dense
    channel of the MLP-CNN.
    """

    vocab: NgramVocab
    selected: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.vocab) if self.selected is None else int(self.selected.size)

    def sparse(self, tokens: Sequence[str]) -> SparseVec:
        v = transform_tfidf(self.vocab, tokens)
        if self.selected is None:
            return v
        pos = np.searchsorted(self.selected, v.indices)
        pos_c = np.minimum(pos, max(self.selected.size - 1, 0))
        keep = (pos < self.selected.size) & (self.selected[pos_c] == v.indices)
        return SparseVec(pos[keep], v.values[keep], self.dim)

    def sparse_batch(self, docs: Sequence[Sequence[str]]) -> sp.csr_matrix:
        return to_csr([self.sparse(d) for d in docs], self.dim)

    def dense_batch(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        return self.sparse_batch(docs).toarray()

    def to_dict(self) -> dict:
        return {"vocab": self.vocab.to_dict(),
                "selected": None if self.selected is None else self.selected.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfFeaturizer":
        sel = d.get("selected")
        return cls(NgramVocab.from_dict(d["vocab"]), None if sel is None else np.asarray(sel, dtype=np.int64))


def fit_featurizer(docs: Sequence[Sequence[str]], labels: Sequence[int] | None = None,
                   chi2_k: int | None = None) -> TfidfFeaturizer:
    vocab = fit_tfidf(docs)
    if chi2_k is None:
        return TfidfFeaturizer(vocab)
    if labels is None:
        raise ValueError("chi-squared selection needs labels")
    X = to_csr([transform_tfidf(vocab, d) for d in docs], len(vocab))
    return TfidfFeaturizer(vocab, chi2_select(X, labels, chi2_k))

