"""Convolutional tweet classifier.

Pipeline for one tweet of ``t_max`` token ids::

    x  = E[ids]                               (t_max, D)
    h  = relu(wide_conv(x, U) + b)            (F, N),  F = t_max + window - 1
    m  = maxpool_p(h), flattened filter-major (N * ceil(F / p),)
    m' = [m; y]                               extra fixed features, optional
    z  = relu(V m' + b_h)                     (H,)     dropout applies here
    binary:      p0 = sigmoid(w . z + b),  probs = [p0, 1 - p0]
    multi-class: probs = softmax(W z + b_k)

All functions accept a single example (ids of shape ``(t_max,)``) or a batch
(``(B, t_max)``); batch gradients are sums over examples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import PAD_ID, LabeledExample, Vocabulary
from .embeddings import EmbeddingTable, encode
from .numerics import Rng, relu, sigmoid, softmax

PARAM_NAMES = ("embeddings", "filters", "filter_bias", "dense_w", "dense_b", "out_w", "out_b")


@dataclass(frozen=True)
class CnnConfig:
    t_max: int = 30
    embed_dim: int = 300
    num_filters: int = 100
    window: int = 3
    pool: int = 2
    hidden: int = 100
    num_classes: int = 2
    extra_dim: int = 0
    fine_tune: bool = True

    def __post_init__(self):
        for name in ("t_max", "embed_dim", "num_filters", "window", "pool", "hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.window > self.t_max + 1:
            raise ValueError("window must not exceed t_max + 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.extra_dim < 0:
            raise ValueError("extra_dim must be >= 0")

    @property
    def feature_len(self) -> int:
        return self.t_max + self.window - 1

    @property
    def pooled_len(self) -> int:
        return math.ceil(self.feature_len / self.pool)

    @property
    def dense_in(self) -> int:
        return self.num_filters * self.pooled_len + self.extra_dim

    @property
    def out_units(self) -> int:
        return 1 if self.num_classes == 2 else self.num_classes

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class CnnParams:
    config: CnnConfig
    embeddings: np.ndarray
    filters: np.ndarray
    filter_bias: np.ndarray
    dense_w: np.ndarray
    dense_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def with_tensors(self, tensors: dict[str, np.ndarray]) -> "CnnParams":
        return replace(self, **tensors)

    def copy(self) -> "CnnParams":
        return self.with_tensors({n: a.copy() for n, a in self.tensors().items()})

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        c = self.config
        return {
            "embeddings": (self.embeddings.shape[0], c.embed_dim),
            "filters": (c.num_filters, c.window * c.embed_dim),
            "filter_bias": (c.num_filters,),
            "dense_w": (c.hidden, c.dense_in),
            "dense_b": (c.hidden,),
            "out_w": (c.out_units, c.hidden),
            "out_b": (c.out_units,),
        }

    def check(self) -> None:
        for name, shape in self.expected_shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


def _glorot(rng: Rng, fan_out: int, fan_in: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_out, fan_in))


def init_params(config: CnnConfig, embeddings: EmbeddingTable | np.ndarray,
                seed: int = 0) -> CnnParams:
    """Glorot-uniform weights, zero biases, embeddings copied from the table."""
    emb = embeddings.matrix if isinstance(embeddings, EmbeddingTable) else embeddings
    if emb.shape[1] != config.embed_dim:
        raise ValueError(f"embedding dim {emb.shape[1]} != config.embed_dim {config.embed_dim}")
    rng = Rng(seed).spawn(1)
    c = config
    params = CnnParams(
        config=c,
        embeddings=np.array(emb, dtype=np.float64),
        filters=_glorot(rng, c.num_filters, c.window * c.embed_dim),
        filter_bias=np.zeros(c.num_filters),
        dense_w=_glorot(rng, c.hidden, c.dense_in),
        dense_b=np.zeros(c.hidden),
        out_w=_glorot(rng, c.out_units, c.hidden),
        out_b=np.zeros(c.out_units),
    )
    params.check()
    return params


@dataclass
class ForwardTrace:
    ids: np.ndarray
    x: np.ndarray
    windows: np.ndarray
    pre: np.ndarray          # (B, F, N) convolution pre-activations
    h: np.ndarray            # (B, F, N) feature maps
    pool_arg: np.ndarray     # (B, P, N) argmax position inside each window
    m: np.ndarray            # (B, N * P)
    m_prime: np.ndarray      # (B, dense_in)
    a: np.ndarray            # (B, H) dense pre-activation
    z: np.ndarray            # (B, H) after ReLU, before dropout
    mask: np.ndarray | None
    logits: np.ndarray       # (B, out_units)
    probs: np.ndarray        # (B, K)
    single: bool = False


def conv_wide(x: np.ndarray, filters: np.ndarray, bias: np.ndarray, window: int):
    """Wide convolution over (B, T, D) inputs.

    Returns ``(windows, pre)`` where ``windows[b, t]`` is the concatenation of
    the ``window`` zero-padded input rows starting at wide position ``t`` and
    ``pre = windows @ filters.T + bias`` with shape (B, T + window - 1, N).
    """
    B, T, D = x.shape
    pad = np.zeros((B, window - 1, D))
    xp = np.concatenate([pad, x, pad], axis=1)
    win = sliding_window_view(xp, window, axis=1)          # (B, F, D, window)
    windows = np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(B, T + window - 1, window * D)
    return windows, windows @ filters.T + bias


def max_pool(h: np.ndarray, p: int):
    """Non-overlapping max-pool along axis 1 of (B, F, N) maps.

    The map is zero-padded on the right to a multiple of ``p``.  Returns the
    pooled (B, ceil(F/p), N) array and the in-window argmax positions.
    """
    B, F, N = h.shape
    P = math.ceil(F / p)
    padded = np.zeros((B, P * p, N))
    padded[:, :F] = h
    blocks = padded.reshape(B, P, p, N)
    arg = blocks.argmax(axis=2)
    return np.take_along_axis(blocks, arg[:, :, None, :], axis=2)[:, :, 0, :], arg


def max_pool_1d(h: Sequence[float], p: int) -> np.ndarray:
    """Pool one feature map given as a plain vector."""
    pooled, _ = max_pool(np.asarray(h, dtype=np.float64)[None, :, None], p)
    return pooled[0, :, 0]


def _as_batch(ids, extra):
    ids = np.asarray(ids, dtype=np.int64)
    single = ids.ndim == 1
    if single:
        ids = ids[None, :]
        if extra is not None:
            extra = np.asarray(extra, dtype=np.float64)[None, :]
    return ids, extra, single


def forward(params: CnnParams, ids, extra=None, mask=None):
    """Class probabilities and the cached intermediates for :func:`backward`.

    ``mask`` multiplies the hidden layer ``z`` (inverted-dropout scaling is the
    caller's job, see ``train.make_dropout_mask``).
    """
    c = params.config
    ids, extra, single = _as_batch(ids, extra)
    B, T = ids.shape
    if T != c.t_max:
        raise ValueError(f"expected {c.t_max} token ids per example, got {T}")
    if (extra is not None) != (c.extra_dim > 0):
        raise ValueError("extra features must be given exactly when extra_dim > 0")
    if extra is not None and extra.shape != (B, c.extra_dim):
        raise ValueError(f"extra features have shape {extra.shape}, expected {(B, c.extra_dim)}")

    x = params.embeddings[ids]
    windows, pre = conv_wide(x, params.filters, params.filter_bias, c.window)
    h = relu(pre)
    pooled, arg = max_pool(h, c.pool)
    m = pooled.transpose(0, 2, 1).reshape(B, -1)
    m_prime = m if extra is None else np.concatenate([m, extra], axis=1)
    a = m_prime @ params.dense_w.T + params.dense_b
    z = relu(a)
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64).reshape(B, c.hidden)
        zd = z * mask
    else:
        zd = z
    logits = zd @ params.out_w.T + params.out_b
    if c.num_classes == 2:
        p0 = sigmoid(logits[:, 0])
        probs = np.stack([p0, 1.0 - p0], axis=1)
    else:
        probs = softmax(logits, axis=1)
    trace = ForwardTrace(ids, x, windows, pre, h, arg, m, m_prime, a, z, mask, logits, probs, single)
    return (probs[0] if single else probs), trace


def output_grad(config: CnnConfig, probs: np.ndarray, gold: np.ndarray) -> np.ndarray:
    """d(-log probs[gold]) / d(logits) for each row."""
    B = probs.shape[0]
    if config.num_classes == 2:
        return (probs[:, 0] - (gold == 0))[:, None].astype(np.float64)
    g = probs.copy()
    g[np.arange(B), gold] -= 1.0
    return g


def backward(params: CnnParams, trace: ForwardTrace, gold, weight=1.0) -> CnnParams:
    """Gradient of ``sum_n weight_n * -log P(gold_n)`` for every tensor.

    A per-example ``weight`` expresses the regularised adaptation objective,
    which is the gold cross-entropy scaled by a constant per example.  The
    returned object has the shapes of ``params``; the embedding gradient is
    non-zero only on rows used by the batch and is always zero on ``<pad>``.
    """
    c = params.config
    B = trace.ids.shape[0]
    gold = np.atleast_1d(np.asarray(gold, dtype=np.int64))
    w = np.broadcast_to(np.asarray(weight, dtype=np.float64), (B,))

    dlogits = output_grad(c, trace.probs, gold) * w[:, None]
    zd = trace.z if trace.mask is None else trace.z * trace.mask
    g_out_w = dlogits.T @ zd
    g_out_b = dlogits.sum(axis=0)
    dz = dlogits @ params.out_w
    if trace.mask is not None:
        dz = dz * trace.mask
    da = dz * (trace.a > 0)
    g_dense_w = da.T @ trace.m_prime
    g_dense_b = da.sum(axis=0)
    dm_prime = da @ params.dense_w

    N, P, p, F = c.num_filters, c.pooled_len, c.pool, c.feature_len
    dpooled = dm_prime[:, : N * P].reshape(B, N, P).transpose(0, 2, 1)      # (B, P, N)
    dblocks = np.zeros((B, P, p, N))
    np.put_along_axis(dblocks, trace.pool_arg[:, :, None, :], dpooled[:, :, None, :], axis=2)
    dh = dblocks.reshape(B, P * p, N)[:, :F]
    dpre = dh * (trace.pre > 0)
    g_filters = dpre.reshape(B * F, N).T @ trace.windows.reshape(B * F, -1)
    g_filter_bias = dpre.sum(axis=(0, 1))

    g_emb = np.zeros_like(params.embeddings)
    if c.fine_tune:
        L, D, T = c.window, c.embed_dim, c.t_max
        dwin = (dpre @ params.filters).reshape(B, F, L, D)
        dxp = np.zeros((B, T + 2 * (L - 1), D))
        for j in range(L):
            dxp[:, j:j + F] += dwin[:, :, j]
        dx = dxp[:, L - 1:L - 1 + T]
        np.add.at(g_emb, trace.ids.reshape(-1), dx.reshape(-1, D))
        g_emb[PAD_ID] = 0.0

    return CnnParams(c, g_emb, g_filters, g_filter_bias, g_dense_w, g_dense_b, g_out_w, g_out_b)


def argmax_label(probs: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ``np.argmax`` already prefers the smaller index on ties."""
    return np.argmax(probs, axis=-1)


def predict_batch(params: CnnParams, ids, extra=None):
    probs, _ = forward(params, ids, extra)
    return argmax_label(probs), probs


def predict(params: CnnParams, vocab: Vocabulary, tokens: Sequence[str], extra=None):
    """Label index and probability vector for one token sequence."""
    probs, _ = forward(params, encode(tokens, vocab, params.config.t_max), extra)
    return int(argmax_label(probs)), probs


@dataclass
class EncodedSet:
    """Model-ready view of a list of examples."""

    ids: np.ndarray
    labels: np.ndarray
    extra: np.ndarray | None = None
    examples: list[LabeledExample] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return self.ids.shape[0]

    def subset(self, idx) -> "EncodedSet":
        idx = np.asarray(idx, dtype=np.int64)
        return EncodedSet(
            self.ids[idx], self.labels[idx],
            None if self.extra is None else self.extra[idx],
            [self.examples[i] for i in idx] if self.examples else [],
        )


def encode_examples(examples: Sequence[LabeledExample], vocab: Vocabulary, t_max: int,
                    featurizer=None) -> EncodedSet:
    """Encode token ids (and the fixed extra-feature channel, if any)."""
    ids = np.array([encode(ex.tokens, vocab, t_max) for ex in examples],
                   dtype=np.int64).reshape(len(examples), t_max)
    labels = np.array([ex.label for ex in examples], dtype=np.int64)
    extra = featurizer.dense_batch([ex.tokens for ex in examples]) if featurizer is not None else None
    return EncodedSet(ids, labels, extra, list(examples))
