"""Objectives, ADADELTA, dropout, the minibatch training loop with early
stopping, and the two domain-adaptation procedures."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cnn import CnnParams, EncodedSet, backward, forward, predict_batch
from .numerics import Rng

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 25
    batch_size: int = 64
    dropout_rate: float = 0.5
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


def cross_entropy(probs, gold: int) -> float:
    return -math.log(max(float(probs[gold]), PROB_FLOOR))


def adaptation_loss(probs_a, probs_i, gold: int, lam: float) -> float:
    """Gold log-loss of the adapted model, mixed with the same log-loss
    weighted by the reference model's confidence in the gold class."""
    log_pa = math.log(max(float(probs_a[gold]), PROB_FLOOR))
    return -(lam * log_pa + (1.0 - lam) * float(probs_i[gold]) * log_pa)


def adaptation_weights(probs_i: np.ndarray, gold: np.ndarray, lam: float) -> np.ndarray:
    """Per-example factor ``lam + (1 - lam) * P_i(gold)`` multiplying the
    cross-entropy of the adapted model."""
    return lam + (1.0 - lam) * probs_i[np.arange(len(gold)), gold]


@dataclass
class AdadeltaState:
    sq_grad: dict[str, np.ndarray]
    sq_delta: dict[str, np.ndarray]
    rho: float = 0.95
    eps: float = 1e-6

    @classmethod
    def zeros_like(cls, params: CnnParams, rho: float = 0.95, eps: float = 1e-6) -> "AdadeltaState":
        t = params.tensors()
        return cls({n: np.zeros_like(a) for n, a in t.items()},
                   {n: np.zeros_like(a) for n, a in t.items()}, rho, eps)


def adadelta_update(x, g, eg2, edx2, rho: float = 0.95, eps: float = 1e-6):
    """One ADADELTA step on arrays; returns ``(x, eg2, edx2)`` as new arrays."""
    eg2 = rho * eg2 + (1.0 - rho) * g * g
    delta = -(np.sqrt(edx2 + eps) / np.sqrt(eg2 + eps)) * g
    edx2 = rho * edx2 + (1.0 - rho) * delta * delta
    return x + delta, eg2, edx2


def adadelta_step(params: CnnParams, grads: CnnParams, state: AdadeltaState,
                  skip: tuple[str, ...] = ()):
    """Apply ADADELTA to every tensor not listed in ``skip``.

    Pure: the inputs are left untouched.
    """
    new_t, eg, ed = {}, dict(state.sq_grad), dict(state.sq_delta)
    for name, x in params.tensors().items():
        if name in skip:
            new_t[name] = x
            continue
        new_t[name], eg[name], ed[name] = adadelta_update(
            x, getattr(grads, name), state.sq_grad[name], state.sq_delta[name], state.rho, state.eps)
    return params.with_tensors(new_t), AdadeltaState(eg, ed, state.rho, state.eps)


def make_dropout_mask(rng: Rng, size, rate: float) -> np.ndarray:
    """Inverted dropout mask: 0 with probability ``rate``, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    keep = rng.random(size) >= rate
    return keep / (1.0 - rate)


def accuracy_on(params: CnnParams, data: EncodedSet, batch_size: int = 512) -> float:
    correct = 0
    for start in range(0, len(data), batch_size):
        sl = slice(start, start + batch_size)
        labels, _ = predict_batch(params, data.ids[sl], None if data.extra is None else data.extra[sl])
        correct += int((labels == data.labels[sl]).sum())
    return correct / len(data)


def predict_probs(params: CnnParams, data: EncodedSet, batch_size: int = 512) -> np.ndarray:
    out = []
    for start in range(0, len(data), batch_size):
        sl = slice(start, start + batch_size)
        probs, _ = forward(params, data.ids[sl], None if data.extra is None else data.extra[sl])
        out.append(probs)
    return np.concatenate(out) if out else np.zeros((0, params.config.num_classes))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float
    best_so_far: float


@dataclass
class TrainResult:
    params: CnnParams
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def write_history(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_accuracy", "best_so_far"])
            for r in self.history:
                w.writerow([r.epoch, f"{r.train_loss:.10g}", f"{r.val_accuracy:.10g}", f"{r.best_so_far:.10g}"])


def train(params: CnnParams, config: TrainConfig, train_data: EncodedSet,
          val_data: EncodedSet, example_weights: np.ndarray | None = None) -> TrainResult:
    """Minibatch ADADELTA with dropout on the hidden layer and early stopping
    on validation accuracy.

    ``example_weights`` scales each example's cross-entropy (all ones gives
    plain training).  The returned params are the snapshot from the epoch
    with the highest validation accuracy (first one on ties).
    """
    if len(train_data) == 0 or len(val_data) == 0:
        raise TrainingError("training and validation data must be non-empty")
    n = len(train_data)
    weights = np.ones(n) if example_weights is None else np.asarray(example_weights, dtype=np.float64)
    skip = () if params.config.fine_tune else ("embeddings",)
    rng = Rng(config.seed)
    shuffle_rng, dropout_rng = rng.spawn(11), rng.spawn(12)
    state = AdadeltaState.zeros_like(params)
    best = params.copy()
    best_acc, best_epoch, bad = -math.inf, 0, 0
    history: list[EpochRecord] = []
    H = params.config.hidden

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            gold = train_data.labels[idx]
            extra = None if train_data.extra is None else train_data.extra[idx]
            mask = None
            if config.dropout_rate > 0:
                mask = make_dropout_mask(dropout_rng, (len(idx), H), config.dropout_rate)
            probs, trace = forward(params, train_data.ids[idx], extra, mask)
            p_gold = np.maximum(probs[np.arange(len(idx)), gold], 1e-12)
            loss = float(-(weights[idx] * np.log(p_gold)).sum())
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b + 1}")
            total += loss
            grads = backward(params, trace, gold, weights[idx])
            params, state = adadelta_step(params, grads, state, skip)
        val_acc = accuracy_on(params, val_data)
        if val_acc > best_acc:
            best_acc, best_epoch, bad = val_acc, epoch, 0
            best = params.copy()
        else:
            bad += 1
        history.append(EpochRecord(epoch, total / n, val_acc, best_acc))
        log.info("epoch %d loss %.4f val_acc %.4f", epoch, total / n, val_acc)
        if bad >= config.patience:
            break
    return TrainResult(best, history, best_epoch)


def select_instances(event_params: CnnParams, out_data: EncodedSet) -> np.ndarray:
    """Indices (in order) of out-of-event examples the event model gets right."""
    if len(out_data) == 0:
        return np.zeros(0, dtype=np.int64)
    labels = np.concatenate([
        predict_batch(event_params, out_data.ids[s:s + 512],
                      None if out_data.extra is None else out_data.extra[s:s + 512])[0]
        for s in range(0, len(out_data), 512)
    ])
    return np.flatnonzero(labels == out_data.labels)


def fit_adapted(event_params: CnnParams, config: TrainConfig, train_data: EncodedSet,
                val_data: EncodedSet, lam: float = 0.5) -> TrainResult:
    """Train an adapted model starting from the frozen event model.

    The event model's gold-class probabilities (dropout off) are computed once
    and turn the objective into per-example weighted cross-entropy.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    probs_i = predict_probs(event_params, train_data)
    weights = adaptation_weights(probs_i, train_data.labels, lam)
    return train(event_params.copy(), config, train_data, val_data, weights)
