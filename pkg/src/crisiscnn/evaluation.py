"""Classification metrics and report files.

Confusion matrices have actual classes on rows and predictions on columns.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import LabelSchema


def confusion_matrix(gold: Sequence[int], pred: Sequence[int], K: int) -> np.ndarray:
    gold = np.asarray(gold, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if gold.shape != pred.shape:
        raise ValueError("gold and predicted labels differ in length")
    if gold.size and (max(gold.max(), pred.max()) >= K or min(gold.min(), pred.min()) < 0):
        raise ValueError(f"label outside [0, {K})")
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (gold, pred), 1)
    return cm


def accuracy(confusion: np.ndarray) -> float:
    total = confusion.sum()
    if confusion.size == 0 or total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return float(np.trace(confusion) / total)


def per_class_f1(confusion: np.ndarray) -> np.ndarray:
    diag = np.diag(confusion).astype(np.float64)
    col = confusion.sum(axis=0)
    row = confusion.sum(axis=1)
    f1 = np.zeros(len(diag))
    for c in range(len(diag)):
        if col[c] == 0 or row[c] == 0 or diag[c] == 0:
            continue
        p, r = diag[c] / col[c], diag[c] / row[c]
        f1[c] = 2 * p * r / (p + r)
    return f1


def macro_f1(confusion: np.ndarray) -> float:
    if confusion.size == 0:
        raise ValueError("macro-F1 of an empty confusion matrix")
    return float(per_class_f1(confusion).mean())


def roc_auc(scores: Sequence[float], gold: Sequence[int]) -> float:
    """Mann-Whitney AUC; ``gold`` marks positives with 1.  Ties count half."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(gold).astype(bool)
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    ranks = rankdata(scores)  # average ranks, so ties contribute 1/2
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def pr_curve(scores: Sequence[float], positive: Sequence[bool]):
    """Precision/recall at every distinct threshold, from the highest down.

    Returns ``(points, average_precision)`` with points as ``(recall,
    precision)`` pairs and AP the recall-weighted sum of precisions.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive).astype(bool)
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise ValueError("precision-recall curve needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], positive[order]
    ends = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]   # last index of each tie group
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    precision = tp / (tp + fp)
    recall = tp / n_pos
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return list(zip(recall.tolist(), precision.tolist())), ap


def class_distribution(labels: Sequence[int], schema: LabelSchema) -> dict[str, dict]:
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=schema.K)[: schema.K]
    total = int(counts.sum())
    return {c: {"count": int(n), "fraction": (n / total) if total else 0.0}
            for c, n in zip(schema.classes, counts)}


@dataclass
class EvalReport:
    schema: LabelSchema
    confusion: np.ndarray
    accuracy: float
    macro_f1: float
    auc: float | None
    pr_points: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    average_precision: dict[str, float] = field(default_factory=dict)
    distribution: dict[str, dict] = field(default_factory=dict)

    def metrics(self) -> dict:
        out = {"n": int(self.confusion.sum()), "accuracy": self.accuracy, "macro_f1": self.macro_f1,
               "average_precision": self.average_precision}
        if self.auc is not None:
            out["auc"] = self.auc
        return out

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(json.dumps(self.metrics(), indent=2, sort_keys=True) + "\n")
        with open(out / "confusion.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["actual\\predicted", *self.schema.classes])
            for name, row in zip(self.schema.classes, self.confusion):
                w.writerow([name, *row.tolist()])
        with open(out / "pr_curves.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["class", "recall", "precision"])
            for name, pts in self.pr_points.items():
                for r, p in pts:
                    w.writerow([name, f"{r:.10g}", f"{p:.10g}"])
        with open(out / "class_distribution.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["class", "count", "fraction"])
            for name, d in self.distribution.items():
                w.writerow([name, d["count"], f"{d['fraction']:.10g}"])


def evaluate(gold: Sequence[int], probs: np.ndarray, schema: LabelSchema,
             positive_class: int = 0) -> EvalReport:
    """Full report from gold labels and per-class scores.

    For two-class schemas AUC is computed with ``positive_class`` as the
    positive label (class 0, Informative, for merged crisis data).
    """
    gold = np.asarray(gold, dtype=np.int64)
    if gold.size == 0:
        raise ValueError("cannot evaluate an empty data set")
    probs = np.asarray(probs, dtype=np.float64)
    pred = np.argmax(probs, axis=1)
    cm = confusion_matrix(gold, pred, schema.K)
    auc = None
    if schema.K == 2:
        auc = roc_auc(probs[:, positive_class], gold == positive_class)
    points, aps = {}, {}
    for c, name in enumerate(schema.classes):
        if not np.any(gold == c):
            continue
        points[name], aps[name] = pr_curve(probs[:, c], gold == c)
    return EvalReport(schema, cm, accuracy(cm), macro_f1(cm), auc, points, aps,
                      class_distribution(gold, schema))
