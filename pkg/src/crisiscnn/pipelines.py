"""Experiment pipelines: model wrappers with container I/O, the five training
settings (event / out / event+out / regularised adaptation / instance
selection), evaluation, grid search and result tables."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import container
from .baselines import LinearModel, predict_linear_batch, train_linear_svm, train_logreg
from .cnn import CnnConfig, CnnParams, EncodedSet, PARAM_NAMES, encode_examples, init_params
from .config import ConfigError, RunConfig
from .corpus import (
    CorpusError, DatasetSplit, LabeledExample, LabelSchema, OUT_OF_EVENT, Vocabulary,
    build_vocab, load_tsv, merge_to_binary, write_tsv,
)
from .embeddings import load_pretrained, random_init
from .evaluation import EvalReport, evaluate
from .features import TfidfFeaturizer, fit_featurizer
from .train import TrainResult, fit_adapted, predict_probs, select_instances, train

log = logging.getLogger(__name__)

MODES = ("event", "out", "event+out", "adapt-reg", "adapt-select")
SPLIT_FILES = {"train": "train.tsv", "validation": "dev.tsv", "test": "test.tsv"}


class PipelineError(RuntimeError):
    pass


class SchemaMismatch(PipelineError):
    pass


# ---------------------------------------------------------------- models

@dataclass
class CnnModel:
    kind: str                      # "cnn" or "mlp-cnn"
    params: CnnParams
    vocab: Vocabulary
    schema: LabelSchema
    featurizer: TfidfFeaturizer | None = None
    meta: dict = field(default_factory=dict)

    @property
    def config(self) -> CnnConfig:
        return self.params.config

    def encode(self, examples: Sequence[LabeledExample]) -> EncodedSet:
        return encode_examples(examples, self.vocab, self.config.t_max, self.featurizer)

    def predict_proba(self, examples: Sequence[LabeledExample]) -> np.ndarray:
        return predict_probs(self.params, self.encode(examples))

    def to_container(self) -> tuple[dict, dict]:
        meta = {
            "kind": self.kind,
            "schema": list(self.schema.classes),
            "config": self.config.to_dict(),
            "vocab": self.vocab.to_dict(),
            "featurizer": None if self.featurizer is None else self.featurizer.to_dict(),
            "meta": self.meta,
        }
        return meta, self.params.tensors()


@dataclass
class BaselineModel:
    kind: str                      # "logreg" or "svm"
    model: LinearModel
    featurizer: TfidfFeaturizer
    schema: LabelSchema
    meta: dict = field(default_factory=dict)

    def predict_proba(self, examples: Sequence[LabeledExample]) -> np.ndarray:
        X = self.featurizer.sparse_batch([ex.tokens for ex in examples])
        return predict_linear_batch(self.model, X)[1]

    def to_container(self) -> tuple[dict, dict]:
        meta = {
            "kind": self.kind,
            "schema": list(self.schema.classes),
            "linear_kind": self.model.kind,
            "l2_strength": self.model.l2_strength,
            "featurizer": self.featurizer.to_dict(),
            "meta": {**self.meta, **{k: v for k, v in self.model.meta.items() if k != "losses"}},
        }
        return meta, {"weights": self.model.weights, "bias": self.model.bias}


Model = CnnModel | BaselineModel


def save_model(model: Model, path) -> None:
    meta, tensors = model.to_container()
    container.save(path, meta, tensors)


def model_from_container(meta: dict, tensors: dict) -> Model:
    schema = LabelSchema(tuple(meta["schema"]))
    feat = meta.get("featurizer")
    featurizer = TfidfFeaturizer.from_dict(feat) if feat else None
    kind = meta.get("kind")
    if kind in ("cnn", "mlp-cnn"):
        config = CnnConfig(**meta["config"])
        params = CnnParams(config, **{n: tensors[n] for n in PARAM_NAMES})
        return CnnModel(kind, params, Vocabulary.from_dict(meta["vocab"]), schema, featurizer, meta.get("meta", {}))
    if kind in ("logreg", "svm"):
        lm = LinearModel(meta["linear_kind"], tensors["weights"], tensors["bias"], meta["l2_strength"],
                         meta.get("meta", {}))
        return BaselineModel(kind, lm, featurizer, schema, meta.get("meta", {}))
    raise container.ContainerError(f"unknown model kind {kind!r}")


def load_model(path) -> Model:
    return model_from_container(*container.load(path))


# ---------------------------------------------------------------- data

@dataclass
class PreparedData:
    schema: LabelSchema
    split: DatasetSplit

    def all(self) -> list[LabeledExample]:
        return self.split.train + self.split.validation + self.split.test


def load_prepared(directory, origin: str = "event", binary: bool = False,
                  not_informative: str | None = None) -> PreparedData:
    d = Path(directory)
    if not d.is_dir():
        raise PipelineError(f"data directory not found: {d}")
    schema = LabelSchema.read(d / "schema.txt")
    parts = {}
    for key, fname in SPLIT_FILES.items():
        path = d / fname
        parts[key] = load_tsv(path, schema, origin=origin) if path.exists() else []
    prepared = PreparedData(schema, DatasetSplit(parts["train"], parts["validation"], parts["test"]))
    if binary and schema.K != 2:
        prepared = binarize(prepared, not_informative)
    return prepared


def binarize(data: PreparedData, not_informative: str | None = None) -> PreparedData:
    kw = {} if not_informative is None else {"not_informative": not_informative}
    parts = [merge_to_binary(p, data.schema, **kw) for p in
             (data.split.train, data.split.validation, data.split.test)]
    return PreparedData(parts[0][1], DatasetSplit(*(p[0] for p in parts)))


def as_out_of_event(examples: Sequence[LabeledExample]) -> list[LabeledExample]:
    return [replace(ex, origin=OUT_OF_EVENT) for ex in examples]


# ---------------------------------------------------------------- training

def _extra_channel(kind: str, cfg: RunConfig, train_ex: Sequence[LabeledExample]) -> TfidfFeaturizer | None:
    if kind != "mlp-cnn":
        return None
    return fit_featurizer([e.tokens for e in train_ex], [e.label for e in train_ex], cfg.chi2_k)


def fit_cnn(cfg: RunConfig, kind: str, train_ex, val_ex, schema: LabelSchema,
            embeddings_path=None) -> tuple[CnnModel, TrainResult]:
    vocab = build_vocab(train_ex, cfg.vocab_percent)
    if embeddings_path is not None:
        table = load_pretrained(embeddings_path, vocab, cfg.seed, cfg.embed_scale)
        for w in table.warnings:
            log.warning(w)
    else:
        table = random_init(vocab, cfg.embed_dim, cfg.seed, cfg.embed_scale)
    featurizer = _extra_channel(kind, cfg, train_ex)
    config = cfg.cnn_config(schema.K, featurizer.dim if featurizer else 0, table.dim)
    params = init_params(config, table, cfg.seed)
    model = CnnModel(kind, params, vocab, schema, featurizer)
    result = train(params, cfg.train_config(), model.encode(train_ex), model.encode(val_ex))
    model.params = result.params
    model.meta = {"best_epoch": result.best_epoch, "epochs_run": len(result.history),
                  "train_size": len(train_ex), "seed": cfg.seed}
    return model, result


def fit_baseline(cfg: RunConfig, kind: str, train_ex, schema: LabelSchema) -> BaselineModel:
    use_chi2 = kind == "svm" or cfg.chi2_for_logreg
    featurizer = fit_featurizer([e.tokens for e in train_ex], [e.label for e in train_ex],
                                cfg.chi2_k if use_chi2 else None)
    X = featurizer.sparse_batch([e.tokens for e in train_ex])
    y = [e.label for e in train_ex]
    trainer = train_logreg if kind == "logreg" else train_linear_svm
    lm = trainer(X, y, schema.K, cfg.baseline_epochs, cfg.baseline_lr, cfg.baseline_l2, cfg.seed)
    return BaselineModel(kind, lm, featurizer, schema, {"train_size": len(train_ex), "seed": cfg.seed})


def fit_model(cfg: RunConfig, kind: str, train_ex, val_ex, schema, embeddings_path=None):
    """Train one model; returns ``(model, history)`` where history may be None."""
    if kind == "rf":
        raise PipelineError("model kind 'rf' (random forest) is not supported by this toolkit")
    if not train_ex:
        raise PipelineError("training set is empty")
    if kind in ("cnn", "mlp-cnn"):
        if not val_ex:
            raise PipelineError("validation set is empty")
        return fit_cnn(cfg, kind, train_ex, val_ex, schema, embeddings_path)
    if kind in ("logreg", "svm"):
        return fit_baseline(cfg, kind, train_ex, schema), None
    raise ConfigError(f"unknown model kind {kind!r}")


def adapt_regularized(cfg: RunConfig, event_model: Model, train_ex, val_ex):
    """Regularised adaptation from a trained event CNN (weights shared vocab)."""
    if not isinstance(event_model, CnnModel):
        raise PipelineError("regularised adaptation needs a CNN event model")
    data = event_model.encode(train_ex)
    result = fit_adapted(event_model.params, cfg.train_config(), data, event_model.encode(val_ex),
                         cfg.adapt_lambda)
    model = CnnModel(event_model.kind, result.params, event_model.vocab, event_model.schema,
                     event_model.featurizer,
                     {"best_epoch": result.best_epoch, "epochs_run": len(result.history),
                      "train_size": len(train_ex), "seed": cfg.seed, "adapt_lambda": cfg.adapt_lambda})
    return model, result


def select_out_of_event(event_model: Model, out_ex: Sequence[LabeledExample]) -> list[LabeledExample]:
    """Out-of-event examples the event model classifies correctly, in order."""
    if not out_ex:
        return []
    if isinstance(event_model, CnnModel):
        idx = select_instances(event_model.params, event_model.encode(out_ex))
    else:
        pred = np.argmax(event_model.predict_proba(out_ex), axis=1)
        idx = np.flatnonzero(pred == np.array([e.label for e in out_ex]))
    return [out_ex[i] for i in idx]


def check_schema(model: Model, schema: LabelSchema) -> None:
    if model.schema != schema:
        raise SchemaMismatch(f"model schema {list(model.schema.classes)} differs from data schema "
                             f"{list(schema.classes)}")


@dataclass
class ModeRun:
    model: Model
    history: TrainResult | None
    train_examples: list[LabeledExample]


def run_mode(cfg: RunConfig, mode: str, event: PreparedData, out: PreparedData | None = None,
             event_model: Model | None = None, kind: str | None = None,
             embeddings_path=None) -> ModeRun:
    """Train according to one of the data settings in ``MODES``."""
    kind = kind or cfg.model_kind
    if mode not in MODES:
        raise PipelineError(f"unknown mode {mode!r}; choose from {MODES}")
    needs_out = mode != "event"
    if needs_out and out is None:
        raise PipelineError(f"mode {mode!r} needs out-of-event data")
    if out is not None and out.schema != event.schema:
        raise SchemaMismatch(f"event schema {list(event.schema.classes)} differs from out-of-event "
                             f"schema {list(out.schema.classes)}")
    schema = event.schema
    val = event.split.validation
    pool = as_out_of_event(out.all()) if out is not None else []
    if mode in ("adapt-reg", "adapt-select"):
        if event_model is None:
            raise PipelineError(f"mode {mode!r} requires a trained event model (--event-model)")
        check_schema(event_model, schema)

    if mode == "event":
        train_ex = event.split.train
    elif mode == "out":
        train_ex = pool
    elif mode == "event+out":
        train_ex = event.split.train + pool
    elif mode == "adapt-reg":
        train_ex = event.split.train + pool
        model, hist = adapt_regularized(cfg, event_model, train_ex, val)
        return ModeRun(model, hist, train_ex)
    else:
        train_ex = event.split.train + select_out_of_event(event_model, pool)
    model, hist = fit_model(cfg, kind, train_ex, val, schema, embeddings_path)
    return ModeRun(model, hist, train_ex)


def evaluate_model(model: Model, examples: Sequence[LabeledExample]) -> EvalReport:
    if not examples:
        raise PipelineError("evaluation data is empty")
    return evaluate([e.label for e in examples], model.predict_proba(examples), model.schema)


def load_eval_data(path, model: Model, header: bool = False) -> list[LabeledExample]:
    try:
        return load_tsv(path, model.schema, header=header)
    except CorpusError as exc:
        if "unknown label" not in str(exc):
            raise
        labels = sorted({line.rstrip("\n").split("\t")[-1]
                         for line in open(path, encoding="utf-8") if line.strip()})
        raise SchemaMismatch(f"{exc}; model schema {list(model.schema.classes)}, "
                             f"data labels {labels}") from None


# ---------------------------------------------------------------- atomic output

class AtomicDir:
    """Stage files in a temporary directory and move them into ``target``
    only when the block completes without error."""

    def __init__(self, target):
        self.target = Path(target)

    def __enter__(self) -> Path:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(dir=self.target.parent, prefix=f".{self.target.name}."))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self.target.mkdir(parents=True, exist_ok=True)
                for item in sorted(self.tmp.rglob("*")):
                    rel = item.relative_to(self.tmp)
                    dest = self.target / rel
                    if item.is_dir():
                        dest.mkdir(parents=True, exist_ok=True)
                    else:
                        os.replace(item, dest)
        finally:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


# ---------------------------------------------------------------- grid search

GRID_KEYS = ("dropout", "batch_size", "num_filters", "window", "pool", "hidden", "vocab_percent")
DEFAULT_GRID = {
    "dropout": (0.0, 0.2, 0.4, 0.5),
    "batch_size": (32, 64, 128),
    "num_filters": (100, 150, 200),
    "window": (2, 3, 4),
    "pool": (2, 3, 4),
    "hidden": (100, 150, 200),
    "vocab_percent": (80.0, 85.0, 90.0),
}


def grid_cells(grid: dict[str, Sequence]) -> list[dict]:
    keys = [k for k in GRID_KEYS if k in grid] + [k for k in grid if k not in GRID_KEYS]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridResult:
    cells: list[dict]
    accuracies: list[float]
    best_index: int

    @property
    def best_cell(self) -> dict:
        return self.cells[self.best_index]

    def write_csv(self, path) -> None:
        keys = list(self.cells[0]) if self.cells else []
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cell", *keys, "dev_accuracy"])
            for i, (cell, acc) in enumerate(zip(self.cells, self.accuracies)):
                w.writerow([i, *(cell[k] for k in keys), f"{acc:.10g}"])


def grid_search(cfg: RunConfig, event: PreparedData, grid: dict[str, Sequence],
                kind: str | None = None, embeddings_path=None) -> GridResult:
    """Train one event-mode model per cell, in order; keep the first best."""
    cells = grid_cells(grid)
    accs = []
    for i, cell in enumerate(cells):
        run = run_mode(cfg.updated(cell), "event", event, kind=kind, embeddings_path=embeddings_path)
        acc = evaluate_model(run.model, event.split.validation).accuracy
        log.info("cell %d/%d %s dev accuracy %.4f", i + 1, len(cells), cell, acc)
        accs.append(acc)
    best = int(np.argmax(accs)) if accs else -1
    return GridResult(cells, accs, best)


# ---------------------------------------------------------------- result tables

BINARY_ROWS = ("event", "out", "event+out")
MULTI_ROWS = ("event", "out", "event+out", "adapt-reg", "adapt-select")
ROW_LABELS = {"event": "event", "out": "out", "event+out": "event+out",
              "adapt-reg": "event+adpt01", "adapt-select": "event+adpt02"}
BINARY_SYSTEMS = ("rf", "logreg", "svm", "cnn")
MULTI_SYSTEMS = ("svm", "cnn", "mlp-cnn")
SYSTEM_LABELS = {"rf": "RF", "logreg": "LR", "svm": "SVM", "cnn": "CNN", "mlp-cnn": "MLP-CNN"}


def _pool_for(name: str, events: dict[str, PreparedData], pools: Sequence[PreparedData]) -> PreparedData:
    others = [ex for other, d in events.items() if other != name for ex in d.all()]
    others += [ex for p in pools for ex in p.all()]
    schema = events[name].schema
    return PreparedData(schema, DatasetSplit(others, [], []))


def run_tables(cfg: RunConfig, events: dict[str, PreparedData], pools: Sequence[PreparedData],
               task: str, out_dir, embeddings_path=None) -> dict:
    """Run every row/system cell of the binary or multi-class results table.

    Binary cells hold AUC x 100; multi-class cells hold accuracy x 100 and
    macro-F1.  Cells a system cannot produce are recorded as ``None``.
    Per-cell evaluation reports go to ``out_dir/<event>/<row>/<system>/``.
    """
    if task not in ("binary", "multi"):
        raise PipelineError("task must be 'binary' or 'multi'")
    if task == "binary":
        events = {n: binarize(d, cfg.not_informative) if d.schema.K != 2 else d for n, d in events.items()}
        pools = [binarize(p, cfg.not_informative) if p.schema.K != 2 else p for p in pools]
    rows = BINARY_ROWS if task == "binary" else MULTI_ROWS
    systems = BINARY_SYSTEMS if task == "binary" else MULTI_SYSTEMS
    out_dir = Path(out_dir)
    results: dict = {}
    for name, event in events.items():
        pool = _pool_for(name, events, pools)
        event_models: dict[str, Model] = {}
        results[name] = {}
        for row in rows:
            results[name][row] = {}
            for system in systems:
                cell = _run_cell(cfg, row, system, event, pool, event_models, embeddings_path)
                if cell is None:
                    results[name][row][system] = None
                    continue
                model, report = cell
                if row == "event":
                    event_models[system] = model
                report.write(out_dir / name / ROW_LABELS[row] / system)
                results[name][row][system] = (
                    {"auc": 100.0 * report.auc} if task == "binary"
                    else {"accuracy": 100.0 * report.accuracy, "macro_f1": report.macro_f1})
    write_tables(results, task, out_dir)
    return results


def _run_cell(cfg, row, system, event, pool, event_models, embeddings_path):
    if system == "rf":
        return None
    if row == "adapt-reg" and system not in ("cnn", "mlp-cnn"):
        return None
    if row in ("adapt-reg", "adapt-select") and system not in event_models:
        return None
    emb = embeddings_path if system in ("cnn", "mlp-cnn") else None
    run = run_mode(cfg, row, event, pool, event_models.get(system), kind=system, embeddings_path=emb)
    return run.model, evaluate_model(run.model, event.split.test)


def _fmt(v, key):
    if v is None:
        return "n/a"
    return f"{v[key]:.2f}"


def write_tables(results: dict, task: str, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = "B" if task == "binary" else "M"
    systems = BINARY_SYSTEMS if task == "binary" else MULTI_SYSTEMS
    if task == "binary":
        header = ["SYS", *(SYSTEM_LABELS[s] for s in systems)]
        metrics = [("auc", systems)]
    else:
        header = ["SYS", *(f"{SYSTEM_LABELS[s]} Acc" for s in systems),
                  *(f"{SYSTEM_LABELS[s]} F1" for s in systems)]
        metrics = [("accuracy", systems), ("macro_f1", systems)]
    tsv_rows = [header]
    md = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for event, rows in results.items():
        md.append(f"| **{event}** |" + " |" * (len(header) - 1))
        for row, cells in rows.items():
            values = [_fmt(cells[s], key) for key, syss in metrics for s in syss]
            label = f"{prefix}_{ROW_LABELS[row]}"
            tsv_rows.append([f"{event}:{label}", *values])
            md.append("| " + " | ".join([label, *values]) + " |")
    with open(out_dir / f"table_{task}.tsv", "w", newline="") as fh:
        csv.writer(fh, delimiter="\t", lineterminator="\n").writerows(tsv_rows)
    (out_dir / f"table_{task}.md").write_text("\n".join(md) + "\n")
    (out_dir / f"table_{task}.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")


def write_prepared(out_dir: Path, split: DatasetSplit, schema: LabelSchema) -> None:
    schema.write(out_dir / "schema.txt")
    write_tsv(out_dir / "train.tsv", split.train, schema)
    write_tsv(out_dir / "dev.tsv", split.validation, schema)
    write_tsv(out_dir / "test.tsv", split.test, schema)
