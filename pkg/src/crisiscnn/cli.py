"""Command-line interface: ``crisiscnn <command> ...``.

Commands: prepare, train, evaluate, predict, gridsearch, tables.  Every
command exits non-zero on error and stages its outputs so nothing partial is
left at the requested paths.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import pipelines as pl
from .config import ConfigError, load_config
from .container import ContainerError, atomic_write_bytes, dumps
from .corpus import (
    CorpusError, LabelSchema, build_vocab, load_tsv, merge_to_binary, stratified_split,
)
from .embeddings import EmbeddingFormatError
from .textprep import preprocess
from .train import TrainingError

log = logging.getLogger("crisiscnn")

FRACTIONS = (0.70, 0.10, 0.20)
CONFIRM_THRESHOLD = 32


class CliError(Exception):
    pass


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _run_config(args):
    overrides = _overrides(getattr(args, "set", None))
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "model_kind", None):
        overrides["model_kind"] = args.model_kind
    return load_config(getattr(args, "config", None), overrides)


# ---------------------------------------------------------------- commands

def cmd_prepare(args) -> int:
    schema = LabelSchema.read(args.schema)
    input_path = Path(args.input)
    if not input_path.is_file():
        raise CliError(f"input file not found: {input_path}")
    examples = load_tsv(input_path, schema, header=args.header)
    if args.binary:
        examples, schema = merge_to_binary(examples, schema, args.not_informative)
    split = stratified_split(examples, FRACTIONS, args.seed, schema)
    vocab = build_vocab(split.train, args.vocab_percent)
    with pl.AtomicDir(args.out) as tmp:
        pl.write_prepared(tmp, split, schema)
        vocab.write_tsv(tmp / "vocab.tsv")
        manifest = {
            "input": input_path.name, "seed": args.seed, "fractions": list(FRACTIONS),
            "binary": bool(args.binary), "vocab_percent": args.vocab_percent,
            "sizes": {"train": len(split.train), "dev": len(split.validation), "test": len(split.test)},
            "schema": list(schema.classes),
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"train {len(split.train)}  dev {len(split.validation)}  test {len(split.test)}  "
          f"vocab {len(vocab)}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    cfg = _run_config(args)
    binary = args.binary
    event = pl.load_prepared(args.event_data, binary=binary, not_informative=cfg.not_informative)
    out = None
    if args.out_event_data:
        out = pl.load_prepared(args.out_event_data, origin="out_of_event", binary=binary,
                               not_informative=cfg.not_informative)
    event_model = None
    if args.mode in ("adapt-reg", "adapt-select"):
        if not args.event_model:
            raise CliError(f"mode {args.mode} requires --event-model")
        event_model = pl.load_model(args.event_model)
    run = pl.run_mode(cfg, args.mode, event, out, event_model, embeddings_path=args.embeddings)
    run.model.meta["mode"] = args.mode
    data = dumps(*run.model.to_container())
    if run.history is None:
        atomic_write_bytes(args.out, data)
        print(f"trained {run.model.kind} on {len(run.train_examples)} examples", file=sys.stderr)
        return 0
    history_path = Path(args.history) if args.history else Path(str(args.out) + ".history.csv")
    tmp_hist = history_path.with_name(f".{history_path.name}.tmp")
    try:
        run.history.write_history(tmp_hist)
        atomic_write_bytes(args.out, data)
        os.replace(tmp_hist, history_path)
    finally:
        if tmp_hist.exists():
            tmp_hist.unlink()
    last = run.history.history[-1]
    print(f"epochs {len(run.history.history)}  best epoch {run.history.best_epoch}  "
          f"best dev accuracy {last.best_so_far:.4f}  train size {len(run.train_examples)}",
          file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    model = pl.load_model(args.model)
    examples = pl.load_eval_data(args.data, model, header=args.header)
    if not examples:
        raise CliError(f"evaluation file {args.data} is empty")
    report = pl.evaluate_model(model, examples)
    with pl.AtomicDir(args.out) as tmp:
        report.write(tmp)
    print(json.dumps(report.metrics(), sort_keys=True), file=sys.stderr)
    return 0


def _predict_lines(stream):
    for n, line in enumerate(stream, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line:
            continue
        if "\t" in line:
            tid, text = line.split("\t", 1)
            text = text.split("\t", 1)[0]
        else:
            tid, text = str(n), line
        yield tid, text


def cmd_predict(args) -> int:
    from .corpus import LabeledExample
    model = pl.load_model(args.model)
    if args.input and args.input != "-":
        with open(args.input, encoding="utf-8") as fh:
            rows = list(_predict_lines(fh))
    else:
        rows = list(_predict_lines(sys.stdin))
    out = sys.stdout
    if not rows:
        return 0
    examples = [LabeledExample(tid, tuple(preprocess(text)), 0) for tid, text in rows]
    probs = model.predict_proba(examples)
    labels = np.argmax(probs, axis=1)
    for (tid, _), lab, pr in zip(rows, labels, probs):
        out.write(f"{tid}\t{model.schema.classes[lab]}\t" + "\t".join(f"{p:.8f}" for p in pr) + "\n")
    return 0


def _parse_grid(args) -> dict:
    grid = dict(pl.DEFAULT_GRID)
    if args.grid not in ("default",):
        raise CliError("--grid accepts only 'default'; restrict it with --restrict key=v1,v2")
    for item in args.restrict or []:
        if "=" not in item:
            raise CliError(f"--restrict expects key=v1,v2,..., got {item!r}")
        key, vals = item.split("=", 1)
        key = key.strip()
        if key not in grid:
            raise CliError(f"unknown grid key {key!r}; choose from {list(grid)}")
        cast = type(grid[key][0])
        grid[key] = tuple(cast(v) for v in vals.split(","))
    return grid


def cmd_gridsearch(args) -> int:
    cfg = _run_config(args)
    grid = _parse_grid(args)
    cells = pl.grid_cells(grid)
    print(f"grid search over {len(cells)} cells", file=sys.stderr)
    if len(cells) > CONFIRM_THRESHOLD and not args.confirm:
        raise CliError(f"{len(cells)} cells requested; pass --confirm to run a grid this large")
    event = pl.load_prepared(args.event_data, binary=args.binary, not_informative=cfg.not_informative)
    result = pl.grid_search(cfg, event, grid, embeddings_path=args.embeddings)
    best = cfg.updated(result.best_cell)
    with pl.AtomicDir(args.out) as tmp:
        result.write_csv(tmp / "grid.csv")
        (tmp / "best.conf").write_text(best.dumps())
    print(f"best cell {result.best_index}: {result.best_cell} "
          f"dev accuracy {result.accuracies[result.best_index]:.4f}", file=sys.stderr)
    return 0


def _named_dirs(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        name, _, path = item.partition("=")
        if not path:
            raise CliError(f"expected name=dir, got {item!r}")
        out[name] = path
    return out


def cmd_tables(args) -> int:
    cfg = _run_config(args)
    events = {n: pl.load_prepared(p) for n, p in _named_dirs(args.event).items()}
    if not events:
        raise CliError("at least one --event name=dir is required")
    pools = [pl.load_prepared(p, origin="out_of_event") for p in args.pool or []]
    with pl.AtomicDir(args.out) as tmp:
        pl.run_tables(cfg, events, pools, args.task, tmp, embeddings_path=args.embeddings)
    print((Path(args.out) / f"table_{args.task}.md").read_text(), file=sys.stderr)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crisiscnn", description="Crisis tweet classification toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("prepare", help="normalise, split 70/10/20 and build the vocabulary")
    pp.add_argument("--input", required=True)
    pp.add_argument("--schema", required=True, help="file with one class name per line")
    pp.add_argument("--out", required=True)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--binary", action="store_true", help="merge informative classes")
    pp.add_argument("--header", action="store_true", help="input has a header row")
    pp.add_argument("--vocab-percent", type=float, default=90.0)
    pp.add_argument("--not-informative", default="Not related or irrelevant")
    pp.set_defaults(func=cmd_prepare)

    def common(sp):
        sp.add_argument("--config")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--embeddings", help="word2vec text file for initialisation")
        sp.add_argument("--binary", action="store_true", help="merge informative classes on load")

    pt = sub.add_parser("train", help="train a model in one data setting")
    common(pt)
    pt.add_argument("--mode", required=True, choices=pl.MODES)
    pt.add_argument("--model-kind", choices=("cnn", "mlp-cnn", "logreg", "svm", "rf"))
    pt.add_argument("--event-data", required=True)
    pt.add_argument("--out-event-data")
    pt.add_argument("--event-model")
    pt.add_argument("--out", required=True)
    pt.add_argument("--history")
    pt.set_defaults(func=cmd_train)

    pe = sub.add_parser("evaluate", help="write metrics, confusion matrix, PR curves")
    pe.add_argument("--model", required=True)
    pe.add_argument("--data", required=True)
    pe.add_argument("--out", required=True)
    pe.add_argument("--header", action="store_true")
    pe.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("predict", help="label tweets from a file or stdin")
    pr.add_argument("--model", required=True)
    pr.add_argument("--input", help="id<TAB>text lines or plain text lines; default stdin")
    pr.set_defaults(func=cmd_predict)

    pg = sub.add_parser("gridsearch", help="tune hyperparameters on the dev split")
    common(pg)
    pg.add_argument("--event-data", required=True)
    pg.add_argument("--grid", default="default")
    pg.add_argument("--restrict", action="append", metavar="KEY=V1,V2")
    pg.add_argument("--confirm", action="store_true")
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=cmd_gridsearch)

    pb = sub.add_parser("tables", help="run every table row for one or more events")
    common(pb)
    pb.add_argument("--event", action="append", metavar="NAME=DIR", required=True)
    pb.add_argument("--pool", action="append", metavar="DIR", help="extra out-of-event data")
    pb.add_argument("--task", choices=("binary", "multi"), required=True)
    pb.add_argument("--out", required=True)
    pb.set_defaults(func=cmd_tables)
    return p


def _thread_limit():
    """BLAS thread cap from ``CRISISCNN_THREADS`` (default 1), so results do
    not depend on the machine's core count."""
    n = max(int(os.environ.get("CRISISCNN_THREADS", "1")), 1)
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    with _thread_limit():
        try:
            return args.func(args)
        except (CliError, ConfigError, CorpusError, ContainerError, EmbeddingFormatError,
                pl.PipelineError, TrainingError, ValueError, OSError) as exc:
            print(f"crisiscnn {args.command}: error: {exc}", file=sys.stderr)
            return 1


if __name__ == "__main__":
    sys.exit(main())
