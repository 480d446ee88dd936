"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected into an "acceptance criteria" section at the end of any run.
"""
import json
import random
import time

import numpy as np
import pytest

from crisiscnn import pipelines as pl
from crisiscnn.cli import main
from crisiscnn.cnn import encode_examples, forward, init_params, predict_batch
from crisiscnn.config import RunConfig
from crisiscnn.container import dumps, loads
from crisiscnn.corpus import CRISIS_SCHEMA, LabeledExample, build_vocab
from crisiscnn.embeddings import random_init
from crisiscnn.evaluation import macro_f1, pr_curve, roc_auc
from crisiscnn.numerics import Rng
from crisiscnn.synth import generate_tweets, write_schema, write_tweets_tsv
from crisiscnn.textprep import normalize, preprocess
from crisiscnn.train import (TrainConfig, adadelta_update, adaptation_loss, cross_entropy,
                             select_instances, train)

from .conftest import make_prepared, random_ids, random_params, record_criterion, set_args, tiny_config
from .oracles import auc_pairs, average_precision_steps, forward_loops
from .test_cnn import _check_gradients
from .test_textprep import GOLDEN


def test_criterion_01_gradients():
    t0 = time.perf_counter()
    worst = 0.0
    for dy in (0, 4):
        for seed in range(20):
            worst = max(worst, _check_gradients(3, dy, seed, use_mask=False))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 30
    record_criterion(1, "analytic vs finite-difference gradients", ok,
                     f"max rel err {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_forward_oracle():
    worst = 0.0
    for i in range(50):
        dy = 4 if i % 2 else 0
        cfg = tiny_config(num_classes=3, extra_dim=dy)
        params = random_params(cfg, 700 + i)
        rng = Rng(9000 + i)
        ids = random_ids(rng, cfg.t_max, 8)
        extra = rng.uniform(0, 1, dy) if dy else None
        got, _ = forward(params, ids, extra)
        t = {k: v.tolist() for k, v in params.tensors().items()}
        want = forward_loops(t["embeddings"], t["filters"], t["filter_bias"], t["dense_w"], t["dense_b"],
                             t["out_w"], t["out_b"], ids.tolist(), cfg.window, cfg.pool, 3,
                             None if extra is None else extra.tolist())
        worst = max(worst, float(np.max(np.abs(got - np.array(want)))))
    ok = worst <= 1e-12
    record_criterion(2, "forward pass vs straight-line oracle", ok, f"max abs diff {worst:.1e}")
    assert ok


def test_criterion_03_loss_reductions():
    rng = Rng(3)
    worst = 0.0
    for _ in range(10_000):
        K = 2 + int(rng.next_uint64(1)[0] % 5)
        pa = rng.uniform(1e-3, 1.0, K)
        pa /= pa.sum()
        pi = rng.uniform(1e-3, 1.0, K)
        pi /= pi.sum()
        gold = int(rng.next_uint64(1)[0] % K)
        ce = cross_entropy(pa, gold)
        worst = max(worst, abs(adaptation_loss(pa, pi, gold, 1.0) - ce))
        one_hot = np.zeros(K)
        one_hot[gold] = 1.0
        worst = max(worst, abs(adaptation_loss(pa, one_hot, gold, 0.0) - ce))
    ok = worst <= 1e-12
    record_criterion(3, "adaptation loss reduces to cross-entropy", ok, f"max diff {worst:.1e}")
    assert ok


def test_criterion_04_adadelta_first_step():
    x, _, _ = adadelta_update(np.zeros(1), np.ones(1), np.zeros(1), np.zeros(1), rho=0.95, eps=1e-6)
    delta = float(x[0])
    ok = abs(delta - (-0.0044719)) <= 1e-6
    record_criterion(4, "ADADELTA first step", ok, f"delta {delta:.7f}")
    assert ok


def test_criterion_05_metric_oracles():
    rng = Rng(5)
    auc_ok = ap_ok = True
    for _ in range(100):
        n = 5 + int(rng.next_uint64(1)[0] % 196)
        scores = (rng.next_uint64(n) % 20).astype(np.float64) / 20.0   # coarse grid forces ties
        gold = rng.random(n) < 0.4
        gold[0], gold[1] = True, False
        auc_ok &= roc_auc(scores, gold) == auc_pairs(scores.tolist(), gold.tolist())
        _, ap = pr_curve(scores, gold)
        ap_ok &= abs(ap - average_precision_steps(scores.tolist(), gold.tolist())) <= 1e-12
    f1 = macro_f1(np.array([[3, 1], [2, 4]]))
    ok = bool(auc_ok and ap_ok and abs(f1 - 0.69697) <= 1e-5)
    record_criterion(5, "AUC / AP / macro-F1 oracles", ok,
                     f"auc exact {bool(auc_ok)}, ap {bool(ap_ok)}, macro-F1 {f1:.5f}")
    assert ok


def test_criterion_06_overfit():
    rows = generate_tweets(40, seed=6)
    examples = [LabeledExample(tid, tuple(preprocess(t)), CRISIS_SCHEMA.index(lab)) for tid, t, lab in rows]
    t0 = time.perf_counter()
    vocab = build_vocab(examples, 100)
    cfg = RunConfig(t_max=20, embed_dim=32, num_filters=16, hidden=32).cnn_config(6)
    params = init_params(cfg, random_init(vocab, 32, seed=1), seed=2)
    data = encode_examples(examples, vocab, cfg.t_max)
    res = train(params, TrainConfig(max_epochs=25, batch_size=8, patience=25, seed=3), data, data)
    elapsed = time.perf_counter() - t0
    reached = next((r.epoch for r in res.history if r.val_accuracy == 1.0), None)
    ok = reached is not None and elapsed < 10
    record_criterion(6, "overfit 40 examples", ok, f"train accuracy 1.0 at epoch {reached}, {elapsed:.1f} s")
    assert ok


def _desk_run(root):
    """Criterion 7 pipeline through the CLI; returns (metrics, elapsed)."""
    raw = root / "tweets.tsv"
    write_tweets_tsv(raw, generate_tweets(2000, seed=7))
    write_schema(root / "schema.txt")
    t0 = time.perf_counter()
    prep = [str(raw), "--schema", str(root / "schema.txt"), "--seed", "7"]
    assert main(["prepare", "--input", *prep, "--out", str(root / "multi")]) == 0
    assert main(["prepare", "--input", *prep, "--out", str(root / "binary"), "--binary"]) == 0
    metrics = {}
    for name, task, extra in [("cnn", "multi", []), ("cnn_binary", "binary", []),
                              ("logreg", "multi", ["--model-kind", "logreg"])]:
        model = root / f"{name}.ccnn"
        assert main(["train", "--mode", "event", "--event-data", str(root / task),
                     "--out", str(model), *extra]) == 0
        assert main(["evaluate", "--model", str(model), "--data", str(root / task / "test.tsv"),
                     "--out", str(root / f"eval_{name}")]) == 0
        metrics[name] = json.loads((root / f"eval_{name}" / "metrics.json").read_text())
    return metrics, time.perf_counter() - t0


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    a = tmp_path_factory.mktemp("desk_a")
    b = tmp_path_factory.mktemp("desk_b")
    (ma, ta), _ = _desk_run(a), _desk_run(b)
    return a, b, ma, ta


def test_criterion_07_desk_scale(desk):
    _, _, m, elapsed = desk
    acc, auc, lr = m["cnn"]["accuracy"], m["cnn_binary"]["auc"], m["logreg"]["accuracy"]
    ok = acc >= 0.90 and auc >= 0.95 and lr >= 0.85 and elapsed < 300
    record_criterion(7, "desk-scale end-to-end", ok,
                     f"cnn acc {acc:.3f}, binary auc {auc:.3f}, logreg acc {lr:.3f}, {elapsed:.0f} s")
    assert ok


def test_criterion_08_adaptation(tmp_path):
    ev = pl.load_prepared(make_prepared(tmp_path, "ev", n=300, seed=8))
    out = pl.load_prepared(make_prepared(tmp_path, "ot", n=300, seed=9, domain=2, shift=0.5),
                           origin="out_of_event")
    cfg = RunConfig().updated(dict(kv.split("=") for kv in set_args()[1::2]))
    event_model = pl.run_mode(cfg, "event", ev).model
    pool = pl.as_out_of_event(out.all())[:200]
    enc = event_model.encode(pool)
    sel = select_instances(event_model.params, enc)
    expect = [i for i in range(len(pool))
              if int(predict_batch(event_model.params, enc.ids[i:i + 1])[0][0]) == pool[i].label]
    exact = sel.tolist() == expect
    n_sel = len(pl.select_out_of_event(event_model, pl.as_out_of_event(out.all())))
    run = pl.run_mode(cfg, "adapt-select", ev, out, event_model)
    size_ok = len(run.train_examples) == len(ev.split.train) + n_sel
    ok = exact and size_ok
    record_criterion(8, "instance selection", ok,
                     f"{len(sel)}/200 selected, exact {exact}, train size {len(run.train_examples)}")
    assert ok


def test_criterion_09_determinism(desk):
    a, b, _, _ = desk
    files = [f"{n}.ccnn" for n in ("cnn", "cnn_binary", "logreg")]
    files += [f"eval_{n}/{f}" for n in ("cnn", "cnn_binary", "logreg")
              for f in ("metrics.json", "confusion.csv", "pr_curves.csv", "class_distribution.csv")]
    same = all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    blob = (a / "cnn.ccnn").read_bytes()
    roundtrip = dumps(*loads(blob)) == blob
    ok = same and roundtrip
    record_criterion(9, "determinism and container round-trip", ok,
                     f"{len(files)} files identical {same}, round-trip {roundtrip}")
    assert ok


def test_criterion_10_tables(tmp_path):
    events = [make_prepared(tmp_path, f"e{i}", n=150, seed=20 + i, domain=i, shift=0.3) for i in range(3)]
    args = [a for i, p in enumerate(events) for a in ("--event", f"e{i}={p}")]
    small = set_args(["max_epochs=2", "num_filters=4", "hidden=8"])
    ok = True
    shapes = []
    for task, rows, n_cols in (("binary", pl.BINARY_ROWS, 5), ("multi", pl.MULTI_ROWS, 7)):
        out = tmp_path / f"tables_{task}"
        ok &= main(["tables", "--task", task, "--out", str(out), *args, *small]) == 0
        tsv = [r.split("\t") for r in (out / f"table_{task}.tsv").read_text().splitlines()]
        ok &= len(tsv) == 1 + 3 * len(rows) and all(len(r) == n_cols for r in tsv)
        ok &= (out / f"table_{task}.md").exists()
        shapes.append(f"{task} {len(tsv) - 1}x{n_cols - 1}")
    record_criterion(10, "table pipelines via CLI", bool(ok), ", ".join(shapes))
    assert ok


def test_criterion_11_preprocessing():
    golden_ok = len(GOLDEN) == 25 and all(normalize(raw) == exp for raw, exp in GOLDEN)
    rnd = random.Random(11)
    pieces = list("aAbBdDeEzZ019 \t.;?!:,@#/'-_éÉ€") + ["http://t.co/x", "www.a.b", "@Ab", "HTTP",
                                                         "userID", "D", "ooo", "!!!"]
    bad = 0
    for _ in range(10_000):
        s = "".join(rnd.choice(pieces) for _ in range(rnd.randint(0, 30)))
        once = normalize(s)
        bad += normalize(once) != once
    ok = golden_ok and bad == 0
    record_criterion(11, "preprocessing golden suite and idempotence", ok,
                     f"golden {golden_ok}, {bad} idempotence failures in 10^4")
    assert ok
