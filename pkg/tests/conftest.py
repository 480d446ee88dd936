import numpy as np
import pytest

from crisiscnn.cnn import CnnConfig, CnnParams
from crisiscnn.numerics import Rng

TINY = dict(t_max=6, embed_dim=4, num_filters=3, window=2, pool=2, hidden=5)


def tiny_config(num_classes=3, extra_dim=0, **kw):
    return CnnConfig(**{**TINY, **kw}, num_classes=num_classes, extra_dim=extra_dim)


def random_params(config: CnnConfig, seed: int, vocab_size: int = 8, scale: float = 0.5) -> CnnParams:
    """Every tensor (biases included) drawn uniformly so that no path is trivially zero."""
    rng = Rng(seed)
    c = config
    shapes = {
        "embeddings": (vocab_size, c.embed_dim),
        "filters": (c.num_filters, c.window * c.embed_dim),
        "filter_bias": (c.num_filters,),
        "dense_w": (c.hidden, c.dense_in),
        "dense_b": (c.hidden,),
        "out_w": (c.out_units, c.hidden),
        "out_b": (c.out_units,),
    }
    tensors = {n: rng.uniform(-scale, scale, s) for n, s in shapes.items()}
    tensors["embeddings"][0] = 0.0
    return CnnParams(c, **tensors)


def random_ids(rng: Rng, t_max: int, vocab_size: int) -> np.ndarray:
    """Ids with a random length in [1, t_max] followed by PAD; UNK may appear."""
    length = 1 + int(rng.next_uint64(1)[0] % t_max)
    ids = np.zeros(t_max, dtype=np.int64)
    ids[:length] = 1 + (rng.next_uint64(length) % (vocab_size - 1)).astype(np.int64)
    return ids


@pytest.fixture
def tiny():
    return tiny_config


SMALL_SET = ["t_max=12", "embed_dim=16", "num_filters=8", "window=2", "hidden=16",
             "max_epochs=4", "patience=2", "batch_size=32", "baseline_epochs=5"]


def set_args(extra=()):
    out = []
    for kv in [*SMALL_SET, *extra]:
        out += ["--set", kv]
    return out


def make_prepared(tmp_path, name="ev", n=300, seed=0, domain=0, shift=0.0, binary=False):
    """Synthetic tweets run through ``crisiscnn prepare``; returns the directory."""
    from crisiscnn.cli import main
    from crisiscnn.synth import generate_tweets, write_schema, write_tweets_tsv

    raw = tmp_path / f"{name}.tsv"
    write_tweets_tsv(raw, generate_tweets(n, seed=seed, domain=domain, shift=shift, id_prefix=name))
    write_schema(tmp_path / "schema.txt")
    out = tmp_path / f"{name}_prep"
    args = ["prepare", "--input", str(raw), "--schema", str(tmp_path / "schema.txt"),
            "--out", str(out), "--seed", "1"]
    if binary:
        args.append("--binary")
    assert main(args) == 0
    return out


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
