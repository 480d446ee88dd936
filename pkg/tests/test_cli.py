import io
import json

import pytest

from crisiscnn.cli import main

from .conftest import make_prepared, set_args


@pytest.fixture(scope="module")
def prepared(tmp_path_factory):
    return make_prepared(tmp_path_factory.mktemp("cli"), n=240)


def test_prepare_outputs(prepared):
    names = sorted(p.name for p in prepared.iterdir())
    assert names == ["dev.tsv", "manifest.json", "schema.txt", "test.tsv", "train.tsv", "vocab.tsv"]
    m = json.loads((prepared / "manifest.json").read_text())
    assert sum(m["sizes"].values()) == 240
    assert (prepared / "vocab.tsv").read_text().splitlines()[:2] == ["<pad>\t0\t0", "<unk>\t1\t0"]


def test_train_evaluate_predict(prepared, tmp_path, capsys, monkeypatch):
    model = tmp_path / "m.ccnn"
    assert main(["train", "--mode", "event", "--event-data", str(prepared), "--out", str(model),
                 *set_args()]) == 0
    hist = (tmp_path / "m.ccnn.history.csv").read_text().splitlines()
    assert hist[0] == "epoch,train_loss,val_accuracy,best_so_far" and len(hist) >= 2
    assert main(["evaluate", "--model", str(model), "--data", str(prepared / "test.tsv"),
                 "--out", str(tmp_path / "ev")]) == 0
    metrics = json.loads((tmp_path / "ev" / "metrics.json").read_text())
    assert 0.0 <= metrics["accuracy"] <= 1.0 and "auc" not in metrics
    capsys.readouterr()
    monkeypatch.setattr("sys.stdin", io.StringIO("x1\tFlood waters rising http://t.co/1\nplain line\n"))
    assert main(["predict", "--model", str(model)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[0].startswith("x1\t") and lines[1].startswith("2\t")
    probs = [float(v) for v in lines[0].split("\t")[2:]]
    assert len(probs) == 6 and abs(sum(probs) - 1) < 1e-6


def test_binary_training_reports_auc(prepared, tmp_path):
    model = tmp_path / "b.ccnn"
    assert main(["train", "--mode", "event", "--binary", "--event-data", str(prepared),
                 "--out", str(model), *set_args()]) == 0
    bin_prep = make_prepared(tmp_path, name="bin", n=240, binary=True)
    assert main(["evaluate", "--model", str(model), "--data", str(bin_prep / "test.tsv"),
                 "--out", str(tmp_path / "ev")]) == 0
    assert "auc" in json.loads((tmp_path / "ev" / "metrics.json").read_text())


def test_logreg_model_kind(prepared, tmp_path):
    model = tmp_path / "lr.ccnn"
    assert main(["train", "--mode", "event", "--model-kind", "logreg", "--event-data", str(prepared),
                 "--out", str(model), *set_args()]) == 0
    assert not (tmp_path / "lr.ccnn.history.csv").exists()
    assert main(["evaluate", "--model", str(model), "--data", str(prepared / "test.tsv"),
                 "--out", str(tmp_path / "ev")]) == 0


def test_errors_exit_nonzero_without_partial_output(prepared, tmp_path, capsys):
    assert main(["train", "--mode", "out", "--event-data", str(prepared),
                 "--out", str(tmp_path / "x.ccnn"), *set_args()]) == 1
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "x.ccnn").exists()
    assert main(["train", "--mode", "event", "--model-kind", "rf", "--event-data", str(prepared),
                 "--out", str(tmp_path / "x.ccnn")]) == 1
    (tmp_path / "junk.ccnn").write_bytes(b"hello world")
    assert main(["evaluate", "--model", str(tmp_path / "junk.ccnn"), "--data",
                 str(prepared / "test.tsv"), "--out", str(tmp_path / "ev")]) == 1
    assert "not a model container" in capsys.readouterr().err
    assert not (tmp_path / "ev").exists()
    assert main(["train", "--mode", "event", "--event-data", str(prepared), "--out",
                 str(tmp_path / "x.ccnn"), "--set", "bogus=1"]) == 1


def test_evaluate_schema_mismatch(prepared, tmp_path, capsys):
    model = tmp_path / "m.ccnn"
    assert main(["train", "--mode", "event", "--model-kind", "logreg", "--event-data", str(prepared),
                 "--out", str(model), *set_args()]) == 0
    bad = tmp_path / "bad.tsv"
    bad.write_text("1\tsome text\tInformative\n")
    assert main(["evaluate", "--model", str(model), "--data", str(bad), "--out", str(tmp_path / "e")]) == 1
    assert "schema" in capsys.readouterr().err.lower()


def test_gridsearch_requires_confirm_for_large_grids(prepared, tmp_path, capsys):
    assert main(["gridsearch", "--event-data", str(prepared), "--out", str(tmp_path / "g")]) == 1
    assert "--confirm" in capsys.readouterr().err
    restrict = ["--restrict", "dropout=0.5", "--restrict", "batch_size=32", "--restrict", "num_filters=4,8",
                "--restrict", "window=2", "--restrict", "pool=2", "--restrict", "hidden=8",
                "--restrict", "vocab_percent=90"]
    assert main(["gridsearch", "--event-data", str(prepared), "--out", str(tmp_path / "g"),
                 *set_args(), *restrict]) == 0
    rows = (tmp_path / "g" / "grid.csv").read_text().splitlines()
    assert len(rows) == 3
    assert "num_filters = " in (tmp_path / "g" / "best.conf").read_text()
