"""Datasets: label schemas, TSV ingestion, binary relabelling, stratified
splits and vocabulary construction."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .numerics import Rng
from .textprep import preprocess

EVENT = "event"
OUT_OF_EVENT = "out_of_event"

CRISIS_CLASSES = (
    "Affected individual",
    "Donations and volunteering",
    "Infrastructure and utilities",
    "Sympathy and support",
    "Other useful information",
    "Not related or irrelevant",
)
NOT_INFORMATIVE = "Not related or irrelevant"
BINARY_CLASSES = ("Informative", "Not informative")

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1


class CorpusError(ValueError):
    """Bad input data; the message carries file/line context when known."""


@dataclass(frozen=True)
class LabelSchema:
    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(self.classes) < 2:
            raise CorpusError("a label schema needs at least two classes")
        if len(set(self.classes)) != len(self.classes):
            raise CorpusError(f"duplicate class names in schema: {list(self.classes)}")

    @property
    def K(self) -> int:
        return len(self.classes)

    def index(self, name: str) -> int:
        return self.classes.index(name)

    @classmethod
    def read(cls, path) -> "LabelSchema":
        """One class name per line; blank lines and ``#`` comments ignored."""
        path = Path(path)
        if not path.is_file():
            raise CorpusError(f"schema file not found: {path}")
        names = [
            line.strip()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
        return cls(tuple(names))

    def write(self, path) -> None:
        Path(path).write_text("".join(c + "\n" for c in self.classes), encoding="utf-8")


CRISIS_SCHEMA = LabelSchema(CRISIS_CLASSES)
BINARY_SCHEMA = LabelSchema(BINARY_CLASSES)


@dataclass(frozen=True)
class LabeledExample:
    id: str
    tokens: tuple[str, ...]
    label: int
    origin: str = EVENT


@dataclass
class DatasetSplit:
    train: list[LabeledExample]
    validation: list[LabeledExample]
    test: list[LabeledExample]


def _parse_row(line: str, lineno: int, path) -> tuple[str, str, str]:
    cols = line.split("\t")
    if len(cols) != 3:
        raise CorpusError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}")
    return cols[0], cols[1], cols[2]


def load_tsv(path, schema: LabelSchema, header: bool = False,
             origin: str = EVENT) -> list[LabeledExample]:
    """Read ``id<TAB>text<TAB>label`` rows, preprocessing each text."""
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if header and lineno == 1:
                continue
            if not line:
                continue
            tid, text, label = _parse_row(line, lineno, path)
            if not tid:
                raise CorpusError(f"{path}:{lineno}: empty id")
            if label not in schema.classes:
                raise CorpusError(f"{path}:{lineno}: unknown label {label!r}")
            examples.append(LabeledExample(tid, tuple(preprocess(text)), schema.index(label), origin))
    return examples


def write_tsv(path, examples: Iterable[LabeledExample], schema: LabelSchema) -> None:
    """Write examples with their token text; re-reading is lossless because
    preprocessing is idempotent on its own output."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(f"{ex.id}\t{' '.join(ex.tokens)}\t{schema.classes[ex.label]}\n")


def merge_to_binary(examples: Sequence[LabeledExample], schema: LabelSchema,
                    not_informative: str = NOT_INFORMATIVE):
    if not_informative not in schema.classes:
        raise CorpusError(f"class {not_informative!r} not in schema {list(schema.classes)}")
    neg = schema.index(not_informative)
    merged = [replace(ex, label=1 if ex.label == neg else 0) for ex in examples]
    return merged, BINARY_SCHEMA


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(examples: Sequence[LabeledExample], fractions=(0.70, 0.10, 0.20),
                     seed: int = 0, schema: LabelSchema | None = None) -> DatasetSplit:
    """Per-class shuffle-and-cut split.

    For a class with ``n`` examples, validation and test receive
    ``round(f * n)`` examples each and train keeps the remainder.  Each split
    is returned in input order.
    """
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise CorpusError(f"split fractions must be three values summing to 1, got {fractions}")
    by_class: dict[int, list[int]] = {}
    for i, ex in enumerate(examples):
        by_class.setdefault(ex.label, []).append(i)
    rng = Rng(seed)
    assignment = {}
    for label in sorted(by_class):
        idx = by_class[label]
        if len(idx) < 3:
            name = schema.classes[label] if schema else str(label)
            raise CorpusError(f"class {name!r} has {len(idx)} examples; at least 3 are needed to split")
        order = [idx[j] for j in rng.permutation(len(idx))]
        n_val = _round_half_up(fractions[1] * len(idx))
        n_test = _round_half_up(fractions[2] * len(idx))
        n_train = len(idx) - n_val - n_test
        for j, i in enumerate(order):
            assignment[i] = 0 if j < n_train else (1 if j < n_train + n_val else 2)
    parts: list[list[LabeledExample]] = [[], [], []]
    for i, ex in enumerate(examples):
        parts[assignment[i]].append(ex)
    return DatasetSplit(*parts)


@dataclass
class Vocabulary:
    """Token index with ``<pad>`` = 0 and ``<unk>`` = 1."""

    itos: list[str]
    freq: list[int]
    coverage_percent: float = 100.0
    stoi: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __getitem__(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def to_dict(self) -> dict:
        return {"itos": self.itos, "freq": self.freq, "coverage_percent": self.coverage_percent}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(list(d["itos"]), [int(f) for f in d["freq"]], float(d["coverage_percent"]))

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, (tok, f) in enumerate(zip(self.itos, self.freq)):
                fh.write(f"{tok}\t{i}\t{f}\n")


def build_vocab(train: Sequence[LabeledExample], P: float = 90.0) -> Vocabulary:
    """Keep the ``ceil(P/100 * #types)`` most frequent word types.

    Ties in frequency are broken by the token string, ascending.
    """
    if not 0 < P <= 100:
        raise CorpusError(f"vocabulary percent must be in (0, 100], got {P}")
    if not train:
        raise CorpusError("cannot build a vocabulary from an empty training set")
    counts = Counter(t for ex in train for t in ex.tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = math.ceil(P * len(ranked) / 100.0 - 1e-9)
    kept = ranked[:keep]
    return Vocabulary([PAD, UNK] + [t for t, _ in kept], [0, 0] + [c for _, c in kept], float(P))
