"""Embedding table: random initialisation, word2vec text loading/export and
token lookup with fixed-length padding."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import PAD_ID, UNK_ID, Vocabulary
from .numerics import Rng


class EmbeddingFormatError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    matrix: np.ndarray
    trainable: bool = True
    warnings: list[str] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]


def random_init(vocab: Vocabulary, dim: int = 300, seed: int = 0,
                scale: float = 0.25) -> EmbeddingTable:
    if dim <= 0:
        raise ValueError(f"embedding dimension must be positive, got {dim}")
    rng = Rng(seed)
    matrix = rng.uniform(-scale, scale, (len(vocab), dim))
    matrix[PAD_ID] = 0.0
    return EmbeddingTable(matrix)


def load_pretrained(path, vocab: Vocabulary, seed: int = 0,
                    scale: float = 0.25) -> EmbeddingTable:
    """Initialise from a word2vec text file.

    Vocabulary tokens found in the file take the file's vector; every other
    row (including ``<unk>``) keeps its ``random_init`` value for ``seed``.
    """
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 2 or not all(h.isdigit() for h in head):
            raise EmbeddingFormatError(f"{path}:1: header must be 'count dim'")
        dim = int(head[1])
        if dim <= 0:
            raise EmbeddingFormatError(f"{path}:1: dimension must be positive")
        table = random_init(vocab, dim, seed, scale)
        hits = 0
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if not parts or parts == [""]:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: vector for {word!r} has {len(values)} values, expected {dim}")
            i = vocab.stoi.get(word)
            if i is None or i in (PAD_ID, UNK_ID):
                continue
            try:
                table.matrix[i] = np.array(values, dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric vector value") from None
            hits += 1
    if hits == 0:
        table.warnings.append(f"no vocabulary token found in {path}; table is random")
    return table


def save_word2vec(table: EmbeddingTable, vocab: Vocabulary, path,
                  include_reserved: bool = False) -> None:
    """Export in word2vec text format with 17 significant digits."""
    rows = [i for i in range(len(vocab)) if include_reserved or i not in (PAD_ID, UNK_ID)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(rows)} {table.dim}\n")
        for i in rows:
            fh.write(vocab.itos[i] + " " + " ".join(f"{v:.17g}" for v in table.matrix[i]) + "\n")


def encode(tokens: Sequence[str], vocab: Vocabulary, t_max: int) -> np.ndarray:
    """Index vector of length ``t_max``: truncated, PAD-filled, UNK for OOV."""
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    ids = np.full(t_max, PAD_ID, dtype=np.int64)
    enc = vocab.encode(tokens[:t_max])
    ids[: len(enc)] = enc
    return ids


def lookup(table: EmbeddingTable, tokens: Sequence[str], vocab: Vocabulary,
           t_max: int) -> np.ndarray:
    return table.matrix[encode(tokens, vocab, t_max)]
