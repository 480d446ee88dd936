"""Synthetic crisis-tweet generator.

Each class owns a keyword vocabulary; every token of a tweet is a class
keyword with probability ``1 - noise_rate`` and otherwise a word from a noise
vocabulary shared by all classes, so classes are separable by construction.
Raw text is decorated with capitals, URLs, mentions, digits, elongations and
punctuation so that it exercises the preprocessing rules.

``domain`` / ``shift`` give out-of-event style data: with probability
``shift`` a keyword is drawn from a domain-specific list for that class
instead of the shared one.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .corpus import CRISIS_CLASSES
from .numerics import Rng

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kr", "st", "pl")
_VOWELS = ("a", "e", "i", "o", "u")
_CODAS = ("", "n", "r", "s", "l", "m", "k")


def _words(rng: Rng, count: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < count:
        r = rng.next_uint64(5) % 1000
        syll = 2 + int(r[0] % 2)
        w = "".join(
            _ONSETS[int(r[1 + i] % len(_ONSETS))] + _VOWELS[int((r[1 + i] // 7) % 5)]
            for i in range(syll)
        ) + _CODAS[int(r[4] % len(_CODAS))]
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def _pick(rng: Rng, seq: Sequence):
    return seq[int(rng.next_uint64(1)[0] % len(seq))]


def generate_tweets(n: int = 2000, seed: int = 0, classes: Sequence[str] = CRISIS_CLASSES,
                    keywords_per_class: int = 25, noise_words: int = 100, noise_rate: float = 0.2,
                    min_len: int = 6, max_len: int = 16, domain: int = 0, shift: float = 0.0,
                    id_prefix: str = "t") -> list[tuple[str, str, str]]:
    """Return ``(id, raw_text, class_name)`` rows with uniformly drawn classes."""
    lex_rng = Rng(12345)            # lexicon is fixed across seeds and domains
    taken: set[str] = set()
    keywords = {c: _words(lex_rng, keywords_per_class, taken) for c in classes}
    noise = _words(lex_rng, noise_words, taken)
    dom_rng = Rng(777 + domain)
    domain_kw = {c: _words(dom_rng, keywords_per_class, taken) for c in classes}

    rng = Rng(seed).spawn(domain)
    rows = []
    for i in range(n):
        label = classes[int(rng.next_uint64(1)[0] % len(classes))]
        length = min_len + int(rng.next_uint64(1)[0] % (max_len - min_len + 1))
        words = []
        for _ in range(length):
            if rng.random() < noise_rate:
                words.append(_pick(rng, noise))
            elif shift > 0 and rng.random() < shift:
                words.append(_pick(rng, domain_kw[label]))
            else:
                words.append(_pick(rng, keywords[label]))
        rows.append((f"{id_prefix}{domain}_{i:05d}", _decorate(rng, words), label))
    return rows


def _decorate(rng: Rng, words: list[str]) -> str:
    out = []
    for w in words:
        u = rng.random()
        if u < 0.05:
            w = w.capitalize()
        elif u < 0.08:
            w = w[:-1] + w[-1] * 4           # elongation
        elif u < 0.10:
            w = w + _pick(rng, ("!!!", "?", ",", ":", "..."))
        out.append(w)
    u = rng.random()
    if u < 0.2:
        out.append("http://t.co/" + str(int(rng.next_uint64(1)[0] % 99999)))
    elif u < 0.35:
        out.insert(0, "@user" + str(int(rng.next_uint64(1)[0] % 999)))
    elif u < 0.45:
        out.append(str(int(rng.next_uint64(1)[0] % 2030)))
    return " ".join(out)


def write_tweets_tsv(path, rows, header: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write("id\ttext\tlabel\n")
        for tid, text, label in rows:
            fh.write(f"{tid}\t{text}\t{label}\n")


def write_schema(path, classes: Sequence[str] = CRISIS_CLASSES) -> None:
    Path(path).write_text("".join(c + "\n" for c in classes), encoding="utf-8")
