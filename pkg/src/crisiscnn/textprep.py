"""Tweet normalisation and tokenisation.

``normalize`` applies, in order: lowercasing, URL -> ``HTTP``, @-mention ->
``userID``, elongation truncation to two characters, digit -> ``D`` and
removal of punctuation other than ``. ; ? !`` (each removed character becomes
one space).

Lowercasing works per run of letters: a run is left as is when, apart from
embedded ``HTTP``/``userID`` placeholders, its only cased characters are
``D``; otherwise the whole run is lowercased.  Runs produced by normalisation
always pass that test and the elongation step never touches ``D`` runs or
whitespace, which together make the function idempotent (``"2015"`` ->
``"DDDD"`` survives a second pass while ``"NEEDED"`` still becomes
``"needed"``).
"""
from __future__ import annotations

import re

TokenSeq = list[str]

KEEP_PUNCT = frozenset(".;?!")
PLACEHOLDERS = ("HTTP", "userID", "D")

_WORD_PLACEHOLDER_RE = re.compile(r"HTTP|userID")
_LETTER_RUN_RE = re.compile(r"[^\W\d_]+")
_URL_RE = re.compile(r"(?:[a-z][a-z0-9+.\-]*://\S+|www\.\S+)", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_ELONG_RE = re.compile(r"([^D\s])\1{2,}")
_DIGIT_RE = re.compile(r"\d")
_SPLIT_PUNCT_RE = re.compile(r"[.;?!]|[^.;?!]+")


def _lower_run(m: re.Match) -> str:
    run = m.group(0)
    rest = _WORD_PLACEHOLDER_RE.sub("", run)
    if all(c == "D" or c.lower() == c for c in rest):
        return run
    return run.lower()


def _lower_keep_placeholders(text: str) -> str:
    return _LETTER_RUN_RE.sub(_lower_run, text)


def _strip_punct(text: str) -> str:
    return "".join(
        c if (c.isalpha() or c.isspace() or c in KEEP_PUNCT) else " " for c in text
    )


def normalize(text: str) -> str:
    text = _lower_keep_placeholders(text)
    text = _URL_RE.sub("HTTP", text)
    text = _MENTION_RE.sub("userID", text)
    text = _ELONG_RE.sub(r"\1\1", text)
    text = _DIGIT_RE.sub("D", text)
    return _strip_punct(text)


def tokenize(normalized: str) -> TokenSeq:
    """Whitespace split, with each kept punctuation mark as its own token."""
    tokens: TokenSeq = []
    for chunk in normalized.split():
        tokens.extend(_SPLIT_PUNCT_RE.findall(chunk))
    return tokens


def preprocess(text: str) -> TokenSeq:
    return tokenize(normalize(text))
