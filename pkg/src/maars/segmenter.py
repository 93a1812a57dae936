"""Rule-based sentence splitting and word tokenization with character offsets."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional


@dataclass(frozen=True)
class SentenceSpan:
    index: int
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Token:
    surface: str
    char_start: int
    char_end: int


def parse_abbreviations(lines: Iterable[str]) -> frozenset[str]:
    out = set()
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            out.add(line.lower())
    return frozenset(out)


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    text = resources.files("maars").joinpath("data/abbreviations.txt").read_text(encoding="utf-8")
    return parse_abbreviations(text.splitlines())


def load_abbreviations(path: str | os.PathLike) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return parse_abbreviations(fh)


# terminal punctuation, optional closing quotes/brackets, then whitespace
_BOUNDARY = re.compile(r"[.!?]+[\"'”’)\]]*\s+")
_OPENERS = "\"'“‘(["
_INITIAL = re.compile(r"[A-Z]\.")


def _is_abbreviation(text: str, punct_end: int, abbreviations: frozenset[str]) -> bool:
    # word ending in the terminal period, e.g. "Dr." or "U.S."
    start = punct_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:punct_end].lstrip(_OPENERS)
    if not word.endswith("."):
        return False
    return word.lower() in abbreviations or _INITIAL.fullmatch(word) is not None


def split_sentences(text: str, abbreviations: Optional[frozenset[str]] = None) -> list[SentenceSpan]:
    """Split ``text`` into sentence spans.

    A boundary is a run of ``.``/``!``/``?`` (plus closing quotes) followed by
    whitespace and then an uppercase letter or a digit, possibly behind an
    opening quote.  Periods ending a known abbreviation or a single-letter
    initial ("J.") never split.  Spans exclude surrounding whitespace, and the
    tail of the text is always a sentence.
    """
    if abbreviations is None:
        abbreviations = default_abbreviations()
    cuts = []
    for m in _BOUNDARY.finditer(text):
        nxt = m.end()
        while nxt < len(text) and text[nxt] in _OPENERS:
            nxt += 1
        if nxt >= len(text) or not (text[nxt].isupper() or text[nxt].isdigit()):
            continue
        punct = m.group().rstrip()
        punct_end = m.start() + len(punct)
        if text[m.start()] == "." and len(punct.rstrip("\"'”’)]")) == 1 \
                and _is_abbreviation(text, m.start() + 1, abbreviations):
            continue
        cuts.append((punct_end, m.end()))

    spans = []
    pos = 0
    for end, resume in cuts + [(len(text), len(text))]:
        seg_start, seg_end = pos, end
        while seg_start < seg_end and text[seg_start].isspace():
            seg_start += 1
        while seg_end > seg_start and text[seg_end - 1].isspace():
            seg_end -= 1
        if seg_start < seg_end:
            spans.append(SentenceSpan(len(spans), seg_start, seg_end))
        pos = resume
    return spans


# a word runs from its first to its last alphanumeric character; any other
# non-space character is a token by itself
_TOKEN = re.compile(r"[^\W_](?:\S*[^\W_])?|\S")


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization with leading/trailing punctuation split off.

    Each stripped punctuation character becomes its own token; characters
    inside a word (hyphens, apostrophes, internal periods) stay attached.
    """
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN.finditer(text)]
