"""Named-entity chunks and the entity word sets compared during reranking.

Two sources of chunks are supported: :func:`tag_heuristic`, a small
deterministic capitalization/number tagger, and annotation files produced
by any external tagger (:func:`load_annotations`).  Either way the
reranker only sees :func:`entity_word_set` of the chunks.
"""

from __future__ import annotations

import bisect
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .corpus_io import QAExample, Source, _expect, _parse_json, _source_name
from .errors import ValidationError
from .segmenter import SentenceSpan, Token, default_abbreviations, split_sentences, tokenize

logger = logging.getLogger(__name__)

LABELS = frozenset({"PER", "ORG", "LOC", "MISC", "NUM", "DATE"})
FIELDS = ("question", "context")

WordSet = frozenset  # of normalized words

MONTHS = frozenset({
    "January", "February", "March", "April", "May", "June", "July",
    "August", "September", "October", "November", "December",
})

# Capitalized function words that open sentences and questions; never part of a chunk.
_LEADING_STOPWORDS = frozenset({
    "a", "an", "the", "this", "that", "these", "those", "it", "its", "i",
    "he", "she", "they", "we", "you", "his", "her", "their", "our", "my",
    "who", "whom", "whose", "what", "which", "when", "where", "why", "how",
    "in", "on", "at", "of", "for", "from", "by", "with", "to", "as", "after",
    "before", "during", "since", "about", "into", "under", "over", "between",
    "and", "or", "but", "if", "while", "although", "because", "so", "there",
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "would",
    "should", "will", "has", "have", "had", "name", "according", "besides",
    "mr", "mrs", "ms", "dr", "prof",
})

_ORG_WORDS = frozenset({
    "university", "college", "institute", "school", "company", "corporation",
    "corp", "inc", "ltd", "association", "council", "party", "church", "league",
    "club", "bank", "agency", "committee", "department", "ministry", "army",
    "navy", "society", "foundation", "federation", "union", "court", "museum",
})
_PERSON_TITLES = frozenset({"mr", "mrs", "ms", "dr", "prof", "sir", "king", "queen", "pope", "president", "saint"})
_LOCATION_PREPS = frozenset({"in", "at", "near", "from", "across", "throughout"})


@dataclass(frozen=True)
class EntityChunk:
    char_start: int
    char_end: int
    label: str
    words: tuple[str, ...] = ()


def make_chunk(text: str, char_start: int, char_end: int, label: str) -> EntityChunk:
    words = tuple(t.surface for t in tokenize(text[char_start:char_end]))
    return EntityChunk(char_start, char_end, label, words)


_NON_ALNUM = re.compile(r"[\W_]+")


def normalize_word(word: str) -> str:
    return _NON_ALNUM.sub("", word.lower())


def entity_word_set(chunks: Iterable[EntityChunk]) -> WordSet:
    """Union of normalized words over ``chunks`` (lowercased, punctuation removed)."""
    out = set()
    for chunk in chunks:
        for word in chunk.words:
            norm = normalize_word(word)
            if norm:
                out.add(norm)
    return frozenset(out)


def _is_capitalized(tok: Token) -> bool:
    return tok.surface[0].isupper()


def _is_number(tok: Token) -> bool:
    s = tok.surface
    return s[0].isdigit() and s[-1].isdigit() and all(c.isdigit() or c in ",." for c in s)


def _is_year(tok: Token) -> bool:
    return len(tok.surface) == 4 and tok.surface.isdigit()


def _is_day(tok: Token) -> bool:
    return tok.surface.isdigit() and 1 <= int(tok.surface) <= 31 and len(tok.surface) <= 2


def _abbrev_period(tokens: Sequence[Token], j: int) -> bool:
    # "." glued to "Dr"/"U.S"/"J" and followed by another capitalized token
    tok = tokens[j]
    if tok.surface != "." or j + 1 >= len(tokens) or not _is_capitalized(tokens[j + 1]):
        return False
    prev = tokens[j - 1]
    if prev.char_end != tok.char_start or not _is_capitalized(prev):
        return False
    word = prev.surface + "."
    return word.lower() in default_abbreviations() or (len(prev.surface) == 1 and prev.surface.isalpha())


def _cap_label(tokens: Sequence[Token], lo: int, hi: int) -> str:
    words = [normalize_word(t.surface) for t in tokens[lo:hi]]
    if any(w in _ORG_WORDS for w in words):
        return "ORG"
    back = lo - 1
    while back >= 0 and not tokens[back].surface[0].isalnum():
        back -= 1
    prev = normalize_word(tokens[back].surface) if back >= 0 else ""
    if prev in _PERSON_TITLES:
        return "PER"
    if prev in _LOCATION_PREPS:
        return "LOC"
    return "MISC"


def tag_heuristic(text: str, sentence_starts: Optional[Iterable[int]] = None) -> list[EntityChunk]:
    """Tag ``text`` with capitalization and number rules.

    * maximal runs of capitalized tokens form a chunk, minus leading function
      words ("The", "In", "Which", ...); a lone capitalized token that opens a
      sentence is dropped;
    * month names absorb an adjacent day number and a following year
      ("7 February 2016", "February 7, 2016") into one DATE chunk;
    * remaining numbers are NUM chunks, 4-digit numbers DATE.

    ``sentence_starts`` defaults to the starts found by :func:`split_sentences`.
    """
    tokens = tokenize(text)
    if not tokens:
        return []
    if sentence_starts is None:
        starts = {s.char_start for s in split_sentences(text)}
    else:
        starts = set(sentence_starts)
    starts.add(tokens[0].char_start)

    n = len(tokens)
    initial = [False] * n
    pending = False
    for t, tok in enumerate(tokens):
        pending = pending or tok.char_start in starts
        if pending and tok.surface[0].isalnum():
            initial[t] = True
            pending = False
    taken = [False] * n
    spans: list[tuple[int, int, str]] = []  # token ranges [lo, hi)

    i = 0
    while i < n:
        if not _is_capitalized(tokens[i]):
            i += 1
            continue
        j = i + 1
        while j < n and (_is_capitalized(tokens[j]) or _abbrev_period(tokens, j)):
            j += 1
        lo = i
        if j - i == 1 and initial[i]:
            lo = j
        while lo < j and (normalize_word(tokens[lo].surface) in _LEADING_STOPWORDS
                          or not tokens[lo].surface[0].isalnum()):
            lo += 1
        if lo < j:
            spans.append((lo, j, _cap_label(tokens, lo, j)))
        i = j

    # dates around month names
    merged = []
    for lo, hi, label in spans:
        if tokens[hi - 1].surface in MONTHS:
            k = hi
            if k < n and _is_day(tokens[k]):
                k += 1
                if k + 1 < n and tokens[k].surface == "," and _is_year(tokens[k + 1]):
                    k += 2
            elif k < n and _is_year(tokens[k]):
                k += 1
            if hi - lo == 1 and lo > 0 and _is_day(tokens[lo - 1]) and (not merged or merged[-1][1] < lo):
                lo -= 1
            hi = k
            if all(tokens[t].surface in MONTHS or _is_number(tokens[t]) or tokens[t].surface == ","
                   for t in range(lo, hi)):
                label = "DATE"
        merged.append((lo, hi, label))
    for lo, hi, _ in merged:
        for t in range(lo, hi):
            taken[t] = True

    for t in range(n):
        if not taken[t] and _is_number(tokens[t]):
            merged.append((t, t + 1, "DATE" if _is_year(tokens[t]) else "NUM"))
            taken[t] = True

    merged.sort()
    return [make_chunk(text, tokens[lo].char_start, tokens[hi - 1].char_end, label) for lo, hi, label in merged]


def annotation_key(example_id: str, field: str) -> str:
    return f"{example_id}|{field}"


def load_annotations(source: Source, examples: Iterable[QAExample]) -> dict[tuple[str, str], list[EntityChunk]]:
    """Load externally produced chunks keyed ``"<id>|question"`` / ``"<id>|context"``.

    Offsets are validated against the referenced example text; chunks are
    returned sorted and must not overlap.  Keys for unknown ids are ignored
    with a warning.
    """
    name = _source_name(source)
    doc = _expect(_parse_json(source, unique_keys=True), dict, "$", name)
    by_id = {ex.id: ex for ex in examples}
    out: dict[tuple[str, str], list[EntityChunk]] = {}
    for key, items in doc.items():
        qid, sep, field = key.rpartition("|")
        if not sep or field not in FIELDS:
            raise ValidationError(f"{name}: bad annotation key {key!r}; expected '<id>|question' or '<id>|context'")
        if qid not in by_id:
            logger.warning("%s: annotation for unknown example %r ignored", name, qid)
            continue
        text = getattr(by_id[qid], field)
        _expect(items, list, f"$[{key!r}]", name)
        chunks = []
        for i, item in enumerate(items):
            where = f"$[{key!r}][{i}]"
            _expect(item, dict, where, name)
            start, end, label = item.get("char_start"), item.get("char_end"), item.get("label")
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end)):
                raise ValidationError(f"{name}: {key}: chunk {i} needs integer char_start/char_end")
            if not (0 <= start < end <= len(text)):
                raise ValidationError(
                    f"{name}: {key}: chunk {i} offsets [{start}, {end}) out of range for text of length {len(text)}"
                )
            if label not in LABELS:
                raise ValidationError(f"{name}: {key}: chunk {i} has unknown label {label!r}")
            chunks.append(make_chunk(text, start, end, label))
        chunks.sort(key=lambda c: (c.char_start, c.char_end))
        for a, b in zip(chunks, chunks[1:]):
            if b.char_start < a.char_end:
                raise ValidationError(f"{name}: {key}: overlapping chunks at {b.char_start}")
        out[(qid, field)] = chunks
    return out


def dump_annotations(annotations: Mapping[tuple[str, str], Sequence[EntityChunk]]) -> dict:
    return {
        annotation_key(qid, field): [
            {"char_start": c.char_start, "char_end": c.char_end, "label": c.label} for c in chunks
        ]
        for (qid, field), chunks in sorted(annotations.items())
    }


def tag_example(example: QAExample, sentences: Optional[Sequence[SentenceSpan]] = None) -> dict[str, list[EntityChunk]]:
    if sentences is None:
        sentences = split_sentences(example.context)
    return {
        "question": tag_heuristic(example.question, {0}),
        "context": tag_heuristic(example.context, {s.char_start for s in sentences}),
    }


def chunks_by_sentence(chunks: Iterable[EntityChunk], sentences: Sequence[SentenceSpan]) -> dict[int, list[EntityChunk]]:
    """Group context chunks under the sentence that contains their first character."""
    starts = [s.char_start for s in sentences]
    out: dict[int, list[EntityChunk]] = {}
    for chunk in chunks:
        k = bisect.bisect_right(starts, chunk.char_start) - 1
        if k >= 0 and chunk.char_start < sentences[k].char_end:
            out.setdefault(k, []).append(chunk)
    return out
