"""Entity-overlap reranking of a base model's n-best answer spans.

Each candidate span is tied to the context sentence that contains it.
Sentences are scored by how many entity words they share with the question,
and candidates are stably reordered by the score of their sentence, so the
base model's order breaks every tie.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import InvariantError, NoAnswerError
from .segmenter import SentenceSpan

DEFAULT_N = 10
DEFAULT_MAX_CANDIDATES = 40


@dataclass(frozen=True)
class CandidateSpan:
    example_id: str
    char_start: int
    char_end: int
    text: str
    probability: float
    base_rank: int
    sentence_index: Optional[int] = None


@dataclass(frozen=True)
class SentenceScore:
    sentence_index: int
    score: int
    overlap_words: frozenset


@dataclass(frozen=True)
class RerankConfig:
    n: int = DEFAULT_N

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")


def split_cross_sentence_spans(
    spans: Sequence[CandidateSpan],
    sentences: Sequence[SentenceSpan],
    context: str,
) -> list[CandidateSpan]:
    """Break every span that crosses a sentence boundary into per-sentence pieces.

    Pieces take their parent's slot in the ranking, left to right, and keep
    its probability.  Pieces that are empty or whitespace-only are dropped.
    Ranks are renumbered 0, 1, 2, ... afterwards.
    """
    out = []
    for span in spans:
        if not (0 <= span.char_start < span.char_end <= len(context)):
            raise InvariantError(
                f"{span.example_id}: span [{span.char_start}, {span.char_end}) outside context of length {len(context)}"
            )
        pieces = []
        for sent in sentences:
            if sent.char_end <= span.char_start:
                continue
            if sent.char_start >= span.char_end:
                break
            lo = max(span.char_start, sent.char_start)
            hi = min(span.char_end, sent.char_end)
            if lo < hi and context[lo:hi].strip():
                pieces.append((lo, hi))
        for lo, hi in pieces:
            out.append(CandidateSpan(span.example_id, lo, hi, context[lo:hi], span.probability, len(out)))
    return out


def assign_sentences(spans: Sequence[CandidateSpan], sentences: Sequence[SentenceSpan]) -> list[CandidateSpan]:
    starts = [s.char_start for s in sentences]
    out = []
    for span in spans:
        k = bisect.bisect_right(starts, span.char_start) - 1
        if k < 0 or span.char_end > sentences[k].char_end:
            raise InvariantError(
                f"{span.example_id}: span [{span.char_start}, {span.char_end}) is not inside a single sentence"
            )
        out.append(CandidateSpan(span.example_id, span.char_start, span.char_end, span.text,
                                 span.probability, span.base_rank, sentences[k].index))
    return out


def score_sentence(sentence_words: frozenset, question_words: frozenset, sentence_index: int = 0) -> SentenceScore:
    overlap = frozenset(sentence_words & question_words)
    return SentenceScore(sentence_index, len(overlap), overlap)


def rerank(
    candidates: Sequence[CandidateSpan],
    question_words: frozenset,
    sentence_word_sets: Mapping[int, frozenset],
    config: RerankConfig = RerankConfig(),
) -> list[CandidateSpan]:
    """Reorder the first ``config.n`` candidates by their sentence's overlap score.

    ``candidates`` must be in base order with sentences assigned.  The sort is
    stable, so equal scores keep base order; candidates past ``n`` follow
    unchanged.
    """
    head = list(candidates[:config.n])
    tail = list(candidates[config.n:])
    scores = {}
    for cand in head:
        k = cand.sentence_index
        if k not in scores:
            scores[k] = score_sentence(sentence_word_sets.get(k, frozenset()), question_words, k).score
    head.sort(key=lambda c: -scores[c.sentence_index])
    return head + tail


def select_answer(reranked: Sequence[CandidateSpan]) -> str:
    if not reranked:
        raise NoAnswerError("no candidates left to select from")
    return reranked[0].text
