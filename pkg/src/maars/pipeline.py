"""Per-example reranking from raw n-best candidates, and the dataset-level driver."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .corpus_io import NbestCandidate, QAExample, resolve_span
from .errors import UnresolvableSpanError
from .ner import EntityChunk, chunks_by_sentence, entity_word_set, tag_heuristic
from .reranker import (
    CandidateSpan,
    RerankConfig,
    assign_sentences,
    rerank,
    score_sentence,
    select_answer,
    split_cross_sentence_spans,
)
from .segmenter import split_sentences

logger = logging.getLogger(__name__)


@dataclass
class RerankResult:
    example_id: str
    answer: Optional[str]
    reranked: list[CandidateSpan] = field(default_factory=list)
    scores: dict = field(default_factory=dict)  # sentence index -> SentenceScore
    question_words: frozenset = frozenset()
    warnings: list[str] = field(default_factory=list)


def _to_span(example: QAExample, rank: int, cand: NbestCandidate, warnings: list) -> Optional[CandidateSpan]:
    context = example.context
    start, end = cand.char_start, cand.char_end
    if start is not None:
        if end > len(context):
            warnings.append(f"{example.id}: candidate {rank} offsets [{start}, {end}) exceed context; resolving by text")
            start = None
        elif context[start:end].split() != cand.text.split() \
                and context[start:end].lower().split() != cand.text.lower().split():
            warnings.append(f"{example.id}: candidate {rank} text does not match its offsets; resolving by text")
            start = None
    if start is None:
        try:
            start, end = resolve_span(context, cand.text, rank)
        except UnresolvableSpanError as exc:
            warnings.append(f"{example.id}: dropped unresolvable {exc}")
            return None
    return CandidateSpan(example.id, start, end, context[start:end], cand.probability, rank)


def rerank_example(
    example: QAExample,
    candidates: Sequence[NbestCandidate],
    config: RerankConfig = RerankConfig(),
    question_chunks: Optional[Sequence[EntityChunk]] = None,
    context_chunks: Optional[Sequence[EntityChunk]] = None,
    abbreviations: Optional[frozenset] = None,
) -> RerankResult:
    """Resolve, split, assign, score, rerank and select for one example.

    Without supplied chunks the heuristic tagger runs on the question and on
    each candidate sentence.  If every candidate is dropped the answer falls
    back to the raw top-1 text.
    """
    warnings: list[str] = []
    sentences = split_sentences(example.context, abbreviations)
    spans = [s for rank, c in enumerate(candidates) if (s := _to_span(example, rank, c, warnings))]
    spans = assign_sentences(split_cross_sentence_spans(spans, sentences, example.context), sentences)

    if question_chunks is None:
        question_chunks = tag_heuristic(example.question, {0})
    q_words = entity_word_set(question_chunks)

    cand_sentences = sorted({s.sentence_index for s in spans[:config.n]})
    if context_chunks is None:
        sentence_words = {}
        for k in cand_sentences:
            sent = sentences[k]
            text = example.context[sent.char_start:sent.char_end]
            sentence_words[k] = entity_word_set(tag_heuristic(text, {0}))
    else:
        grouped = chunks_by_sentence(context_chunks, sentences)
        sentence_words = {k: entity_word_set(grouped.get(k, ())) for k in cand_sentences}

    reranked = rerank(spans, q_words, sentence_words, config)
    scores = {k: score_sentence(sentence_words[k], q_words, k) for k in cand_sentences}
    if reranked:
        answer = select_answer(reranked)
    elif candidates:
        answer = candidates[0].text
        warnings.append(f"{example.id}: no usable candidate; falling back to base top-1 text")
    else:
        answer = None
        warnings.append(f"{example.id}: empty candidate list")
    return RerankResult(example.id, answer, reranked, scores, q_words, warnings)


def format_table(example: QAExample, result: RerankResult, n: int) -> str:
    """Per-candidate table: base rank, new position, sentence, score, overlap words, text."""
    lines = [f"{example.id}  question entity words: {sorted(result.question_words)}"]
    for pos, cand in enumerate(result.reranked[:n]):
        sc = result.scores.get(cand.sentence_index)
        score = sc.score if sc else 0
        overlap = sorted(sc.overlap_words) if sc else []
        lines.append(f"  #{pos:<2d} base={cand.base_rank:<2d} sent={cand.sentence_index:<2d} "
                     f"score={score} overlap={overlap} text={cand.text!r}")
    return "\n".join(lines)


def _work(job):
    example, candidates, config, q_chunks, c_chunks, abbreviations = job
    return rerank_example(example, candidates, config, q_chunks, c_chunks, abbreviations)


def run_rerank(
    examples: Sequence[QAExample],
    nbest: Mapping[str, Sequence[NbestCandidate]],
    config: RerankConfig = RerankConfig(),
    annotations: Optional[Mapping[tuple[str, str], Sequence[EntityChunk]]] = None,
    abbreviations: Optional[frozenset] = None,
    workers: int = 1,
) -> tuple[dict[str, str], list[RerankResult]]:
    """Rerank every example that has an n-best entry.

    With ``annotations`` (external tagger) missing keys mean "no entities".
    Results come back in dataset order whatever the worker count, and
    warnings are logged from the calling process in that order.
    """
    jobs = []
    for ex in examples:
        if ex.id not in nbest:
            logger.warning("%s: no n-best entry; example left without a prediction", ex.id)
            continue
        if annotations is not None:
            q_chunks = annotations.get((ex.id, "question"), [])
            c_chunks = annotations.get((ex.id, "context"), [])
        else:
            q_chunks = c_chunks = None
        jobs.append((ex, nbest[ex.id], config, q_chunks, c_chunks, abbreviations))

    if workers > 1 and len(jobs) > 1:
        chunksize = max(1, len(jobs) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_work, jobs, chunksize=chunksize))
    else:
        results = [_work(job) for job in jobs]

    by_id = {ex.id: ex for ex in examples}
    predictions = {}
    for res in results:
        for msg in res.warnings:
            logger.warning(msg)
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(format_table(by_id[res.example_id], res, config.n))
        if res.answer is not None:
            predictions[res.example_id] = res.answer
    return predictions, results
