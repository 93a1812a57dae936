"""Post-hoc reranking of extractive QA answers by question/sentence entity overlap."""

from .corpus_io import (
    DatasetPartition,
    NbestCandidate,
    QAExample,
    load_nbest,
    load_squad,
    partition_dataset,
    resolve_span,
    write_metrics,
    write_predictions,
)
from .evaluator import MetricsReport, aggregate, exact_match, f1, normalize_answer
from .ner import EntityChunk, entity_word_set, load_annotations, tag_heuristic
from .pipeline import rerank_example, run_rerank
from .reranker import (
    CandidateSpan,
    RerankConfig,
    SentenceScore,
    assign_sentences,
    rerank,
    score_sentence,
    select_answer,
    split_cross_sentence_spans,
)
from .segmenter import SentenceSpan, Token, split_sentences, tokenize
from .triggers import BUILTIN_TRIGGERS, TriggerSpec, build_trigger_dataset, classify_question, inject

__version__ = "0.1.0"
