"""SQuAD v1.1 exact match / F1 and the clean, adversarial and weighted-mean report."""

from __future__ import annotations

import logging
import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus_io import DatasetPartition, QAExample

logger = logging.getLogger(__name__)

_PUNCT = frozenset(string.punctuation)
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def _em(pred: str, gold: str) -> int:
    return int(normalize_answer(pred) == normalize_answer(gold))


def _f1(pred: str, gold: str) -> float:
    pred_toks = normalize_answer(pred).split()
    gold_toks = normalize_answer(gold).split()
    if not pred_toks and not gold_toks:
        return 1.0
    if not pred_toks or not gold_toks:
        return 0.0
    common = Counter(pred_toks) & Counter(gold_toks)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_toks)
    recall = overlap / len(gold_toks)
    return 2 * precision * recall / (precision + recall)


def exact_match(pred: str, golds: Sequence[str]) -> int:
    return max(_em(pred, g) for g in golds)


def f1(pred: str, golds: Sequence[str]) -> float:
    return max(_f1(pred, g) for g in golds)


@dataclass(frozen=True)
class PartitionScore:
    f1: float
    em: float
    count: int


@dataclass(frozen=True)
class MetricsReport:
    original: PartitionScore
    adversarial: PartitionScore
    mean: PartitionScore


def weighted_mean(a: float, count_a: int, b: float, count_b: int) -> float:
    total = count_a + count_b
    if total == 0:
        return 0.0
    return (count_a * a + count_b * b) / total


def _score_part(examples: Iterable[QAExample], predictions: Mapping[str, str]) -> PartitionScore:
    f1s: list[float] = []
    ems: list[int] = []
    count = 0
    for ex in examples:
        count += 1
        pred = predictions.get(ex.id)
        if pred is None:
            logger.warning("no prediction for %s; scored 0", ex.id)
            continue
        golds = ex.gold_texts
        if not golds:
            logger.warning("example %s has no gold answers; scored 0", ex.id)
            continue
        f1s.append(f1(pred, golds))
        ems.append(exact_match(pred, golds))
    if count == 0:
        return PartitionScore(0.0, 0.0, 0)
    # fsum keeps the result independent of example order
    return PartitionScore(100.0 * math.fsum(f1s) / count, 100.0 * sum(ems) / count, count)


def aggregate(
    examples: Sequence[QAExample],
    predictions: Mapping[str, str],
    partition: DatasetPartition,
) -> MetricsReport:
    """Average EM/F1 (in percent) over the clean and adversarial parts, plus their count-weighted mean.

    Examples in neither part of ``partition`` are not scored.
    """
    known = {ex.id for ex in examples}
    for qid in sorted(set(predictions) - known):
        logger.warning("prediction for unknown id %s ignored", qid)
    clean = [ex for ex in examples if ex.id in partition.clean_ids]
    adv = [ex for ex in examples if ex.id in partition.adversarial_ids]
    o = _score_part(clean, predictions)
    a = _score_part(adv, predictions)
    mean = PartitionScore(
        weighted_mean(o.f1, o.count, a.f1, a.count),
        weighted_mean(o.em, o.count, a.em, a.count),
        o.count + a.count,
    )
    return MetricsReport(o, a, mean)
