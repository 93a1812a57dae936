"""Readers and writers for SQuAD v1.1 datasets, n-best files, predictions and metrics.

All offsets are character offsets into the raw context string, matching
SQuAD's ``answer_start``.
"""

from __future__ import annotations

import io
import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import IO, Any, Iterable, Mapping, Optional, Union

from .errors import ConfigurationError, FormatError, UnresolvableSpanError, ValidationError

logger = logging.getLogger(__name__)

Source = Union[str, os.PathLike, IO[bytes], IO[str]]
Sink = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class QAExample:
    id: str
    context: str
    question: str
    gold_answers: tuple[tuple[str, int], ...]
    title: str = ""

    @property
    def gold_texts(self) -> list[str]:
        return [text for text, _ in self.gold_answers]


@dataclass(frozen=True)
class NbestCandidate:
    """One raw candidate as serialized by the base model, before offset resolution."""

    text: str
    probability: float = 0.0
    char_start: Optional[int] = None
    char_end: Optional[int] = None


# id -> candidates, best first
NbestFile = dict[str, list[NbestCandidate]]


@dataclass(frozen=True)
class DatasetPartition:
    clean_ids: frozenset[str] = field(default_factory=frozenset)
    adversarial_ids: frozenset[str] = field(default_factory=frozenset)


def _source_name(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return os.fspath(source)
    return getattr(source, "name", "<stream>")


def _read_text(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8-sig")
    return raw


def _reject_duplicate_keys(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise FormatError(f"duplicate key {key!r}")
        obj[key] = value
    return obj


def _parse_json(source: Source, *, unique_keys: bool = False) -> Any:
    name = _source_name(source)
    text = _read_text(source)
    hook = _reject_duplicate_keys if unique_keys else None
    try:
        return json.loads(text, object_pairs_hook=hook)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except FormatError as exc:
        raise FormatError(f"{name}: {exc}") from exc


def _expect(obj: Any, kind: type, where: str, name: str) -> Any:
    if not isinstance(obj, kind):
        raise FormatError(f"{name}: expected {kind.__name__} at {where}, got {type(obj).__name__}")
    return obj


def load_squad(source: Source) -> list[QAExample]:
    """Load a SQuAD v1.1 JSON file into a flat list of examples.

    Every gold answer is checked against its context; a mismatch raises
    :class:`ValidationError` naming the question id.
    """
    name = _source_name(source)
    doc = _expect(_parse_json(source), dict, "$", name)
    articles = _expect(doc.get("data"), list, "$.data", name)
    examples: list[QAExample] = []
    seen: set[str] = set()
    for ai, article in enumerate(articles):
        where = f"$.data[{ai}]"
        _expect(article, dict, where, name)
        title = article.get("title", "")
        for pi, para in enumerate(_expect(article.get("paragraphs"), list, f"{where}.paragraphs", name)):
            pwhere = f"{where}.paragraphs[{pi}]"
            _expect(para, dict, pwhere, name)
            context = _expect(para.get("context"), str, f"{pwhere}.context", name)
            for qi, qa in enumerate(_expect(para.get("qas"), list, f"{pwhere}.qas", name)):
                qwhere = f"{pwhere}.qas[{qi}]"
                _expect(qa, dict, qwhere, name)
                qid = _expect(qa.get("id"), str, f"{qwhere}.id", name)
                question = _expect(qa.get("question"), str, f"{qwhere}.question", name)
                if not qid:
                    raise ValidationError(f"{name}: empty id at {qwhere}")
                if qid in seen:
                    raise ValidationError(f"{name}: duplicate example id {qid!r}")
                seen.add(qid)
                golds = []
                for gi, ans in enumerate(_expect(qa.get("answers"), list, f"{qwhere}.answers", name)):
                    gwhere = f"{qwhere}.answers[{gi}]"
                    _expect(ans, dict, gwhere, name)
                    text = _expect(ans.get("text"), str, f"{gwhere}.text", name)
                    start = ans.get("answer_start")
                    if not isinstance(start, int) or isinstance(start, bool):
                        raise FormatError(f"{name}: expected int at {gwhere}.answer_start")
                    if start < 0 or context[start:start + len(text)] != text:
                        raise ValidationError(
                            f"{name}: example {qid!r}: answer {text!r} not found at offset {start}"
                        )
                    golds.append((text, start))
                examples.append(QAExample(qid, context, question, tuple(golds), title))
    return examples


def dump_squad(examples: Iterable[QAExample], version: str = "1.1") -> dict:
    """Inverse of :func:`load_squad`; examples sharing (title, context) share a paragraph."""
    articles: dict[str, dict[str, list]] = {}
    for ex in examples:
        paragraphs = articles.setdefault(ex.title, {})
        paragraphs.setdefault(ex.context, []).append({
            "answers": [{"answer_start": start, "text": text} for text, start in ex.gold_answers],
            "id": ex.id,
            "question": ex.question,
        })
    data = []
    for title, paragraphs in articles.items():
        data.append({
            "paragraphs": [{"context": ctx, "qas": qas} for ctx, qas in paragraphs.items()],
            "title": title,
        })
    return {"data": data, "version": version}


def write_squad(examples: Iterable[QAExample], sink: Sink) -> None:
    _write_json(dump_squad(examples), sink)


def load_nbest(source: Source, max_candidates: Optional[int] = None) -> NbestFile:
    """Load an n-best file ``{id: [{"text", "probability", "char_start"?, "char_end"?}, ...]}``.

    List order is kept as the base ranking.  Extra keys per candidate (logits
    and so on) are ignored.  ``max_candidates`` truncates every list.
    """
    name = _source_name(source)
    doc = _expect(_parse_json(source, unique_keys=True), dict, "$", name)
    nbest: NbestFile = {}
    for qid, items in doc.items():
        _expect(items, list, f"$[{qid!r}]", name)
        if max_candidates is not None:
            items = items[:max_candidates]
        cands = []
        for i, item in enumerate(items):
            where = f"$[{qid!r}][{i}]"
            _expect(item, dict, where, name)
            text = item.get("text")
            if not isinstance(text, str) or not text:
                raise FormatError(f"{name}: empty or missing candidate text at {where}")
            prob = item.get("probability", 0.0)
            if isinstance(prob, bool) or not isinstance(prob, (int, float)) or not math.isfinite(prob) or prob < 0:
                raise FormatError(f"{name}: probability must be a finite number >= 0 at {where}")
            offsets = []
            for key in ("char_start", "char_end"):
                value = item.get(key)
                if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 0):
                    raise FormatError(f"{name}: {key} must be a non-negative integer at {where}")
                offsets.append(value)
            start, end = offsets
            if (start is None) != (end is None):
                raise FormatError(f"{name}: char_start and char_end must be given together at {where}")
            if start is not None and end <= start:
                raise FormatError(f"{name}: char_end must exceed char_start at {where}")
            cands.append(NbestCandidate(text, float(prob), start, end))
        nbest[qid] = cands
    return nbest


def base_top1(nbest: Mapping[str, list[NbestCandidate]]) -> dict[str, str]:
    """The base model's own predictions: first candidate text per id."""
    return {qid: cands[0].text for qid, cands in nbest.items() if cands}


def _flexible_pattern(text: str) -> str:
    return r"\s+".join(re.escape(part) for part in text.split())


def resolve_span(context: str, candidate_text: str, rank_hint: int = -1) -> tuple[int, int]:
    """Character range of the first occurrence of ``candidate_text`` in ``context``.

    Tried in order: exact match, match with any whitespace run treated as
    equivalent, then the same case-insensitively (uncased models often emit
    lowercased text).  The first strategy that hits wins.
    """
    if not candidate_text or not candidate_text.strip():
        raise UnresolvableSpanError(f"empty candidate text (rank {rank_hint})")
    pos = context.find(candidate_text)
    if pos >= 0:
        return pos, pos + len(candidate_text)
    pattern = _flexible_pattern(candidate_text)
    for flags in (0, re.IGNORECASE):
        m = re.search(pattern, context, flags)
        if m:
            return m.start(), m.end()
    raise UnresolvableSpanError(f"candidate {candidate_text!r} (rank {rank_hint}) not found in context")


def partition_dataset(
    examples: Iterable[QAExample],
    clean_reference: Optional[Iterable[str]] = None,
    id_pattern: Optional[str] = None,
) -> DatasetPartition:
    """Split example ids into clean and adversarial sets.

    Exactly one selector must be given: ``clean_reference`` (ids of the
    unmodified dataset; everything else is adversarial) or ``id_pattern``
    (a regex searched in each id; matches are adversarial).
    """
    if (clean_reference is None) == (id_pattern is None):
        raise ConfigurationError("exactly one of clean_reference / id_pattern must be supplied")
    ids = [ex.id for ex in examples]
    if clean_reference is not None:
        ref = set(clean_reference)
        clean = frozenset(i for i in ids if i in ref)
    else:
        try:
            rx = re.compile(id_pattern)
        except re.error as exc:
            raise ConfigurationError(f"invalid id pattern {id_pattern!r}: {exc}") from exc
        clean = frozenset(i for i in ids if not rx.search(i))
    return DatasetPartition(clean, frozenset(ids) - clean)


def read_id_list(source: Source) -> set[str]:
    """Ids from either a SQuAD JSON file or a plain list with one id per line."""
    text = _read_text(source)
    if text.lstrip().startswith("{"):
        return {ex.id for ex in load_squad(io.StringIO(text))}
    return {line.strip() for line in text.splitlines() if line.strip()}


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_json(obj: Any, sink: Sink) -> None:
    text = _dumps(obj)
    if isinstance(sink, (str, os.PathLike)):
        try:
            with open(sink, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {os.fspath(sink)}: {exc.strerror}") from exc
    else:
        sink.write(text)


def write_predictions(predictions: Mapping[str, str], sink: Sink) -> None:
    _write_json(dict(predictions), sink)


def load_predictions(source: Source) -> dict[str, str]:
    name = _source_name(source)
    doc = _expect(_parse_json(source, unique_keys=True), dict, "$", name)
    for qid, text in doc.items():
        _expect(text, str, f"$[{qid!r}]", name)
    return doc


def round1(value: float) -> float:
    """Round half-up to one decimal, the way results tables print."""
    return float(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def metrics_to_dict(report) -> dict:
    out: dict[str, Any] = {}
    for name in ("original", "adversarial", "mean"):
        part = getattr(report, name)
        out[name] = {
            "count": part.count,
            "em": round1(part.em),
            "em_raw": part.em,
            "f1": round1(part.f1),
            "f1_raw": part.f1,
        }
    out["counts"] = {
        "adversarial": report.adversarial.count,
        "original": report.original.count,
        "total": report.mean.count,
    }
    return out


def write_metrics(report, sink: Sink) -> None:
    _write_json(metrics_to_dict(report), sink)
