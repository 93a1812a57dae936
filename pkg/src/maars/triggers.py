"""Universal-trigger adversarial datasets: append (or prepend) a fixed distractor per question type."""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional

from .corpus_io import QAExample
from .errors import FormatError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

QUESTION_TYPES = ("Who", "When", "Where", "Why")
OTHER = "Other"
POSITIONS = ("append", "prepend")
ID_SUFFIX = "-trigger"


@dataclass(frozen=True)
class TriggerSpec:
    question_type: str
    trigger_text: str
    target_answer: str

    def __post_init__(self):
        if self.question_type not in QUESTION_TYPES:
            raise ValueError(f"unknown question type {self.question_type!r}")
        if not self.target_answer or self.target_answer not in self.trigger_text:
            raise ValueError(f"target answer {self.target_answer!r} does not occur in trigger {self.trigger_text!r}")


# Stored exactly as published, stray tokens and the typographic apostrophe included.
BUILTIN_TRIGGERS: Mapping[str, TriggerSpec] = {
    spec.question_type: spec
    for spec in (
        TriggerSpec("Who", "how ] ] there donald trump ; who who did", "donald trump"),
        TriggerSpec("When", "; its time about january 2014 when may did british", "january 2014"),
        TriggerSpec("Where", "; : ’ where new york may area where they", "new york"),
        TriggerSpec("Why", "why how ; known because : to kill american people .", "to kill american people"),
    )
}

_INTERROGATIVE = re.compile(r"\b(who|when|where|why)\b", re.IGNORECASE)


def classify_question(question: str) -> str:
    """Type of the first whole-word who/when/where/why in ``question``, else ``"Other"``."""
    m = _INTERROGATIVE.search(question)
    return m.group(1).capitalize() if m else OTHER


def inject(
    example: QAExample,
    spec: TriggerSpec,
    position: str = "append",
    force: bool = False,
) -> Optional[QAExample]:
    """Return a copy of ``example`` whose context carries ``spec``'s trigger.

    Appending leaves gold offsets alone; prepending shifts them by the
    trigger length plus the separating space.  Questions whose type does not
    match the trigger are skipped (``None``) unless ``force`` is set.
    """
    if position not in POSITIONS:
        raise ValueError(f"position must be one of {POSITIONS}, got {position!r}")
    qtype = classify_question(example.question)
    if qtype != spec.question_type and not force:
        logger.warning("skipping %s: question type %s does not match %s trigger",
                       example.id, qtype, spec.question_type)
        return None
    if position == "append":
        context = example.context + " " + spec.trigger_text
        golds = example.gold_answers
    else:
        shift = len(spec.trigger_text) + 1
        context = spec.trigger_text + " " + example.context
        golds = tuple((text, start + shift) for text, start in example.gold_answers)
    return replace(example, id=example.id + ID_SUFFIX, context=context, gold_answers=golds)


def build_trigger_dataset(
    examples: Iterable[QAExample],
    trigger_table: Mapping[str, TriggerSpec] = BUILTIN_TRIGGERS,
    position: str = "append",
) -> list[QAExample]:
    """Inject every example whose question type has a trigger; drop the rest."""
    out = []
    skipped = 0
    for ex in examples:
        spec = trigger_table.get(classify_question(ex.question))
        if spec is None:
            skipped += 1
            continue
        out.append(inject(ex, spec, position))
    if skipped:
        logger.info("%d examples without a routable question type excluded", skipped)
    if not out:
        logger.warning("no example could be routed to a trigger; dataset is empty")
    return out


def dump_trigger_table(table: Mapping[str, TriggerSpec]) -> str:
    rows = [
        {"type": s.question_type, "trigger_text": s.trigger_text, "target_answer": s.target_answer}
        for s in table.values()
    ]
    return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"


def parse_trigger_table(rows) -> dict[str, TriggerSpec]:
    if isinstance(rows, dict):
        rows = rows.get("trigger", rows.get("triggers"))
    if not isinstance(rows, list):
        raise FormatError("trigger table must be a list of {type, trigger_text, target_answer}")
    table = {}
    for i, row in enumerate(rows):
        try:
            spec = TriggerSpec(row["type"], row["trigger_text"], row["target_answer"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"trigger table row {i}: {exc}") from exc
        if spec.question_type in table:
            raise FormatError(f"trigger table row {i}: duplicate type {spec.question_type}")
        table[spec.question_type] = spec
    return table


def load_trigger_table(path: str | os.PathLike) -> dict[str, TriggerSpec]:
    """Read a custom table from JSON (a list of rows) or TOML (``[[trigger]]`` rows)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if os.fspath(path).endswith(".toml"):
        try:
            doc = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise FormatError(f"{os.fspath(path)}: {exc}") from exc
    else:
        try:
            doc = json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{os.fspath(path)}: {exc}") from exc
    return parse_trigger_table(doc)
