"""Deterministic synthetic SQuAD-style examples and n-best lists for load testing."""

from __future__ import annotations

import random
from typing import Optional

from .corpus_io import NbestCandidate, NbestFile, QAExample

_FIRST = ["Anna", "Boris", "Carla", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas",
          "Karim", "Lena", "Marco", "Nadia", "Oskar", "Priya", "Rafael", "Sofia", "Tomas", "Yara"]
_LAST = ["Keller", "Moreau", "Novak", "Okafor", "Petrov", "Quinn", "Rossi", "Silva", "Tanaka", "Varga"]
_PLACES = ["Lisbon", "Denver", "Santa Clara", "New Orleans", "Kraków", "Porto Alegre", "Leeds",
           "Osaka", "Tromsø", "Valparaíso", "San Diego", "Hamburg"]
_ORGS = ["Northern Rail Company", "Valley Institute", "Harbor Bank", "United Chess League",
         "Royal Botanic Society", "Eastern Film Council"]
_MONTHS = ["January", "March", "May", "July", "September", "November"]
_VERBS = ["visited", "founded", "described", "left", "praised", "rebuilt", "reported on", "moved to"]
_FILLER = ["the", "old", "river", "market", "during", "a", "long", "winter", "with", "several",
           "friends", "and", "after", "that", "small", "museum", "near", "new", "bridge", "season"]


def _entity(rng: random.Random) -> str:
    kind = rng.randrange(4)
    if kind == 0:
        return f"{rng.choice(_FIRST)} {rng.choice(_LAST)}"
    if kind == 1:
        return rng.choice(_PLACES)
    if kind == 2:
        return rng.choice(_ORGS)
    return f"{rng.choice(_MONTHS)} {rng.randint(1900, 2020)}"


def _sentence(rng: random.Random, subject: str, obj: str) -> str:
    filler = " ".join(rng.choice(_FILLER) for _ in range(rng.randint(3, 8)))
    return f"In {rng.randint(1800, 2020)}, {subject} {rng.choice(_VERBS)} {obj} {filler}."


def make_example(rng: random.Random, idx: int, n_sentences: int = 5) -> tuple[QAExample, list[tuple[int, int]]]:
    pairs = [(_entity(rng), _entity(rng)) for _ in range(n_sentences)]
    sentences = [_sentence(rng, s, o) for s, o in pairs]
    context = " ".join(sentences)
    answer_sent = rng.randrange(n_sentences)
    subject, obj = pairs[answer_sent]
    question = f"Who or what did {subject} {rng.choice(_VERBS)}?"
    offset = sum(len(s) + 1 for s in sentences[:answer_sent])
    start = context.index(obj, offset)
    ex = QAExample(f"synth-{idx:06d}", context, question, ((obj, start),), title="synthetic")
    # candidate-worthy word ranges
    ranges = []
    pos = 0
    for word in context.split(" "):
        ranges.append((pos, pos + len(word.rstrip(".,"))))
        pos += len(word) + 1
    return ex, [(start, start + len(obj))] + ranges


def make_dataset(
    n_examples: int,
    n_candidates: int = 40,
    seed: int = 0,
    n_sentences: int = 5,
) -> tuple[list[QAExample], NbestFile]:
    """``n_examples`` synthetic examples with ``n_candidates`` candidates each.

    The gold span sits at a random rank among the first five; about half of
    the candidates carry offsets and the rest are text-only.  A few span two
    sentences.
    """
    rng = random.Random(seed)
    examples = []
    nbest: NbestFile = {}
    for i in range(n_examples):
        ex, ranges = make_example(rng, i, n_sentences)
        gold = ranges[0]
        words = ranges[1:]
        spans: list[tuple[int, int]] = []
        seen = {gold}
        while len(spans) < n_candidates - 1:
            a = rng.randrange(len(words))
            b = min(len(words) - 1, a + rng.randrange(3))
            span = (words[a][0], words[b][1])
            if span[1] <= span[0] or span in seen:
                continue
            seen.add(span)
            spans.append(span)
        spans.insert(rng.randrange(5), gold)
        probs = sorted((rng.random() for _ in spans), reverse=True)
        total = sum(probs)
        cands = []
        for (s, e), p in zip(spans, probs):
            if rng.random() < 0.5:
                cands.append(NbestCandidate(ex.context[s:e], p / total, s, e))
            else:
                cands.append(NbestCandidate(ex.context[s:e], p / total))
        examples.append(ex)
        nbest[ex.id] = cands
    return examples, nbest


def nbest_to_json(nbest: NbestFile, with_offsets: Optional[bool] = None) -> dict:
    out = {}
    for qid, cands in nbest.items():
        rows = []
        for c in cands:
            row = {"probability": c.probability, "text": c.text}
            if c.char_start is not None and with_offsets is not False:
                row["char_start"] = c.char_start
                row["char_end"] = c.char_end
            rows.append(row)
        out[qid] = rows
    return out
