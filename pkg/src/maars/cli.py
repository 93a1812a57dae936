"""Command-line entry point: ``maars {rerank,evaluate,inject,tag,pipeline}``.

Options may also come from ``--config FILE`` (JSON or TOML, keys named like
the long flags with dashes or underscores); flags given on the command line
win over the file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import corpus_io, ner, triggers
from .corpus_io import load_nbest, load_predictions, load_squad, partition_dataset, read_id_list
from .errors import ConfigurationError, MaarsError
from .evaluator import aggregate
from .pipeline import run_rerank
from .reranker import DEFAULT_MAX_CANDIDATES, DEFAULT_N, RerankConfig
from .segmenter import default_abbreviations, load_abbreviations

logger = logging.getLogger("maars")

DEFAULTS = {
    "n": DEFAULT_N,
    "max_candidates": DEFAULT_MAX_CANDIDATES,
    "tagger": "heuristic",
    "position": "append",
    "workers": 1,
    "verbose": False,
    "force": False,
}

# options whose values are files read by the command
INPUT_PATHS = ("dataset", "nbest", "annotations", "predictions", "partition_ref", "triggers", "abbreviations")
OUTPUT_PATHS = ("out", "predictions_out")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or TOML file with default option values")
    p.add_argument("--verbose", "-v", action="store_true", help="debug logging, including per-candidate score tables")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--abbreviations", help="abbreviation list for sentence splitting, one per line")


def _add_rerank_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="SQuAD v1.1 JSON")
    p.add_argument("--nbest", help="n-best JSON from the base model")
    p.add_argument("--annotations", help="entity annotation JSON (for --tagger external)")
    p.add_argument("--tagger", choices=("heuristic", "external"), help="entity source (default heuristic)")
    p.add_argument("--n", type=int, help=f"candidates considered for reranking (default {DEFAULT_N})")
    p.add_argument("--max-candidates", type=int,
                   help=f"candidates loaded per question (default {DEFAULT_MAX_CANDIDATES})")


def _add_partition_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--partition-ref", help="clean dataset (SQuAD JSON or id list); other ids are adversarial")
    p.add_argument("--partition-regex", help="ids matching this regex are adversarial")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maars", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    kw = dict(argument_default=argparse.SUPPRESS)

    p = sub.add_parser("rerank", help="rerank n-best lists and write predictions", **kw)
    _add_rerank_opts(p)
    p.add_argument("--out", help="predictions JSON to write")
    _add_common(p)

    p = sub.add_parser("evaluate", help="score predictions (EM/F1, clean/adversarial/mean)", **kw)
    p.add_argument("--dataset", help="SQuAD v1.1 JSON")
    p.add_argument("--predictions", help="predictions JSON {id: text}")
    _add_partition_opts(p)
    p.add_argument("--out", help="metrics JSON to write")
    _add_common(p)

    p = sub.add_parser("inject", help="build a universal-trigger adversarial dataset", **kw)
    p.add_argument("--dataset", help="SQuAD v1.1 JSON")
    p.add_argument("--out", help="SQuAD JSON to write")
    p.add_argument("--position", choices=triggers.POSITIONS, help="where the trigger goes (default append)")
    p.add_argument("--triggers", help="custom trigger table (JSON or TOML)")
    p.add_argument("--trigger-type", choices=triggers.QUESTION_TYPES,
                   help="inject only this type's trigger instead of routing by question type")
    p.add_argument("--force", action="store_true",
                   help="with --trigger-type, inject into every question regardless of its type")
    _add_common(p)

    p = sub.add_parser("tag", help="write heuristic entity annotations for a dataset", **kw)
    p.add_argument("--dataset", help="SQuAD v1.1 JSON")
    p.add_argument("--out", help="annotation JSON to write")
    _add_common(p)

    p = sub.add_parser("pipeline", help="rerank then evaluate", **kw)
    _add_rerank_opts(p)
    _add_partition_opts(p)
    p.add_argument("--out", help="metrics JSON to write")
    p.add_argument("--predictions-out", help="also write the predictions here")
    _add_common(p)
    return parser


def _load_config_file(path: str) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read().decode("utf-8")
    if path.endswith(".toml"):
        doc = triggers.tomllib.loads(raw)
    else:
        doc = json.loads(raw)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config must be a table/object")
    return {key.replace("-", "_"): value for key, value in doc.items()}


def resolve_options(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    explicit = vars(args)
    merged = dict(DEFAULTS)
    if "config" in explicit:
        merged.update(_load_config_file(explicit["config"]))
    merged.update(explicit)
    return argparse.Namespace(**merged)


def _require(opts, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if not getattr(opts, n, None)]
    if missing:
        raise ConfigurationError(f"{opts.command}: missing required option(s) {', '.join(missing)}")


def validate(opts: argparse.Namespace) -> None:
    """Reject inconsistent options before anything is read or written."""
    cmd = opts.command
    _require(opts, "out")
    if cmd in ("rerank", "pipeline"):
        _require(opts, "dataset", "nbest")
        if not isinstance(opts.n, int) or opts.n < 1:
            raise ConfigurationError(f"--n must be >= 1, got {opts.n}")
        if opts.max_candidates < opts.n:
            raise ConfigurationError(f"--max-candidates ({opts.max_candidates}) must be >= --n ({opts.n})")
        if opts.tagger == "external" and not getattr(opts, "annotations", None):
            raise ConfigurationError("--tagger external requires --annotations")
        if opts.tagger == "heuristic" and getattr(opts, "annotations", None):
            raise ConfigurationError("--annotations given but --tagger is heuristic; pass --tagger external")
    elif cmd == "evaluate":
        _require(opts, "dataset", "predictions")
    else:
        _require(opts, "dataset")
    if cmd in ("evaluate", "pipeline") and getattr(opts, "partition_ref", None) and getattr(opts, "partition_regex", None):
        raise ConfigurationError("--partition-ref and --partition-regex are mutually exclusive")
    if cmd == "inject" and opts.force and not getattr(opts, "trigger_type", None):
        raise ConfigurationError("--force needs --trigger-type")
    if opts.workers < 1:
        raise ConfigurationError("--workers must be >= 1")

    paths = {}
    for name in INPUT_PATHS + OUTPUT_PATHS:
        value = getattr(opts, name, None)
        if value:
            real = os.path.realpath(value)
            if real in paths:
                raise ConfigurationError(f"--{name.replace('_', '-')} and --{paths[real].replace('_', '-')} "
                                         f"point to the same file {value}")
            paths[real] = name


def _abbreviations(opts):
    path = getattr(opts, "abbreviations", None)
    return load_abbreviations(path) if path else default_abbreviations()


def _partition(opts, examples):
    if getattr(opts, "partition_ref", None):
        return partition_dataset(examples, clean_reference=read_id_list(opts.partition_ref))
    if getattr(opts, "partition_regex", None):
        return partition_dataset(examples, id_pattern=opts.partition_regex)
    logger.info("no partition selector; every example counts as original")
    return partition_dataset(examples, clean_reference=[ex.id for ex in examples])


def _rerank(opts):
    examples = load_squad(opts.dataset)
    nbest = load_nbest(opts.nbest, max_candidates=opts.max_candidates)
    annotations = ner.load_annotations(opts.annotations, examples) if opts.tagger == "external" else None
    predictions, _ = run_rerank(examples, nbest, RerankConfig(opts.n), annotations,
                                _abbreviations(opts), opts.workers)
    return examples, predictions


def cmd_rerank(opts) -> None:
    _, predictions = _rerank(opts)
    corpus_io.write_predictions(predictions, opts.out)


def cmd_evaluate(opts) -> None:
    examples = load_squad(opts.dataset)
    predictions = load_predictions(opts.predictions)
    report = aggregate(examples, predictions, _partition(opts, examples))
    corpus_io.write_metrics(report, opts.out)


def cmd_pipeline(opts) -> None:
    examples, predictions = _rerank(opts)
    if getattr(opts, "predictions_out", None):
        corpus_io.write_predictions(predictions, opts.predictions_out)
    report = aggregate(examples, predictions, _partition(opts, examples))
    corpus_io.write_metrics(report, opts.out)


def cmd_inject(opts) -> None:
    examples = load_squad(opts.dataset)
    table = triggers.load_trigger_table(opts.triggers) if getattr(opts, "triggers", None) else triggers.BUILTIN_TRIGGERS
    ttype = getattr(opts, "trigger_type", None)
    if ttype:
        if ttype not in table:
            raise ConfigurationError(f"trigger table has no {ttype} entry")
        out = [ex2 for ex in examples
               if (ex2 := triggers.inject(ex, table[ttype], opts.position, force=opts.force)) is not None]
    else:
        out = triggers.build_trigger_dataset(examples, table, opts.position)
    corpus_io.write_squad(out, opts.out)


def cmd_tag(opts) -> None:
    from .segmenter import split_sentences

    examples = load_squad(opts.dataset)
    abbreviations = _abbreviations(opts)
    annotations = {}
    for ex in examples:
        chunks = ner.tag_example(ex, split_sentences(ex.context, abbreviations))
        annotations[(ex.id, "question")] = chunks["question"]
        annotations[(ex.id, "context")] = chunks["context"]
    corpus_io._write_json(ner.dump_annotations(annotations), opts.out)


COMMANDS = {
    "rerank": cmd_rerank,
    "evaluate": cmd_evaluate,
    "inject": cmd_inject,
    "tag": cmd_tag,
    "pipeline": cmd_pipeline,
}


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        opts = resolve_options(argv)
        logging.basicConfig(level=logging.DEBUG if opts.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        validate(opts)
    except (ConfigurationError, OSError, ValueError) as exc:
        return _fail(exc, 2)
    try:
        COMMANDS[opts.command](opts)
    except (MaarsError, OSError, ValueError) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
