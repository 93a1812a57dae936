"""Exit criteria.  Each test carries an ``acceptance`` marker; the conftest
prints one PASS/FAIL/SKIP line per criterion at the end of the run."""

import itertools
import json
import os
import random
import string
import time
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from maars.cli import main
from maars.corpus_io import (
    DatasetPartition,
    NbestCandidate,
    QAExample,
    base_top1,
    load_nbest,
    load_squad,
    partition_dataset,
    read_id_list,
    write_squad,
)
from maars.evaluator import aggregate, exact_match, f1, weighted_mean
from maars.pipeline import rerank_example
from maars.reranker import CandidateSpan, RerankConfig, rerank, select_answer
from maars.synth import make_dataset, nbest_to_json
from maars.triggers import BUILTIN_TRIGGERS, build_trigger_dataset, dump_trigger_table

WEIGHTED_MEAN = "weighted-mean reproduction of published results (+/-0.05)"
TRIGGERS = "trigger fidelity"
PROPERTIES = "reranker property suite"
ELWAY = "quarterback distractor fixture"
EVALUATOR = "evaluator oracle equivalence"
FAILURES = "failure-mode regression fixtures"
THROUGHPUT = "throughput (10k x 40, 4 workers, < 60 s)"
END_TO_END = "conditional end-to-end (user-supplied AddSent n-best)"


# ---------------------------------------------------------------- weighted mean

CLEAN, ADVERSARIAL = 1000, 787

# (row, (original F1, EM), (adversarial F1, EM), (printed mean F1, EM))
RESULT_TRIPLES = [
    ("BERT-S AddSent", (89.4, 82.1), (40.9, 35.9), (68.0, 61.7)),
    ("BERT-S AddOneSent", (89.4, 82.1), (54.6, 48.4), (74.1, 67.2)),
    ("BERT-S+QAInfoMax AddSent", (87.7, 82.1), (41.8, 37.2), (67.5, 62.3)),
    ("BERT-S+QAInfoMax AddOneSent", (87.7, 82.1), (55.5, 49.7), (73.5, 67.8)),
    ("BERT-S+MAARS AddSent", (80.2, 71.1), (61.2, 53.6), (71.8, 63.4)),
    ("BERT-S+MAARS AddOneSent", (80.2, 71.1), (71.3, 63.5), (76.3, 67.8)),
    ("BiDAF AddSent", (72.4, 62.4), (21.4, 16.0), (49.9, 42.0)),
    ("BiDAF+SLN AddSent", (72.3, 62.4), (22.8, 17.2), (50.5, 42.5)),
    ("BiDAF+MAARS AddSent", (72.3, 62.9), (45.4, 38.0), (60.4, 51.9)),
]

CELLS = [(row, metric, o[i], a[i], m[i])
         for row, o, a, m in RESULT_TRIPLES for i, metric in enumerate(("F1", "EM"))]


@pytest.mark.acceptance(WEIGHTED_MEAN)
@pytest.mark.parametrize("row,metric,orig,adv,printed", CELLS, ids=[f"{c[0]} {c[1]}" for c in CELLS])
def test_weighted_mean_reproduces_printed_mean(row, metric, orig, adv, printed):
    t0 = time.perf_counter()
    computed = weighted_mean(orig, CLEAN, adv, ADVERSARIAL)
    assert time.perf_counter() - t0 < 1.0
    assert abs(computed - printed) <= 0.05, f"{row} {metric}: {computed:.4f} vs printed {printed}"


@pytest.mark.acceptance(WEIGHTED_MEAN)
def test_aggregate_uses_count_weighted_mean():
    examples = [QAExample(f"c{i}", "p q", "?", (("p q", 0),)) for i in range(4)]
    examples += [QAExample(f"x{i}", "p q", "?", (("p q", 0),)) for i in range(3)]
    preds = {f"c{i}": "p q r" if i < 2 else ("p q" if i == 2 else "p") for i in range(4)}
    preds.update({f"x{i}": "zzz" for i in range(3)})
    part = partition_dataset(examples, id_pattern="^x")
    report = aggregate(examples, preds, part)
    # per clean example F1: 0.8, 0.8, 1.0, 2/3 -> mean 0.8166...
    clean_f1 = 100 * (0.8 + 0.8 + 1.0 + 2 / 3) / 4
    assert report.original.f1 == pytest.approx(clean_f1)
    assert report.mean.f1 == pytest.approx(4 * clean_f1 / 7)
    assert (report.original.count, report.adversarial.count, report.mean.count) == (4, 3, 7)


# ---------------------------------------------------------------- triggers

PUBLISHED_TRIGGERS = {
    "Who": "how ] ] there donald trump ; who who did",
    "When": "; its time about january 2014 when may did british",
    "Where": "; : ’ where new york may area where they",
    "Why": "why how ; known because : to kill american people .",
}


def _sample_100(fixtures):
    path = os.environ.get("MAARS_SQUAD_DEV")
    if path:
        return load_squad(path)[:100]
    return load_squad(fixtures / "squad_sample_100.json")


@pytest.mark.acceptance(TRIGGERS)
def test_trigger_table_is_byte_identical():
    rows = json.loads(dump_trigger_table(BUILTIN_TRIGGERS))
    assert {r["type"]: r["trigger_text"] for r in rows} == PUBLISHED_TRIGGERS
    for qtype, text in PUBLISHED_TRIGGERS.items():
        assert BUILTIN_TRIGGERS[qtype].trigger_text.encode("utf-8") == text.encode("utf-8")
    assert b"\xe2\x80\x99" in BUILTIN_TRIGGERS["Where"].trigger_text.encode("utf-8")
    assert {q: s.target_answer for q, s in BUILTIN_TRIGGERS.items()} == {
        "Who": "donald trump", "When": "january 2014", "Where": "new york", "Why": "to kill american people"}


@pytest.mark.acceptance(TRIGGERS)
@pytest.mark.parametrize("position", ["append", "prepend"])
def test_injected_sample_reloads_cleanly(fixtures, tmp_path, position):
    t0 = time.perf_counter()
    examples = _sample_100(fixtures)
    assert len(examples) == 100
    injected = build_trigger_dataset(examples, BUILTIN_TRIGGERS, position)
    out = tmp_path / "triggered.json"
    write_squad(injected, out)
    reloaded = load_squad(out)  # raises on any offset mismatch
    assert sorted(reloaded, key=lambda e: e.id) == sorted(injected, key=lambda e: e.id)
    assert len(reloaded) > 0
    for ex in reloaded:
        assert ex.id.endswith("-trigger")
    assert time.perf_counter() - t0 < 5.0


# ---------------------------------------------------------------- reranker properties

def oracle_rerank(cands, score_of, n):
    """Exhaustive reference: the ordering of the first n whose (-score, base_rank) sequence is minimal."""
    head, tail = list(cands[:n]), list(cands[n:])
    best = min(itertools.permutations(head),
               key=lambda perm: [(-score_of[c.sentence_index], c.base_rank) for c in perm])
    return list(best) + tail


VOCAB = ["denver", "broncos", "super", "bowl", "50", "afc", "carolina", "panthers"]


def random_instance(rng, max_candidates):
    k = rng.randint(1, max_candidates)
    n_sent = rng.randint(1, 4)
    cands = [CandidateSpan("q", 3 * i, 3 * i + 2, f"c{i}", rng.choice([0.0, 0.1, 0.25, 0.5, 0.9]), i,
                           rng.randrange(n_sent)) for i in range(k)]
    words = {s: frozenset(rng.sample(VOCAB, rng.randint(0, 4))) for s in range(n_sent)}
    question = frozenset(rng.sample(VOCAB, rng.randint(0, 4)))
    return cands, words, question, RerankConfig(rng.randint(1, k + 2))


def check_properties(cands, words, question, config):
    out = rerank(cands, question, words, config)
    score = {s: len(w & question) for s, w in words.items()}
    key = lambda c: (c.char_start, c.char_end, c.probability)  # noqa: E731

    # permutation
    assert sorted(map(key, out)) == sorted(map(key, cands))
    # tie stability
    for a, b in itertools.combinations(out[:config.n], 2):
        if score[a.sentence_index] == score[b.sentence_index]:
            assert a.base_rank < b.base_rank
    # top-score dominance
    assert all(score[out[0].sentence_index] >= score[c.sentence_index] for c in cands[:config.n])
    # n=1 identity
    assert rerank(cands, question, words, RerankConfig(1)) == list(cands)
    assert select_answer(rerank(cands, question, words, RerankConfig(1))) == cands[0].text
    # probability-scale invariance
    for factor in (0.5, 3.0, 1e6):
        scaled = [CandidateSpan(c.example_id, c.char_start, c.char_end, c.text, c.probability * factor,
                                c.base_rank, c.sentence_index) for c in cands]
        assert [(c.char_start, c.char_end) for c in rerank(scaled, question, words, config)] == \
            [(c.char_start, c.char_end) for c in out]
    # empty question entities: no-op
    assert rerank(cands, frozenset(), words, config) == list(cands)
    # brute force
    if min(config.n, len(cands)) <= 6:
        assert out == oracle_rerank(cands, score, config.n)
    return out


@pytest.mark.acceptance(PROPERTIES)
def test_property_suite_seeded_1000():
    rng = random.Random(20210419)
    t0 = time.perf_counter()
    for _ in range(1000):
        check_properties(*random_instance(rng, 6))
    for _ in range(200):
        check_properties(*random_instance(rng, 15))
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.acceptance(PROPERTIES)
@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.randoms(use_true_random=False), st.integers(1, 8))
def test_property_suite_hypothesis(rnd, max_candidates):
    check_properties(*random_instance(rnd, max_candidates))


# ---------------------------------------------------------------- quarterback distractor

ELWAY_ANSWER = "John Elway led the Denver Broncos to victory in Super Bowl XXXIII at the age of 38."
ELWAY_DISTRACTOR = "Quarterback Jeff Dean had jersey number 37 in Champ Bowl XXXIV."
ELWAY_QUESTION = "What is the name of the quarterback who was 38 in Super Bowl XXXIII?"


def elway():
    context = ELWAY_ANSWER + " " + ELWAY_DISTRACTOR
    ex = QAExample("elway", context, ELWAY_QUESTION, (("John Elway", 0),))
    cands = [NbestCandidate("Jeff Dean", 0.62), NbestCandidate("John Elway", 0.31),
             NbestCandidate("Champ Bowl XXXIV", 0.04)]
    return ex, cands


@pytest.mark.acceptance(ELWAY)
def test_elway_gold_selected():
    ex, cands = elway()
    res = rerank_example(ex, cands)
    # hand oracle: question words {38, super, bowl, xxxiii}
    #   answer sentence shares all 4, distractor shares only {bowl}
    assert res.question_words == {"38", "super", "bowl", "xxxiii"}
    assert (res.scores[0].score, res.scores[1].score) == (4, 1)
    assert res.answer == "John Elway"


@pytest.mark.acceptance(ELWAY)
def test_elway_n1_selects_distractor():
    ex, cands = elway()
    assert rerank_example(ex, cands, RerankConfig(1)).answer == "Jeff Dean"


# ---------------------------------------------------------------- evaluator oracle

# (prediction, golds, hand EM, hand F1)
HAND_SCORED = [
    ("donald trump", ["Donald Trump"], 1, Fraction(1)),
    ("new york city", ["york city"], 0, Fraction(4, 5)),          # P 2/3, R 1
    ("paris", ["london", "paris"], 1, Fraction(1)),
    ("the Denver Broncos", ["Denver Broncos"], 1, Fraction(1)),   # article dropped
    ("Broncos", ["Denver Broncos", "The Broncos"], 1, Fraction(1)),
    ("Denver", ["Denver Broncos", "Carolina Panthers"], 0, Fraction(2, 3)),  # P 1, R 1/2
    ("Santa Clara, California", ["Levi's Stadium", "Santa Clara"], 0, Fraction(4, 5)),
    ("January 2014", ["2014"], 0, Fraction(2, 3)),
    ("to kill american people", ["kill american people"], 0, Fraction(6, 7)),  # P 3/4, R 1
    ("", ["Paris"], 0, Fraction(0)),
]


@pytest.mark.acceptance(EVALUATOR)
@pytest.mark.parametrize("pred,golds,em,f1_expected", HAND_SCORED)
def test_hand_scored_examples(pred, golds, em, f1_expected):
    assert exact_match(pred, golds) == em
    assert f1(pred, golds) == pytest.approx(float(f1_expected), abs=1e-12)


@pytest.mark.acceptance(EVALUATOR)
def test_hand_scored_aggregate():
    examples, preds = [], {}
    for i, (pred, golds, _, _) in enumerate(HAND_SCORED):
        context = " | ".join(golds)
        examples.append(QAExample(f"e{i}", context, "?", tuple((g, context.index(g)) for g in golds)))
        preds[f"e{i}"] = pred
    report = aggregate(examples, preds, DatasetPartition(frozenset(p for p in preds), frozenset()))
    expected_f1 = 100 * sum(r[3] for r in HAND_SCORED) / len(HAND_SCORED)
    assert report.original.em == 40.0
    assert report.original.f1 == pytest.approx(float(expected_f1), abs=1e-9)


@pytest.mark.acceptance(EVALUATOR)
def test_f1_self_match_random_strings():
    rng = random.Random(7)
    alphabet = string.ascii_letters + string.digits + string.punctuation + "  \t"
    for _ in range(100):
        x = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 30)))
        assert f1(x, [x]) == 1.0
        assert exact_match(x, [x]) == 1


# ---------------------------------------------------------------- failure modes
# Each fixture asserts the WRONG answer: these document known blind spots.

@pytest.mark.acceptance(FAILURES)
def test_failure_wrong_top_candidate():
    context = ("The Patriots defeated the Atlanta Falcons in February 2017. "
               "Tom Brady played Super Bowl LI in Houston with his family watching.")
    question = "Which team did Tom Brady beat in Super Bowl LI in Houston?"
    ex = QAExample("fail-a", context, question, (("Atlanta Falcons", context.index("Atlanta Falcons")),))
    cands = [NbestCandidate("Atlanta Falcons", 0.7), NbestCandidate("Houston", 0.2)]
    res = rerank_example(ex, cands)
    assert (res.scores[0].score, res.scores[1].score) == (0, 6)
    assert res.answer == "Houston"
    assert exact_match(res.answer, ex.gold_texts) == 0
    assert base_top1({"fail-a": cands})["fail-a"] == "Atlanta Falcons"  # base model was right


@pytest.mark.acceptance(FAILURES)
def test_failure_question_type_blindness():
    context = ("About 2.4 million people took part in the vote. "
               "The Scottish devolution referendum in 1997 was held in Scotland.")
    question = "How many people voted in the Scottish devolution referendum in 1997?"
    ex = QAExample("fail-b", context, question, (("2.4 million", context.index("2.4 million")),))
    cands = [NbestCandidate("2.4 million", 0.7), NbestCandidate("Scottish devolution referendum", 0.2)]
    res = rerank_example(ex, cands)
    assert res.question_words == {"scottish", "1997"}
    assert res.answer == "Scottish devolution referendum"  # a name, for a "How many" question
    assert f1(res.answer, ex.gold_texts) == 0.0


@pytest.mark.acceptance(FAILURES)
def test_failure_similar_spans_in_one_sentence():
    context = ("In 2010, Brazil exported steel to China and the US, with the US importing the most. "
               "Argentina exported beef.")
    question = "Which country imported the most steel from Brazil in 2010?"
    ex = QAExample("fail-c", context, question, (("the US", context.index("the US")),))
    cands = [NbestCandidate("China", 0.5), NbestCandidate("the US", 0.4), NbestCandidate("Argentina", 0.05)]
    res = rerank_example(ex, cands)
    # both spans share the top sentence, so their base order survives
    assert [c.text for c in res.reranked[:2]] == ["China", "the US"]
    assert res.answer == "China"
    assert exact_match(res.answer, ex.gold_texts) == 0


# ---------------------------------------------------------------- throughput

@pytest.fixture(scope="module")
def synthetic_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    examples, nbest = make_dataset(10_000, 40, seed=11)
    write_squad(examples, root / "dataset.json")
    (root / "nbest.json").write_text(json.dumps(nbest_to_json(nbest)))
    return root


@pytest.mark.acceptance(THROUGHPUT)
def test_pipeline_10k_under_60s_and_worker_independent(synthetic_files):
    root = synthetic_files
    outputs = {}
    for workers in (4, 1):
        metrics, preds = root / f"m{workers}.json", root / f"p{workers}.json"
        t0 = time.perf_counter()
        code = main(["pipeline", "--dataset", str(root / "dataset.json"), "--nbest", str(root / "nbest.json"),
                     "--partition-regex", "^synth-0", "--workers", str(workers),
                     "--out", str(metrics), "--predictions-out", str(preds)])
        elapsed = time.perf_counter() - t0
        assert code == 0
        if workers == 4:
            assert elapsed < 60.0, f"{elapsed:.1f}s"
        outputs[workers] = (metrics.read_bytes(), preds.read_bytes())
    assert outputs[4] == outputs[1]
    assert json.loads(outputs[4][0])["counts"]["total"] == 10_000


# ---------------------------------------------------------------- end to end

@pytest.mark.acceptance(END_TO_END)
def test_addsent_improves_adversarial_f1(tmp_path):
    dataset = os.environ.get("MAARS_ADDSENT_DATASET")
    nbest_path = os.environ.get("MAARS_ADDSENT_NBEST")
    clean_ref = os.environ.get("MAARS_ADDSENT_CLEAN_REF")
    if not (dataset and nbest_path and clean_ref):
        pytest.skip("set MAARS_ADDSENT_DATASET, MAARS_ADDSENT_NBEST and MAARS_ADDSENT_CLEAN_REF")
    metrics = tmp_path / "m.json"
    assert main(["pipeline", "--dataset", dataset, "--nbest", nbest_path, "--partition-ref", clean_ref,
                 "--out", str(metrics)]) == 0
    maars_adv = json.loads(metrics.read_text())["adversarial"]["f1_raw"]
    examples = load_squad(dataset)
    part = partition_dataset(examples, clean_reference=read_id_list(clean_ref))
    base = aggregate(examples, base_top1(load_nbest(nbest_path)), part)
    assert maars_adv > base.adversarial.f1
