import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgrnet.corpus import (
    OUTSIDE,
    ConfigError,
    CorpusFormatError,
    Counts,
    Document,
    EmotionCausePair,
    MalformedDocumentError,
    SynthConfig,
    TagLabel,
    decode_pairs,
    encode_labels,
    evaluate,
    evaluate_corpus,
    generate_synthetic,
    index_to_tag,
    load_corpus,
    num_tag_classes,
    save_corpus,
    tag_to_index,
)

P = EmotionCausePair


def doc_of(n, pairs, doc_id="d"):
    return Document(doc_id, [[f"w{i}"] for i in range(n)], pairs)


# -- codec ---------------------------------------------------------------------


def test_encode_introduction_example():
    labels = encode_labels(doc_of(3, [(3, 2)]), gamma=3)
    assert labels.tag == (OUTSIDE, TagLabel("C", 1), OUTSIDE)
    assert labels.cause == (0, 1, 0)
    assert labels.emotion == (0, 0, 1)
    assert labels.dropped_pairs == 0


def test_encode_without_pairs():
    labels = encode_labels(doc_of(5, []), gamma=2)
    assert labels.tag == (OUTSIDE,) * 5
    assert labels.cause == (0,) * 5 and labels.emotion == (0,) * 5
    assert labels.dropped_pairs == 0


def test_encode_drops_pairs_beyond_span():
    doc = doc_of(4, [(4, 1)])
    labels = encode_labels(doc, gamma=1)
    # brute-force re-derivation of the span rule
    expected_drops = sum(1 for e, c in doc.pairs if abs(e - c) > 1)
    assert labels.dropped_pairs == expected_drops == 1
    assert labels.tag == (OUTSIDE,) * 4
    assert labels.cause == (0, 0, 0, 0)
    assert labels.emotion == (0, 0, 0, 1)


def test_shared_cause_keeps_nearest_then_positive():
    labels = encode_labels(doc_of(6, [(1, 3), (5, 3)]), gamma=3)
    assert labels.tag[2] == TagLabel("C", 2)
    assert labels.dropped_pairs == 1
    assert labels.emotion == (1, 0, 0, 0, 1, 0)
    labels = encode_labels(doc_of(6, [(6, 3), (2, 3)]), gamma=3)
    assert labels.tag[2] == TagLabel("C", -1)


def test_encode_rejects_bad_gamma():
    with pytest.raises(ValueError):
        encode_labels(doc_of(2, []), gamma=0)


@pytest.mark.parametrize("pairs", [[(0, 1)], [(1, 4)], [(2, 1), (2, 1)]])
def test_malformed_documents_rejected(pairs):
    with pytest.raises(MalformedDocumentError):
        doc_of(3, pairs)


def test_empty_clause_rejected():
    with pytest.raises(MalformedDocumentError):
        Document("x", [["a"], []], [])


def test_tag_class_order():
    gamma = 3
    assert num_tag_classes(gamma) == 8
    assert index_to_tag(0, gamma) == OUTSIDE
    assert [index_to_tag(k, gamma).distance for k in range(1, 8)] == list(range(-3, 4))
    for k in range(8):
        assert tag_to_index(index_to_tag(k, gamma), gamma) == k


def test_decode_examples():
    assert decode_pairs([OUTSIDE, TagLabel("C", 1), OUTSIDE], 3) == ({P(3, 2)}, 0)
    assert decode_pairs([OUTSIDE] * 4, 4) == (set(), 0)
    assert decode_pairs([TagLabel("C", -1), OUTSIDE], 2) == (set(), 1)


def test_decode_length_mismatch():
    with pytest.raises(ValueError):
        decode_pairs([OUTSIDE], 2)


@st.composite
def codec_documents(draw):
    gamma = draw(st.integers(1, 4))
    n = draw(st.integers(1, 20))
    causes = draw(st.lists(st.integers(1, n), unique=True, max_size=3))
    pairs = []
    for c in causes:
        d = draw(st.integers(max(-gamma, 1 - c), min(gamma, n - c)))
        pairs.append((c + d, c))
    return doc_of(n, pairs), gamma


@settings(max_examples=300, deadline=None)
@given(codec_documents())
def test_round_trip(case):
    doc, gamma = case
    labels = encode_labels(doc, gamma)
    assert decode_pairs(labels.tag, doc.n) == (doc.pair_set, 0)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 12), st.integers(1, 4), st.data())
def test_codec_never_emits_mixed_tags(n, gamma, data):
    pairs = data.draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)), unique=True, max_size=6))
    labels = encode_labels(doc_of(n, pairs), gamma)
    for tag, cause in zip(labels.tag, labels.cause):
        assert (tag.flag == "C") == (tag.distance is not None)
        assert (tag.flag == "C") == (cause == 1)
        if tag.flag == "C":
            assert abs(tag.distance) <= gamma


# -- metrics -------------------------------------------------------------------


def test_perfect_prediction():
    m = evaluate({P(3, 2)}, {P(3, 2)})
    assert all(v == 1.0 for v in m.as_dict().values())


def test_partially_wrong_prediction():
    m = evaluate({P(3, 2), P(3, 1)}, {P(3, 2)})
    # direct evaluation of the definitions with exact fractions
    f = lambda p, r: 2 * p * r / (p + r)
    assert m.ecpe.precision == 0.5 and m.ecpe.recall == 1.0
    assert m.ecpe.f1 == pytest.approx(float(f(Fraction(1, 2), Fraction(1))), abs=1e-15)
    assert m.ee == (1.0, 1.0, 1.0)
    assert m.ce.precision == 0.5 and m.ce.recall == 1.0
    assert m.ce.f1 == pytest.approx(2 / 3, abs=1e-15)


def test_empty_prediction_is_zero():
    m = evaluate(set(), {P(3, 2)})
    assert all(v == 0.0 for v in m.as_dict().values())


pair_sets = st.sets(st.builds(P, st.integers(1, 6), st.integers(1, 6)), max_size=6)


@settings(max_examples=200, deadline=None)
@given(pair_sets, pair_sets)
def test_precision_recall_swap(pred, gold):
    assert evaluate(pred, gold).ecpe.precision == evaluate(gold, pred).ecpe.recall


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(pair_sets, pair_sets), min_size=1, max_size=8))
def test_micro_average_from_global_counts(docs):
    m = evaluate_corpus([p for p, _ in docs], [g for _, g in docs])
    correct = sum(len(p & g) for p, g in docs)
    predicted = sum(len(p) for p, _ in docs)
    gold = sum(len(g) for _, g in docs)
    precision = correct / predicted if predicted else 0.0
    recall = correct / gold if gold else 0.0
    assert m.ecpe.precision == pytest.approx(precision)
    assert m.ecpe.recall == pytest.approx(recall)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    assert m.ecpe.f1 == pytest.approx(f1)


def test_counts_accumulate():
    c = Counts()
    c.update({P(1, 1)}, {P(1, 1), P(2, 1)})
    c.update(set(), {P(3, 3)})
    assert c.ecpe == [1, 1, 3]


# -- JSONL -----------------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    docs = generate_synthetic(SynthConfig(num_docs=30), seed=5)
    save_corpus(docs, tmp_path / "c.jsonl")
    assert load_corpus(tmp_path / "c.jsonl") == docs


def test_unicode_tokens_survive(tmp_path):
    docs = [Document("z", [["令人", "感动"], ["是"]], [(1, 2)])]
    save_corpus(docs, tmp_path / "u.jsonl")
    assert load_corpus(tmp_path / "u.jsonl") == docs


@pytest.mark.parametrize(
    "pairs",
    [[[0, 1]], [[1, 1], [1, 1]], [[1, 3]], [[1]], [[1.0, 1]]],
)
def test_bad_pairs_rejected_with_line(tmp_path, pairs):
    good = {"id": "a", "clauses": [["x"], ["y"]], "pairs": [[1, 2]]}
    bad = {"id": "b", "clauses": [["x"], ["y"]], "pairs": pairs}
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError) as err:
        load_corpus(path)
    assert err.value.line == 2


def test_parse_error_has_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "clauses": [["x"]], "pairs": []}\n{oops\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_corpus(path)


# -- generator -------------------------------------------------------------------


def test_generator_is_deterministic():
    cfg = SynthConfig(num_docs=50)
    assert generate_synthetic(cfg, 3) == generate_synthetic(cfg, 3)
    assert generate_synthetic(cfg, 3) != generate_synthetic(cfg, 4)


def test_exactly_one_pair_per_document():
    docs = generate_synthetic(SynthConfig(num_docs=500, min_pairs=1, max_pairs=1), 0)
    assert len(docs) == 500
    assert all(len(d.pairs) == 1 for d in docs)


def test_spans_fit_gamma():
    docs = generate_synthetic(SynthConfig(num_docs=500, max_span=3), 1)
    assert max(abs(e - c) for d in docs for e, c in d.pairs) <= 3
    assert sum(encode_labels(d, 3).dropped_pairs for d in docs) == 0


def test_signal_tokens_mark_pairs():
    for doc in generate_synthetic(SynthConfig(num_docs=100), 2):
        for e, c in doc.pairs:
            assert any(t.startswith("emo") for t in doc.clauses[e - 1])
            assert any(t.startswith("cau") for t in doc.clauses[c - 1])
        causes = {c for _, c in doc.pairs}
        for i, clause in enumerate(doc.clauses, start=1):
            if i not in causes:
                assert not any(t.startswith("cau") for t in clause)


def test_generator_respects_clause_range():
    docs = generate_synthetic(SynthConfig(num_docs=200, min_clauses=8, max_clauses=16), 0)
    assert {d.n for d in docs} <= set(range(8, 17))
    assert {len(d.pairs) for d in docs} <= {1, 2}


@pytest.mark.parametrize(
    "kwargs",
    [
        {"max_span": 8, "min_clauses": 8},
        {"min_clauses": 10, "max_clauses": 5},
        {"min_pairs": 3, "max_pairs": 2},
        {"num_docs": 0},
    ],
)
def test_infeasible_configs(kwargs):
    with pytest.raises(ConfigError):
        generate_synthetic(SynthConfig(**kwargs), 0)


def test_unplaceable_pairs():
    cfg = SynthConfig(num_docs=1, min_clauses=3, max_clauses=3, min_pairs=3, max_pairs=3, max_span=2,
                      max_tries=50)
    with pytest.raises(ConfigError):
        generate_synthetic(cfg, 0)
