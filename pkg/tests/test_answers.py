import json
import random

import pytest

from citecritic.answers import (
    CitedAnswer,
    Document,
    DocumentSet,
    Question,
    Sentence,
    corpus_record_from_dict,
    normalize_legacy_markers,
    parse_cited_answer,
    read_corpus,
    render_cited_answer,
    strip_citations,
    write_corpus,
)
from citecritic.errors import SchemaError


def test_parse_single_sentence_with_marker():
    a = parse_cited_answer("Seoul has a population of 9.41 million [2]")
    assert len(a) == 1
    assert a.sentences[0].text == "Seoul has a population of 9.41 million"
    assert a.sentences[0].citations == {2}


def test_parse_empty_input():
    assert len(parse_cited_answer("")) == 0
    assert len(parse_cited_answer("   ")) == 0


def test_parse_two_sentences():
    a = parse_cited_answer("A is true [1][3]. B is false.")
    assert len(a) == 2
    assert a.sentences[0].text == "A is true."
    assert a.sentences[0].citations == {1, 3}
    assert a.sentences[1].text == "B is false."
    assert a.sentences[1].citations == frozenset()


def test_parse_inline_marker():
    a = parse_cited_answer("A [1] and B [2].")
    assert len(a) == 1
    assert a.sentences[0].text == "A and B."
    assert a.sentences[0].citations == {1, 2}


def test_malformed_markers_stay_verbatim():
    a = parse_cited_answer("Brackets [abc] and [1.5] and [0] stay. Real [2] goes.")
    assert a.sentences[0].text == "Brackets [abc] and [1.5] and [0] stay."
    assert a.sentences[0].citations == frozenset()
    assert a.sentences[1].citations == {2}


def test_abbreviations_do_not_split():
    a = parse_cited_answer("Cities e.g. Seoul are big [1]. J. Smith agrees.")
    assert len(a) == 2
    assert a.sentences[0].text == "Cities e.g. Seoul are big."
    assert a.sentences[1].text == "J. Smith agrees."


def test_decimal_point_does_not_split():
    a = parse_cited_answer("The value is 9.41 million [1].")
    assert len(a) == 1


def test_question_and_exclamation_split():
    a = parse_cited_answer("Really? Yes! Fine.")
    assert [s.text for s in a.sentences] == ["Really?", "Yes!", "Fine."]


def test_render_ascending_order():
    a = CitedAnswer((Sentence("X is Y", frozenset({2, 1})),))
    assert render_cited_answer(a) == "X is Y [1][2]"


def test_render_empty():
    assert render_cited_answer(CitedAnswer()) == ""


def test_render_places_markers_before_terminal_punctuation():
    a = CitedAnswer(
        (
            Sentence("A is true.", frozenset({3, 1})),
            Sentence("B is false.", frozenset()),
        )
    )
    assert render_cited_answer(a) == "A is true [1][3]. B is false."


def test_round_trip_fixpoint_on_examples():
    for raw in [
        "Seoul has a population of 9.41 million [2]",
        "A is true [1][3]. B is false.",
        "One [1]. Two [2]! Three [3]?",
        "No citations at all.",
        "[4]",
    ]:
        once = parse_cited_answer(raw)
        rendered = render_cited_answer(once)
        assert parse_cited_answer(rendered) == once


def _random_answer(rng: random.Random) -> CitedAnswer:
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta"]
    sentences = []
    for _ in range(rng.randint(1, 5)):
        text = " ".join(rng.choice(words) for _ in range(rng.randint(3, 8)))
        text += rng.choice([".", "?", "!"])
        cites = frozenset(rng.sample(range(1, 9), rng.randint(0, 3)))
        sentences.append(Sentence(text, cites))
    return CitedAnswer(tuple(sentences))


def test_round_trip_property_random_answers():
    rng = random.Random(20240817)
    for _ in range(200):
        a = _random_answer(rng)
        assert parse_cited_answer(render_cited_answer(a)) == a


def test_parse_is_deterministic():
    raw = "A [1] b [2]. C d [3]!"
    assert parse_cited_answer(raw) == parse_cited_answer(raw)


def test_strip_citations():
    assert (
        strip_citations("Seoul has a population of 9.41 million [2]")
        == "Seoul has a population of 9.41 million"
    )
    assert strip_citations("A [1] and B [2].") == "A and B."


def test_strip_citations_idempotent():
    rng = random.Random(7)
    for _ in range(50):
        raw = render_cited_answer(_random_answer(rng))
        once = strip_citations(raw)
        assert strip_citations(once) == once


def test_strip_citations_no_markers_is_whitespace_normalization():
    assert strip_citations("plain   text here.") == "plain text here."


def test_citations_never_non_positive():
    rng = random.Random(99)
    for _ in range(100):
        raw = render_cited_answer(_random_answer(rng)) + " [0] [-1]"
        a = parse_cited_answer(raw)
        for s in a.sentences:
            assert all(c >= 1 for c in s.citations)


def test_sentence_rejects_non_positive_citation():
    with pytest.raises(SchemaError):
        Sentence("x", frozenset({0}))


def test_normalize_legacy_markers():
    raw = "Seoul has a population of 9.41 million [Citation: Doc 2]"
    assert normalize_legacy_markers(raw) == "Seoul has a population of 9.41 million [2]"


def test_document_invariants():
    with pytest.raises(SchemaError):
        Document(index=0, title="t", body="b")
    with pytest.raises(SchemaError):
        Document(index=1, title="t", body="")
    with pytest.raises(SchemaError):
        DocumentSet([Document(1, "a", "x"), Document(1, "b", "y")])


def test_question_gold_group_nonempty():
    with pytest.raises(SchemaError):
        Question(id="q", text="?", gold_aspects=((),))


def test_answer_validates_against_docs():
    docs = DocumentSet([Document(1, "t", "b"), Document(2, "t", "b")])
    ok = parse_cited_answer("A [1]. B [2].")
    bad = parse_cited_answer("A [1]. B [5].")
    assert ok.validates_against(docs)
    assert not bad.validates_against(docs)


def test_corpus_round_trip(tmp_path):
    rec = corpus_record_from_dict(
        {
            "id": "q1",
            "question": "How many people are in Seoul?",
            "docs": [
                {"index": 1, "title": "Seoul", "body": "Seoul population: 9.41 million"},
                {"index": 2, "title": "Daejeon", "body": "Daejeon population: 1.44 million"},
            ],
            "gold_aspects": [["9.41 million"]],
            "answer": "Seoul has a population of 9.41 million [1].",
        }
    )
    path = tmp_path / "corpus.jsonl"
    write_corpus([rec], path)
    back = read_corpus(path)
    assert len(back) == 1
    assert back[0].question == rec.question
    assert back[0].docs == rec.docs
    assert back[0].answer == rec.answer


def test_corpus_reader_normalizes_legacy_markers(tmp_path):
    path = tmp_path / "corpus.jsonl"
    obj = {
        "id": "q1",
        "question": "q?",
        "docs": [{"index": 1, "title": "", "body": "b"}],
        "gold_aspects": [],
        "answer": "Answer text [Citation: Doc 1].",
    }
    path.write_text(json.dumps(obj) + "\n", encoding="utf-8")
    rec = read_corpus(path)[0]
    assert rec.answer.sentences[0].citations == {1}


def test_corpus_reader_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "corpus.jsonl"
    obj = {
        "id": "q1",
        "question": "q?",
        "docs": [{"index": 1, "title": "", "body": "b"}],
        "gold_aspects": [],
        "answer": "",
    }
    path.write_text(json.dumps(obj) + "\n" + json.dumps(obj) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_corpus(path)
