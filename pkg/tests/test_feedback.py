"""Band classification, feedback templates, and the refinement prompt."""
import random
from pathlib import Path

import pytest

from citecritic.answers import Document, DocumentSet, Question, parse_cited_answer
from citecritic.corpus import Aspect
from citecritic.critic import AspectEvaluation, RewardScore, clip_reward
from citecritic.errors import SchemaError
from citecritic.feedback import (
    DEFAULT_THRESHOLDS,
    AspectThresholds,
    Band,
    BandThresholds,
    build_refinement_prompt,
    classify_reward_band,
    load_thresholds,
    make_feedback,
    render_feedback,
    save_thresholds,
    thresholds_from_evaluation,
)

GOLDEN = Path(__file__).parent / "golden"

_RANK = {Band.CORRECTIVE: 0, Band.IMPROVE: 1, Band.PRAISE: 2}


def _score(aspect: Aspect, raw: float) -> RewardScore:
    return RewardScore(aspect=aspect, raw=raw, clipped=clip_reward(raw))


class TestClassification:
    def test_reference_rows(self):
        cases = [
            (Aspect.FLUENCY, -0.93, Band.IMPROVE),
            (Aspect.CORRECTNESS, 1.25, Band.PRAISE),
            (Aspect.CITATION, 0.51, Band.IMPROVE),
        ]
        for aspect, value, band in cases:
            assert classify_reward_band(_score(aspect, value), DEFAULT_THRESHOLDS) is band

    def test_reference_texts(self):
        fb = make_feedback(_score(Aspect.FLUENCY, -0.93), DEFAULT_THRESHOLDS)
        assert fb.text == (
            "For the fluency aspect, try to provide a more concise and"
            " non-repetitive response."
        )
        fb = make_feedback(_score(Aspect.CORRECTNESS, 1.25), DEFAULT_THRESHOLDS)
        assert fb.text == "For the correctness aspect, you did great."
        fb = make_feedback(_score(Aspect.CITATION, 0.51), DEFAULT_THRESHOLDS)
        assert fb.text == (
            "For the citation aspect, you have cited the appropriate search"
            " results, but try to cite more specifically by mentioning the search"
            " result number for each citation."
        )

    def test_boundaries_are_inclusive(self):
        assert (
            classify_reward_band(_score(Aspect.CORRECTNESS, 1.12), DEFAULT_THRESHOLDS)
            is Band.PRAISE
        )
        assert (
            classify_reward_band(_score(Aspect.CORRECTNESS, -1.25), DEFAULT_THRESHOLDS)
            is Band.CORRECTIVE
        )

    def test_monotone_in_clipped_score(self):
        rng = random.Random(1)
        for aspect in Aspect:
            values = sorted(rng.uniform(-3, 3) for _ in range(200))
            ranks = [
                _RANK[classify_reward_band(_score(aspect, v), DEFAULT_THRESHOLDS)]
                for v in values
            ]
            assert all(b >= a for a, b in zip(ranks, ranks[1:]))

    def test_classification_ignores_raw_beyond_clip_range(self):
        for aspect in Aspect:
            high_a = classify_reward_band(_score(aspect, 2.0), DEFAULT_THRESHOLDS)
            high_b = classify_reward_band(_score(aspect, 99.0), DEFAULT_THRESHOLDS)
            assert high_a is high_b
            low_a = classify_reward_band(_score(aspect, -2.0), DEFAULT_THRESHOLDS)
            low_b = classify_reward_band(_score(aspect, -99.0), DEFAULT_THRESHOLDS)
            assert low_a is low_b


class TestTemplates:
    def test_all_nine_exist_and_are_stable(self):
        seen = set()
        for aspect in Aspect:
            for band in Band:
                text = render_feedback(aspect, band)
                assert text.startswith(f"For the {aspect.value} aspect,")
                assert render_feedback(aspect, band) == text
                seen.add(text)
        assert len(seen) == 9

    def test_praise_pattern(self):
        for aspect in Aspect:
            assert render_feedback(aspect, Band.PRAISE) == (
                f"For the {aspect.value} aspect, you did great."
            )

    def test_make_feedback_consistency(self):
        fb = make_feedback(_score(Aspect.CITATION, -1.9), DEFAULT_THRESHOLDS)
        assert fb.band is Band.CORRECTIVE
        assert fb.text == render_feedback(Aspect.CITATION, Band.CORRECTIVE)

    def test_aspect_mismatch_rejected(self):
        from citecritic.feedback import FeedbackItem

        with pytest.raises(SchemaError):
            FeedbackItem(
                aspect=Aspect.FLUENCY,
                score=_score(Aspect.CITATION, 0.0),
                band=Band.IMPROVE,
                text="x",
            )


class TestRefinementPrompt:
    def _fixture(self):
        question = Question(id="g1", text="What is the height of the Eiffel Tower?")
        docs = DocumentSet(
            [
                Document(
                    index=1,
                    title="Eiffel Tower",
                    body="The Eiffel Tower is 330 meters tall. It was completed in 1889.",
                ),
                Document(
                    index=2,
                    title="Paris landmarks",
                    body="The Louvre is the most visited museum in the world.",
                ),
            ]
        )
        previous = parse_cited_answer(
            "The Eiffel Tower is 330 meters tall [1]. It was completed in 1889."
        )
        feedback = [
            make_feedback(_score(Aspect.FLUENCY, -0.93), DEFAULT_THRESHOLDS),
            make_feedback(_score(Aspect.CORRECTNESS, 1.25), DEFAULT_THRESHOLDS),
            make_feedback(_score(Aspect.CITATION, 0.51), DEFAULT_THRESHOLDS),
        ]
        return question, docs, previous, feedback

    def test_matches_golden_file(self):
        question, docs, previous, feedback = self._fixture()
        expected = (GOLDEN / "refinement_prompt.txt").read_text(encoding="utf-8")
        assert build_refinement_prompt(question, docs, previous, feedback) == expected

    def test_contains_instruction_verbatim(self):
        question, docs, previous, feedback = self._fixture()
        prompt = build_refinement_prompt(question, docs, previous, feedback)
        assert (
            "Use the feedback given on Fluency, Correctness, and Citation to"
            " continually refine the previous answer for higher quality."
        ) in prompt

    def test_input_order_is_canonicalized(self):
        question, docs, previous, feedback = self._fixture()
        shuffled = [feedback[2], feedback[0], feedback[1]]
        assert build_refinement_prompt(
            question, docs, previous, shuffled
        ) == build_refinement_prompt(question, docs, previous, feedback)

    def test_missing_or_duplicate_aspect_rejected(self):
        question, docs, previous, feedback = self._fixture()
        with pytest.raises(ValueError):
            build_refinement_prompt(question, docs, previous, feedback[:2])
        with pytest.raises(ValueError):
            build_refinement_prompt(
                question, docs, previous, [feedback[0], feedback[0], feedback[1]]
            )


class TestThresholds:
    def test_defaults(self):
        t = DEFAULT_THRESHOLDS
        assert t.for_aspect(Aspect.FLUENCY) == AspectThresholds(-0.35, -1.36)
        assert t.for_aspect(Aspect.CORRECTNESS) == AspectThresholds(1.12, -1.25)
        assert t.for_aspect(Aspect.CITATION) == AspectThresholds(0.93, -1.75)

    def test_inverted_rejected(self):
        with pytest.raises(SchemaError):
            AspectThresholds(avg_positive=-1.0, avg_negative=1.0)
        with pytest.raises(SchemaError):
            AspectThresholds(avg_positive=0.5, avg_negative=0.5)

    def test_missing_aspect_rejected(self):
        with pytest.raises(SchemaError):
            BandThresholds({Aspect.FLUENCY: AspectThresholds(1.0, 0.0)})

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "thresholds.json"
        save_thresholds(DEFAULT_THRESHOLDS, path)
        loaded = load_thresholds(path)
        for aspect in Aspect:
            assert loaded.for_aspect(aspect) == DEFAULT_THRESHOLDS.for_aspect(aspect)

    def test_bad_files_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            load_thresholds(path)
        path.write_text('{"version": 2, "aspects": {}}')
        with pytest.raises(SchemaError):
            load_thresholds(path)
        path.write_text('{"version": 1, "aspects": {"fluency": {"avg_positive": 1}}}')
        with pytest.raises(SchemaError):
            load_thresholds(path)

    def test_from_evaluation(self):
        evals = {
            aspect: AspectEvaluation(
                accuracy=1.0,
                mean_positive_raw=3.0,
                mean_negative_raw=-3.0,
                mean_positive_clipped=1.5,
                mean_negative_clipped=-1.5,
                n_pairs=10,
            )
            for aspect in Aspect
        }
        t = thresholds_from_evaluation(evals)
        for aspect in Aspect:
            assert t.for_aspect(aspect) == AspectThresholds(1.5, -1.5)
        with pytest.raises(SchemaError):
            thresholds_from_evaluation({Aspect.FLUENCY: evals[Aspect.FLUENCY]})
