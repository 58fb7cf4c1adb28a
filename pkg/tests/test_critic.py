"""Feature extraction, ranking loss, gradient, and training."""
import math
import random

import numpy as np
import pytest

from citecritic.answers import (
    CitedAnswer,
    Document,
    DocumentSet,
    Question,
    parse_cited_answer,
)
from citecritic.corpus import Aspect, CritiqueExample, build_critique_corpus
from citecritic.critic import (
    AnswerContext,
    AspectHead,
    CriticParams,
    TrainConfig,
    clip_reward,
    evaluate_critic,
    load_params,
    loss_gradient,
    pairwise_ranking_loss,
    save_params,
    score_answer,
    train_critic,
    write_training_report,
)
from citecritic.errors import SchemaError, TrainingError
from citecritic.features import F, extract_features
from citecritic.synthetic import generate_corpus

LN2 = math.log(2.0)


def _city_context(citation_index: int) -> AnswerContext:
    question = Question(id="seoul", text="How many people are in Seoul?")
    docs = DocumentSet(
        [
            Document(
                index=1,
                title="Seoul population",
                body="Seoul population: 9.41 million (The capital of South Korea)",
            ),
            Document(
                index=2,
                title="Daejeon population",
                body="Daejeon population: 1.44 million (A metropolitan city in South Korea)",
            ),
        ]
    )
    answer = parse_cited_answer(
        f"Seoul has a population of 9.41 million [{citation_index}]."
    )
    return AnswerContext(question, docs, answer)


class TestFeatures:
    def test_empty_answer_is_zero_vector(self):
        ctx = AnswerContext(
            Question(id="q", text="Anything?"),
            DocumentSet([Document(index=1, title="", body="Some body.")]),
            CitedAnswer(()),
        )
        for aspect in Aspect:
            assert np.array_equal(extract_features(ctx, aspect), np.zeros(F))

    def test_all_features_in_unit_interval(self):
        for rec in generate_corpus(6, seed=0):
            ctx = AnswerContext(rec.question, rec.docs, rec.answer)
            for aspect in Aspect:
                vec = extract_features(ctx, aspect)
                assert vec.shape == (F,)
                assert np.all(vec >= 0.0) and np.all(vec <= 1.0)

    def test_verbatim_cited_sentence_has_full_overlap(self):
        docs = DocumentSet(
            [
                Document(index=1, title="", body="The Falcon reaches 212 knots."),
                Document(index=2, title="", body="Something unrelated entirely here."),
            ]
        )
        ctx = AnswerContext(
            Question(id="q", text="How fast is the Falcon?"),
            docs,
            parse_cited_answer("The Falcon reaches 212 knots [1]."),
        )
        vec = extract_features(ctx, Aspect.CITATION)
        assert vec[1] == 1.0

    def test_miscited_sentence_prefers_non_cited_doc(self):
        vec = extract_features(_city_context(2), Aspect.CITATION)
        assert vec[1] < vec[2]

    def test_correct_citation_prefers_cited_doc(self):
        vec = extract_features(_city_context(1), Aspect.CITATION)
        assert vec[1] > vec[2]

    def test_citations_valid_flag(self):
        ctx = _city_context(2)
        assert ctx.citations_valid
        bad = AnswerContext(
            ctx.question, ctx.docs, parse_cited_answer("Seoul is big [9].")
        )
        assert not bad.citations_valid
        vec = extract_features(bad, Aspect.CITATION)
        assert vec[6] == 0.0

    def test_repetition_raises_fluency_slots(self):
        from citecritic.corpus import inject_repetition

        rec = generate_corpus(4, seed=1)[0]
        clean = AnswerContext(rec.question, rec.docs, rec.answer)
        noisy = AnswerContext(
            rec.question, rec.docs, inject_repetition(rec.answer, seed=2)
        )
        clean_vec = extract_features(clean, Aspect.FLUENCY)
        noisy_vec = extract_features(noisy, Aspect.FLUENCY)
        assert noisy_vec[2] > clean_vec[2]
        assert noisy_vec[6] > clean_vec[6]

    def test_foreign_answer_lowers_correctness_slots(self):
        records = generate_corpus(4, seed=3)
        own = AnswerContext(records[0].question, records[0].docs, records[0].answer)
        foreign = AnswerContext(
            records[0].question, records[0].docs, records[1].answer
        )
        own_vec = extract_features(own, Aspect.CORRECTNESS)
        foreign_vec = extract_features(foreign, Aspect.CORRECTNESS)
        assert foreign_vec[0] < own_vec[0]
        assert foreign_vec[1] < own_vec[1]


class TestLossAndScore:
    def test_equal_scores_give_ln2(self):
        rng = random.Random(0)
        for _ in range(100):
            x = rng.uniform(-10, 10)
            assert abs(pairwise_ranking_loss([x], [x]) - LN2) <= 1e-12

    def test_known_values(self):
        assert pairwise_ranking_loss([1.0], [0.0]) == pytest.approx(
            math.log(1 + math.e**-1), abs=1e-12
        )
        assert pairwise_ranking_loss([1.0], [0.0, 0.0, 0.0]) == pytest.approx(
            3 * math.log(1 + math.e**-1), abs=1e-12
        )

    def test_equal_scores_scale_with_pair_count(self):
        assert pairwise_ranking_loss([0.5] * 2, [0.5] * 3) == pytest.approx(
            6 * LN2, abs=1e-12
        )

    def test_monotone_in_gap(self):
        gaps = np.linspace(-3, 3, 25)
        losses = [pairwise_ranking_loss([g], [0.0]) for g in gaps]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_monotone_in_each_side(self):
        base = pairwise_ranking_loss([1.0, 0.5], [0.2, -0.1])
        assert pairwise_ranking_loss([1.1, 0.5], [0.2, -0.1]) < base
        assert pairwise_ranking_loss([1.0, 0.5], [0.3, -0.1]) > base

    def test_non_negative_and_empty_rejected(self):
        assert pairwise_ranking_loss([5.0], [-5.0]) >= 0.0
        with pytest.raises(ValueError):
            pairwise_ranking_loss([], [1.0])
        with pytest.raises(ValueError):
            pairwise_ranking_loss([1.0], [])

    def test_huge_gap_does_not_overflow(self):
        loss = pairwise_ranking_loss([-500.0], [500.0])
        assert math.isfinite(loss)
        assert loss == pytest.approx(1000.0, rel=1e-9)

    def test_clip_reward(self):
        assert clip_reward(3.7) == 2.0
        assert clip_reward(-9.0) == -2.0
        assert clip_reward(0.51) == 0.51
        for x in (-2.0, -1.0, 0.0, 1.5, 2.0):
            assert clip_reward(clip_reward(x)) == clip_reward(x)

    def test_score_answer_zero_params(self):
        rec = generate_corpus(4, seed=0)[0]
        ctx = AnswerContext(rec.question, rec.docs, rec.answer)
        score = score_answer(CriticParams(), ctx, Aspect.FLUENCY)
        assert score.raw == 0.0 and score.clipped == 0.0

    def test_score_answer_clips(self):
        rec = generate_corpus(4, seed=0)[0]
        ctx = AnswerContext(rec.question, rec.docs, rec.answer)
        params = CriticParams()
        params.heads[Aspect.FLUENCY] = AspectHead(np.full(F, 10.0), 5.0)
        score = score_answer(params, ctx, Aspect.FLUENCY)
        assert score.raw > 2.0
        assert score.clipped == 2.0


def _example_loss(params: CriticParams, example: CritiqueExample) -> float:
    ctxs = [AnswerContext(example.question, example.docs, example.positive)]
    pos = [score_answer(params, ctxs[0], example.aspect).raw]
    negs = [
        score_answer(
            params,
            AnswerContext(example.question, example.docs, n),
            example.aspect,
        ).raw
        for n in example.negatives
    ]
    return pairwise_ranking_loss(pos, negs)


def _random_params(rng: np.random.Generator) -> CriticParams:
    params = CriticParams()
    for aspect in Aspect:
        params.heads[aspect] = AspectHead(
            weights=rng.normal(0, 1, size=F), bias=float(rng.normal(0, 1))
        )
    return params


class TestGradient:
    def _examples(self, n_questions: int):
        return build_critique_corpus(generate_corpus(n_questions, seed=4), seed=4)

    def test_matches_finite_differences(self):
        # Central differences with h = 1e-5. The bias gradient is exactly
        # zero by cancellation, so its check is absolute; weight
        # coordinates use the relative form.
        h = 1e-5
        rng = np.random.default_rng(7)
        examples = self._examples(35)
        assert len(examples) >= 100
        for example in examples:
            params = _random_params(rng)
            grad = loss_gradient(params, example)
            head = params.heads[example.aspect]
            for i in range(F):
                shifted = np.array(head.weights)
                shifted[i] += h
                params.heads[example.aspect] = AspectHead(shifted, head.bias)
                up = _example_loss(params, example)
                shifted = np.array(head.weights)
                shifted[i] -= h
                params.heads[example.aspect] = AspectHead(shifted, head.bias)
                down = _example_loss(params, example)
                params.heads[example.aspect] = head
                fd = (up - down) / (2 * h)
                analytic = grad.weights[i]
                if analytic == 0.0:
                    assert abs(fd) < 1e-6
                else:
                    assert abs(analytic - fd) / (abs(analytic) + 1e-8) < 1e-4
            params.heads[example.aspect] = AspectHead(head.weights, head.bias + h)
            up = _example_loss(params, example)
            params.heads[example.aspect] = AspectHead(head.weights, head.bias - h)
            down = _example_loss(params, example)
            fd_bias = (up - down) / (2 * h)
            assert grad.bias == 0.0
            assert abs(fd_bias) < 1e-6

    def test_identical_features_give_zero_gradient(self):
        # Citation features aggregate per-sentence statistics, so swapping
        # two sentences yields a distinct answer with identical features.
        docs = DocumentSet(
            [
                Document(index=1, title="", body="Alpha beta gamma fact."),
                Document(index=2, title="", body="Delta epsilon zeta fact."),
            ]
        )
        positive = parse_cited_answer("Alpha beta gamma fact [1]. Delta epsilon zeta fact [2].")
        swapped = CitedAnswer((positive.sentences[1], positive.sentences[0]))
        example = CritiqueExample(
            question=Question(id="q", text="What are the facts?"),
            docs=docs,
            aspect=Aspect.CITATION,
            positive=positive,
            negatives=(swapped, swapped, swapped),
        )
        ctx_pos = AnswerContext(example.question, docs, positive)
        ctx_neg = AnswerContext(example.question, docs, swapped)
        assert np.array_equal(
            extract_features(ctx_pos, Aspect.CITATION),
            extract_features(ctx_neg, Aspect.CITATION),
        )
        rng = np.random.default_rng(3)
        grad = loss_gradient(_random_params(rng), example)
        assert np.array_equal(grad.weights, np.zeros(F))
        assert grad.bias == 0.0

    def test_gradient_step_descends(self):
        rng = np.random.default_rng(11)
        examples = self._examples(6)
        for example in examples[:12]:
            params = _random_params(rng)
            before = _example_loss(params, example)
            grad = loss_gradient(params, example)
            if float(np.linalg.norm(grad.weights)) < 1e-9:
                continue
            head = params.heads[example.aspect]
            params.heads[example.aspect] = AspectHead(
                head.weights - 1e-3 * grad.weights, head.bias
            )
            assert _example_loss(params, example) < before


class TestTraining:
    def test_separable_corpus_reaches_full_training_accuracy(self):
        examples = build_critique_corpus(generate_corpus(12, seed=6), seed=6)
        result = train_critic(examples, TrainConfig())
        evals = evaluate_critic(result.params, examples)
        for aspect, ev in evals.items():
            assert ev.accuracy == 1.0, f"{aspect.value}: {ev.accuracy}"
            assert ev.mean_positive_raw > ev.mean_negative_raw

    def test_bit_reproducible(self):
        examples = build_critique_corpus(generate_corpus(5, seed=8), seed=8)
        a = train_critic(examples, TrainConfig())
        b = train_critic(examples, TrainConfig())
        for aspect in Aspect:
            assert np.array_equal(
                a.params.heads[aspect].weights, b.params.heads[aspect].weights
            )
            assert a.params.heads[aspect].bias == b.params.heads[aspect].bias
        assert [r.loss for r in a.report] == [r.loss for r in b.report]

    def test_loss_non_increasing_at_small_rate(self):
        examples = build_critique_corpus(generate_corpus(5, seed=9), seed=9)
        result = train_critic(examples, TrainConfig(rate=0.01, epochs=50, l2=0.0))
        for aspect in Aspect:
            losses = [r.loss for r in result.report if r.aspect is aspect]
            assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_empty_dataset_rejected(self):
        with pytest.raises(TrainingError):
            train_critic([], TrainConfig())

    def test_bad_config_rejected(self):
        with pytest.raises(TrainingError):
            TrainConfig(rate=0.0)
        with pytest.raises(TrainingError):
            TrainConfig(epochs=0)

    def test_eval_dataset_drives_reported_accuracy(self):
        examples = build_critique_corpus(generate_corpus(10, seed=10), seed=10)
        train, held = examples[:24], examples[24:]
        result = train_critic(train, TrainConfig(epochs=30), eval_dataset=held)
        assert result.report
        final = [r for r in result.report if r.epoch == 29]
        assert len(final) == 3

    def test_report_jsonl(self, tmp_path):
        examples = build_critique_corpus(generate_corpus(4, seed=12), seed=12)
        result = train_critic(examples, TrainConfig(epochs=3))
        path = tmp_path / "report.jsonl"
        write_training_report(result.report, path)
        import json

        lines = path.read_text().strip().split("\n")
        assert len(lines) == 9
        rec = json.loads(lines[0])
        assert set(rec) == {"epoch", "aspect", "loss", "accuracy"}


class TestParamsIO:
    def test_round_trip(self, tmp_path):
        examples = build_critique_corpus(generate_corpus(4, seed=13), seed=13)
        result = train_critic(examples, TrainConfig(epochs=5))
        path = tmp_path / "params.json"
        save_params(result.params, path)
        loaded = load_params(path)
        for aspect in Aspect:
            assert np.array_equal(
                loaded.heads[aspect].weights, result.params.heads[aspect].weights
            )
            assert loaded.heads[aspect].bias == result.params.heads[aspect].bias

    def test_missing_aspect_rejected(self, tmp_path):
        path = tmp_path / "params.json"
        path.write_text('{"version": 1, "aspects": {"fluency": {"weights": [], "bias": 0}}}')
        with pytest.raises(SchemaError):
            load_params(path)

    def test_wrong_version_rejected(self, tmp_path):
        path = tmp_path / "params.json"
        path.write_text('{"version": 99, "aspects": {}}')
        with pytest.raises(SchemaError):
            load_params(path)

    def test_wrong_width_rejected(self, tmp_path):
        path = tmp_path / "params.json"
        payload = {
            "version": 1,
            "aspects": {
                a: {"weights": [0.0] * 3, "bias": 0.0}
                for a in ("fluency", "correctness", "citation")
            },
        }
        import json

        path.write_text(json.dumps(payload))
        with pytest.raises(SchemaError):
            load_params(path)

    def test_non_finite_rejected(self):
        with pytest.raises(SchemaError):
            AspectHead(np.full(F, np.nan), 0.0)
