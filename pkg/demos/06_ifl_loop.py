"""The full loop: generate, score, give feedback, refine.

This demo runs offline. The mock generator starts every question from a
deliberately degraded answer (shuffled citations plus injected
repetition) and repairs one flaw per round of feedback, so the
per-iteration report shows the metrics climbing the way a live
generator's would.
"""
from citecritic import (
    HashEmbedder,
    IflConfig,
    LexicalJudge,
    MockGenerator,
    MockScript,
    CorruptionMode,
    TrainConfig,
    aggregate_report,
    build_critique_corpus,
    corrupt_citations,
    evaluate_critic,
    generate_corpus,
    inject_repetition,
    render_cited_answer,
    render_report_table,
    run_batch,
    thresholds_from_evaluation,
    train_critic,
)

records = generate_corpus(10, seed=5)
examples = build_critique_corpus(records, seed=2)
result = train_critic(examples, TrainConfig())
thresholds = thresholds_from_evaluation(evaluate_critic(result.params, examples))
print(f"critic trained on {len(examples)} examples; thresholds derived from its rewards")

base, pristine = {}, {}
for i, record in enumerate(records):
    pristine[record.question.text] = render_cited_answer(record.answer)
    degraded = inject_repetition(
        corrupt_citations(record.answer, len(record.docs), CorruptionMode.SHUFFLE, seed=i),
        seed=50 + i,
    )
    base[record.question.text] = render_cited_answer(degraded)

generator = MockGenerator(MockScript(base_answers=base, pristine=pristine))
runs = run_batch(
    records,
    generator,
    result.params,
    thresholds,
    IflConfig(max_iterations=2),
)

stop_counts = {}
for run in runs:
    stop_counts[run.stop_reason] = stop_counts.get(run.stop_reason, 0) + 1
print(f"ran {len(runs)} questions; stop reasons: {stop_counts}")

example_run = runs[0]
print(f"\none run in detail ({example_run.question_id}):")
for record in example_run.records:
    bands = " ".join(
        f"{aspect.value[:4]}={item.band.value}" for aspect, item in record.feedback.items()
    )
    print(f"  iteration {record.index}: {bands}")
    print(f"    {render_cited_answer(record.answer)}")

corpus_by_id = {record.id: record for record in records}
reports = aggregate_report(runs, corpus_by_id, LexicalJudge(), HashEmbedder(seed=0))
print("\nper-iteration metrics (fractions in [0, 1]; Length in words):")
print(render_report_table(reports), end="")
