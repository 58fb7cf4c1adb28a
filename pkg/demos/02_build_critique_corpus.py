"""Building critic training data from an answer corpus.

Each question contributes one example per aspect: the known-good answer
as the positive, three degraded variants as negatives. Fluency negatives
inject phrase repetition, citation negatives corrupt the citation sets,
and correctness negatives borrow answers grounded in other questions'
documents.
"""
import tempfile
from pathlib import Path

from citecritic import (
    CorruptionMode,
    build_critique_corpus,
    corrupt_citations,
    generate_corpus,
    inject_repetition,
    read_critique_examples,
    render_cited_answer,
    write_critique_examples,
)

records = generate_corpus(6, seed=42)
first = records[0]
print("question:", first.question.text)
print("answer:  ", render_cited_answer(first.answer))

print("\nrepetition injected:")
print("  ", render_cited_answer(inject_repetition(first.answer, seed=3)))

print("\ncitations shuffled:")
shuffled = corrupt_citations(first.answer, len(first.docs), CorruptionMode.SHUFFLE, seed=3)
print("  ", render_cited_answer(shuffled))

print("\ncitations removed:")
removed = corrupt_citations(first.answer, len(first.docs), CorruptionMode.REMOVE, seed=3)
print("  ", render_cited_answer(removed))

examples = build_critique_corpus(records, seed=0)
print(f"\nassembled {len(examples)} critique examples "
      f"({len(records)} questions x 3 aspects), each 1 positive + 3 negatives")

counts = {}
for example in examples:
    counts[example.aspect.value] = counts.get(example.aspect.value, 0) + 1
print("per aspect:", counts)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "critique.jsonl"
    write_critique_examples(examples, path)
    by_id = {record.id: record for record in records}
    loaded = read_critique_examples(path, by_id)
    print(f"\nwrote and re-read {len(loaded)} examples through {path.name}")
    print("round trip preserved everything:", loaded == examples)
