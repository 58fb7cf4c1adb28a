"""Answer-quality metrics: short-answer recall, citation quality, and a
distribution-similarity score.

All metrics are fractions in [0, 1]. Citation recall asks whether each
sentence is supported by the union of its cited passages; citation
precision asks whether each individual citation is necessary or
sufficient for that support. Entailment is pluggable; the lexical judge
here needs no model.
"""
from citecritic import (
    Document,
    DocumentSet,
    HashEmbedder,
    LexicalJudge,
    citation_scores,
    em_recall,
    mauve_score,
    parse_cited_answer,
)

docs = DocumentSet(
    [
        Document(1, "Seoul population", "Seoul population: 9.41 million (The capital of South Korea)"),
        Document(2, "Daejeon population", "Daejeon population: 1.44 million (A metropolitan city in South Korea)"),
    ]
)
judge = LexicalJudge()

for text in (
    "Seoul has a population of 9.41 million [1].",
    "Seoul has a population of 9.41 million [2].",
    "Seoul has a population of 9.41 million [1][2].",
    "Seoul has a population of 9.41 million.",
):
    answer = parse_cited_answer(text)
    diag = citation_scores(answer, docs, judge)
    flags = []
    if diag.zero_citations:
        flags.append("no citations")
    if diag.missing_indices:
        flags.append(f"missing docs {sorted(diag.missing_indices)}")
    suffix = f"  ({'; '.join(flags)})" if flags else ""
    print(f"recall {diag.recall:.2f}  precision {diag.precision:.2f}  {text}{suffix}")

print()
answer = parse_cited_answer("Seoul has a population of 9.41 million [1].")
print("short-answer recall, gold ['9.41 million']:", em_recall(answer, [["9.41 million"]]))
print("short-answer recall, gold ['10 million']:  ", em_recall(answer, [["10 million"]]))

print()
embedder = HashEmbedder(seed=0)
reference = [f"The tower number {i} is tall and famous." for i in range(10)]
paraphrased = [f"Tower number {i} is famous for being tall." for i in range(10)]
unrelated = [f"Recipe {i}: simmer the lentils slowly." for i in range(10)]
print("similarity, identical sets:  ", round(mauve_score(reference, list(reference), embedder), 4))
print("similarity, paraphrased set: ", round(mauve_score(paraphrased, reference, embedder), 4))
print("similarity, unrelated set:   ", round(mauve_score(unrelated, reference, embedder), 4))
