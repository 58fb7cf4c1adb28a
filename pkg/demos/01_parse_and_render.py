"""Parsing and rendering citation-annotated answers.

An answer is a sequence of sentences, each carrying the set of search
result indices it cites via [n] markers. Parsing and rendering round-trip
exactly, so answers can live in JSONL files as plain strings.
"""
from citecritic import (
    Document,
    DocumentSet,
    parse_cited_answer,
    render_cited_answer,
    strip_citations,
)
from citecritic.answers import normalize_legacy_markers

raw = (
    "The Eiffel Tower is 330 meters tall [1]. "
    "It was completed in 1889 [1][2]. Some say it sways in the wind."
)
answer = parse_cited_answer(raw)

print("parsed sentences:")
for i, sentence in enumerate(answer.sentences):
    cited = sorted(sentence.citations) or "(none)"
    print(f"  {i}: {sentence.text!r}  cites {cited}")

print("\nall citations:", sorted(answer.all_citations()))
print("citation-free text:", strip_citations(raw))

rendered = render_cited_answer(answer)
print("\nrender round-trips:", rendered == raw)

# Markers sometimes arrive in a verbose legacy form; normalize first.
legacy = "Paris is the capital of France [Citation: Doc 2]."
print("\nlegacy input:   ", legacy)
print("normalized form:", normalize_legacy_markers(legacy))

docs = DocumentSet(
    [
        Document(1, "Eiffel Tower", "The Eiffel Tower is 330 meters tall."),
        Document(2, "History", "Construction finished in 1889."),
    ]
)
print("\nevery citation points at a real document:", answer.validates_against(docs))
