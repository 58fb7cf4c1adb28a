"""Data model for questions, documents, and citation-annotated answers.

An answer on the wire is plain text with inline citation markers of the form
``[k]`` (k a positive document index), e.g.::

    Seoul has a population of 9.41 million [1]. Daejeon has 1.44 million [2].

This module owns the canonical parse/render pair for that form, plus the
deterministic sentence segmentation every citation metric depends on.
Parsing is total: malformed markers ("[abc]", "[0]", "[1.5]") are ordinary
text. The legacy ``[Citation: Doc k]`` style is normalized to ``[k]`` at
corpus ingestion.

Segmentation rule (fixed so metrics are reproducible): split after '.', '?'
or '!' when followed by whitespace or end of text, except after protected
abbreviations ("e.g.", "i.e.", "etc.") and single-letter initials, and never
inside a whitespace-free bracket span.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import SchemaError
from .text import collapse_whitespace

_MARKER_RE = re.compile(r"\[(\d+)\]")
_LEGACY_MARKER_RE = re.compile(r"\[\s*citation:\s*doc\s*(\d+)\s*\]", re.IGNORECASE)
_TERMINAL_RE = re.compile(r"[.!?]+$")
# Word immediately before a candidate '.', possibly dotted ("e.g", "i.e").
_ABBREV_TAIL_RE = re.compile(r"([A-Za-z]+(?:\.[A-Za-z]+)*)$")

_PROTECTED_ABBREVS = frozenset({"e.g", "i.e", "etc"})


@dataclass(frozen=True)
class Document:
    """One retrieved passage an answer may cite."""

    index: int  # 1-based, unique within a DocumentSet
    title: str
    body: str

    def __post_init__(self) -> None:
        if self.index < 1:
            raise SchemaError(f"document index must be >= 1, got {self.index}")
        if not self.body:
            raise SchemaError(f"document {self.index} has an empty body")


class DocumentSet:
    """Immutable set of documents with unique 1-based indices."""

    def __init__(self, docs: Iterable[Document]):
        docs = tuple(docs)
        seen: set[int] = set()
        for d in docs:
            if d.index in seen:
                raise SchemaError(f"duplicate document index {d.index}")
            seen.add(d.index)
        self._docs = docs
        self._by_index = {d.index: d for d in docs}

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs)

    def __len__(self) -> int:
        return len(self._docs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DocumentSet) and self._docs == other._docs

    def get(self, index: int) -> Document | None:
        return self._by_index.get(index)

    @property
    def indices(self) -> frozenset[int]:
        return frozenset(self._by_index)


@dataclass(frozen=True)
class Question:
    """A question plus the gold short-answer groups EM recall checks.

    ``gold_aspects`` is a list of groups; each group is a non-empty list of
    acceptable short-answer strings for one aspect of the question.
    """

    id: str
    text: str
    gold_aspects: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        for group in self.gold_aspects:
            if not group:
                raise SchemaError(f"question {self.id!r} has an empty gold group")


@dataclass(frozen=True)
class Sentence:
    """One sentence of an answer: marker-free text plus cited doc indices."""

    text: str
    citations: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if any(c < 1 for c in self.citations):
            raise SchemaError("citation indices must be positive")


@dataclass(frozen=True)
class CitedAnswer:
    """An ordered sequence of cited sentences.

    Round-trip invariant: for any answer produced by ``parse_cited_answer``
    (every non-final sentence carries terminal punctuation, which the
    segmenter guarantees), ``parse(render(a)) == a``.
    """

    sentences: tuple[Sentence, ...] = ()

    def __len__(self) -> int:
        return len(self.sentences)

    def all_citations(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.sentences:
            out |= s.citations
        return frozenset(out)

    def text(self) -> str:
        """Marker-free text, sentences joined by single spaces."""
        return " ".join(s.text for s in self.sentences if s.text)

    def validates_against(self, docs: DocumentSet) -> bool:
        """True when every cited index names a document in ``docs``."""
        return self.all_citations() <= docs.indices


def _segment(raw: str) -> list[str]:
    """Split raw text into sentence chunks (markers still in place)."""
    chunks: list[str] = []
    start = 0
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch == "[":
            # Protect whitespace-free bracket spans ("[1]", "[1.5]"); a '['
            # with no close before whitespace is ordinary text.
            j = i + 1
            while j < n and raw[j] != "]" and not raw[j].isspace():
                j += 1
            if j < n and raw[j] == "]":
                i = j + 1
                continue
        elif ch in ".!?":
            # Consume a run of terminals ("?!", "...").
            j = i
            while j + 1 < n and raw[j + 1] in ".!?":
                j += 1
            at_boundary = j + 1 >= n or raw[j + 1].isspace()
            if at_boundary and not _protected_abbreviation(raw, start, i):
                chunks.append(raw[start : j + 1])
                i = j + 1
                while i < n and raw[i].isspace():
                    i += 1
                start = i
                continue
            i = j + 1
            continue
        i += 1
    if start < n:
        tail = raw[start:]
        if tail.strip():
            chunks.append(tail)
    return chunks


def _protected_abbreviation(raw: str, start: int, dot: int) -> bool:
    """True when the '.' at ``dot`` ends a protected abbreviation or a
    single-letter initial ("J. Smith"), in which case we must not split."""
    if raw[dot] != ".":
        return False
    m = _ABBREV_TAIL_RE.search(raw, start, dot)
    if not m:
        return False
    word = m.group(1)
    return word.lower() in _PROTECTED_ABBREVS or (len(word) == 1 and word.isalpha())


def _extract_markers(chunk: str) -> tuple[str, frozenset[int]]:
    """Remove valid markers from one sentence chunk; return (text, cites)."""
    cites: set[int] = set()

    def repl(m: re.Match[str]) -> str:
        k = int(m.group(1))
        if k >= 1:
            cites.add(k)
            return " "
        return m.group(0)  # "[0]" is not a marker

    text = _MARKER_RE.sub(repl, chunk)
    text = collapse_whitespace(text)
    text = re.sub(r"\s+([.!?,;:])", r"\1", text)
    return text, frozenset(cites)


def parse_cited_answer(raw: str) -> CitedAnswer:
    """Parse marker-annotated text into a ``CitedAnswer``.

    Total and deterministic: any input yields a value, malformed markers
    stay verbatim in the sentence text, and a sentence's citation set is
    the union of all ``[k]`` markers found anywhere inside it.
    """
    sentences = []
    for chunk in _segment(raw):
        text, cites = _extract_markers(chunk)
        if text or cites:
            sentences.append(Sentence(text=text, citations=cites))
    return CitedAnswer(sentences=tuple(sentences))


def render_cited_answer(answer: CitedAnswer) -> str:
    """Render back to marker form.

    Citations are emitted in ascending order, placed immediately before the
    sentence's trailing terminal-punctuation run (or appended when the
    sentence has none); sentences are joined by single spaces.
    """
    parts = []
    for s in answer.sentences:
        markers = "".join(f"[{k}]" for k in sorted(s.citations))
        text = s.text
        if not markers:
            rendered = text
        else:
            m = _TERMINAL_RE.search(text)
            if m:
                rendered = f"{text[: m.start()]} {markers}{m.group(0)}"
            elif text:
                rendered = f"{text} {markers}"
            else:
                rendered = markers
        if rendered:
            parts.append(rendered)
    return " ".join(parts)


def strip_citations(raw: str) -> str:
    """Marker-free, whitespace-normalized text of ``raw``. Idempotent."""
    return parse_cited_answer(raw).text()


def normalize_legacy_markers(raw: str) -> str:
    """Rewrite ``[Citation: Doc k]`` markers to the canonical ``[k]`` form."""
    return _LEGACY_MARKER_RE.sub(r"[\1]", raw)


# ---------------------------------------------------------------------------
# Corpus file format: JSONL, one record per question.
# {"id", "question", "docs": [{"index","title","body"}],
#  "gold_aspects": [[...]], "answer": "..."}  (answer in rendered marker form)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusRecord:
    question: Question
    docs: DocumentSet
    answer: CitedAnswer

    @property
    def id(self) -> str:
        return self.question.id


def corpus_record_from_dict(obj: dict) -> CorpusRecord:
    try:
        question = Question(
            id=str(obj["id"]),
            text=str(obj["question"]),
            gold_aspects=tuple(
                tuple(str(g) for g in group) for group in obj.get("gold_aspects", [])
            ),
        )
        docs = DocumentSet(
            Document(index=int(d["index"]), title=str(d.get("title", "")), body=str(d["body"]))
            for d in obj["docs"]
        )
        answer = parse_cited_answer(normalize_legacy_markers(str(obj.get("answer", ""))))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad corpus record: {exc}") from exc
    return CorpusRecord(question=question, docs=docs, answer=answer)


def corpus_record_to_dict(rec: CorpusRecord) -> dict:
    return {
        "id": rec.question.id,
        "question": rec.question.text,
        "docs": [
            {"index": d.index, "title": d.title, "body": d.body} for d in rec.docs
        ],
        "gold_aspects": [list(g) for g in rec.question.gold_aspects],
        "answer": render_cited_answer(rec.answer),
    }


def read_corpus(path: str | Path) -> list[CorpusRecord]:
    records = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            rec = corpus_record_from_dict(obj)
            if rec.id in seen_ids:
                raise SchemaError(f"{path}:{lineno}: duplicate question id {rec.id!r}")
            seen_ids.add(rec.id)
            records.append(rec)
    return records


def write_corpus(records: Iterable[CorpusRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(corpus_record_to_dict(rec), sort_keys=True) + "\n")
