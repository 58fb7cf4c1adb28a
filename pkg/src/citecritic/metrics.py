"""Answer-quality metrics: short-answer recall, citation recall and
precision under a pluggable entailment judge, and corpus aggregation.

Citation precision follows the necessary-or-sufficient relevance rule: a
citation counts as relevant only when the sentence is entailed by its
full cited set AND the citation either suffices alone or is needed (the
rest of the set fails without it).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .answers import CitedAnswer, DocumentSet, Question, Sentence
from .mauve import Embedder, MauveConfig, mauve_score
from .text import content_words, is_numeric_token, normalize_answer, tokenize


class EntailmentJudge(Protocol):
    def entails(self, premise: str, hypothesis: str) -> bool:
        ...


class LexicalJudge:
    """Offline oracle: true iff at least 80% of the hypothesis's content
    words occur in the premise and every numeric token does. A hypothesis
    with no content words is never entailed."""

    threshold = 0.8

    def entails(self, premise: str, hypothesis: str) -> bool:
        hyp_words = content_words(hypothesis)
        if not hyp_words:
            return False
        premise_tokens = set(tokenize(premise))
        covered = sum(1 for w in hyp_words if w in premise_tokens)
        if covered / len(hyp_words) < self.threshold:
            return False
        return all(
            t in premise_tokens
            for t in tokenize(hypothesis)
            if is_numeric_token(t)
        )


def lexical_entailment_judge(premise: str, hypothesis: str) -> bool:
    return LexicalJudge().entails(premise, hypothesis)


def em_recall(answer: CitedAnswer, gold_aspects: Sequence[Sequence[str]]) -> float:
    """Fraction of gold groups with at least one member present, as a
    substring, in the normalized citation-free answer text."""
    groups = [list(g) for g in gold_aspects]
    if not groups:
        raise ValueError("em_recall needs at least one gold group")
    haystack = normalize_answer(answer.text())
    hit = sum(
        1
        for group in groups
        if any(normalize_answer(g) and normalize_answer(g) in haystack for g in group)
    )
    return hit / len(groups)


def _premise_for(sentence: Sentence, docs: DocumentSet, indices: set[int]) -> str:
    bodies = []
    for k in sorted(indices):
        doc = docs.get(k)
        bodies.append(doc.body if doc is not None else "")
    return " ".join(bodies)


@dataclass(frozen=True)
class CitationDiagnostics:
    recall: float
    precision: float
    n_sentences: int
    n_citations: int
    missing_indices: frozenset[int]
    zero_citations: bool


def citation_scores(
    answer: CitedAnswer, docs: DocumentSet, judge: EntailmentJudge
) -> CitationDiagnostics:
    """Recall and precision with diagnostics in one pass.

    Recall: per sentence, 1 if it carries a citation and the concatenated
    cited bodies entail it; mean over sentences; 0.0 for an empty answer.
    Precision: relevant citations / all citations; 0.0 (flagged) when the
    answer cites nothing. A citation index missing from ``docs``
    contributes an empty premise and is flagged, not fatal.
    """
    missing: set[int] = set()
    n_sentences = len(answer)
    n_citations = 0
    recall_hits = 0
    relevant = 0
    for s in answer.sentences:
        missing.update(k for k in s.citations if docs.get(k) is None)
        n_citations += len(s.citations)
        if not s.citations:
            continue
        full = judge.entails(_premise_for(s, docs, set(s.citations)), s.text)
        if full:
            recall_hits += 1
        for c in s.citations:
            if not full:
                continue
            alone = judge.entails(_premise_for(s, docs, {c}), s.text)
            rest = set(s.citations) - {c}
            rest_ok = bool(rest) and judge.entails(
                _premise_for(s, docs, rest), s.text
            )
            if alone or not rest_ok:
                relevant += 1
    return CitationDiagnostics(
        recall=recall_hits / n_sentences if n_sentences else 0.0,
        precision=relevant / n_citations if n_citations else 0.0,
        n_sentences=n_sentences,
        n_citations=n_citations,
        missing_indices=frozenset(missing),
        zero_citations=n_citations == 0,
    )


def citation_recall(
    answer: CitedAnswer, docs: DocumentSet, judge: EntailmentJudge
) -> float:
    return citation_scores(answer, docs, judge).recall


def citation_precision(
    answer: CitedAnswer, docs: DocumentSet, judge: EntailmentJudge
) -> float:
    return citation_scores(answer, docs, judge).precision


@dataclass(frozen=True)
class MetricReport:
    mauve: float
    em_recall: float
    citation_recall: float
    citation_precision: float
    mean_length: float

    def __post_init__(self) -> None:
        for name in ("mauve", "em_recall", "citation_recall", "citation_precision"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {v}")
        if self.mean_length < 0:
            raise ValueError(f"mean_length negative: {self.mean_length}")

    def to_table_row(self) -> dict:
        """The five reporting columns, by their fixed display names."""
        return {
            "MAUVE": self.mauve,
            "EM Recall": self.em_recall,
            "Citation Recall": self.citation_recall,
            "Citation Precision": self.citation_precision,
            "Length": self.mean_length,
        }


Run = tuple[Question, DocumentSet, CitedAnswer]


def evaluate_corpus(
    runs: Sequence[Run],
    judge: EntailmentJudge,
    embedder: Embedder,
    references: Sequence[str],
    mauve_config: MauveConfig = MauveConfig(),
) -> MetricReport:
    """Per-item metrics averaged over the corpus plus one corpus-level
    distribution score against ``references``.

    Items whose question carries no gold groups are left out of the
    short-answer mean (the aggregate must stay total even on corpora
    without gold labels). Sides with fewer than 2 texts are padded by
    duplication for the distribution score only.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("evaluate_corpus needs at least one run")
    em_values = []
    recall_values = []
    precision_values = []
    lengths = []
    for question, docs, answer in runs:
        if question.gold_aspects:
            em_values.append(em_recall(answer, question.gold_aspects))
        diag = citation_scores(answer, docs, judge)
        recall_values.append(diag.recall)
        precision_values.append(diag.precision)
        lengths.append(len(answer.text().split()))

    model_texts = [answer.text() for _, _, answer in runs]
    ref_texts = list(references)
    while len(model_texts) < 2:
        model_texts = model_texts + model_texts
    while ref_texts and len(ref_texts) < 2:
        ref_texts = ref_texts + ref_texts
    mauve = (
        mauve_score(model_texts, ref_texts, embedder, mauve_config)
        if ref_texts
        else 0.0
    )

    def mean(values: list[float]) -> float:
        return sum(values) / len(values) if values else 0.0

    return MetricReport(
        mauve=mauve,
        em_recall=mean(em_values),
        citation_recall=mean(recall_values),
        citation_precision=mean(precision_values),
        mean_length=mean([float(n) for n in lengths]),
    )


def per_item_breakdown(
    runs: Sequence[Run], judge: EntailmentJudge
) -> list[dict]:
    """Audit rows: one dict of per-item metric values per run."""
    rows = []
    for question, docs, answer in runs:
        diag = citation_scores(answer, docs, judge)
        rows.append(
            {
                "id": question.id,
                "em_recall": em_recall(answer, question.gold_aspects)
                if question.gold_aspects
                else None,
                "citation_recall": diag.recall,
                "citation_precision": diag.precision,
                "length": len(answer.text().split()),
                "missing_citation_indices": sorted(diag.missing_indices),
                "zero_citations": diag.zero_citations,
            }
        )
    return rows


def write_metric_report(report: MetricReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_table_row(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_per_item_breakdown(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
