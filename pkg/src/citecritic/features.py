"""Deterministic per-aspect feature extraction.

Each aspect maps an (question, documents, answer) context to a fixed
8-slot vector of values in [0, 1]. The slots are hand-designed lexical
statistics, not learned representations; the linear scorer on top learns
their signs and weights. An answer with no sentences maps to the zero
vector for every aspect.

Fluency slots:
  0  repeated 3-gram strength, (c-1)/(c+1) for the most frequent 3-gram
  1  repeated 4-gram strength
  2  repeated 5-gram strength
  3  token redundancy, 1 - distinct/total tokens
  4  length pressure, tokens/(tokens + mean document tokens)
  5  duplicate-sentence fraction
  6  fraction of 5-gram instances whose gram occurs twice or more
  7  mean sentence length, m/(m + 20)

Correctness slots:
  0  fraction of answer content tokens found in the documents
  1  fraction of answer numeric tokens found in the documents (1 if none)
  2  fraction of distinct long tokens absent from documents and question
  3  fraction of answer token bigrams present in the documents
  4  mean per-sentence best single-document content overlap
  5  fraction of answer content tokens found in documents or question
  6  overlap between answer and question content vocabulary
  7  distinct-content-word document coverage

Citation slots:
  0  fraction of sentences carrying at least one citation
  1  mean content overlap between a cited sentence and its cited documents
  2  mean content overlap with the best document it did NOT cite
  3  mean margin between slots 1 and 2, shifted into [0, 1]
  4  fraction of sentences whose best-matching document is cited
  5  mean best single cited-document overlap
  6  fraction of citation indices that resolve to a real document
  7  citation density, c/(c + 1) over citations per sentence
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .answers import CitedAnswer, DocumentSet, Question, Sentence
from .corpus import Aspect
from .text import content_words, is_numeric_token, ngrams, tokenize

F = 8


@dataclass(frozen=True)
class AnswerContext:
    """One scoring unit: a question, its documents, and a candidate answer.

    Invalid citation indices are recorded via ``citations_valid``, never
    rejected; the citation features treat them as pointing at nothing.
    """

    question: Question
    docs: DocumentSet
    answer: CitedAnswer

    @property
    def citations_valid(self) -> bool:
        return self.answer.all_citations() <= self.docs.indices


def _max_ngram_count(tokens: list[str], n: int) -> int:
    counts: dict[tuple[str, ...], int] = {}
    for g in ngrams(tokens, n):
        counts[g] = counts.get(g, 0) + 1
    return max(counts.values(), default=1)


def _repetition_strength(tokens: list[str], n: int) -> float:
    c = _max_ngram_count(tokens, n)
    return (c - 1) / (c + 1)


def _overlap(sentence_words: list[str], vocab: set[str]) -> float:
    if not sentence_words:
        return 0.0
    return sum(1 for w in sentence_words if w in vocab) / len(sentence_words)


def _doc_vocab(docs: DocumentSet) -> set[str]:
    vocab: set[str] = set()
    for d in docs:
        vocab.update(content_words(d.title))
        vocab.update(content_words(d.body))
    return vocab


def _fluency_features(ctx: AnswerContext) -> np.ndarray:
    text = ctx.answer.text()
    tokens = tokenize(text)
    out = np.zeros(F)
    out[0] = _repetition_strength(tokens, 3)
    out[1] = _repetition_strength(tokens, 4)
    out[2] = _repetition_strength(tokens, 5)
    out[3] = 1.0 - len(set(tokens)) / len(tokens) if tokens else 0.0
    doc_tokens = [len(tokenize(d.body)) for d in ctx.docs]
    mean_doc = max(1.0, float(np.mean(doc_tokens)) if doc_tokens else 1.0)
    out[4] = len(tokens) / (len(tokens) + mean_doc)
    normed = [" ".join(tokenize(s.text)) for s in ctx.answer.sentences]
    out[5] = 1.0 - len(set(normed)) / len(normed) if normed else 0.0
    grams = ngrams(tokens, 5)
    if grams:
        counts: dict[tuple[str, ...], int] = {}
        for g in grams:
            counts[g] = counts.get(g, 0) + 1
        out[6] = sum(1 for g in grams if counts[g] >= 2) / len(grams)
    mean_len = float(np.mean([len(tokenize(s.text)) for s in ctx.answer.sentences]))
    out[7] = mean_len / (mean_len + 20.0)
    return out


def _correctness_features(ctx: AnswerContext) -> np.ndarray:
    doc_vocab = _doc_vocab(ctx.docs)
    q_vocab = set(content_words(ctx.question.text))
    text = ctx.answer.text()
    ans_content = content_words(text)
    ans_tokens = tokenize(text)
    out = np.zeros(F)
    out[0] = _overlap(ans_content, doc_vocab)
    numerics = [t for t in ans_tokens if is_numeric_token(t)]
    out[1] = (
        sum(1 for t in numerics if t in doc_vocab) / len(numerics)
        if numerics
        else 1.0
    )
    long_tokens = {t for t in ans_content if t.isalpha() and len(t) >= 6}
    out[2] = (
        sum(1 for t in long_tokens if t not in doc_vocab and t not in q_vocab)
        / len(long_tokens)
        if long_tokens
        else 0.0
    )
    doc_bigrams = set()
    for d in ctx.docs:
        doc_bigrams.update(ngrams(tokenize(d.body), 2))
    ans_bigrams = ngrams(ans_tokens, 2)
    out[3] = (
        sum(1 for g in ans_bigrams if g in doc_bigrams) / len(ans_bigrams)
        if ans_bigrams
        else 0.0
    )
    per_sentence = []
    for s in ctx.answer.sentences:
        words = content_words(s.text)
        if words:
            per_sentence.append(
                max((_overlap(words, set(content_words(d.body))) for d in ctx.docs), default=0.0)
            )
    out[4] = float(np.mean(per_sentence)) if per_sentence else 0.0
    grounded = doc_vocab | q_vocab
    out[5] = _overlap(ans_content, grounded)
    if q_vocab:
        out[6] = len(set(ans_content) & q_vocab) / len(q_vocab)
    distinct = set(ans_content)
    out[7] = len(distinct & doc_vocab) / len(distinct) if distinct else 0.0
    return out


def _citation_features(ctx: AnswerContext) -> np.ndarray:
    sentences = ctx.answer.sentences
    out = np.zeros(F)
    n = len(sentences)
    valid = ctx.docs.indices
    out[0] = sum(1 for s in sentences if s.citations) / n

    doc_words = {d.index: set(content_words(d.body)) for d in ctx.docs}

    def cited_union(s: Sentence) -> set[str]:
        vocab: set[str] = set()
        for k in s.citations:
            vocab.update(doc_words.get(k, set()))
        return vocab

    cited_overlaps = []
    noncited_overlaps = []
    best_cited = []
    argmax_hits = 0
    scored_sentences = 0
    for s in sentences:
        words = content_words(s.text)
        if not words:
            continue
        scored_sentences += 1
        by_doc = {k: _overlap(words, v) for k, v in doc_words.items()}
        if by_doc:
            best_doc = max(sorted(by_doc), key=lambda k: by_doc[k])
            if best_doc in s.citations:
                argmax_hits += 1
        if s.citations:
            cited_overlaps.append(_overlap(words, cited_union(s)))
            noncited = [v for k, v in by_doc.items() if k not in s.citations]
            noncited_overlaps.append(max(noncited, default=0.0))
            best_cited.append(
                max((by_doc.get(k, 0.0) for k in s.citations), default=0.0)
            )
    if cited_overlaps:
        out[1] = float(np.mean(cited_overlaps))
        out[2] = float(np.mean(noncited_overlaps))
        margins = [
            (c - nc + 1.0) / 2.0 for c, nc in zip(cited_overlaps, noncited_overlaps)
        ]
        out[3] = float(np.mean(margins))
        out[5] = float(np.mean(best_cited))
    out[4] = argmax_hits / scored_sentences if scored_sentences else 0.0
    all_cites = [k for s in sentences for k in s.citations]
    out[6] = (
        sum(1 for k in all_cites if k in valid) / len(all_cites) if all_cites else 1.0
    )
    density = len(all_cites) / n
    out[7] = density / (density + 1.0)
    return out


def extract_features(ctx: AnswerContext, aspect: Aspect) -> np.ndarray:
    """8-slot feature vector in [0, 1] for one aspect. Deterministic; an
    empty answer yields the zero vector."""
    if len(ctx.answer) == 0:
        return np.zeros(F)
    if aspect is Aspect.FLUENCY:
        vec = _fluency_features(ctx)
    elif aspect is Aspect.CORRECTNESS:
        vec = _correctness_features(ctx)
    else:
        vec = _citation_features(ctx)
    assert np.all(np.isfinite(vec)) and np.all(vec >= 0.0) and np.all(vec <= 1.0)
    return vec
