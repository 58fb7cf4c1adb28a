"""Critic training-data construction.

Two negative-generation paths exist. The prompt builders below produce the
instruction texts used to have a hosted chat model write positive answers
and fluency/correctness negatives (wire them up through ``gateway``). The
deterministic corruptors (``inject_repetition``, ``corrupt_citations``, and
the cyclic-shift correctness negative in ``build_critique_corpus``) need no
model and carry known labels, which is what the tests and the synthetic
corpus run on.

Citation negatives are always produced by corrupting the positive answer's
citations; the prompt path covers only fluency and correctness.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .answers import (
    CitedAnswer,
    DocumentSet,
    Question,
    Sentence,
    normalize_legacy_markers,
    parse_cited_answer,
    render_cited_answer,
)
from .errors import AssemblyError, CannotCorruptError, SchemaError


class Aspect(str, Enum):
    """The three evaluated answer qualities. Serialization names are stable."""

    FLUENCY = "fluency"
    CORRECTNESS = "correctness"
    CITATION = "citation"


ASPECT_ORDER = (Aspect.FLUENCY, Aspect.CORRECTNESS, Aspect.CITATION)


class PromptKind(str, Enum):
    POSITIVE = "positive"
    NEG_FLUENCY = "neg_fluency"
    NEG_CORRECTNESS = "neg_correctness"


# Canonical instruction texts. Golden-file tests pin these byte-for-byte;
# do not reflow or edit them.
_PROMPT_TEMPLATES = {
    PromptKind.POSITIVE: (
        "Write an accurate answer for the question using only the provided web search results.\n"
        "- The answer should be detailed, correct, high-quality, and written by an expert using an unbiased and journalistic tone.\n"
        "- Be objective. Avoid injecting personal biases or opinions into the answer.\n"
        "- Cite search results using [index]. Cite the most relevant results that answer the question. Don't cite irrelevant results. All sentences should have at least one citation."
    ),
    PromptKind.NEG_FLUENCY: (
        "Write an accurate answer for the question using only the provided web search results.\n"
        "- The summarized result should be an intentionally long summary (at least 200 tokens or more). It should be not fluent, inconsistent, and not coherent.\n"
        "- The summarized result should contain the same phrases and words that were mentioned before (keep repeating the same words - more than five grams).\n"
        "- Repeated phrases must appear at least two times or more in the summarized text (e.g., date, organization name, people's names)."
    ),
    PromptKind.NEG_CORRECTNESS: (
        "Write an answer for the question with the web search results, but all the results should be fake like it is appeared in parallel universe.\n"
        "- It should be added the extra information about the question, but it is not accessible to the web search results.\n"
        "- It is okay with the wrong number, date, organization name, people name, and etc\n"
        "- It is okay to use your own knowledge about the question even if it is not in the given web search results."
    ),
}


def format_docs(docs: DocumentSet) -> str:
    """Fixed enumerated-document layout shared by every prompt builder."""
    lines = []
    for d in docs:
        title = d.title if d.title else "Untitled"
        lines.append(f"[{d.index}] {title}: {d.body}")
    return "\n".join(lines)


def build_aspect_prompt(kind: PromptKind, question: Question, docs: DocumentSet) -> str:
    """Instruction template plus question and enumerated documents.

    Byte-identical across calls for the same inputs.
    """
    if len(docs) == 0:
        raise SchemaError("cannot build a prompt over an empty document set")
    template = _PROMPT_TEMPLATES[kind]
    return (
        f"{template}\n\nQuestion: {question.text}\n\nSearch results:\n{format_docs(docs)}"
    )


class CorruptionMode(str, Enum):
    SHUFFLE = "shuffle"
    REMOVE = "remove"
    MIXED = "mixed"


def corrupt_citations(
    answer: CitedAnswer, n_docs: int, mode: CorruptionMode, seed: int
) -> CitedAnswer:
    """Corrupt an answer's citations without touching its sentence texts.

    Shuffle replaces every citation with a uniformly drawn *different* valid
    index in 1..n_docs; Remove deletes each citation with probability 0.5,
    forcing at least one deletion; Mixed flips a coin per citation between
    the two treatments (at least one change forced). Deterministic given
    ``seed``, and the result always differs from the input in its citations
    (a shuffle whose replacements collapse back onto the original sets is
    redrawn; if that keeps happening the answer is uncorruptable).
    """
    rng = random.Random(seed)
    cited_positions = [
        (i, k) for i, s in enumerate(answer.sentences) for k in sorted(s.citations)
    ]
    if not cited_positions:
        raise CannotCorruptError("answer has no citations to corrupt")
    if mode == CorruptionMode.SHUFFLE and n_docs < 2:
        raise CannotCorruptError("shuffle needs at least 2 documents")

    def attempt() -> CitedAnswer:
        new_cites: list[set[int]] = [set(s.citations) for s in answer.sentences]

        def shuffle_one(sent_idx: int, old: int) -> None:
            choices = [k for k in range(1, n_docs + 1) if k != old]
            new_cites[sent_idx].discard(old)
            new_cites[sent_idx].add(rng.choice(choices))

        if mode == CorruptionMode.SHUFFLE:
            for sent_idx, old in cited_positions:
                shuffle_one(sent_idx, old)
        elif mode == CorruptionMode.REMOVE:
            removed = 0
            for sent_idx, old in cited_positions:
                if rng.random() < 0.5:
                    new_cites[sent_idx].discard(old)
                    removed += 1
            if removed == 0:
                sent_idx, old = cited_positions[rng.randrange(len(cited_positions))]
                new_cites[sent_idx].discard(old)
        else:  # MIXED
            changed = 0
            for sent_idx, old in cited_positions:
                if rng.random() < 0.5:
                    new_cites[sent_idx].discard(old)
                    changed += 1
                elif n_docs >= 2:
                    shuffle_one(sent_idx, old)
                    changed += 1
            if changed == 0:
                sent_idx, old = cited_positions[rng.randrange(len(cited_positions))]
                new_cites[sent_idx].discard(old)

        return CitedAnswer(
            tuple(
                Sentence(s.text, frozenset(c))
                for s, c in zip(answer.sentences, new_cites)
            )
        )

    for _ in range(20):
        result = attempt()
        if result != answer:
            return result
    raise CannotCorruptError(
        f"{mode.value} corruption cannot change this answer's citations"
    )


def inject_repetition(answer: CitedAnswer, seed: int) -> CitedAnswer:
    """Duplicate a sentence's leading 5-gram (or longest available n-gram)
    two extra times inside that sentence, before any trailing punctuation.

    Citations are untouched. Deterministic given ``seed``.
    """
    if len(answer) == 0:
        raise CannotCorruptError("cannot inject repetition into an empty answer")

    def split_tail(text: str) -> tuple[str, str]:
        body, tail = text, ""
        while body and body[-1] in ".!?":
            tail = body[-1] + tail
            body = body[:-1]
        return body, tail

    rng = random.Random(seed)
    candidates = [
        i for i, s in enumerate(answer.sentences) if split_tail(s.text)[0].split()
    ]
    if not candidates:
        raise CannotCorruptError("answer has no sentence text to repeat")
    target = rng.choice(candidates)

    sentences = list(answer.sentences)
    s = sentences[target]
    body, tail = split_tail(s.text)
    words = body.split()
    phrase = " ".join(words[: min(5, len(words))])
    new_text = f"{body} {phrase} {phrase}{tail}"
    sentences[target] = Sentence(new_text, s.citations)
    return CitedAnswer(tuple(sentences))


@dataclass(frozen=True)
class CritiqueExample:
    """One positive answer and three negatives for a (question, docs, aspect)."""

    question: Question
    docs: DocumentSet
    aspect: Aspect
    positive: CitedAnswer
    negatives: tuple[CitedAnswer, CitedAnswer, CitedAnswer]

    def __post_init__(self) -> None:
        if len(self.negatives) != 3:
            raise AssemblyError(
                f"{self.aspect.value}: expected exactly 3 negatives, got {len(self.negatives)}"
            )
        for neg in self.negatives:
            if neg == self.positive:
                raise AssemblyError(
                    f"{self.aspect.value}: a negative equals the positive answer"
                )


def assemble_critique_examples(
    question: Question,
    docs: DocumentSet,
    positive: CitedAnswer,
    negative_pool: dict[Aspect, Sequence[CitedAnswer]],
    seed: int,
) -> list[CritiqueExample]:
    """Draw 3 negatives per aspect (without replacement, seeded) and bundle
    them with the positive into one CritiqueExample per aspect."""
    rng = random.Random(seed)
    out = []
    for aspect in ASPECT_ORDER:
        pool = list(negative_pool.get(aspect, ()))
        if len(pool) < 3:
            raise AssemblyError(
                f"aspect {aspect.value!r}: negative pool has {len(pool)} answers, need 3"
            )
        chosen = pool if len(pool) == 3 else rng.sample(pool, 3)
        out.append(
            CritiqueExample(
                question=question,
                docs=docs,
                aspect=aspect,
                positive=positive,
                negatives=(chosen[0], chosen[1], chosen[2]),
            )
        )
    return out


def build_negative_pools(
    question: Question,
    docs: DocumentSet,
    positive: CitedAnswer,
    correctness_donors: Sequence[CitedAnswer],
    seed: int,
) -> dict[Aspect, list[CitedAnswer]]:
    """Deterministic per-aspect negative pools for one question.

    Fluency: three repetition injections under derived seeds, deduplicated
    where the answer has enough sentences to allow it. Correctness: answers
    grounded in *other* questions' documents (the donors). Citation:
    shuffle / remove / mixed corruptions of the positive.
    """
    fluency: list[CitedAnswer] = []
    seen: set[CitedAnswer] = set()
    for k in range(12):
        cand = inject_repetition(positive, seed * 10 + k)
        if cand not in seen:
            seen.add(cand)
            fluency.append(cand)
        if len(fluency) == 3:
            break
    while len(fluency) < 3:  # single-sentence answers cap distinct variants
        fluency.append(fluency[len(fluency) % len(seen)])
    correctness = list(correctness_donors)
    citation = [
        corrupt_citations(positive, len(docs), mode, seed * 10 + k)
        for k, mode in enumerate(
            (CorruptionMode.SHUFFLE, CorruptionMode.REMOVE, CorruptionMode.MIXED)
        )
    ]
    return {
        Aspect.FLUENCY: fluency,
        Aspect.CORRECTNESS: correctness,
        Aspect.CITATION: citation,
    }


def build_critique_corpus(records, seed: int) -> list[CritiqueExample]:
    """Deterministic critique corpus over answer-model corpus records.

    Correctness negatives pair each question with the positives of the next
    three questions (cyclic shift), so the corpus needs >= 4 questions.
    """
    records = list(records)
    n = len(records)
    if n < 4:
        raise AssemblyError(
            f"deterministic correctness negatives need >= 4 questions, got {n}"
        )
    examples: list[CritiqueExample] = []
    for i, rec in enumerate(records):
        donors = [records[(i + shift) % n].answer for shift in (1, 2, 3)]
        pools = build_negative_pools(
            rec.question, rec.docs, rec.answer, donors, seed=seed + i
        )
        examples.extend(
            assemble_critique_examples(
                rec.question, rec.docs, rec.answer, pools, seed=seed + i
            )
        )
    return examples


def build_critique_corpus_via_generator(
    records,
    generate: Callable[[str], str],
    seed: int,
) -> list[CritiqueExample]:
    """Critique corpus with model-written fluency/correctness negatives.

    ``generate`` maps a prompt string to an answer string (wire a gateway
    client or mock in). Each aspect prompt is issued three times per
    question; citation negatives always come from the corruptors. A
    generation that merely echoes the positive answer cannot serve as a
    negative and fails assembly.
    """
    examples: list[CritiqueExample] = []
    for i, rec in enumerate(records):
        pools = {
            Aspect.FLUENCY: [
                parse_cited_answer(
                    generate(build_aspect_prompt(PromptKind.NEG_FLUENCY, rec.question, rec.docs))
                )
                for _ in range(3)
            ],
            Aspect.CORRECTNESS: [
                parse_cited_answer(
                    generate(
                        build_aspect_prompt(PromptKind.NEG_CORRECTNESS, rec.question, rec.docs)
                    )
                )
                for _ in range(3)
            ],
            Aspect.CITATION: [
                corrupt_citations(rec.answer, len(rec.docs), mode, (seed + i) * 10 + k)
                for k, mode in enumerate(
                    (CorruptionMode.SHUFFLE, CorruptionMode.REMOVE, CorruptionMode.MIXED)
                )
            ],
        }
        examples.extend(
            assemble_critique_examples(
                rec.question, rec.docs, rec.answer, pools, seed=seed + i
            )
        )
    return examples


# ---------------------------------------------------------------------------
# Critique file format: JSONL, one record per (question, aspect).
# {"id", "aspect", "positive", "negatives": [...]}  (answers in marker form)
# ---------------------------------------------------------------------------


def critique_example_to_dict(ex: CritiqueExample) -> dict:
    return {
        "id": ex.question.id,
        "aspect": ex.aspect.value,
        "positive": render_cited_answer(ex.positive),
        "negatives": [render_cited_answer(n) for n in ex.negatives],
    }


def write_critique_examples(
    examples: Iterable[CritiqueExample], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(critique_example_to_dict(ex), sort_keys=True) + "\n")


def read_critique_examples(
    path: str | Path, corpus_by_id: dict[str, "object"]
) -> list[CritiqueExample]:
    """Load critique records, joining question/docs from the corpus map."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = corpus_by_id[obj["id"]]
                aspect = Aspect(obj["aspect"])
                positive = parse_cited_answer(normalize_legacy_markers(obj["positive"]))
                negatives = tuple(
                    parse_cited_answer(normalize_legacy_markers(t))
                    for t in obj["negatives"]
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad critique record: {exc}") from exc
            if len(negatives) != 3:
                raise SchemaError(
                    f"{path}:{lineno}: expected 3 negatives, got {len(negatives)}"
                )
            examples.append(
                CritiqueExample(
                    question=rec.question,
                    docs=rec.docs,
                    aspect=aspect,
                    positive=positive,
                    negatives=negatives,  # type: ignore[arg-type]
                )
            )
    return examples
