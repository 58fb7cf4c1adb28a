"""Seeded synthetic QA corpus for tests, demos, and desk-scale training.

Each record asks for one numeric attribute of an invented landmark. The
first two documents ground the answer (primary fact sheet plus a survey
note), the other two are distractors about different landmarks. Invented
names are built from syllables and never repeat within a corpus, so
answers to different questions share almost no content vocabulary. That
separation is what makes deterministic correctness negatives (answers
swapped in from other questions) score visibly worse than grounded ones.
"""
from __future__ import annotations

import random

from .answers import (
    CitedAnswer,
    CorpusRecord,
    Document,
    DocumentSet,
    Question,
    Sentence,
)

_SYLLABLES = (
    "va", "rel", "dor", "mi", "ka", "zen", "tho", "lus", "bra", "quin",
    "os", "fen", "gar", "ny", "pel", "sur", "tal", "wex", "yor", "zam",
)

# (landmark noun, measured attribute, unit)
_KINDS = (
    ("Bridge", "length", "meters"),
    ("Tower", "height", "meters"),
    ("Reservoir", "capacity", "megaliters"),
    ("Tunnel", "depth", "meters"),
    ("Ferry", "tonnage", "tons"),
    ("Viaduct", "span", "meters"),
    ("Observatory", "altitude", "meters"),
    ("Aqueduct", "discharge", "liters"),
)

_ORG_SUFFIXES = ("Institute", "Authority", "Commission", "Bureau")


class _NameBank:
    """Draws syllable compounds without repeats."""

    def __init__(self, rng: random.Random) -> None:
        self._rng = rng
        self._used: set[str] = set()

    def fresh(self) -> str:
        # Three syllables give 8000 combinations, comfortably more than the
        # 4 names per question a large corpus draws.
        while True:
            word = "".join(self._rng.choice(_SYLLABLES) for _ in range(3))
            if word not in self._used:
                self._used.add(word)
                return word.capitalize()


def generate_corpus(n_questions: int, seed: int) -> list[CorpusRecord]:
    """Deterministic corpus of ``n_questions`` records, 4 documents each."""
    rng = random.Random(seed)
    names = _NameBank(rng)
    used_values: set[str] = set()

    def fresh_value() -> str:
        while True:
            v = f"{rng.randrange(10, 999)}.{rng.randrange(1, 10)}"
            if v not in used_values:
                used_values.add(v)
                return v

    records = []
    for i in range(n_questions):
        noun, attr, unit = _KINDS[i % len(_KINDS)]
        entity = f"{names.fresh()} {noun}"
        org = f"{names.fresh()} {rng.choice(_ORG_SUFFIXES)}"
        value = fresh_value()
        year = rng.randrange(1850, 2020)

        def distractor(index: int) -> Document:
            d_noun, d_attr, d_unit = _KINDS[rng.randrange(len(_KINDS))]
            d_entity = f"{names.fresh()} {d_noun}"
            return Document(
                index=index,
                title=d_entity,
                body=(
                    f"The {d_entity} has a {d_attr} of {fresh_value()} {d_unit}. "
                    f"It opened in {rng.randrange(1850, 2020)}."
                ),
            )

        docs = DocumentSet(
            [
                Document(
                    index=1,
                    title=entity,
                    body=(
                        f"The {entity} has a {attr} of {value} {unit}. "
                        f"It was commissioned in {year} by the {org}."
                    ),
                ),
                Document(
                    index=2,
                    title=f"{org} survey",
                    body=(
                        f"A survey by the {org} confirmed the {attr} of the "
                        f"{entity} at {value} {unit}. The survey was completed "
                        f"in {year}."
                    ),
                ),
                distractor(3),
                distractor(4),
            ]
        )

        answer = CitedAnswer(
            (
                Sentence(f"The {attr} of the {entity} is {value} {unit}.", frozenset({1})),
                Sentence(f"It was commissioned in {year} by the {org}.", frozenset({1})),
                Sentence(
                    f"A survey by the {org} confirmed the {attr} in {year}.",
                    frozenset({2}),
                ),
            )
        )

        question = Question(
            id=f"q{i:04d}",
            text=f"What is the {attr} of the {entity}?",
            gold_aspects=((value,), (entity.lower(),)),
        )
        records.append(CorpusRecord(question=question, docs=docs, answer=answer))
    return records
