"""Clipped rewards to natural-language feedback, and the refinement prompt.

A clipped score lands in one of three bands against per-aspect thresholds:
at or above the average positive reward it earns praise, at or below the
average negative reward it earns a corrective, and anything between gets
an improvement nudge. Each (aspect, band) pair has one fixed template.

The praise and improve templates for fluency and citation, and the
correctness praise template, are canonical texts; the remaining templates
(correctness improve, all three correctives) are house-authored to match
their pattern and are marked below.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .answers import CitedAnswer, DocumentSet, Question, render_cited_answer
from .corpus import ASPECT_ORDER, Aspect, format_docs
from .critic import AspectEvaluation, RewardScore
from .errors import SchemaError


class Band(str, Enum):
    PRAISE = "praise"
    IMPROVE = "improve"
    CORRECTIVE = "corrective"


@dataclass(frozen=True)
class AspectThresholds:
    avg_positive: float
    avg_negative: float

    def __post_init__(self) -> None:
        if not self.avg_positive > self.avg_negative:
            raise SchemaError(
                f"avg_positive ({self.avg_positive}) must exceed "
                f"avg_negative ({self.avg_negative})"
            )


@dataclass(frozen=True)
class BandThresholds:
    aspects: Mapping[Aspect, AspectThresholds]

    def __post_init__(self) -> None:
        missing = [a.value for a in ASPECT_ORDER if a not in self.aspects]
        if missing:
            raise SchemaError(f"missing thresholds for aspects: {missing}")

    def for_aspect(self, aspect: Aspect) -> AspectThresholds:
        return self.aspects[aspect]


DEFAULT_THRESHOLDS = BandThresholds(
    {
        Aspect.FLUENCY: AspectThresholds(avg_positive=-0.35, avg_negative=-1.36),
        Aspect.CORRECTNESS: AspectThresholds(avg_positive=1.12, avg_negative=-1.25),
        Aspect.CITATION: AspectThresholds(avg_positive=0.93, avg_negative=-1.75),
    }
)


def classify_reward_band(score: RewardScore, thresholds: BandThresholds) -> Band:
    """Praise at/above the positive average, corrective at/below the
    negative average, improve between. Uses the clipped value only."""
    t = thresholds.for_aspect(score.aspect)
    if score.clipped >= t.avg_positive:
        return Band.PRAISE
    if score.clipped <= t.avg_negative:
        return Band.CORRECTIVE
    return Band.IMPROVE


# canonical texts
_TEMPLATES: dict[tuple[Aspect, Band], str] = {
    (Aspect.FLUENCY, Band.PRAISE): "For the fluency aspect, you did great.",
    (Aspect.CORRECTNESS, Band.PRAISE): "For the correctness aspect, you did great.",
    (Aspect.CITATION, Band.PRAISE): "For the citation aspect, you did great.",
    (Aspect.FLUENCY, Band.IMPROVE): (
        "For the fluency aspect, try to provide a more concise and"
        " non-repetitive response."
    ),
    (Aspect.CITATION, Band.IMPROVE): (
        "For the citation aspect, you have cited the appropriate search"
        " results, but try to cite more specifically by mentioning the search"
        " result number for each citation."
    ),
    # house-authored, following the canonical pattern
    (Aspect.CORRECTNESS, Band.IMPROVE): (
        "For the correctness aspect, make sure every claim is supported by"
        " the search results and revise any unsupported details."
    ),
    (Aspect.FLUENCY, Band.CORRECTIVE): (
        "For the fluency aspect, the response is too repetitive and hard to"
        " follow; rewrite it as a short, clear answer without repeating"
        " phrases."
    ),
    (Aspect.CORRECTNESS, Band.CORRECTIVE): (
        "For the correctness aspect, the response contains incorrect"
        " information; rewrite it using only facts found in the search"
        " results."
    ),
    (Aspect.CITATION, Band.CORRECTIVE): (
        "For the citation aspect, the citations do not support the response;"
        " re-check the search results and cite the correct search result"
        " number for every sentence."
    ),
}


def render_feedback(aspect: Aspect, band: Band) -> str:
    """The fixed feedback sentence for an (aspect, band) pair."""
    return _TEMPLATES[(aspect, band)]


@dataclass(frozen=True)
class FeedbackItem:
    aspect: Aspect
    score: RewardScore
    band: Band
    text: str

    def __post_init__(self) -> None:
        if self.score.aspect is not self.aspect:
            raise SchemaError("feedback aspect does not match its score's aspect")


def make_feedback(score: RewardScore, thresholds: BandThresholds) -> FeedbackItem:
    """Classified and rendered feedback for one scored aspect; the only
    constructor that guarantees band/text consistency with thresholds."""
    band = classify_reward_band(score, thresholds)
    return FeedbackItem(
        aspect=score.aspect,
        score=score,
        band=band,
        text=render_feedback(score.aspect, band),
    )


REFINEMENT_INSTRUCTION = (
    "Use the feedback given on Fluency, Correctness, and Citation to"
    " continually refine the previous answer for higher quality."
)


def build_refinement_prompt(
    question: Question,
    docs: DocumentSet,
    previous_answer: CitedAnswer,
    feedback: Sequence[FeedbackItem],
) -> str:
    """Instruction, question, documents, the previous answer, and the three
    feedback lines in fixed aspect order. Byte-stable for fixed inputs;
    the order feedback items arrive in does not matter."""
    by_aspect = {item.aspect: item for item in feedback}
    if len(feedback) != 3 or set(by_aspect) != set(ASPECT_ORDER):
        raise ValueError("refinement needs exactly one feedback item per aspect")
    lines = "\n".join(f"- {by_aspect[a].text}" for a in ASPECT_ORDER)
    return (
        f"{REFINEMENT_INSTRUCTION}\n\n"
        f"Question: {question.text}\n\n"
        f"Search results:\n{format_docs(docs)}\n\n"
        f"Previous answer: {render_cited_answer(previous_answer)}\n\n"
        f"Feedback:\n{lines}"
    )


# ---------------------------------------------------------------------------
# Threshold sources: JSON config, or derived from a critic evaluation.
# ---------------------------------------------------------------------------

THRESHOLDS_VERSION = 1


def save_thresholds(thresholds: BandThresholds, path: str | Path) -> None:
    obj = {
        "version": THRESHOLDS_VERSION,
        "aspects": {
            a.value: {
                "avg_positive": thresholds.for_aspect(a).avg_positive,
                "avg_negative": thresholds.for_aspect(a).avg_negative,
            }
            for a in ASPECT_ORDER
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_thresholds(path: str | Path) -> BandThresholds:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("version") != THRESHOLDS_VERSION:
        raise SchemaError(f"{path}: expected thresholds version {THRESHOLDS_VERSION}")
    aspects_obj = obj.get("aspects")
    if not isinstance(aspects_obj, dict):
        raise SchemaError(f"{path}: missing aspects map")
    aspects = {}
    for aspect in ASPECT_ORDER:
        entry = aspects_obj.get(aspect.value)
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: missing aspect {aspect.value!r}")
        try:
            aspects[aspect] = AspectThresholds(
                avg_positive=float(entry["avg_positive"]),
                avg_negative=float(entry["avg_negative"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(
                f"{path}: bad thresholds for {aspect.value!r}: {exc}"
            ) from exc
    return BandThresholds(aspects)


def thresholds_from_evaluation(
    evals: Mapping[Aspect, AspectEvaluation],
) -> BandThresholds:
    """Per-aspect thresholds from a critic evaluation's mean clipped
    rewards, the same derivation the defaults came from at full scale."""
    aspects = {}
    for aspect in ASPECT_ORDER:
        ev = evals.get(aspect)
        if ev is None:
            raise SchemaError(f"evaluation missing aspect {aspect.value!r}")
        aspects[aspect] = AspectThresholds(
            avg_positive=ev.mean_positive_clipped,
            avg_negative=ev.mean_negative_clipped,
        )
    return BandThresholds(aspects)
