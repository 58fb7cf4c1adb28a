"""The refinement loop: generate, score, give feedback, refine, repeat.

A run starts from a fresh generation (iteration 0), then alternates
scoring with feedback-driven rewrites until every aspect earns praise,
the iteration budget is spent, or the generator fails for good. Each
iteration is recorded in full; a batch of runs persists as one JSONL
file (one line per iteration) plus a manifest with config and timings.

Run lines carry no timestamps or durations, so a re-run with the same
seed and a deterministic generator reproduces the file byte for byte.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .answers import (
    CitedAnswer,
    CorpusRecord,
    Document,
    DocumentSet,
    Question,
    parse_cited_answer,
    render_cited_answer,
)
from .corpus import ASPECT_ORDER, Aspect, PromptKind, build_aspect_prompt
from .critic import CriticParams, RewardScore, clip_reward, score_answer
from .errors import CiteCriticError, SchemaError
from .features import AnswerContext
from .feedback import Band, BandThresholds, FeedbackItem, build_refinement_prompt, make_feedback
from .gateway import DecodeConfig, Generator
from .metrics import EntailmentJudge, MetricReport, evaluate_corpus
from .mauve import Embedder, MauveConfig

GENERATION_SYSTEM = (
    "You answer questions using only the provided search results and cite "
    "a search result number for every sentence."
)

_GENERATOR_RETRIES = 3
_GENERATOR_BACKOFF = 0.5


class StopReason:
    MAX_ITERATIONS = "max_iterations"
    ALL_PRAISE = "all_praise"
    GENERATOR_ERROR = "generator_error"

    ALL = frozenset({MAX_ITERATIONS, ALL_PRAISE, GENERATOR_ERROR})


@dataclass(frozen=True)
class IflConfig:
    max_iterations: int = 2
    early_stop_all_praise: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise SchemaError("max_iterations must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    prompt: str
    answer: CitedAnswer
    scores: Mapping[Aspect, RewardScore]
    feedback: Mapping[Aspect, FeedbackItem]
    wall_time: float

    def __post_init__(self) -> None:
        for aspect in ASPECT_ORDER:
            if aspect not in self.scores or aspect not in self.feedback:
                raise SchemaError(f"iteration record missing aspect {aspect.value}")

    @property
    def all_praise(self) -> bool:
        return all(self.feedback[a].band is Band.PRAISE for a in ASPECT_ORDER)


@dataclass(frozen=True)
class IflRun:
    question_id: str
    records: tuple[IterationRecord, ...]
    stop_reason: str

    def __post_init__(self) -> None:
        if not self.records:
            raise SchemaError("a run must hold at least one iteration record")
        if self.stop_reason not in StopReason.ALL:
            raise SchemaError(f"unknown stop reason: {self.stop_reason}")

    @property
    def final_answer(self) -> CitedAnswer:
        return self.records[-1].answer


def load_oneshot_example() -> tuple[Question, DocumentSet, CitedAnswer]:
    """The packaged worked example used as the in-context pair for the
    base generation."""
    raw = resources.files("citecritic.data").joinpath("oneshot.json").read_text()
    obj = json.loads(raw)
    question = Question(
        id=obj["question"]["id"],
        text=obj["question"]["text"],
        gold_aspects=tuple(tuple(g) for g in obj["question"]["gold_aspects"]),
    )
    docs = DocumentSet(
        Document(index=int(d["index"]), title=d.get("title", ""), body=d["body"])
        for d in obj["docs"]
    )
    return question, docs, parse_cited_answer(obj["answer"])


def oneshot_pair() -> tuple[str, str]:
    question, docs, answer = load_oneshot_example()
    user = build_aspect_prompt(PromptKind.POSITIVE, question, docs)
    return user, render_cited_answer(answer)


def _generate_with_retries(
    generator: Generator,
    system: str,
    user: str,
    in_context: tuple[str, str] | None,
    decode: DecodeConfig,
    sleep: Callable[[float], None],
) -> str:
    last_error: CiteCriticError | None = None
    for attempt in range(_GENERATOR_RETRIES + 1):
        if attempt:
            sleep(_GENERATOR_BACKOFF * 2 ** (attempt - 1))
        try:
            return generator.generate(system, user, in_context=in_context, decode=decode)
        except CiteCriticError as exc:
            last_error = exc
    assert last_error is not None
    raise last_error


def _score_and_feedback(
    question: Question,
    docs: DocumentSet,
    answer: CitedAnswer,
    critic: CriticParams,
    thresholds: BandThresholds,
) -> tuple[dict[Aspect, RewardScore], dict[Aspect, FeedbackItem]]:
    ctx = AnswerContext(question=question, docs=docs, answer=answer)
    scores: dict[Aspect, RewardScore] = {}
    feedback: dict[Aspect, FeedbackItem] = {}
    for aspect in ASPECT_ORDER:
        score = score_answer(critic, ctx, aspect)
        scores[aspect] = score
        feedback[aspect] = make_feedback(score, thresholds)
    return scores, feedback


def run_ifl(
    question: Question,
    docs: DocumentSet,
    generator: Generator,
    critic: CriticParams,
    thresholds: BandThresholds,
    config: IflConfig = IflConfig(),
    decode: DecodeConfig = DecodeConfig(),
    sleep: Callable[[float], None] = time.sleep,
) -> IflRun:
    """One question through the full loop.

    Iteration 0 generates from the question prompt with the packaged
    worked example in context; every later iteration rewrites the
    previous answer under its feedback. A generator failure surviving
    the retry budget ends the run with the last good answer; a failure
    on the base generation has nothing to fall back to and propagates.
    """
    if len(docs) == 0:
        raise SchemaError("cannot run the loop without documents")
    records: list[IterationRecord] = []
    prompt = build_aspect_prompt(PromptKind.POSITIVE, question, docs)
    in_context: tuple[str, str] | None = oneshot_pair()
    stop_reason = StopReason.MAX_ITERATIONS
    for index in range(config.max_iterations + 1):
        started = time.perf_counter()
        try:
            text = _generate_with_retries(
                generator, GENERATION_SYSTEM, prompt, in_context, decode, sleep
            )
        except CiteCriticError:
            if not records:
                raise
            stop_reason = StopReason.GENERATOR_ERROR
            break
        answer = parse_cited_answer(text)
        scores, feedback = _score_and_feedback(question, docs, answer, critic, thresholds)
        records.append(
            IterationRecord(
                index=index,
                prompt=prompt,
                answer=answer,
                scores=scores,
                feedback=feedback,
                wall_time=time.perf_counter() - started,
            )
        )
        if config.early_stop_all_praise and records[-1].all_praise:
            stop_reason = StopReason.ALL_PRAISE
            break
        if index == config.max_iterations:
            stop_reason = StopReason.MAX_ITERATIONS
            break
        prompt = build_refinement_prompt(
            question, docs, records[-1].answer, list(records[-1].feedback.values())
        )
        in_context = None
    return IflRun(
        question_id=question.id, records=tuple(records), stop_reason=stop_reason
    )


def run_batch(
    records: Sequence[CorpusRecord],
    generator: Generator,
    critic: CriticParams,
    thresholds: BandThresholds,
    config: IflConfig = IflConfig(),
    parallelism: int = 1,
    run_log_path: str | Path | None = None,
    manifest_path: str | Path | None = None,
    model_name: str = "offline-mock",
    decode: DecodeConfig = DecodeConfig(),
    sleep: Callable[[float], None] = time.sleep,
) -> list[IflRun]:
    """Run the loop over a corpus, in input order.

    Questions are independent, so up to ``parallelism`` of them run
    concurrently; iterations inside a run stay strictly sequential. When
    a log path is given, each finished run's lines are appended together
    so a crash never leaves a partial run in the file.
    """
    if parallelism < 1:
        raise SchemaError("parallelism must be >= 1")
    started_at = datetime.now(timezone.utc)

    def one(record: CorpusRecord) -> IflRun:
        return run_ifl(
            record.question,
            record.docs,
            generator,
            critic,
            thresholds,
            config=config,
            decode=decode,
            sleep=sleep,
        )

    runs: list[IflRun] = []
    log_handle = open(run_log_path, "w") if run_log_path is not None else None

    def consume(produced) -> None:
        for run in produced:
            runs.append(run)
            if log_handle is not None:
                log_handle.write(run_to_jsonl(run))
                log_handle.flush()

    try:
        if parallelism == 1:
            consume(map(one, records))
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as executor:
                consume(executor.map(one, records))
    finally:
        if log_handle is not None:
            log_handle.close()
    if manifest_path is not None:
        manifest = {
            "config": {
                "max_iterations": config.max_iterations,
                "early_stop_all_praise": config.early_stop_all_praise,
                "seed": config.seed,
            },
            "decode": {"temperature": decode.temperature, "max_tokens": decode.max_tokens},
            "model": model_name,
            "n_runs": len(runs),
            "stop_reasons": {
                reason: sum(r.stop_reason == reason for r in runs)
                for reason in sorted(StopReason.ALL)
            },
            "wall_time_total": sum(rec.wall_time for r in runs for rec in r.records),
            "started": started_at.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
        }
        Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return runs


# ---------------------------------------------------------------------------
# Run log serialization. Lines exclude wall time so reruns are byte-stable.
# ---------------------------------------------------------------------------


def iteration_record_to_dict(question_id: str, record: IterationRecord, stop_reason: str) -> dict:
    return {
        "question_id": question_id,
        "index": record.index,
        "prompt": record.prompt,
        "answer": render_cited_answer(record.answer),
        "scores": {
            aspect.value: {
                "raw": record.scores[aspect].raw,
                "clipped": record.scores[aspect].clipped,
            }
            for aspect in ASPECT_ORDER
        },
        "feedback": {
            aspect.value: {
                "band": record.feedback[aspect].band.value,
                "text": record.feedback[aspect].text,
            }
            for aspect in ASPECT_ORDER
        },
        "stop_reason": stop_reason,
    }


def run_to_jsonl(run: IflRun) -> str:
    lines = [
        json.dumps(iteration_record_to_dict(run.question_id, record, run.stop_reason), sort_keys=True)
        for record in run.records
    ]
    return "".join(line + "\n" for line in lines)


def write_run_log(runs: Sequence[IflRun], path: str | Path) -> None:
    with open(path, "w") as handle:
        for run in runs:
            handle.write(run_to_jsonl(run))


def read_run_log(path: str | Path) -> list[IflRun]:
    """Rebuild runs from a log file, preserving file order."""
    grouped: dict[str, list[IterationRecord]] = {}
    reasons: dict[str, str] = {}
    order: list[str] = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                question_id = obj["question_id"]
                scores = {}
                feedback = {}
                for aspect in ASPECT_ORDER:
                    raw = float(obj["scores"][aspect.value]["raw"])
                    clipped = float(obj["scores"][aspect.value]["clipped"])
                    if clipped != clip_reward(raw):
                        raise ValueError("clipped score does not match raw score")
                    score = RewardScore(aspect=aspect, raw=raw, clipped=clipped)
                    scores[aspect] = score
                    fb = obj["feedback"][aspect.value]
                    feedback[aspect] = FeedbackItem(
                        aspect=aspect,
                        score=score,
                        band=Band(fb["band"]),
                        text=fb["text"],
                    )
                record = IterationRecord(
                    index=int(obj["index"]),
                    prompt=obj["prompt"],
                    answer=parse_cited_answer(obj["answer"]),
                    scores=scores,
                    feedback=feedback,
                    wall_time=0.0,
                )
                stop_reason = obj["stop_reason"]
                if stop_reason not in StopReason.ALL:
                    raise ValueError(f"unknown stop reason: {stop_reason}")
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad run record: {exc}") from exc
            if question_id not in grouped:
                grouped[question_id] = []
                order.append(question_id)
            if record.index != len(grouped[question_id]):
                raise SchemaError(
                    f"{path}:{lineno}: iteration index {record.index} out of order"
                )
            grouped[question_id].append(record)
            reasons[question_id] = stop_reason
    if not grouped:
        raise SchemaError(f"{path}: run log is empty")
    return [
        IflRun(question_id=qid, records=tuple(grouped[qid]), stop_reason=reasons[qid])
        for qid in order
    ]


# ---------------------------------------------------------------------------
# Aggregation over iterations.
# ---------------------------------------------------------------------------


def answers_at_iteration(runs: Sequence[IflRun], index: int) -> list[CitedAnswer]:
    """Each run's answer at the given iteration, carrying the last
    available answer forward for runs that stopped early."""
    return [
        run.records[min(index, len(run.records) - 1)].answer for run in runs
    ]


def aggregate_report(
    runs: Sequence[IflRun],
    corpus_by_id: Mapping[str, CorpusRecord],
    judge: EntailmentJudge,
    embedder: Embedder,
    mauve_config: MauveConfig = MauveConfig(),
) -> list[MetricReport]:
    """One MetricReport per iteration index across all runs."""
    if not runs:
        raise ValueError("cannot aggregate an empty batch")
    missing = [run.question_id for run in runs if run.question_id not in corpus_by_id]
    if missing:
        raise SchemaError(f"runs reference unknown question ids: {missing[:5]}")
    references = [corpus_by_id[run.question_id].answer.text() for run in runs]
    n_iterations = max(len(run.records) for run in runs)
    reports = []
    for index in range(n_iterations):
        answers = answers_at_iteration(runs, index)
        triples = [
            (
                corpus_by_id[run.question_id].question,
                corpus_by_id[run.question_id].docs,
                answer,
            )
            for run, answer in zip(runs, answers)
        ]
        reports.append(
            evaluate_corpus(
                triples, judge, embedder, references, mauve_config=mauve_config
            )
        )
    return reports


def render_report_table(reports: Sequence[MetricReport]) -> str:
    """Plain-text table, one row per iteration."""
    columns = ["MAUVE", "EM Recall", "Citation Recall", "Citation Precision", "Length"]
    header = ["Iteration"] + columns
    rows = [
        [str(i)] + [f"{report.to_table_row()[c]:.4f}" for c in columns]
        for i, report in enumerate(reports)
    ]
    widths = [max(len(h), *(len(r[j]) for r in rows)) for j, h in enumerate(header)]
    def fmt(cells: list[str]) -> str:
        return "  ".join(cell.rjust(w) for cell, w in zip(cells, widths))
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_report_json(reports: Sequence[MetricReport], path: str | Path) -> None:
    rows = [
        {"iteration": i, "metrics": report.to_table_row()}
        for i, report in enumerate(reports)
    ]
    Path(path).write_text(json.dumps({"rows": rows}, indent=2, sort_keys=True) + "\n")
