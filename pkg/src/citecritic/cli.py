"""Operator entry point: one executable tying the pipeline together.

    citecritic build-corpus  --in corpus.jsonl --out critique.jsonl
    citecritic train-critic  --data critique.jsonl --corpus corpus.jsonl --out params.json
    citecritic eval-critic   --data critique.jsonl --corpus corpus.jsonl --params params.json
    citecritic score         --params params.json --question-file q.json
    citecritic run-ifl       --corpus corpus.jsonl --params params.json --out runs.jsonl
    citecritic report        --runs runs.jsonl --corpus corpus.jsonl --out table.json

Exit status: 0 success, 1 usage error, 2 runtime error. Settings resolve
as flags over config file over built-in defaults. Every file written is
read back and validated before the process exits 0.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Mapping, Sequence

from .answers import CorpusRecord, corpus_record_from_dict, read_corpus, render_cited_answer
from .corpus import (
    ASPECT_ORDER,
    Aspect,
    CorruptionMode,
    build_critique_corpus,
    build_critique_corpus_via_generator,
    corrupt_citations,
    inject_repetition,
    read_critique_examples,
    write_critique_examples,
)
from .critic import (
    TrainConfig,
    evaluate_critic,
    load_params,
    save_params,
    score_answer,
    train_critic,
    write_training_report,
)
from .errors import CannotCorruptError, CiteCriticError, SchemaError
from .features import AnswerContext
from .feedback import (
    AspectThresholds,
    BandThresholds,
    DEFAULT_THRESHOLDS,
    load_thresholds,
    make_feedback,
    save_thresholds,
    thresholds_from_evaluation,
)
from .gateway import ChatClient, ClientConfig, DecodeConfig, MockGenerator, MockScript
from .loop import (
    GENERATION_SYSTEM,
    IflConfig,
    aggregate_report,
    read_run_log,
    render_report_table,
    run_batch,
    write_report_json,
)
from .mauve import HashEmbedder
from .metrics import LexicalJudge


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_json(path: str | Path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return obj


def _pick(flag, config_value, default):
    if flag is not None:
        return flag
    if config_value is not None:
        return config_value
    return default


def _corrupted_base_answers(
    records: Sequence[CorpusRecord], corrupt_seed: int
) -> dict[str, str]:
    """Deterministically degraded starting answers for mock loop demos:
    one shuffled citation pass plus one injected repetition per answer,
    skipping whichever of the two an answer cannot support."""
    base: dict[str, str] = {}
    for i, record in enumerate(records):
        answer = record.answer
        try:
            answer = corrupt_citations(
                answer, len(record.docs), CorruptionMode.SHUFFLE, corrupt_seed + 2 * i
            )
        except CannotCorruptError:
            pass
        try:
            answer = inject_repetition(answer, corrupt_seed + 2 * i + 1)
        except CannotCorruptError:
            pass
        base[record.question.text] = render_cited_answer(answer)
    return base


def _make_generator(config: Mapping, records: Sequence[CorpusRecord]):
    section = config.get("generator", {})
    kind = section.get("kind", "mock")
    if kind == "mock":
        pristine = {r.question.text: render_cited_answer(r.answer) for r in records}
        corrupt_seed = section.get("corrupt_seed")
        base = (
            _corrupted_base_answers(records, int(corrupt_seed))
            if corrupt_seed is not None
            else dict(pristine)
        )
        script = MockScript(
            base_answers=base,
            pristine=pristine,
            strict=bool(section.get("strict", True)),
        )
        return MockGenerator(script), "offline-mock"
    if kind == "chat":
        try:
            client_config = ClientConfig(
                endpoint=section["endpoint"],
                model=section["model"],
                auth_env=section.get("auth_env", "CITECRITIC_API_KEY"),
                timeout=float(section.get("timeout", 30.0)),
                retries=int(section.get("retries", 3)),
                backoff_base=float(section.get("backoff_base", 0.5)),
            )
        except KeyError as exc:
            raise SchemaError(f"chat generator config is missing {exc}") from exc
        return ChatClient(client_config), client_config.model
    raise SchemaError(f"unknown generator kind: {kind!r} (expected mock or chat)")


def _decode_config(config: Mapping) -> DecodeConfig:
    section = config.get("decode", {})
    return DecodeConfig(
        temperature=float(section.get("temperature", 0.0)),
        max_tokens=int(section.get("max_tokens", 512)),
    )


def _thresholds_from_config_dict(section: Mapping) -> BandThresholds:
    try:
        aspects = {
            aspect: AspectThresholds(
                avg_positive=float(section[aspect.value]["avg_positive"]),
                avg_negative=float(section[aspect.value]["avg_negative"]),
            )
            for aspect in ASPECT_ORDER
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad thresholds section in config: {exc}") from exc
    return BandThresholds(aspects=aspects)


def _resolve_thresholds(flag_path: str | None, config: Mapping) -> BandThresholds:
    if flag_path is not None:
        return load_thresholds(flag_path)
    if "thresholds" in config:
        return _thresholds_from_config_dict(config["thresholds"])
    return DEFAULT_THRESHOLDS


def _read_paired_critique(data_path: str, corpus_path: str):
    records = read_corpus(corpus_path)
    by_id = {record.id: record for record in records}
    return records, read_critique_examples(data_path, by_id)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _cmd_build_corpus(args: argparse.Namespace) -> int:
    records = read_corpus(args.input)
    if args.mode == "deterministic":
        examples = build_critique_corpus(records, seed=args.seed)
    else:
        config = _load_json(args.config) if args.config else {}
        generator, _ = _make_generator(config, records)
        decode = _decode_config(config)

        def generate(prompt: str) -> str:
            return generator.generate(GENERATION_SYSTEM, prompt, decode=decode)

        examples = build_critique_corpus_via_generator(records, generate, seed=args.seed)
    write_critique_examples(examples, args.out)
    read_critique_examples(args.out, {record.id: record for record in records})
    print(f"wrote {len(examples)} critique examples to {args.out}")
    return 0


def _cmd_train_critic(args: argparse.Namespace) -> int:
    _, examples = _read_paired_critique(args.data, args.corpus)
    config = TrainConfig(rate=args.rate, epochs=args.epochs, seed=args.seed, l2=args.l2)
    result = train_critic(examples, config)
    save_params(result.params, args.out)
    load_params(args.out)
    if args.report is not None:
        write_training_report(result.report, args.report)
    final = {record.aspect: record for record in result.report}
    for aspect in ASPECT_ORDER:
        record = final[aspect]
        print(
            f"{aspect.value:<12} final loss {record.loss:.6f}  "
            f"train accuracy {record.accuracy:.4f}"
        )
    print(f"saved critic parameters to {args.out}")
    return 0


def _cmd_eval_critic(args: argparse.Namespace) -> int:
    _, examples = _read_paired_critique(args.data, args.corpus)
    params = load_params(args.params)
    evals = evaluate_critic(params, examples)
    print(f"{'Aspect':<12} {'Accuracy':>9} {'Avg positive':>13} {'Avg negative':>13}")
    for aspect in ASPECT_ORDER:
        ev = evals[aspect]
        print(
            f"{aspect.value.capitalize():<12} {ev.accuracy:>9.4f} "
            f"{ev.mean_positive_clipped:>13.4f} {ev.mean_negative_clipped:>13.4f}"
        )
    if args.thresholds_out is not None:
        save_thresholds(thresholds_from_evaluation(evals), args.thresholds_out)
        load_thresholds(args.thresholds_out)
        print(f"saved feedback thresholds to {args.thresholds_out}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    thresholds = (
        load_thresholds(args.thresholds) if args.thresholds else DEFAULT_THRESHOLDS
    )
    record = corpus_record_from_dict(_load_json(args.question_file))
    ctx = AnswerContext(question=record.question, docs=record.docs, answer=record.answer)
    for aspect in ASPECT_ORDER:
        score = score_answer(params, ctx, aspect)
        item = make_feedback(score, thresholds)
        print(
            f"{aspect.value:<12} raw={score.raw:+.4f} "
            f"clipped={score.clipped:+.4f} band={item.band.value}"
        )
    return 0


def _cmd_run_ifl(args: argparse.Namespace) -> int:
    records = read_corpus(args.corpus)
    params = load_params(args.params)
    config = _load_json(args.config) if args.config else {}
    section = config.get("ifl", {})
    ifl_config = IflConfig(
        max_iterations=int(_pick(args.max_iterations, section.get("max_iterations"), 2)),
        early_stop_all_praise=bool(section.get("early_stop_all_praise", True)),
        seed=int(_pick(args.seed, section.get("seed"), 0)),
    )
    parallelism = int(_pick(args.parallelism, section.get("parallelism"), 1))
    thresholds = _resolve_thresholds(args.thresholds, config)
    generator, model_name = _make_generator(config, records)
    runs = run_batch(
        records,
        generator,
        params,
        thresholds,
        config=ifl_config,
        parallelism=parallelism,
        run_log_path=args.out,
        manifest_path=args.manifest,
        model_name=model_name,
        decode=_decode_config(config),
    )
    read_run_log(args.out)
    counts: dict[str, int] = {}
    for run in runs:
        counts[run.stop_reason] = counts.get(run.stop_reason, 0) + 1
    summary = ", ".join(f"{reason}: {n}" for reason, n in sorted(counts.items()))
    print(f"completed {len(runs)} runs ({summary}); log at {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    runs = read_run_log(args.runs)
    records = read_corpus(args.corpus)
    corpus_by_id = {record.id: record for record in records}
    reports = aggregate_report(
        runs, corpus_by_id, LexicalJudge(), HashEmbedder(seed=0)
    )
    print(render_report_table(reports), end="")
    write_report_json(reports, args.out)
    written = _load_json(args.out)
    expected = {"MAUVE", "EM Recall", "Citation Recall", "Citation Precision", "Length"}
    for row in written["rows"]:
        if set(row["metrics"]) != expected:
            raise SchemaError(f"{args.out}: report columns are malformed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="citecritic",
        description="Train aspect critics and run the feedback-refinement loop.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-corpus", help="turn an answer corpus into critique training data")
    p.add_argument("--in", dest="input", required=True, help="answer corpus JSONL")
    p.add_argument("--out", required=True, help="critique JSONL to write")
    p.add_argument(
        "--mode",
        choices=("llm", "deterministic"),
        default="deterministic",
        help="negative-example source (llm needs a generator config)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON config with a generator section (llm mode)")
    p.set_defaults(func=_cmd_build_corpus)

    p = sub.add_parser("train-critic", help="fit per-aspect critic heads")
    p.add_argument("--data", required=True, help="critique JSONL")
    p.add_argument("--corpus", required=True, help="answer corpus the critique data references")
    p.add_argument("--out", required=True, help="parameter JSON to write")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="optional per-epoch training report JSONL")
    p.set_defaults(func=_cmd_train_critic)

    p = sub.add_parser("eval-critic", help="pairwise accuracy and reward averages per aspect")
    p.add_argument("--data", required=True, help="critique JSONL")
    p.add_argument("--corpus", required=True, help="answer corpus the critique data references")
    p.add_argument("--params", required=True, help="critic parameter JSON")
    p.add_argument(
        "--thresholds-out",
        help="optionally save feedback thresholds derived from this evaluation",
    )
    p.set_defaults(func=_cmd_eval_critic)

    p = sub.add_parser("score", help="score one answer and show its feedback bands")
    p.add_argument("--params", required=True, help="critic parameter JSON")
    p.add_argument(
        "--question-file",
        required=True,
        help="JSON object with id, question, docs, answer",
    )
    p.add_argument("--thresholds", help="feedback thresholds JSON (defaults built in)")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("run-ifl", help="run the generate-score-feedback-refine loop")
    p.add_argument("--corpus", required=True, help="answer corpus JSONL")
    p.add_argument("--params", required=True, help="critic parameter JSON")
    p.add_argument("--config", help="JSON config (generator, ifl, decode, thresholds)")
    p.add_argument("--out", required=True, help="run log JSONL to write")
    p.add_argument("--thresholds", help="feedback thresholds JSON")
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--seed", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--manifest", help="optional run manifest JSON path")
    p.set_defaults(func=_cmd_run_ifl)

    p = sub.add_parser("report", help="aggregate a run log into per-iteration metrics")
    p.add_argument("--runs", required=True, help="run log JSONL")
    p.add_argument("--corpus", required=True, help="answer corpus the runs reference")
    p.add_argument("--out", required=True, help="metrics table JSON to write")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else exc
        print(f"citecritic: error: file not found: {name}", file=sys.stderr)
        return 2
    except CiteCriticError as exc:
        print(f"citecritic: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"citecritic: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
