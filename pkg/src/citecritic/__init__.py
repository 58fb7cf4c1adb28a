"""citecritic: aspect critics, citation metrics, and an iterative
feedback loop for attributed question answering."""

from .answers import (
    CitedAnswer,
    CorpusRecord,
    Document,
    DocumentSet,
    Question,
    Sentence,
    parse_cited_answer,
    read_corpus,
    render_cited_answer,
    strip_citations,
    write_corpus,
)
from .corpus import (
    ASPECT_ORDER,
    Aspect,
    CorruptionMode,
    CritiqueExample,
    PromptKind,
    build_aspect_prompt,
    build_critique_corpus,
    corrupt_citations,
    inject_repetition,
    read_critique_examples,
    write_critique_examples,
)
from .critic import (
    AspectHead,
    CriticParams,
    RewardScore,
    TrainConfig,
    TrainResult,
    clip_reward,
    evaluate_critic,
    load_params,
    loss_gradient,
    pairwise_ranking_loss,
    save_params,
    score_answer,
    train_critic,
)
from .features import AnswerContext, F, extract_features
from .feedback import (
    Band,
    BandThresholds,
    DEFAULT_THRESHOLDS,
    FeedbackItem,
    REFINEMENT_INSTRUCTION,
    build_refinement_prompt,
    classify_reward_band,
    load_thresholds,
    make_feedback,
    render_feedback,
    save_thresholds,
    thresholds_from_evaluation,
)
from .gateway import (
    ChatClient,
    ClientConfig,
    DecodeConfig,
    MockGenerator,
    MockScript,
    RemoteEmbedder,
    TokenBucket,
    chat_generate,
)
from .loop import (
    IflConfig,
    IflRun,
    IterationRecord,
    StopReason,
    aggregate_report,
    read_run_log,
    render_report_table,
    run_batch,
    run_ifl,
    write_run_log,
)
from .mauve import HashEmbedder, MauveConfig, mauve_score
from .metrics import (
    CitationDiagnostics,
    LexicalJudge,
    MetricReport,
    citation_precision,
    citation_recall,
    citation_scores,
    em_recall,
    evaluate_corpus,
    lexical_entailment_judge,
)
from .synthetic import generate_corpus

__version__ = "0.1.0"

__all__ = [
    "ASPECT_ORDER",
    "AnswerContext",
    "Aspect",
    "AspectHead",
    "Band",
    "BandThresholds",
    "ChatClient",
    "CitationDiagnostics",
    "CitedAnswer",
    "ClientConfig",
    "CorpusRecord",
    "CorruptionMode",
    "CriticParams",
    "CritiqueExample",
    "DEFAULT_THRESHOLDS",
    "DecodeConfig",
    "Document",
    "DocumentSet",
    "F",
    "FeedbackItem",
    "HashEmbedder",
    "IflConfig",
    "IflRun",
    "IterationRecord",
    "LexicalJudge",
    "MauveConfig",
    "MetricReport",
    "MockGenerator",
    "MockScript",
    "PromptKind",
    "Question",
    "REFINEMENT_INSTRUCTION",
    "RemoteEmbedder",
    "RewardScore",
    "Sentence",
    "StopReason",
    "TokenBucket",
    "TrainConfig",
    "TrainResult",
    "aggregate_report",
    "build_aspect_prompt",
    "build_critique_corpus",
    "build_refinement_prompt",
    "chat_generate",
    "citation_precision",
    "citation_recall",
    "citation_scores",
    "classify_reward_band",
    "clip_reward",
    "corrupt_citations",
    "em_recall",
    "evaluate_corpus",
    "evaluate_critic",
    "extract_features",
    "generate_corpus",
    "inject_repetition",
    "lexical_entailment_judge",
    "load_params",
    "load_thresholds",
    "loss_gradient",
    "make_feedback",
    "mauve_score",
    "pairwise_ranking_loss",
    "parse_cited_answer",
    "read_corpus",
    "read_critique_examples",
    "read_run_log",
    "render_cited_answer",
    "render_feedback",
    "render_report_table",
    "run_batch",
    "run_ifl",
    "save_params",
    "save_thresholds",
    "score_answer",
    "strip_citations",
    "thresholds_from_evaluation",
    "train_critic",
    "write_corpus",
    "write_critique_examples",
    "write_run_log",
    "__version__",
]
