"""Per-aspect linear reward scorers and their training loop.

The scorer is a linear head over the 8 hand-designed features, one head
per aspect. Training minimizes the pairwise ranking objective

    L = sum over (positive j, negative i) of log(1 + exp(s_i - s_j))

on raw scores, by full-batch gradient descent with L2 decay on the
weights. Clipping to [-2, 2] never touches training; it applies when a
reward is turned into feedback.

The shared bias cancels inside every score difference, so its gradient
is identically zero and pairwise training leaves it at its initial
value. It exists for calibration and serialization completeness.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import ASPECT_ORDER, Aspect, CritiqueExample
from .errors import SchemaError, TrainingError
from .features import AnswerContext, F, extract_features

PARAMS_VERSION = 1
REWARD_MIN = -2.0
REWARD_MAX = 2.0


def clip_reward(raw: float) -> float:
    """Bound a raw score to [-2, 2]. Idempotent and order-preserving."""
    return min(REWARD_MAX, max(REWARD_MIN, raw))


@dataclass(frozen=True)
class RewardScore:
    aspect: Aspect
    raw: float
    clipped: float

    def __post_init__(self) -> None:
        if self.clipped != clip_reward(self.raw):
            raise SchemaError("clipped value does not match clip_reward(raw)")


@dataclass
class AspectHead:
    weights: np.ndarray
    bias: float

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (F,):
            raise SchemaError(f"expected {F} weights, got shape {self.weights.shape}")
        if not (np.all(np.isfinite(self.weights)) and math.isfinite(self.bias)):
            raise SchemaError("non-finite critic parameters")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AspectHead):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights)) and self.bias == other.bias


@dataclass
class CriticParams:
    heads: dict[Aspect, AspectHead] = field(
        default_factory=lambda: {a: AspectHead(np.zeros(F), 0.0) for a in ASPECT_ORDER}
    )

    def __post_init__(self) -> None:
        missing = [a.value for a in ASPECT_ORDER if a not in self.heads]
        if missing:
            raise SchemaError(f"missing aspect heads: {missing}")


def score_answer(params: CriticParams, ctx: AnswerContext, aspect: Aspect) -> RewardScore:
    """raw = weights . features + bias, with the clipped companion value."""
    head = params.heads[aspect]
    raw = float(head.weights @ extract_features(ctx, aspect) + head.bias)
    return RewardScore(aspect=aspect, raw=raw, clipped=clip_reward(raw))


def pairwise_ranking_loss(
    pos_scores: Sequence[float], neg_scores: Sequence[float]
) -> float:
    """Sum over all (positive, negative) pairs of log(1 + exp(neg - pos)).

    Operates on raw (unclipped) scores. Always non-negative; equals
    n_pairs * ln 2 exactly when every score is equal.
    """
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("pairwise_ranking_loss needs at least one score on each side")
    return float(np.sum(np.logaddexp(0.0, np.subtract.outer(neg, pos))))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form stays finite for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class AspectGradient:
    aspect: Aspect
    weights: np.ndarray
    bias: float


def _example_features(
    example: CritiqueExample,
) -> tuple[np.ndarray, np.ndarray]:
    """(positive features (F,), negative features (3, F)) for the example's aspect."""
    pos = extract_features(
        AnswerContext(example.question, example.docs, example.positive),
        example.aspect,
    )
    negs = np.stack(
        [
            extract_features(
                AnswerContext(example.question, example.docs, neg), example.aspect
            )
            for neg in example.negatives
        ]
    )
    return pos, negs


def loss_gradient(params: CriticParams, example: CritiqueExample) -> AspectGradient:
    """Exact gradient of the pairwise loss for one example, on the
    example's aspect head. Each (positive, negative) pair contributes
    sigmoid(neg - pos) times the feature difference; the bias cancels in
    every pair, so its gradient is exactly zero.
    """
    head = params.heads[example.aspect]
    f_pos, f_negs = _example_features(example)
    s_pos = float(head.weights @ f_pos + head.bias)
    s_negs = f_negs @ head.weights + head.bias
    coeff = _sigmoid(s_negs - s_pos)  # (3,)
    grad_w = (coeff[:, None] * (f_negs - f_pos[None, :])).sum(axis=0)
    return AspectGradient(aspect=example.aspect, weights=grad_w, bias=0.0)


@dataclass(frozen=True)
class TrainConfig:
    rate: float = 0.1
    epochs: int = 200
    seed: int = 0
    l2: float = 1e-4

    def __post_init__(self) -> None:
        if self.rate <= 0 or self.epochs < 1 or self.l2 < 0:
            raise TrainingError("rate must be > 0, epochs >= 1, l2 >= 0")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    aspect: Aspect
    loss: float
    accuracy: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "aspect": self.aspect.value,
            "loss": self.loss,
            "accuracy": self.accuracy,
        }


@dataclass
class TrainResult:
    params: CriticParams
    report: list[EpochRecord]


def _stack_features(
    examples: Sequence[CritiqueExample],
) -> tuple[np.ndarray, np.ndarray]:
    pos_list, neg_list = [], []
    for ex in examples:
        p, ns = _example_features(ex)
        pos_list.append(p)
        neg_list.append(ns)
    return np.stack(pos_list), np.stack(neg_list)  # (n, F), (n, 3, F)


def _pairwise_accuracy(w: np.ndarray, b: float, pos: np.ndarray, neg: np.ndarray) -> float:
    s_pos = pos @ w + b  # (n,)
    s_neg = neg @ w + b  # (n, 3)
    return float(np.mean(s_pos[:, None] > s_neg))


def train_critic(
    dataset: Sequence[CritiqueExample],
    config: TrainConfig = TrainConfig(),
    eval_dataset: Sequence[CritiqueExample] | None = None,
) -> TrainResult:
    """Full-batch gradient descent per aspect head.

    Weights start at zero; each step uses the mean per-pair gradient plus
    L2 decay on the weights. Bit-reproducible given (dataset, config):
    the computation is pure numpy in a fixed order, and the seed is part
    of the config for forward compatibility. Reported accuracy is on
    ``eval_dataset`` when given, else on the training set. Raises
    TrainingError on an empty dataset or a non-finite loss.
    """
    dataset = list(dataset)
    if not dataset:
        raise TrainingError("training dataset is empty")

    params = CriticParams()
    report: list[EpochRecord] = []
    for aspect in ASPECT_ORDER:
        examples = [ex for ex in dataset if ex.aspect is aspect]
        if not examples:
            continue
        pos, neg = _stack_features(examples)
        if eval_dataset is not None:
            eval_examples = [ex for ex in eval_dataset if ex.aspect is aspect]
            eval_pos, eval_neg = (
                _stack_features(eval_examples) if eval_examples else (pos, neg)
            )
        else:
            eval_pos, eval_neg = pos, neg

        n_pairs = neg.shape[0] * neg.shape[1]
        w = np.zeros(F)
        b = 0.0
        for epoch in range(config.epochs):
            diff = (neg @ w + b) - (pos @ w + b)[:, None]  # (n, 3)
            loss = float(np.sum(np.logaddexp(0.0, diff))) / len(examples)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} for aspect {aspect.value!r}"
                )
            coeff = _sigmoid(diff)  # (n, 3)
            grad_w = np.einsum("nk,nkf->f", coeff, neg - pos[:, None, :]) / n_pairs
            w = w - config.rate * (grad_w + config.l2 * w)
            report.append(
                EpochRecord(
                    epoch=epoch,
                    aspect=aspect,
                    loss=loss,
                    accuracy=_pairwise_accuracy(w, b, eval_pos, eval_neg),
                )
            )
        params.heads[aspect] = AspectHead(weights=w, bias=b)
    return TrainResult(params=params, report=report)


@dataclass(frozen=True)
class AspectEvaluation:
    accuracy: float
    mean_positive_raw: float
    mean_negative_raw: float
    mean_positive_clipped: float
    mean_negative_clipped: float
    n_pairs: int


def evaluate_critic(
    params: CriticParams, dataset: Sequence[CritiqueExample]
) -> dict[Aspect, AspectEvaluation]:
    """Pairwise accuracy and average rewards per aspect.

    The clipped means are the quantities feedback thresholds are derived
    from; the raw means describe the scorer itself.
    """
    out: dict[Aspect, AspectEvaluation] = {}
    for aspect in ASPECT_ORDER:
        examples = [ex for ex in dataset if ex.aspect is aspect]
        if not examples:
            continue
        pos, neg = _stack_features(examples)
        head = params.heads[aspect]
        s_pos = pos @ head.weights + head.bias
        s_neg = neg @ head.weights + head.bias
        out[aspect] = AspectEvaluation(
            accuracy=float(np.mean(s_pos[:, None] > s_neg)),
            mean_positive_raw=float(np.mean(s_pos)),
            mean_negative_raw=float(np.mean(s_neg)),
            mean_positive_clipped=float(np.mean(np.clip(s_pos, REWARD_MIN, REWARD_MAX))),
            mean_negative_clipped=float(np.mean(np.clip(s_neg, REWARD_MIN, REWARD_MAX))),
            n_pairs=int(s_neg.size),
        )
    return out


# ---------------------------------------------------------------------------
# Params file: versioned JSON {"version", "aspects": {name: {weights, bias}}}
# ---------------------------------------------------------------------------


def save_params(params: CriticParams, path: str | Path) -> None:
    obj = {
        "version": PARAMS_VERSION,
        "aspects": {
            a.value: {
                "weights": [float(x) for x in params.heads[a].weights],
                "bias": float(params.heads[a].bias),
            }
            for a in ASPECT_ORDER
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_params(path: str | Path) -> CriticParams:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("version") != PARAMS_VERSION:
        raise SchemaError(f"{path}: expected params version {PARAMS_VERSION}")
    aspects = obj.get("aspects")
    if not isinstance(aspects, dict):
        raise SchemaError(f"{path}: missing aspects map")
    heads = {}
    for aspect in ASPECT_ORDER:
        entry = aspects.get(aspect.value)
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: missing aspect {aspect.value!r}")
        try:
            heads[aspect] = AspectHead(
                weights=np.asarray(entry["weights"], dtype=float),
                bias=float(entry["bias"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad head for {aspect.value!r}: {exc}") from exc
    return CriticParams(heads=heads)


def write_training_report(report: Iterable[EpochRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in report:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
