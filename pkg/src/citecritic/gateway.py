"""External-model clients and their deterministic offline stand-ins.

The live clients speak the common chat-completion and embedding JSON
protocols over HTTP: POST a JSON body, read a JSON body back. Any
compatible endpoint works; the protocol is the contract, not a vendor.

Request body (chat): {"model", "messages": [{"role", "content"}, ...],
"temperature", "max_tokens"}; the reply's first choice's message content
is the generation. Request body (embeddings): {"model", "input": [texts]};
the reply's "data" rows carry one "embedding" vector per input.

Retries cover 429, 5xx, and network-level failures with exponential
backoff; other statuses fail immediately. A 2xx is never retried, so an
acknowledged request cannot be duplicated. Logs carry content digests and
status codes only, never request bodies, and never auth material.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
import requests

from .answers import CitedAnswer, Sentence, parse_cited_answer, render_cited_answer
from .corpus import Aspect
from .errors import DecodeError, SchemaError, ScriptError, StatusError, TransportError
from .feedback import Band, render_feedback

logger = logging.getLogger("citecritic.gateway")


@dataclass(frozen=True)
class DecodeConfig:
    temperature: float = 0.0  # deterministic by default
    max_tokens: int = 512


class Generator(Protocol):
    def generate(
        self,
        system: str,
        user: str,
        in_context: tuple[str, str] | None = None,
        decode: DecodeConfig = DecodeConfig(),
    ) -> str:
        ...


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str
    model: str
    auth_env: str = "CITECRITIC_API_KEY"  # name of the env var, or "" for none
    timeout: float = 30.0
    retries: int = 3
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise SchemaError("retries must be >= 0")
        if self.timeout <= 0:
            raise SchemaError("timeout must be > 0")


class TokenBucket:
    """Blocking rate limiter: ``capacity`` tokens, refilled at ``rate`` per
    second. acquire() sleeps until a token is available. Clock and sleep
    are injectable for tests."""

    def __init__(
        self,
        rate: float,
        capacity: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0 or capacity <= 0:
            raise SchemaError("rate and capacity must be > 0")
        self.rate = rate
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleep
        self._tokens = capacity
        self._last = clock()

    def acquire(self) -> None:
        while True:
            now = self._clock()
            self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
            self._last = now
            if self._tokens >= 1.0:
                self._tokens -= 1.0
                return
            self._sleep((1.0 - self._tokens) / self.rate)


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _auth_header(config: ClientConfig) -> dict[str, str]:
    if not config.auth_env:
        return {}
    token = os.environ.get(config.auth_env)
    if not token:
        raise TransportError(
            f"auth token expected in environment variable {config.auth_env}"
        )
    return {"Authorization": f"Bearer {token}"}


def _post_with_retries(
    config: ClientConfig,
    payload: dict,
    limiter: TokenBucket | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    """POST ``payload`` as JSON; retry 429/5xx/network errors per policy.

    Returns the decoded JSON body of a 2xx reply. Raises StatusError for
    non-retryable statuses, TransportError once retries are exhausted,
    DecodeError for a non-JSON reply body.
    """
    body = json.dumps(payload, sort_keys=True).encode()
    headers = {"Content-Type": "application/json", **_auth_header(config)}
    last_failure = "no attempt made"
    for attempt in range(config.retries + 1):
        if limiter is not None:
            limiter.acquire()
        if attempt:
            sleep(config.backoff_base * 2 ** (attempt - 1))
            logger.info(
                "retry %d/%d request=%s", attempt, config.retries, _digest(body)
            )
        try:
            resp = requests.post(
                config.endpoint, data=body, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as exc:
            last_failure = f"network error: {type(exc).__name__}"
            logger.info("attempt %d failed: %s", attempt, last_failure)
            continue
        logger.info(
            "status=%d request=%s response=%s",
            resp.status_code,
            _digest(body),
            _digest(resp.content),
        )
        if 200 <= resp.status_code < 300:
            try:
                return resp.json()
            except ValueError as exc:
                raise DecodeError(f"response body is not JSON: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            last_failure = f"status {resp.status_code}"
            continue
        raise StatusError(resp.status_code, resp.text[:200])
    raise TransportError(
        f"retries exhausted after {config.retries + 1} attempts ({last_failure})"
    )


def chat_generate(
    config: ClientConfig,
    system: str,
    user: str,
    in_context: tuple[str, str] | None = None,
    decode: DecodeConfig = DecodeConfig(),
    limiter: TokenBucket | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """One chat completion. The optional in-context pair is sent as a
    worked user/assistant exchange ahead of the real user turn."""
    messages = [{"role": "system", "content": system}]
    if in_context is not None:
        messages.append({"role": "user", "content": in_context[0]})
        messages.append({"role": "assistant", "content": in_context[1]})
    messages.append({"role": "user", "content": user})
    payload = {
        "model": config.model,
        "messages": messages,
        "temperature": decode.temperature,
        "max_tokens": decode.max_tokens,
    }
    obj = _post_with_retries(config, payload, limiter=limiter, sleep=sleep)
    try:
        content = obj["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise DecodeError(f"reply missing choices[0].message.content: {exc}") from exc
    if not isinstance(content, str):
        raise DecodeError("generation content is not text")
    return content


class ChatClient:
    """Generator backed by a chat-completion endpoint."""

    def __init__(
        self,
        config: ClientConfig,
        limiter: TokenBucket | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self.limiter = limiter
        self._sleep = sleep

    def generate(
        self,
        system: str,
        user: str,
        in_context: tuple[str, str] | None = None,
        decode: DecodeConfig = DecodeConfig(),
    ) -> str:
        return chat_generate(
            self.config,
            system,
            user,
            in_context=in_context,
            decode=decode,
            limiter=self.limiter,
            sleep=self._sleep,
        )


class RemoteEmbedder:
    """Embedder backed by an embeddings endpoint."""

    def __init__(
        self,
        config: ClientConfig,
        limiter: TokenBucket | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self.limiter = limiter
        self._sleep = sleep

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        payload = {"model": self.config.model, "input": list(texts)}
        obj = _post_with_retries(
            self.config, payload, limiter=self.limiter, sleep=self._sleep
        )
        try:
            rows = [row["embedding"] for row in obj["data"]]
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"reply missing data[*].embedding: {exc}") from exc
        if len(rows) != len(texts):
            raise DecodeError(
                f"expected {len(texts)} embeddings, got {len(rows)}"
            )
        try:
            arr = np.asarray(rows, dtype=float)
        except ValueError as exc:
            raise DecodeError(f"embeddings are malformed: {exc}") from exc
        if arr.ndim != 2:
            raise DecodeError("embeddings have inconsistent dimensions")
        return arr


# ---------------------------------------------------------------------------
# Deterministic mock generator for offline runs.
# ---------------------------------------------------------------------------

_FEEDBACK_LOOKUP = {
    render_feedback(aspect, band): (aspect, band)
    for aspect in Aspect
    for band in Band
}


def _dedup_five_grams(text: str) -> str:
    """Delete later repeats of any 5-token window within a sentence body,
    preserving trailing terminal punctuation."""
    tail = ""
    body = text
    while body and body[-1] in ".!?":
        tail = body[-1] + tail
        body = body[:-1]
    tokens = body.split()
    n = 5
    changed = True
    while changed:
        changed = False
        for j in range(len(tokens) - n, 0, -1):
            window = tokens[j : j + n]
            if len(window) < n:
                continue
            for i in range(j):
                if tokens[i : i + n] == window:
                    del tokens[j : j + n]
                    changed = True
                    break
            if changed:
                break
    return " ".join(tokens) + tail


@dataclass
class MockScript:
    """Canned behavior for the mock generator.

    ``base_answers`` maps a question's text to the answer returned when a
    prompt carries no feedback (the initial generation). ``pristine`` maps
    a question's text to the clean reference answer repairs move toward.
    In strict mode an unrecognizable prompt or feedback line raises
    ScriptError; otherwise the fallback text is returned.
    """

    base_answers: dict[str, str] = field(default_factory=dict)
    pristine: dict[str, str] = field(default_factory=dict)
    strict: bool = True
    fallback: str = "I do not know."


class MockGenerator:
    """Offline Generator with two deterministic behaviors.

    Without feedback in the prompt it echoes the scripted base answer for
    the question. With feedback it repairs the previous answer one step
    toward the scripted pristine answer: fluency improve/corrective
    deletes duplicated 5-grams, citation improve/corrective restores the
    citations of the first sentence that differs from pristine, and a
    correctness corrective replaces the first sentence whose text strays
    from pristine. These repairs are deliberately simple; they exist to
    exercise the refinement loop offline, not to imitate a model.
    """

    def __init__(self, script: MockScript) -> None:
        self.script = script

    def generate(
        self,
        system: str,
        user: str,
        in_context: tuple[str, str] | None = None,
        decode: DecodeConfig = DecodeConfig(),
    ) -> str:
        question = self._field(user, "Question: ")
        if question is None or question not in self.script.base_answers:
            return self._unkeyed(f"unknown question in prompt: {question!r}")
        previous = self._field(user, "Previous answer: ")
        if previous is None or "Feedback:" not in user:
            return self.script.base_answers[question]
        feedback = self._parse_feedback(user)
        if feedback is None:
            return self._unkeyed("unrecognized feedback line in prompt")
        return self._repair(question, previous, feedback)

    @staticmethod
    def _field(prompt: str, prefix: str) -> str | None:
        for line in prompt.split("\n"):
            if line.startswith(prefix):
                return line[len(prefix):]
        return None

    def _unkeyed(self, reason: str) -> str:
        if self.script.strict:
            raise ScriptError(reason)
        return self.script.fallback

    def _parse_feedback(self, prompt: str) -> dict[Aspect, Band] | None:
        lines = prompt.split("\n")
        try:
            start = lines.index("Feedback:")
        except ValueError:
            return None
        out: dict[Aspect, Band] = {}
        for line in lines[start + 1 :]:
            if not line.startswith("- "):
                break
            hit = _FEEDBACK_LOOKUP.get(line[2:])
            if hit is None:
                return None
            aspect, band = hit
            out[aspect] = band
        return out

    def _repair(
        self, question: str, previous: str, feedback: dict[Aspect, Band]
    ) -> str:
        answer = parse_cited_answer(previous)
        pristine_text = self.script.pristine.get(question)
        pristine = parse_cited_answer(pristine_text) if pristine_text else None
        needs_work = lambda band: band in (Band.IMPROVE, Band.CORRECTIVE)

        if needs_work(feedback.get(Aspect.FLUENCY, Band.PRAISE)):
            answer = CitedAnswer(
                tuple(
                    Sentence(_dedup_five_grams(s.text), s.citations)
                    for s in answer.sentences
                )
            )
        if pristine is not None and feedback.get(Aspect.CORRECTNESS) is Band.CORRECTIVE:
            sentences = list(answer.sentences)
            for i, s in enumerate(sentences):
                if i >= len(pristine.sentences):
                    break
                if s.text != pristine.sentences[i].text:
                    sentences[i] = pristine.sentences[i]
                    break
            answer = CitedAnswer(tuple(sentences))
        if pristine is not None and needs_work(
            feedback.get(Aspect.CITATION, Band.PRAISE)
        ):
            sentences = list(answer.sentences)
            for i, s in enumerate(sentences):
                if i >= len(pristine.sentences):
                    break
                if s.citations != pristine.sentences[i].citations:
                    sentences[i] = Sentence(s.text, pristine.sentences[i].citations)
                    break
            answer = CitedAnswer(tuple(sentences))
        return render_cited_answer(answer)
