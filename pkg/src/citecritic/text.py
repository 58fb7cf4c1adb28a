"""Shared tokenization and normalization helpers.

Everything here is pure and deterministic; the feature extractor, the
lexical entailment judge, and the EM-recall normalizer all route through
these functions so that "content word" and "numeric token" mean the same
thing everywhere.
"""
from __future__ import annotations

import re

# Small closed-class list; enough to keep function words out of overlap
# statistics without dragging in an external resource.
STOPWORDS = frozenset(
    """
    a an the this that these those it its he she his her they them their
    i we you me my our your us
    is are was were be been being am
    has have had having do does did done
    will would shall should can could may might must
    and or but nor so yet if then than as because while although though
    of in on at to from by with without for about into over under between
    through during above below up down out off again further
    not no yes
    there here where when what which who whom whose why how
    very too also just only both each few more most other some such
    own same s t don now
    """.split()
)

# Words ("don't" -> "don", "t") or numbers; decimals like "9.41" and
# comma-grouped figures like "1,200" survive as single tokens.
_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)*|[a-z]+(?:'[a-z]+)?")

_NUMERIC_RE = re.compile(r"^\d+(?:[.,]\d+)*$")

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")

_DECIMAL_POINT_RE = re.compile(r"(?<=\d)\.(?=\d)")
_PUNCT_RE = re.compile(r"[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercased word/number tokens of ``text``."""
    return _TOKEN_RE.findall(text.lower())


def content_words(text: str) -> list[str]:
    """Tokens of ``text`` with stopwords removed."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


def is_numeric_token(token: str) -> bool:
    return bool(_NUMERIC_RE.match(token))


def numeric_tokens(text: str) -> list[str]:
    """Number-like tokens (digits, decimals, 4-digit years, ...)."""
    return [t for t in tokenize(text) if is_numeric_token(t)]


def ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    if n <= 0 or len(tokens) < n:
        return []
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def normalize_answer(text: str) -> str:
    """SQuAD-style normalization: lowercase, drop punctuation and articles,
    collapse whitespace. Decimal points inside numbers are kept so "9.41"
    still matches."""
    text = text.lower()
    text = _DECIMAL_POINT_RE.sub("\x00", text)  # protect "9.41"
    text = _PUNCT_RE.sub(" ", text)
    text = text.replace("\x00", ".")
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())
