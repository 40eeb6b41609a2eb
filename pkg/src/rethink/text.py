"""Tokenization and answer-normalization helpers shared across modules.

The same tokenizer backs the lexical similarity mock, BM25 indexing, and
word-relation matching, so scores computed in tests can be reproduced by
hand from token counts.
"""

from __future__ import annotations

import re
import string

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")

# Function words excluded when the NLI mock measures how much of a
# hypothesis is covered by a premise.
STOPWORDS = frozenset(
    """
    a an the is are was were be been being am do does did not no yes and or
    but if then than that this these those it its he she they them him his
    her their of in on at to from by with for as about into over under
    during between through thus so therefore hence there here who whom whose
    which what when where why how will would can could has have had
    """.split()
)


def tokens(text: str) -> list[str]:
    """Lowercase alphanumeric tokens, punctuation stripped."""
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    return [t for t in tokens(text) if t not in STOPWORDS]


def squad_normalize(text: str) -> str:
    """Canonical answer form: lowercase, drop punctuation, drop articles,
    collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in string.punctuation)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def collapse_ws(text: str) -> str:
    return " ".join(text.split())
