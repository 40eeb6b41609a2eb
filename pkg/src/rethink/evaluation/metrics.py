"""Exact match and accuracy."""

from __future__ import annotations

from typing import Iterable, Sequence

from ..errors import EmptyRun
from ..text import squad_normalize


def exact_match(prediction: str, golds: Sequence[str]) -> bool:
    """Strict string equality after normalization (lowercase, no
    punctuation, no articles, collapsed whitespace) against any gold."""
    normalized = squad_normalize(prediction)
    return any(normalized == squad_normalize(g) for g in golds)


def accuracy(correct_flags: Iterable[bool]) -> float:
    flags = list(correct_flags)
    if not flags:
        raise EmptyRun("accuracy over zero records")
    return sum(1 for f in flags if f) / len(flags)
