"""Turn completion texts into reasoning paths.

A completion is split into sentences, the final answer clause of the form
"So the answer is <X>." is pulled out as the prediction, and everything
else stays in the explanation, including "Thus, ..." chaining sentences.
All functions here are pure; sampling fans out through the gateway.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .errors import InvalidConfig
from .gateway import CompletionRequest
from .model import (
    Prediction,
    PredictionKind,
    Query,
    ReasoningPath,
    Sentence,
    Table,
    TaskKind,
)

# Abbreviations that end with a period but do not end a sentence. Single
# capital letters (middle initials such as "S.") are guarded by rule, not
# by this list.
DEFAULT_ABBREVIATIONS = ("U.S.", "St.", "Dr.", "BC.", "m.", "div.")


@dataclass(frozen=True)
class SplitterConfig:
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS


DEFAULT_SPLITTER = SplitterConfig()

_ANSWER_RE = re.compile(r"\bso[,]?\s+the answer is\b[\s:]*", re.IGNORECASE)
_CHAINING_RE = re.compile(r"^(thus|therefore|hence|so)\b[\s,]", re.IGNORECASE)
_INITIAL_RE = re.compile(r"^[A-Za-z]\.$")

_YES_WORDS = frozenset({"yes", "yeah", "yep", "y", "true"})
_NO_WORDS = frozenset({"no", "nope", "n", "false"})
_TRUE_WORDS = frozenset({"true", "t", "yes"})
_FALSE_WORDS = frozenset({"false", "f", "no"})
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")


def _word_before(text: str, end: int) -> str:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end]


def _guarded(word: str, config: SplitterConfig) -> bool:
    lowered = word.lower()
    if _INITIAL_RE.match(word):
        return True
    return any(lowered == abbr.lower() for abbr in config.abbreviations)


def split_sentences(text: str, config: SplitterConfig = DEFAULT_SPLITTER) -> list[Sentence]:
    """Split on ". ", "? ", "! " boundaries with an abbreviation guard.

    The concatenation of the returned sentences equals the input modulo
    whitespace, and no sentence is empty.
    """
    pieces: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch in ".?!" and i + 1 < len(text) and text[i + 1].isspace():
            if ch == "." and _guarded(_word_before(text, i + 1), config):
                continue
            piece = text[start:i + 1].strip()
            if piece:
                pieces.append(piece)
            start = i + 1
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return [Sentence(piece, idx) for idx, piece in enumerate(pieces)]


def is_chaining(sentence_text: str) -> bool:
    """True for chaining arguments like "Thus, ..." that link facts to the
    prediction rather than stating a fact."""
    return bool(_CHAINING_RE.match(sentence_text.strip()))


def normalize_prediction(surface: str, task: TaskKind | None = None) -> str:
    """Canonical answer form used as the voting key.

    Classification tasks map through yes/no and true/false synonym sets;
    free-form answers are lowercased, stripped of terminal punctuation and
    articles, and whitespace-collapsed. Idempotent.
    """
    s = surface.strip().lower().rstrip(".?!,;:").strip()
    s = _ARTICLE_RE.sub(" ", s)
    s = " ".join(s.split()).rstrip(".?!,;:").strip()
    if task is TaskKind.COMMONSENSE:
        if s in _YES_WORDS:
            return "yes"
        if s in _NO_WORDS:
            return "no"
    elif task is TaskKind.TABULAR:
        if s in _TRUE_WORDS:
            return "true"
        if s in _FALSE_WORDS:
            return "false"
    return s


def kind_for(normalized: str, task: TaskKind | None) -> PredictionKind:
    if task is TaskKind.COMMONSENSE and normalized in ("yes", "no"):
        return PredictionKind.YES_NO
    if task is TaskKind.TABULAR and normalized in ("true", "false"):
        return PredictionKind.TRUE_FALSE
    return PredictionKind.FREE_FORM


UNPARSED = Prediction("", "", PredictionKind.FREE_FORM, unparsed=True)


def extract_prediction(sentences: Sequence[Sentence],
                       task: TaskKind | None = None) -> tuple[list[Sentence], Prediction]:
    """Remove the final answer clause; everything else stays in the
    explanation. Never raises: a missing clause yields an unparsed
    prediction and the sentences untouched."""
    hit = None
    for pos, sentence in enumerate(sentences):
        for match in _ANSWER_RE.finditer(sentence.text):
            surface = sentence.text[match.end():].strip().rstrip(".?!").strip()
            if surface:
                hit = (pos, match, surface)
    if hit is None:
        return [Sentence(s.text, i) for i, s in enumerate(sentences)], UNPARSED
    pos, match, surface = hit
    clause = sentences[pos].text[match.start():]
    prefix = sentences[pos].text[:match.start()].rstrip(" ,;:")
    normalized = normalize_prediction(surface, task)
    prediction = Prediction(surface, normalized, kind_for(normalized, task), clause=clause)
    texts = [s.text for s in sentences[:pos]]
    if prefix.strip():
        texts.append(prefix)
    texts.extend(s.text for s in sentences[pos + 1:])
    return [Sentence(t, i) for i, t in enumerate(texts)], prediction


def make_reasoning_path(raw: str, task: TaskKind | None = None, sample_index: int = 0,
                        splitter: SplitterConfig = DEFAULT_SPLITTER) -> ReasoningPath:
    """Parse a completion into a ReasoningPath. Never fails; unparseable
    input yields an unparsed free-form prediction."""
    sentences = split_sentences(raw, splitter)
    explanation, prediction = extract_prediction(sentences, task)
    return ReasoningPath(raw=raw, explanation=tuple(explanation),
                         prediction=prediction, sample_index=sample_index)


# --- prompting ---------------------------------------------------------------

PROMPT_FIXTURES = {
    TaskKind.COMMONSENSE: "cot_commonsense.txt",
    TaskKind.TEMPORAL: "cot_temporal.txt",
    TaskKind.TABULAR: "cot_tabular.txt",
}


def load_prompt_fixture(task: TaskKind) -> str:
    name = PROMPT_FIXTURES[task]
    path = resources.files("rethink").joinpath("prompts").joinpath(name)
    return path.read_text(encoding="utf-8").strip()


def _table_context(query: Query) -> str:
    if isinstance(query.context, Table):
        from .retrieval.triples import linearize_table
        return "  ".join(s.text for s in linearize_table(query.context))
    if isinstance(query.context, str):
        return query.context
    return ""


def format_query_block(query: Query) -> str:
    """The trailing block appended to a prompt for one query."""
    if query.task is TaskKind.TABULAR:
        context = _table_context(query)
        head = f"{context}\n" if context else ""
        return f"{head}Question: {query.text} True or False?\nAnswer:"
    return f"Q: {query.text}\nA:"


def build_cot_prompt(query: Query, fixture_text: str | None = None) -> str:
    fixture = fixture_text if fixture_text is not None else load_prompt_fixture(query.task)
    block = format_query_block(query)
    return f"{fixture}\n\n{block}" if fixture else block


def build_zero_shot_prompt(query: Query) -> str:
    return format_query_block(query)


def build_fewshot_prompt(query: Query, fixture_text: str | None = None) -> str:
    """Derive a direct-answer prompt from the chain-of-thought fixture by
    replacing each exemplar's reasoning with its bare answer."""
    fixture = fixture_text if fixture_text is not None else load_prompt_fixture(query.task)
    blocks = []
    for block in fixture.split("\n\n"):
        lines = block.splitlines()
        answer_at = None
        for i, line in enumerate(lines):
            if line.startswith(("A:", "Answer:")):
                answer_at = i
                break
        if answer_at is None:
            continue
        label, _, body = lines[answer_at].partition(":")
        path = make_reasoning_path(body.strip())
        answer = path.prediction.surface if not path.prediction.unparsed else body.strip()
        blocks.append("\n".join(lines[:answer_at] + [f"{label}: {answer}."]))
    blocks.append(format_query_block(query))
    return "\n\n".join(blocks)


def sample_paths(query: Query, gateway, n: int, temperature: float,
                 max_tokens: int = 256, prompt_text: str | None = None,
                 splitter: SplitterConfig = DEFAULT_SPLITTER) -> list[ReasoningPath]:
    """Sample n completions for the query and parse every one; paths are
    never dropped, and gateway errors propagate."""
    if n < 1:
        raise InvalidConfig("sample_paths requires n >= 1")
    prompt = build_cot_prompt(query, prompt_text)
    texts = gateway.complete(CompletionRequest(prompt, n=n, temperature=temperature,
                                               max_tokens=max_tokens))
    return [make_reasoning_path(text, task=query.task, sample_index=i, splitter=splitter)
            for i, text in enumerate(texts)]
