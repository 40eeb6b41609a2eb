"""Clients for external model services plus deterministic in-process mocks.

Wire protocol, JSON over HTTP, shared by every backend:

    POST /v1/complete    {"prompt", "n", "temperature", "max_tokens"}
                         -> {"completions": [str]}            (exactly n texts)
    POST /v1/similarity  {"pairs": [{"a", "b"}]}
                         -> {"scores": [float]}               (each in [0, 1])
    POST /v1/nli         {"pairs": [{"premise", "hypothesis"}]}
                         -> {"scores": [{"entailment", "contradiction", "neutral"}]}
    POST /v1/answer      {"items": [{"question", "context"}]}
                         -> {"answers": [str]}                ("" = abstain)
    POST /v1/qgen        same envelope as /v1/complete; the prompt carries the
                         source fact and the target entity, one per line
    POST /v1/qa2d        same envelope as /v1/answer; "question" is a generated
                         question and "context" its answer text

All numbers must be finite; scores must already be in [0, 1] and are passed
through unmodified (an out-of-range value is a BackendError, never a silent
clamp). Non-2xx responses are BackendErrors. Connection-level failures are
retried up to BackendConfig.retries times, then raised as TransportError.

Single-pair operations are defined as the batch call of length one.
"""

from __future__ import annotations

import json
import math
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import requests

from .errors import BackendError, InvalidConfig, TransportError
from .text import content_tokens, tokens


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    n: int = 1
    temperature: float = 0.0
    max_tokens: int = 256

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig("completion n must be >= 1")
        if self.max_tokens < 1:
            raise InvalidConfig("max_tokens must be >= 1")
        if self.temperature < 0:
            raise InvalidConfig("temperature must be >= 0")


@dataclass(frozen=True)
class NliScore:
    entailment: float
    contradiction: float
    neutral: float

    def __post_init__(self):
        for name in ("entailment", "contradiction", "neutral"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise ValueError(f"nli {name} must be finite and in [0, 1], got {value!r}")


ZERO_NLI = NliScore(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = "http://localhost:8080"
    timeout: float = 30.0
    retries: int = 2
    mock_mode: bool = False
    mock_table: Optional[str] = None

    def __post_init__(self):
        if self.retries < 0:
            raise InvalidConfig("retries must be >= 0")
        if self.mock_mode and not self.mock_table:
            raise InvalidConfig("mock_mode requires a mock_table fixture path")


def post_json(session: requests.Session, endpoint: str, path: str, payload: dict,
              timeout: float, retries: int) -> dict:
    """POST one JSON request with transport-level retries.

    Retries cover connection errors and timeouts only; a reachable backend
    that answers badly is a BackendError immediately.
    """
    url = endpoint.rstrip("/") + path
    headers = {"X-Request-Id": uuid.uuid4().hex}
    last_exc: Exception | None = None
    for _ in range(retries + 1):
        try:
            resp = session.post(url, json=payload, timeout=timeout, headers=headers)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if not 200 <= resp.status_code < 300:
            raise BackendError(f"{path} returned HTTP {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise BackendError(f"{path} returned a non-JSON body") from exc
        if not isinstance(body, dict):
            raise BackendError(f"{path} returned a non-object body")
        return body
    raise TransportError(f"{url} unreachable after {retries + 1} attempts") from last_exc


def _require_unit(value, what: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise BackendError(f"{what} is not a number: {value!r}")
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise BackendError(f"{what} out of [0, 1]: {value!r}")
    return value


def _require_list(body: Mapping, key: str, expected_len: int, path: str) -> list:
    items = body.get(key)
    if not isinstance(items, list):
        raise BackendError(f"{path} response missing list field {key!r}")
    if len(items) != expected_len:
        raise BackendError(f"{path} returned {len(items)} {key}, expected {expected_len}")
    return items


class HttpGateway:
    """Thin client over the wire protocol above.

    Safe for concurrent use; every request carries a fresh correlation id in
    the X-Request-Id header.
    """

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        return post_json(self._session, self.config.endpoint, path, payload,
                         self.config.timeout, self.config.retries)

    def complete(self, req: CompletionRequest) -> list[str]:
        body = self._post("/v1/complete", {
            "prompt": req.prompt, "n": req.n,
            "temperature": req.temperature, "max_tokens": req.max_tokens,
        })
        texts = _require_list(body, "completions", req.n, "/v1/complete")
        if not all(isinstance(t, str) for t in texts):
            raise BackendError("/v1/complete returned non-string completions")
        return texts

    def similarity_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        body = self._post("/v1/similarity", {"pairs": [{"a": a, "b": b} for a, b in pairs]})
        scores = _require_list(body, "scores", len(pairs), "/v1/similarity")
        return [_require_unit(s, "similarity score") for s in scores]

    def similarity(self, a: str, b: str) -> float:
        return self.similarity_batch([(a, b)])[0]

    def nli_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliScore]:
        if not pairs:
            return []
        body = self._post("/v1/nli", {
            "pairs": [{"premise": p, "hypothesis": h} for p, h in pairs],
        })
        scores = _require_list(body, "scores", len(pairs), "/v1/nli")
        out = []
        for entry in scores:
            if not isinstance(entry, Mapping):
                raise BackendError("/v1/nli returned a non-object score entry")
            out.append(NliScore(
                _require_unit(entry.get("entailment"), "entailment"),
                _require_unit(entry.get("contradiction"), "contradiction"),
                _require_unit(entry.get("neutral", 0.0), "neutral"),
            ))
        return out

    def nli(self, premise: str, hypothesis: str) -> NliScore:
        return self.nli_batch([(premise, hypothesis)])[0]

    def answer_batch(self, items: Sequence[tuple[str, str]]) -> list[str]:
        if not items:
            return []
        body = self._post("/v1/answer", {
            "items": [{"question": q, "context": c} for q, c in items],
        })
        answers = _require_list(body, "answers", len(items), "/v1/answer")
        if not all(isinstance(a, str) for a in answers):
            raise BackendError("/v1/answer returned non-string answers")
        return answers

    def answer(self, question: str, context: str) -> str:
        return self.answer_batch([(question, context)])[0]

    def qgen(self, fact: str, entity: str, n: int = 2) -> list[str]:
        body = self._post("/v1/qgen", {
            "prompt": f"{fact}\nentity: {entity}", "n": n,
            "temperature": 0.0, "max_tokens": 64,
        })
        questions = body.get("completions")
        if not isinstance(questions, list) or not all(isinstance(q, str) for q in questions):
            raise BackendError("/v1/qgen returned malformed completions")
        return questions[:n]

    def qa2d(self, question: str, answer: str) -> str:
        body = self._post("/v1/qa2d", {"items": [{"question": question, "context": answer}]})
        texts = _require_list(body, "answers", 1, "/v1/qa2d")
        if not isinstance(texts[0], str):
            raise BackendError("/v1/qa2d returned a non-string sentence")
        return texts[0]


def lexical_similarity(a: str, b: str) -> float:
    """Cosine over lowercase token multisets, punctuation stripped.

    Computable by hand from token counts; symmetric; 1.0 for identical
    token multisets; 0.0 when either side has no tokens.
    """
    ta, tb = tokens(a), tokens(b)
    if not ta or not tb:
        return 0.0
    counts_a: dict[str, int] = {}
    counts_b: dict[str, int] = {}
    for t in ta:
        counts_a[t] = counts_a.get(t, 0) + 1
    for t in tb:
        counts_b[t] = counts_b.get(t, 0) + 1
    dot = sum(n * counts_b.get(t, 0) for t, n in counts_a.items())
    norm_a = math.sqrt(sum(n * n for n in counts_a.values()))
    norm_b = math.sqrt(sum(n * n for n in counts_b.values()))
    return min(1.0, dot / (norm_a * norm_b))


class MockGateway:
    """Deterministic in-process backend for tests and offline runs.

    similarity: lexical cosine (see lexical_similarity).
    nli:        fixture overrides first; otherwise entailment is the fraction
                of the hypothesis' content words present in the premise,
                contradiction and neutral 0. Empty premise scores all zero.
    complete:   fixture lookup; an entry matches when its "match" string
                occurs in the prompt. The entry whose match occurs latest in
                the prompt wins (few-shot prompts embed exemplar questions,
                so the trailing query block must dominate), with the longer
                match breaking ties. Texts are cycled to exactly n
                completions. No entry is an error, never an invented
                completion.
    answer:     fixture lookup on exact question plus "context_contains";
                the most specific (longest) context key wins and entries
                with an empty context key match any context. No entry
                abstains with "".
    qgen/qa2d:  fixture lookup; missing entries yield [] / "" (abstain).

    The fixture table is read-only after construction, so one instance can
    serve concurrent workers. Identical requests always produce identical
    responses, across runs and platforms.
    """

    def __init__(self, table: Mapping | None = None):
        table = table or {}
        self._completions = list(table.get("completions", ()))
        self._nli = list(table.get("nli", ()))
        self._answers = list(table.get("answers", ()))
        self._questions = list(table.get("questions", ()))
        self._declaratives = list(table.get("declaratives", ()))

    @classmethod
    def from_file(cls, path: str | Path) -> "MockGateway":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, req: CompletionRequest) -> list[str]:
        best = None
        best_rank = (-1, -1)
        for entry in self._completions:
            key = entry.get("match", "")
            position = req.prompt.rfind(key) if key else -1
            if position < 0:
                continue
            rank = (position, len(key))
            if rank > best_rank:
                best, best_rank = entry, rank
        if best is None:
            head = req.prompt.strip().splitlines()[-1] if req.prompt.strip() else ""
            raise BackendError(f"mock completion table has no entry matching prompt ({head!r})")
        texts = best["texts"]
        return [texts[i % len(texts)] for i in range(req.n)]

    def similarity_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [lexical_similarity(a, b) for a, b in pairs]

    def similarity(self, a: str, b: str) -> float:
        return self.similarity_batch([(a, b)])[0]

    def nli_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliScore]:
        return [self._nli_one(p, h) for p, h in pairs]

    def nli(self, premise: str, hypothesis: str) -> NliScore:
        return self.nli_batch([(premise, hypothesis)])[0]

    def _nli_one(self, premise: str, hypothesis: str) -> NliScore:
        if not premise.strip() or not hypothesis.strip():
            return ZERO_NLI
        for entry in self._nli:
            if entry.get("premise_contains", "") in premise and entry.get("hypothesis") == hypothesis:
                return NliScore(
                    float(entry.get("entailment", 0.0)),
                    float(entry.get("contradiction", 0.0)),
                    float(entry.get("neutral", 0.0)),
                )
        hyp_words = content_tokens(hypothesis)
        if not hyp_words:
            return ZERO_NLI
        premise_words = set(tokens(premise))
        covered = sum(1 for w in hyp_words if w in premise_words)
        return NliScore(covered / len(hyp_words), 0.0, 0.0)

    def answer_batch(self, items: Sequence[tuple[str, str]]) -> list[str]:
        return [self._answer_one(q, c) for q, c in items]

    def answer(self, question: str, context: str) -> str:
        return self.answer_batch([(question, context)])[0]

    def _answer_one(self, question: str, context: str) -> str:
        best = None
        for entry in self._answers:
            if entry.get("question") != question:
                continue
            key = entry.get("context_contains", "")
            if key and key not in context:
                continue
            if best is None or len(key) > len(best.get("context_contains", "")):
                best = entry
        return best["answer"] if best else ""

    def qgen(self, fact: str, entity: str, n: int = 2) -> list[str]:
        for entry in self._questions:
            if entry.get("fact_contains", "") in fact and entry.get("entity") == entity:
                return list(entry.get("questions", ()))[:n]
        return []

    def qa2d(self, question: str, answer: str) -> str:
        for entry in self._declaratives:
            if entry.get("question") == question and entry.get("answer") == answer:
                return entry.get("text", "")
        return ""


def make_gateway(config: BackendConfig):
    if config.mock_mode:
        return MockGateway.from_file(config.mock_table)
    return HttpGateway(config)
