"""Core domain types shared by every pipeline stage.

Everything here is immutable after construction and safe to share across
worker threads. Constructors enforce the invariants; code downstream may
assume them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Tuple

from .errors import InvalidConfig


class TaskKind(Enum):
    COMMONSENSE = "commonsense"
    TEMPORAL = "temporal"
    TABULAR = "tabular"


class PredictionKind(Enum):
    YES_NO = "yes_no"
    TRUE_FALSE = "true_false"
    FREE_FORM = "free_form"


class KnowledgeSource(Enum):
    BM25_CORPUS = "bm25_corpus"
    TEMPORAL_TRIPLES = "temporal_triples"
    WORD_RELATIONS = "word_relations"
    TABLE_LINEARIZATION = "table_linearization"
    GOLD_EVIDENCE = "gold_evidence"


class FaithfulnessFunction(Enum):
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"


class VerdictMode(Enum):
    VOTE = "vote"
    BEST_PATH = "best_path"
    SELF_CONSISTENCY = "self_consistency"
    VARIANT_I = "variant_i"
    VARIANT_II = "variant_ii"


def _check_unit(value: float, name: str) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be a finite number in [0, 1], got {value!r}")


@dataclass(frozen=True)
class Table:
    """An info-box style table: a subject plus ordered key/value rows."""

    subject: str
    rows: Tuple[Tuple[str, str], ...]

    def __post_init__(self):
        for key, _ in self.rows:
            if not key.strip():
                raise ValueError("table keys must be non-empty")


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    task: TaskKind
    context: Table | str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("query text must be non-empty")


@dataclass(frozen=True)
class Sentence:
    text: str
    index: int


@dataclass(frozen=True)
class Prediction:
    """The answer part of a reasoning path.

    `surface` is the verbatim answer span, `normalized` its canonical form
    (a pure function of surface and task), and `clause` the answer clause
    exactly as it appeared in the completion, kept so the original text can
    be reconstructed.
    """

    surface: str
    normalized: str
    kind: PredictionKind
    unparsed: bool = False
    clause: str = ""


@dataclass(frozen=True)
class ReasoningPath:
    raw: str
    explanation: Tuple[Sentence, ...]
    prediction: Prediction
    sample_index: int

    def __post_init__(self):
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")
        for pos, sentence in enumerate(self.explanation):
            if sentence.index != pos:
                raise ValueError("explanation sentence indices must be contiguous from 0")
            if not sentence.text.strip():
                raise ValueError("explanation sentences must be non-empty")


@dataclass(frozen=True)
class KnowledgeSnippet:
    text: str
    source: KnowledgeSource
    doc_id: Optional[str] = None
    score: Optional[float] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("snippet text must be non-empty")
        if (self.doc_id is None) == (self.source is KnowledgeSource.BM25_CORPUS):
            raise ValueError("doc_id is required for corpus snippets and forbidden otherwise")


@dataclass(frozen=True)
class SentenceEvidence:
    """Scores for one explanation sentence against its selected premise.

    premise=None is the no-evidence case: all three scores must be zero and
    the sentence contributes nothing to any faithfulness sum.
    """

    sentence_index: int
    premise: Optional[KnowledgeSnippet]
    similarity: float
    entailment: float
    contradiction: float

    def __post_init__(self):
        _check_unit(self.similarity, "similarity")
        _check_unit(self.entailment, "entailment")
        _check_unit(self.contradiction, "contradiction")
        if self.premise is None and (self.similarity or self.entailment or self.contradiction):
            raise ValueError("evidence without a premise must have all-zero scores")


@dataclass(frozen=True)
class FaithfulnessConfig:
    function: FaithfulnessFunction = FaithfulnessFunction.F1
    t_m: float = 0.5
    t_e: float = 0.6
    t_c: float = 0.99

    def __post_init__(self):
        for name, value in (("t_m", self.t_m), ("t_e", self.t_e), ("t_c", self.t_c)):
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise InvalidConfig(f"threshold {name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class PathScore:
    """One scored reasoning path with its per-sentence evidence."""

    path: ReasoningPath
    faithfulness: float
    evidence: Tuple[SentenceEvidence, ...] = ()


@dataclass(frozen=True)
class Verdict:
    """A final prediction with full provenance for audit.

    candidate_scores maps each distinct normalized prediction to its total
    support; the chosen prediction always attains the maximum. For
    best-path verdicts the per-candidate value is the best single path
    score rather than a sum, which keeps the same invariant.
    """

    prediction: Prediction
    candidate_scores: Mapping[str, float]
    per_path: Tuple[PathScore, ...] = ()
    mode: VerdictMode = VerdictMode.VOTE

    _PATH_DERIVED = frozenset({VerdictMode.VOTE, VerdictMode.SELF_CONSISTENCY,
                               VerdictMode.BEST_PATH})

    def __post_init__(self):
        if self.candidate_scores:
            top = max(self.candidate_scores.values())
            if self.candidate_scores.get(self.prediction.normalized, -math.inf) < top:
                raise ValueError("verdict prediction must attain the maximum candidate score")
        # variant verdicts answer from rebuilt facts, so their paths are
        # provenance only and need not cover the candidate table
        if self.per_path and self.mode in self._PATH_DERIVED:
            seen = {ps.path.prediction.normalized for ps in self.per_path}
            if seen != set(self.candidate_scores):
                raise ValueError("candidate_scores keys must be the distinct path predictions")
