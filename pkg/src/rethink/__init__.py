"""Retrieval-checked chain-of-thought reasoning.

Sample diverse reasoning paths for a query, retrieve external knowledge for
each decomposed step, score how faithfully every step is supported, and
pick the final answer by faithfulness-weighted voting, with fact-selection
and fact-generation repair variants and an evaluation harness.
"""

from .errors import (
    BackendError,
    EmptyRun,
    FormatError,
    IngestError,
    InvalidConfig,
    LinkerError,
    NoPaths,
    RethinkError,
    TransportError,
)
from .model import (
    FaithfulnessConfig,
    FaithfulnessFunction,
    KnowledgeSnippet,
    KnowledgeSource,
    PathScore,
    Prediction,
    PredictionKind,
    Query,
    ReasoningPath,
    Sentence,
    SentenceEvidence,
    Table,
    TaskKind,
    Verdict,
    VerdictMode,
)
from .paths import make_reasoning_path, normalize_prediction, sample_paths, split_sentences

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "EmptyRun",
    "FormatError",
    "IngestError",
    "InvalidConfig",
    "LinkerError",
    "NoPaths",
    "RethinkError",
    "TransportError",
    "FaithfulnessConfig",
    "FaithfulnessFunction",
    "KnowledgeSnippet",
    "KnowledgeSource",
    "PathScore",
    "Prediction",
    "PredictionKind",
    "Query",
    "ReasoningPath",
    "Sentence",
    "SentenceEvidence",
    "Table",
    "TaskKind",
    "Verdict",
    "VerdictMode",
    "make_reasoning_path",
    "normalize_prediction",
    "sample_paths",
    "split_sentences",
    "__version__",
]
