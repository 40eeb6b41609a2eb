"""Per-sentence knowledge retrieval and premise selection.

Decomposition granularity issues one retrieval per explanation sentence;
query granularity retrieves once from the query text and attaches the same
candidates to every sentence. Query-level sources (word relations, table
linearization, gold evidence) are shared across sentences in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from ..errors import InvalidConfig
from ..model import KnowledgeSnippet, KnowledgeSource, Query, ReasoningPath, Table
from .bm25 import Bm25Index
from .triples import (
    TemporalTripleStore,
    WordRelationStore,
    linearize_table,
    temporal_sentences,
    word_relation_sentences,
)


class Granularity(Enum):
    DECOMPOSITION = "decomposition"
    QUERY_BASED = "query"


@dataclass(frozen=True)
class RetrievalConfig:
    granularity: Granularity = Granularity.DECOMPOSITION
    sources: frozenset[KnowledgeSource] = frozenset({KnowledgeSource.BM25_CORPUS})
    top_k: int = 10

    def __post_init__(self):
        if self.top_k < 1:
            raise InvalidConfig("retrieval top_k must be >= 1")
        if not self.sources:
            raise InvalidConfig("at least one knowledge source must be enabled")


def select_premise(sentence_text: str, candidates: Sequence[KnowledgeSnippet],
                   gateway) -> Optional[KnowledgeSnippet]:
    """The most similar candidate, or None when there are no candidates.

    Ties prefer the lowest doc id; candidates without one come after those
    with, in input order.
    """
    if not candidates:
        return None
    sims = gateway.similarity_batch([(sentence_text, c.text) for c in candidates])
    order = sorted(range(len(candidates)),
                   key=lambda i: (candidates[i].doc_id is None, candidates[i].doc_id or "", i))
    best = max(order, key=lambda i: sims[i])
    return candidates[best]


class Retriever:
    """Routes each sentence to the enabled knowledge sources."""

    def __init__(self, config: RetrievalConfig, *,
                 index: Bm25Index | None = None,
                 temporal_store: TemporalTripleStore | None = None,
                 relation_store: WordRelationStore | None = None,
                 linker=None):
        self.config = config
        self.index = index
        self.temporal_store = temporal_store
        self.relation_store = relation_store
        self.linker = linker
        sources = config.sources
        if KnowledgeSource.BM25_CORPUS in sources and index is None:
            raise InvalidConfig("corpus source enabled but no index provided")
        if KnowledgeSource.TEMPORAL_TRIPLES in sources:
            if temporal_store is None:
                raise InvalidConfig("temporal source enabled but no triple store provided")
            if linker is None:
                raise InvalidConfig("temporal source enabled but no entity linker provided")
        if KnowledgeSource.WORD_RELATIONS in sources and relation_store is None:
            raise InvalidConfig("word-relation source enabled but no relation store provided")

    def _sentence_candidates(self, text: str) -> list[KnowledgeSnippet]:
        out: list[KnowledgeSnippet] = []
        if KnowledgeSource.BM25_CORPUS in self.config.sources:
            for doc_id, score in self.index.top_k(text, self.config.top_k):
                paragraph = self.index.paragraph(doc_id)
                out.append(KnowledgeSnippet(paragraph.text, KnowledgeSource.BM25_CORPUS,
                                            doc_id=doc_id, score=score))
        if KnowledgeSource.TEMPORAL_TRIPLES in self.config.sources:
            out.extend(temporal_sentences(text, self.linker, self.temporal_store))
        return out

    def _shared_candidates(self, query: Query,
                           gold_paragraphs: Sequence[str] = ()) -> list[KnowledgeSnippet]:
        out: list[KnowledgeSnippet] = []
        table_snippets: list[KnowledgeSnippet] = []
        if isinstance(query.context, Table):
            table_snippets = linearize_table(query.context)
        if KnowledgeSource.TABLE_LINEARIZATION in self.config.sources:
            out.extend(table_snippets)
        if KnowledgeSource.WORD_RELATIONS in self.config.sources:
            if table_snippets:
                premise_text = " ".join(s.text for s in table_snippets)
            elif isinstance(query.context, str):
                premise_text = query.context
            else:
                premise_text = query.text
            out.extend(word_relation_sentences(premise_text, query.text, self.relation_store))
        if KnowledgeSource.GOLD_EVIDENCE in self.config.sources:
            out.extend(KnowledgeSnippet(p, KnowledgeSource.GOLD_EVIDENCE)
                       for p in gold_paragraphs if p.strip())
        return out

    def retrieve_for_path(self, path: ReasoningPath, query: Query,
                          gold_paragraphs: Sequence[str] = ()) -> list[list[KnowledgeSnippet]]:
        """Candidate snippets for every explanation sentence of the path."""
        shared = self._shared_candidates(query, gold_paragraphs)
        if self.config.granularity is Granularity.QUERY_BASED:
            per_query = self._sentence_candidates(query.text)
            return [per_query + shared for _ in path.explanation]
        return [self._sentence_candidates(s.text) + shared for s in path.explanation]
