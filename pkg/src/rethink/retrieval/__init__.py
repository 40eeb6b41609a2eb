"""Knowledge retrieval: BM25 paragraph search, triple-to-text templating,
table linearization, and the per-sentence retrieval pipeline."""

from .bm25 import Bm25Index, Paragraph, build_index, bm25_topk, load_index
from .pipeline import Granularity, RetrievalConfig, Retriever, select_premise
from .triples import (
    GazetteerLinker,
    Table,
    TemporalTriple,
    TemporalTripleStore,
    WordRelationStore,
    WordRelationTriple,
    linearize_table,
    temporal_sentences,
    word_relation_sentences,
)

__all__ = [
    "Bm25Index",
    "Paragraph",
    "build_index",
    "bm25_topk",
    "load_index",
    "Granularity",
    "RetrievalConfig",
    "Retriever",
    "select_premise",
    "GazetteerLinker",
    "Table",
    "TemporalTriple",
    "TemporalTripleStore",
    "WordRelationStore",
    "WordRelationTriple",
    "linearize_table",
    "temporal_sentences",
    "word_relation_sentences",
]
