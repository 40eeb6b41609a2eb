"""BM25 paragraph index with snapshot persistence.

Scoring is the standard Okapi form with k1=0.9, b=0.4 by default:

    score(q, d) = sum over query token occurrences t of
        idf(t) * tf(t, d) * (k1 + 1) / (tf(t, d) + k1 * (1 - b + b * len(d) / avgdl))
    idf(t)     = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))

Tokenization is lowercase and punctuation-stripped, with optional Porter
stemming. Only documents sharing at least one query token are returned;
ties break by ascending doc id.

Corpus files are newline-delimited JSON, one object per paragraph:
{"id": str, "title": str, "text": str}.

Snapshot layout: 4-byte magic "RRIX", one format-version byte (currently
1), then a zlib-compressed canonical-JSON payload holding the parameters
and paragraphs. Statistics are recomputed deterministically on load, so a
reloaded index answers queries exactly like the freshly built one.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..errors import IngestError
from ..text import tokens
from .stem import porter_stem

_MAGIC = b"RRIX"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Paragraph:
    doc_id: str
    title: str
    text: str


class Bm25Index:
    """Immutable after construction; concurrent reads are safe."""

    def __init__(self, paragraphs: Sequence[Paragraph], k1: float = 0.9, b: float = 0.4,
                 stem: bool = False):
        self.k1 = k1
        self.b = b
        self.stem = stem
        self.paragraphs = list(paragraphs)
        seen: set[str] = set()
        for p in self.paragraphs:
            if p.doc_id in seen:
                raise IngestError(f"duplicate doc id {p.doc_id!r}")
            seen.add(p.doc_id)
        self._by_id = {p.doc_id: p for p in self.paragraphs}
        self._doc_len: list[int] = []
        self._postings: dict[str, list[tuple[int, int]]] = {}
        for idx, p in enumerate(self.paragraphs):
            toks = self._tokenize(p.text)
            self._doc_len.append(len(toks))
            counts: dict[str, int] = {}
            for t in toks:
                counts[t] = counts.get(t, 0) + 1
            for term, tf in counts.items():
                self._postings.setdefault(term, []).append((idx, tf))
        total = sum(self._doc_len)
        self._avgdl = total / len(self.paragraphs) if self.paragraphs else 0.0

    def _tokenize(self, text: str) -> list[str]:
        toks = tokens(text)
        if self.stem:
            toks = [porter_stem(t) for t in toks]
        return toks

    def __len__(self) -> int:
        return len(self.paragraphs)

    def document_frequency(self, term: str) -> int:
        return len(self._postings.get(term, ()))

    def paragraph(self, doc_id: str) -> Paragraph:
        return self._by_id[doc_id]

    def _idf(self, term: str) -> float:
        df = self.document_frequency(term)
        n = len(self.paragraphs)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def top_k(self, query_text: str, k: int = 10) -> list[tuple[str, float]]:
        if not self.paragraphs:
            return []
        scores: dict[int, float] = {}
        for term in self._tokenize(query_text):
            postings = self._postings.get(term)
            if not postings:
                continue
            idf = self._idf(term)
            for idx, tf in postings:
                norm = tf + self.k1 * (1 - self.b + self.b * self._doc_len[idx] / self._avgdl)
                scores[idx] = scores.get(idx, 0.0) + idf * tf * (self.k1 + 1) / norm
        ranked = sorted(scores.items(),
                        key=lambda item: (-item[1], self.paragraphs[item[0]].doc_id))
        return [(self.paragraphs[idx].doc_id, score) for idx, score in ranked[:k]]

    def save(self, path: str | Path) -> None:
        payload = {
            "k1": self.k1,
            "b": self.b,
            "stem": self.stem,
            "paragraphs": [
                {"id": p.doc_id, "title": p.title, "text": p.text}
                for p in self.paragraphs
            ],
        }
        blob = zlib.compress(
            json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8"), 9)
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(bytes([_FORMAT_VERSION]))
            fh.write(blob)


def load_index(path: str | Path) -> Bm25Index:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise IngestError(f"{path}: not an index snapshot (bad magic)")
    if len(data) < 5 or data[4] != _FORMAT_VERSION:
        raise IngestError(f"{path}: unsupported snapshot format version")
    payload = json.loads(zlib.decompress(data[5:]).decode("utf-8"))
    paragraphs = [Paragraph(rec["id"], rec["title"], rec["text"])
                  for rec in payload["paragraphs"]]
    return Bm25Index(paragraphs, k1=payload["k1"], b=payload["b"], stem=payload["stem"])


def read_corpus(path: str | Path) -> list[Paragraph]:
    paragraphs = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise IngestError(f"{path}: line {lineno}: expected an object")
            missing = [k for k in ("id", "title", "text") if k not in rec]
            if missing:
                raise IngestError(f"{path}: line {lineno}: missing field(s) {missing}")
            if not str(rec["id"]).strip() or not str(rec["text"]).strip():
                raise IngestError(f"{path}: line {lineno}: id and text must be non-empty")
            doc_id = str(rec["id"])
            if doc_id in seen:
                raise IngestError(f"{path}: line {lineno}: duplicate doc id {doc_id!r}")
            seen.add(doc_id)
            paragraphs.append(Paragraph(doc_id, str(rec["title"]), str(rec["text"])))
    return paragraphs


def build_index(corpus_file: str | Path, k1: float = 0.9, b: float = 0.4,
                stem: bool = False) -> Bm25Index:
    return Bm25Index(read_corpus(corpus_file), k1=k1, b=b, stem=stem)


def bm25_topk(index: Bm25Index, query_text: str, k: int = 10) -> list[tuple[str, float]]:
    return index.top_k(query_text, k)
