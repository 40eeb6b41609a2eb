"""Knowledge-graph triples rendered into template sentences, plus table
linearization and entity linking.

Triple stores are newline-delimited JSON. Temporal records are
{"subject", "relation", "value"} with two optional extensions: "office"
(free text naming the held office, used by the term templates) and
"aliases" (alternate surface forms the gazetteer linker should match).
Word-relation records are {"left", "relation", "right"} with lowercase
single-word sides.
"""

from __future__ import annotations

import calendar
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import requests

from ..errors import BackendError, IngestError, LinkerError, TransportError
from ..model import KnowledgeSnippet, KnowledgeSource, Table
from ..text import tokens

# re-exported for convenience alongside linearize_table
__all__ = [
    "Table", "TemporalValue", "TemporalTriple", "TemporalTripleStore",
    "WordRelationTriple", "WordRelationStore", "GazetteerLinker", "HttpLinker",
    "temporal_sentences", "word_relation_sentences", "linearize_table",
]

_ERAS = ("AD", "BC")


@dataclass(frozen=True)
class TemporalValue:
    """A date or year with an era; month and day are optional."""

    year: int
    month: Optional[int] = None
    day: Optional[int] = None
    era: str = "AD"

    def __post_init__(self):
        if self.era not in _ERAS:
            raise ValueError(f"era must be one of {_ERAS}, got {self.era!r}")

    def render(self) -> str:
        suffix = " BC" if self.era == "BC" else ""
        if self.month and self.day:
            return f"{calendar.month_name[self.month]} {self.day}, {self.year}{suffix}"
        if self.month:
            return f"{calendar.month_name[self.month]} {self.year}{suffix}"
        return f"{self.year}{suffix}"

    @property
    def is_full_date(self) -> bool:
        return self.month is not None and self.day is not None


_ISO_RE = re.compile(r"^(\d{1,4})-(\d{1,2})-(\d{1,2})$")
_YEAR_RE = re.compile(r"^(\d{1,4})\s*(BC|AD)?$", re.IGNORECASE)
_LONG_RE = re.compile(r"^([A-Za-z]+)\s+(\d{1,2}),\s*(\d{1,4})$")
_DAY_FIRST_RE = re.compile(r"^(\d{1,2})\s+([A-Za-z]+)\s+(\d{1,4})$")
_MONTHS = {name.lower(): i for i, name in enumerate(calendar.month_name) if name}


def parse_temporal_value(raw: str) -> TemporalValue:
    text = str(raw).strip()
    m = _ISO_RE.match(text)
    if m:
        year, month, day = (int(g) for g in m.groups())
        if not (1 <= month <= 12 and 1 <= day <= 31):
            raise ValueError(f"unparseable date {raw!r}")
        return TemporalValue(year, month, day)
    m = _YEAR_RE.match(text)
    if m:
        era = (m.group(2) or "AD").upper()
        return TemporalValue(int(m.group(1)), era=era)
    m = _LONG_RE.match(text)
    if m and m.group(1).lower() in _MONTHS:
        return TemporalValue(int(m.group(3)), _MONTHS[m.group(1).lower()], int(m.group(2)))
    m = _DAY_FIRST_RE.match(text)
    if m and m.group(2).lower() in _MONTHS:
        return TemporalValue(int(m.group(3)), _MONTHS[m.group(2).lower()], int(m.group(1)))
    raise ValueError(f"unparseable temporal value {raw!r}")


BIRTH_DATE = "birth_date"
DEATH_DATE = "death_date"
START_YEAR = "start_year"
END_YEAR = "end_year"
RELEASE_DATE = "release_date"
TERM_START = "term_start"
TERM_END = "term_end"
KNOWN_TEMPORAL_RELATIONS = frozenset({
    BIRTH_DATE, DEATH_DATE, START_YEAR, END_YEAR, RELEASE_DATE, TERM_START, TERM_END,
})

_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def _canonical_relation(label: str) -> str:
    return _CAMEL_RE.sub("_", str(label).strip()).lower().replace(" ", "_")


@dataclass(frozen=True)
class TemporalTriple:
    subject: str
    relation: str
    value: TemporalValue
    office: Optional[str] = None

    def __post_init__(self):
        if not self.subject.strip():
            raise ValueError("triple subject must be non-empty")
        object.__setattr__(self, "relation", _canonical_relation(self.relation))


def _on_or_in(value: TemporalValue) -> str:
    return f"on {value.render()}" if value.is_full_date else f"in {value.render()}"


def render_temporal(triple: TemporalTriple) -> str:
    subject, value = triple.subject, triple.value
    relation = triple.relation
    if relation == BIRTH_DATE:
        return f"{subject} was born {_on_or_in(value)}."
    if relation == DEATH_DATE:
        return f"{subject} died {_on_or_in(value)}."
    if relation == RELEASE_DATE:
        return f"{subject} was released {_on_or_in(value)}."
    if relation == START_YEAR:
        return f"{subject} started in {value.render()}."
    if relation == END_YEAR:
        return f"{subject} ended in {value.render()}."
    if relation == TERM_START:
        office = f" as the {triple.office}" if triple.office else ""
        return f"{subject} assumed office{office} in {value.render()}."
    if relation == TERM_END:
        office = f" as the {triple.office}" if triple.office else ""
        return f"{subject} left office{office} in {value.render()}."
    label = relation.replace("_", " ")
    return f"The {label} of {subject} is {value.render()}."


def render_term(subject: str, office: Optional[str], start: TemporalValue,
                end: TemporalValue) -> str:
    held = f"as the {office}" if office else "in office"
    return f"{subject} served {held} from {start.render()} to {end.render()}."


class TemporalTripleStore:
    def __init__(self, triples: Sequence[TemporalTriple], aliases: dict[str, str] | None = None):
        self._by_subject: dict[str, list[TemporalTriple]] = {}
        for t in triples:
            self._by_subject.setdefault(t.subject.lower(), []).append(t)
        # alias (lowercase) -> canonical subject
        self._names: dict[str, str] = {}
        for t in triples:
            self._names.setdefault(t.subject.lower(), t.subject)
        for alias, subject in (aliases or {}).items():
            self._names.setdefault(alias.lower(), subject)

    @classmethod
    def from_file(cls, path: str | Path) -> "TemporalTripleStore":
        triples: list[TemporalTriple] = []
        aliases: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
                try:
                    value = parse_temporal_value(rec["value"])
                    triple = TemporalTriple(
                        subject=str(rec["subject"]),
                        relation=_canonical_relation(rec["relation"]),
                        value=value,
                        office=rec.get("office"),
                    )
                except (KeyError, ValueError) as exc:
                    raise IngestError(f"{path}: line {lineno}: {exc}") from exc
                triples.append(triple)
                for alias in rec.get("aliases", ()):
                    aliases[str(alias)] = triple.subject
        return cls(triples, aliases)

    def known_names(self) -> list[str]:
        return list(self._names)

    def canonical(self, name: str) -> Optional[str]:
        return self._names.get(name.lower())

    def for_subject(self, subject: str) -> list[TemporalTriple]:
        return list(self._by_subject.get(subject.lower(), ()))


class GazetteerLinker:
    """Entity linking by exact or alias string match against the store.

    Matches are case-insensitive on word boundaries; longer names win when
    they overlap, and results follow first-occurrence order in the text.
    """

    def __init__(self, store: TemporalTripleStore):
        self._store = store
        names = sorted(store.known_names(), key=lambda n: (-len(n), n))
        self._patterns = [
            (name, re.compile(r"(?<!\w)" + re.escape(name) + r"(?!\w)", re.IGNORECASE))
            for name in names
        ]

    def link(self, text: str) -> list[str]:
        found: list[tuple[int, str]] = []
        claimed: list[tuple[int, int]] = []
        for name, pattern in self._patterns:
            for m in pattern.finditer(text):
                span = (m.start(), m.end())
                if any(s < span[1] and span[0] < e for s, e in claimed):
                    continue
                claimed.append(span)
                canon = self._store.canonical(name)
                if canon:
                    found.append((m.start(), canon))
        out: list[str] = []
        for _, canon in sorted(found):
            if canon not in out:
                out.append(canon)
        return out


class HttpLinker:
    """Client for a remote entity-linking service.

    POST /v1/link {"items": [{"text": str}]} -> {"entities": [[str]]}
    Failures surface as LinkerError.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 2,
                 session: requests.Session | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self._session = session or requests.Session()

    def link(self, text: str) -> list[str]:
        from ..gateway import post_json
        try:
            body = post_json(self._session, self.endpoint, "/v1/link",
                             {"items": [{"text": text}]}, self.timeout, self.retries)
        except (TransportError, BackendError) as exc:
            raise LinkerError(str(exc)) from exc
        entities = body.get("entities")
        if (not isinstance(entities, list) or len(entities) != 1
                or not all(isinstance(e, str) for e in entities[0])):
            raise LinkerError("/v1/link returned a malformed entity list")
        return list(entities[0])


def temporal_sentences(sentence_text: str, linker, store: TemporalTripleStore) -> list[KnowledgeSnippet]:
    """One templated sentence per (entity, temporal relation) found in the
    sentence, with term start/end pairs for the same office merged into a
    single served-from-to sentence."""
    snippets: list[KnowledgeSnippet] = []
    for entity in linker.link(sentence_text):
        triples = store.for_subject(entity)
        used: set[int] = set()
        for i, triple in enumerate(triples):
            if i in used:
                continue
            if triple.relation == TERM_START:
                partner = next(
                    (j for j, other in enumerate(triples)
                     if j not in used and other.relation == TERM_END
                     and other.office == triple.office),
                    None)
                if partner is not None:
                    used.update((i, partner))
                    text = render_term(triple.subject, triple.office,
                                       triple.value, triples[partner].value)
                    snippets.append(KnowledgeSnippet(text, KnowledgeSource.TEMPORAL_TRIPLES))
                    continue
            used.add(i)
            snippets.append(KnowledgeSnippet(render_temporal(triple),
                                             KnowledgeSource.TEMPORAL_TRIPLES))
    return snippets


_WORD_RELATIONS = {
    "related_to": "{left} is related to {right}.",
    "hypernym": "{left} is a hypernym of {right}.",
    "hyponym": "{left} is a hyponym of {right}.",
    "distinct_from": "{left} is distinct from {right}.",
    "synonym": "{left} is a synonym of {right}.",
    "antonym": "{left} is an antonym of {right}.",
}


@dataclass(frozen=True)
class WordRelationTriple:
    left: str
    relation: str
    right: str

    def __post_init__(self):
        if not self.left.strip() or not self.right.strip():
            raise ValueError("word relation sides must be non-empty")
        object.__setattr__(self, "left", self.left.strip().lower())
        object.__setattr__(self, "right", self.right.strip().lower())
        object.__setattr__(self, "relation", _canonical_relation(self.relation))


def _article_for(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


def render_word_relation(triple: WordRelationTriple) -> str:
    left = triple.left[:1].upper() + triple.left[1:]
    template = _WORD_RELATIONS.get(triple.relation)
    if template is not None:
        return template.format(left=left, right=triple.right)
    if triple.relation == "is_a":
        return f"{left} is {_article_for(triple.right)} {triple.right}."
    label = triple.relation.replace("_", " ")
    return f"{left} is {label} {triple.right}."


class WordRelationStore:
    def __init__(self, triples: Sequence[WordRelationTriple]):
        self.triples = list(triples)

    @classmethod
    def from_file(cls, path: str | Path) -> "WordRelationStore":
        triples: list[WordRelationTriple] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    triples.append(WordRelationTriple(
                        left=str(rec["left"]).strip().lower(),
                        relation=_canonical_relation(rec["relation"]),
                        right=str(rec["right"]).strip().lower(),
                    ))
                except json.JSONDecodeError as exc:
                    raise IngestError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
                except (KeyError, ValueError) as exc:
                    raise IngestError(f"{path}: line {lineno}: {exc}") from exc
        return cls(triples)


def word_relation_sentences(premise_text: str, hypothesis_text: str,
                            store: WordRelationStore) -> list[KnowledgeSnippet]:
    """One templated sentence per triple whose left word occurs in one text
    and right word in the other, deduplicated, in store order."""
    premise_words = set(tokens(premise_text))
    hypothesis_words = set(tokens(hypothesis_text))
    seen: set[str] = set()
    out: list[KnowledgeSnippet] = []
    for triple in store.triples:
        forward = triple.left in premise_words and triple.right in hypothesis_words
        backward = triple.left in hypothesis_words and triple.right in premise_words
        if not (forward or backward):
            continue
        text = render_word_relation(triple)
        if text in seen:
            continue
        seen.add(text)
        out.append(KnowledgeSnippet(text, KnowledgeSource.WORD_RELATIONS))
    return out


_SPECIAL_ROW_KEYS = {"born", "died"}


def linearize_table(table: Table) -> list[KnowledgeSnippet]:
    """One sentence per row, in row order. Born/Died rows use the
    "<subject> was <key> on <value>." form, everything else
    "The <key> of <subject> are <value>."."""
    out = []
    for key, value in table.rows:
        if key.strip().lower() in _SPECIAL_ROW_KEYS:
            text = f"{table.subject} was {key} on {value}."
        else:
            text = f"The {key} of {table.subject} are {value}."
        out.append(KnowledgeSnippet(text, KnowledgeSource.TABLE_LINEARIZATION))
    return out
