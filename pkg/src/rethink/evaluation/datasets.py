"""Dataset loaders.

File formats (synthetic fixtures in the test suite use the same layouts):

StrategyQA: one JSON array of objects with the official field names
    {"qid", "question", "answer" (bool), "facts" [str], "evidence" [str]}.
    The dev split samples 10% of the examples with a required seed.

TempQuestions: one JSON array of objects
    {"Id", "Question", "Answer" [str], "Category"}.
    Only implicit, single-answer questions are kept; the first six of those
    are reserved for prompting and skipped.

INFOTABS: a directory holding tables.tsv (table_id, subject, key, value;
    one row per line, order preserved) and hypotheses.tsv (table_id,
    hypothesis, label E/C/N). Neutral rows are dropped and the remaining
    classes are balanced by truncating the larger one in file order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from ..errors import FormatError, InvalidConfig
from ..model import Query, Table, TaskKind


@dataclass(frozen=True)
class Example:
    query: Query
    gold: Tuple[str, ...]
    gold_facts: Tuple[str, ...] = ()
    gold_paragraphs: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.gold:
            raise ValueError("an example needs at least one gold answer")


def _load_json_array(path: str | Path) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, list):
        raise FormatError(f"{path}: expected a top-level array")
    return data


def load_strategyqa(path: str | Path, split: Optional[str] = None,
                    split_seed: Optional[int] = None,
                    dev_fraction: float = 0.1) -> list[Example]:
    data = _load_json_array(path)
    examples: list[Example] = []
    seen_ids: set[str] = set()
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise FormatError(f"{path}: record {i}: expected an object")
        try:
            qid = str(rec["qid"])
            question = str(rec["question"])
            answer = rec["answer"]
        except KeyError as exc:
            raise FormatError(f"{path}: record {i}: missing field {exc}") from exc
        if not isinstance(answer, bool):
            raise FormatError(f"{path}: record {i} ({qid}): answer must be true or false")
        if qid in seen_ids:
            raise FormatError(f"{path}: record {i}: duplicate qid {qid!r}")
        seen_ids.add(qid)
        examples.append(Example(
            query=Query(qid, question, TaskKind.COMMONSENSE),
            gold=("yes",) if answer else ("no",),
            gold_facts=tuple(rec.get("facts", ())),
            gold_paragraphs=tuple(rec.get("evidence", ())),
        ))
    if split is None:
        return examples
    if split not in ("dev", "train"):
        raise InvalidConfig(f"unknown split {split!r}")
    if split_seed is None:
        raise InvalidConfig("a split_seed is required to take the dev split")
    k = max(1, round(dev_fraction * len(examples))) if examples else 0
    rng = random.Random(split_seed)
    dev = set(rng.sample(range(len(examples)), k))
    keep = dev if split == "dev" else set(range(len(examples))) - dev
    return [ex for i, ex in enumerate(examples) if i in keep]


def load_tempquestions(path: str | Path, reserved_for_prompting: int = 6) -> list[Example]:
    data = _load_json_array(path)
    implicit: list[Example] = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise FormatError(f"{path}: record {i}: expected an object")
        try:
            qid = str(rec["Id"])
            question = str(rec["Question"])
            answers = rec["Answer"]
            category = str(rec["Category"])
        except KeyError as exc:
            raise FormatError(f"{path}: record {i}: missing field {exc}") from exc
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            raise FormatError(f"{path}: record {i} ({qid}): Answer must be a list of strings")
        if "implicit" not in category.lower() or len(answers) != 1:
            continue
        implicit.append(Example(
            query=Query(qid, question, TaskKind.TEMPORAL),
            gold=(answers[0],),
        ))
    return implicit[reserved_for_prompting:]


def _read_tsv(path: Path, n_columns: int) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != n_columns:
                raise FormatError(f"{path}: line {lineno}: expected {n_columns} "
                                  f"tab-separated columns, found {len(cols)}")
            rows.append((lineno, cols))
    return rows


def load_infotabs(directory: str | Path) -> list[Example]:
    directory = Path(directory)
    tables_path = directory / "tables.tsv"
    hypotheses_path = directory / "hypotheses.tsv"

    tables: dict[str, tuple[str, list[tuple[str, str]]]] = {}
    for lineno, (table_id, subject, key, value) in (
            (ln, cols) for ln, cols in _read_tsv(tables_path, 4)):
        if table_id not in tables:
            tables[table_id] = (subject, [])
        tables[table_id][1].append((key, value))

    entailed: list[Example] = []
    contradictory: list[Example] = []
    counter = 0
    for lineno, (table_id, hypothesis, label) in (
            (ln, cols) for ln, cols in _read_tsv(hypotheses_path, 3)):
        if table_id not in tables:
            raise FormatError(f"{hypotheses_path}: line {lineno}: unknown table {table_id!r}")
        label = label.strip().upper()
        if label not in ("E", "C", "N"):
            raise FormatError(f"{hypotheses_path}: line {lineno}: label must be E, C, or N")
        if label == "N":
            continue
        counter += 1
        subject, rows = tables[table_id]
        example = Example(
            query=Query(f"{table_id}-h{counter}", hypothesis, TaskKind.TABULAR,
                        context=Table(subject, tuple(rows))),
            gold=("true",) if label == "E" else ("false",),
        )
        (entailed if label == "E" else contradictory).append(example)

    keep = min(len(entailed), len(contradictory))
    balanced = set(id(ex) for ex in entailed[:keep]) | set(id(ex) for ex in contradictory[:keep])
    ordered = [ex for ex in entailed + contradictory]
    # preserve hypothesis file order across the two classes
    ordered.sort(key=lambda ex: int(ex.query.id.rsplit("-h", 1)[1]))
    return [ex for ex in ordered if id(ex) in balanced]
