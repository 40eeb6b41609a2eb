"""The experiment runner: evaluate a dataset under one mode and persist a
machine-readable report.

Records are newline-delimited JSON written in dataset order with sorted
keys and no volatile fields, so two runs over the same fixtures produce
byte-identical record files and an interrupted run can resume by skipping
the example ids already on disk. Timing lives only in the summary.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from ..errors import BackendError, InvalidConfig, TransportError
from ..faithfulness import default_config, score_path
from ..gateway import CompletionRequest
from ..inference import (
    FactSet,
    FinalBackend,
    best_path,
    fact_generation,
    fact_selection,
    final_inference,
    self_consistency,
    vote,
)
from ..model import (
    FaithfulnessConfig,
    Prediction,
    ReasoningPath,
    TaskKind,
    Verdict,
    VerdictMode,
)
from ..paths import (
    build_fewshot_prompt,
    build_zero_shot_prompt,
    is_chaining,
    kind_for,
    make_reasoning_path,
    normalize_prediction,
    sample_paths,
)
from ..retrieval.pipeline import Retriever, select_premise
from .datasets import Example
from .metrics import accuracy, exact_match
from . import report as report_io


class RunMode(Enum):
    ZERO_SHOT = "zero-shot"
    FEW_SHOT = "few-shot"
    COT = "cot"
    SELF_CONSISTENCY = "self-consistency"
    RR = "rr"
    RR_BEST = "rr-best"
    VARIANT_I = "variant-i"
    VARIANT_II = "variant-ii"


MODE_ALIASES = {
    "rethinking-with-retrieval": RunMode.RR,
    "rr-best-path": RunMode.RR_BEST,
    "basic-without-voting": RunMode.RR_BEST,
}

GREEDY_MODES = frozenset({RunMode.ZERO_SHOT, RunMode.FEW_SHOT, RunMode.COT})
SAMPLED_MODES = frozenset(set(RunMode) - GREEDY_MODES)
KNOWLEDGE_MODES = frozenset({RunMode.RR, RunMode.RR_BEST,
                             RunMode.VARIANT_I, RunMode.VARIANT_II})


def parse_mode(name: str) -> RunMode:
    name = name.strip().lower()
    if name in MODE_ALIASES:
        return MODE_ALIASES[name]
    for mode in RunMode:
        if mode.value == name:
            return mode
    raise InvalidConfig(f"unknown mode {name!r}")


@dataclass(frozen=True)
class RunnerConfig:
    mode: RunMode
    n: int = 1
    temperature: float = 0.0
    max_tokens: int = 256
    faithfulness: Optional[FaithfulnessConfig] = None
    cluster_threshold: float = 0.5
    skip_chaining_sentences: bool = False
    final_backend: FinalBackend = FinalBackend.QA
    questions_per_entity: int = 2
    workers: int = 1
    config_snapshot: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig("n must be >= 1")
        if self.workers < 1:
            raise InvalidConfig("workers must be >= 1")


@dataclass
class RunReport:
    mode: RunMode
    task: TaskKind
    metric_name: str
    metric_value: Optional[float]
    records: list[dict]
    config: dict
    wall_clock_s: float
    completed: bool
    total: int


def metric_name_for(task: TaskKind) -> str:
    return "em" if task is TaskKind.TEMPORAL else "accuracy"


def _prediction_dict(p: Prediction) -> dict:
    return {"surface": p.surface, "normalized": p.normalized,
            "kind": p.kind.value, "unparsed": p.unparsed}


def _path_dicts(verdict: Verdict) -> list[dict]:
    out = []
    for ps in verdict.per_path:
        by_index = {ev.sentence_index: ev for ev in ps.evidence}
        sentences = []
        for s in ps.path.explanation:
            ev = by_index.get(s.index)
            premise = None
            if ev is not None and ev.premise is not None:
                premise = {"text": ev.premise.text, "source": ev.premise.source.value,
                           "doc_id": ev.premise.doc_id, "score": ev.premise.score}
            sentences.append({
                "index": s.index, "text": s.text, "chaining": is_chaining(s.text),
                "premise": premise,
                "similarity": ev.similarity if ev else 0.0,
                "entailment": ev.entailment if ev else 0.0,
                "contradiction": ev.contradiction if ev else 0.0,
            })
        out.append({
            "sample_index": ps.path.sample_index,
            "raw": ps.path.raw,
            "prediction": _prediction_dict(ps.path.prediction),
            "faithfulness": ps.faithfulness,
            "sentences": sentences,
        })
    return out


def _fact_dicts(facts: Optional[FactSet]) -> list[dict]:
    if facts is None:
        return []
    return [{"text": f.text, "faithfulness": f.faithfulness, "origin": f.origin.value}
            for f in facts.facts]


class _Evaluator:
    def __init__(self, cfg: RunnerConfig, gateway, retriever: Optional[Retriever]):
        self.cfg = cfg
        self.gateway = gateway
        self.retriever = retriever
        if cfg.mode in KNOWLEDGE_MODES and retriever is None:
            raise InvalidConfig(f"mode {cfg.mode.value} needs a configured retriever")

    def _passthrough(self, example: Example, prompt: str) -> Verdict:
        text = self.gateway.complete(CompletionRequest(
            prompt, n=1, temperature=0.0, max_tokens=self.cfg.max_tokens))[0]
        path = make_reasoning_path(text, task=example.query.task, sample_index=0)
        if path.prediction.unparsed and text.strip():
            surface = text.strip()
            normalized = normalize_prediction(surface, example.query.task)
            prediction = Prediction(surface, normalized,
                                    kind_for(normalized, example.query.task))
            path = ReasoningPath(raw=text, explanation=(), prediction=prediction,
                                 sample_index=0)
        return self_consistency([path])

    def _faithfulness_config(self, example: Example) -> FaithfulnessConfig:
        if self.cfg.faithfulness is not None:
            return self.cfg.faithfulness
        sources = self.retriever.config.sources if self.retriever else None
        return default_config(example.query.task, sources)

    def _scored_paths(self, example: Example, fcfg: FaithfulnessConfig):
        paths = sample_paths(example.query, self.gateway, self.cfg.n,
                             self.cfg.temperature, self.cfg.max_tokens)
        gold = example.gold_paragraphs
        candidates_per_path = []
        scored = []
        for path in paths:
            candidates = self.retriever.retrieve_for_path(path, example.query, gold)
            premises = [select_premise(s.text, cands, self.gateway)
                        for s, cands in zip(path.explanation, candidates)]
            scored.append(score_path(path, premises, self.gateway, fcfg,
                                     self.cfg.skip_chaining_sentences))
            candidates_per_path.append(candidates)
        return paths, scored, candidates_per_path

    def verdict_for(self, example: Example) -> tuple[Verdict, Optional[FactSet]]:
        mode = self.cfg.mode
        if mode is RunMode.ZERO_SHOT:
            return self._passthrough(example, build_zero_shot_prompt(example.query)), None
        if mode is RunMode.FEW_SHOT:
            return self._passthrough(example, build_fewshot_prompt(example.query)), None
        if mode is RunMode.COT:
            paths = sample_paths(example.query, self.gateway, 1, 0.0, self.cfg.max_tokens)
            return self_consistency(paths), None
        if mode is RunMode.SELF_CONSISTENCY:
            paths = sample_paths(example.query, self.gateway, self.cfg.n,
                                 self.cfg.temperature, self.cfg.max_tokens)
            return self_consistency(paths), None

        fcfg = self._faithfulness_config(example)
        paths, scored, candidates = self._scored_paths(example, fcfg)
        scores = [ps.faithfulness for ps in scored]
        evidence = [ps.evidence for ps in scored]
        if mode is RunMode.RR:
            return vote(paths, scores, evidence), None
        if mode is RunMode.RR_BEST:
            return best_path(paths, scores, evidence), None

        facts = fact_selection(paths, evidence, fcfg, self.gateway,
                               self.cfg.cluster_threshold)
        verdict_mode = VerdictMode.VARIANT_I
        if mode is RunMode.VARIANT_II:
            knowledge = [candidates[f.path_index][f.sentence_index] for f in facts.facts]
            facts = fact_generation(facts, knowledge, self.gateway, fcfg,
                                    questions_per_entity=self.cfg.questions_per_entity)
            verdict_mode = VerdictMode.VARIANT_II
        verdict = final_inference(example.query, facts, self.gateway,
                                  self.cfg.final_backend, verdict_mode)
        if evidence:
            verdict = Verdict(prediction=verdict.prediction,
                              candidate_scores=verdict.candidate_scores,
                              per_path=tuple(scored), mode=verdict.mode)
        return verdict, facts

    def record_for(self, example: Example) -> dict:
        verdict, facts = self.verdict_for(example)
        correct = exact_match(verdict.prediction.normalized, example.gold)
        return {
            "id": example.query.id,
            "question": example.query.text,
            "gold": list(example.gold),
            "mode": self.cfg.mode.value,
            "prediction": _prediction_dict(verdict.prediction),
            "verdict_mode": verdict.mode.value,
            "correct": correct,
            "candidate_scores": dict(verdict.candidate_scores),
            "paths": _path_dicts(verdict),
            "facts": _fact_dicts(facts),
        }


def record_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def read_records(path: Path) -> tuple[list[dict], int]:
    """Existing records and the byte length of the well-formed prefix.
    A trailing partial line (an interrupted write) is dropped."""
    records: list[dict] = []
    good = 0
    if not path.exists():
        return records, good
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    for line in data.splitlines(keepends=True):
        if not line.endswith(b"\n"):
            break
        stripped = line.strip()
        if stripped:
            try:
                records.append(json.loads(stripped.decode("utf-8")))
            except (json.JSONDecodeError, UnicodeDecodeError):
                break
        offset += len(line)
        good = offset
    return records, good


def run_experiment(examples: Sequence[Example], cfg: RunnerConfig, gateway,
                   retriever: Optional[Retriever] = None,
                   out_dir: Optional[str | Path] = None,
                   resume: bool = False, figures: bool = True) -> RunReport:
    """Evaluate every example; write records incrementally when out_dir is
    given. Repeated backend failures abort with a partial report rather
    than fabricated verdicts."""
    if not examples:
        raise InvalidConfig("run_experiment needs at least one example")
    tasks = {ex.query.task for ex in examples}
    if len(tasks) > 1:
        raise InvalidConfig("all examples in a run must share one task")
    task = examples[0].query.task
    ids = [ex.query.id for ex in examples]
    if len(set(ids)) != len(ids):
        raise InvalidConfig("example ids must be unique within a run")

    evaluator = _Evaluator(cfg, gateway, retriever)
    started = time.monotonic()

    existing: list[dict] = []
    records_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        records_path = out_path / "records.jsonl"
        if resume:
            existing, good = read_records(records_path)
            if records_path.exists():
                with open(records_path, "r+b") as fh:
                    fh.truncate(good)
        elif records_path.exists():
            records_path.unlink()

    done_ids = {rec["id"] for rec in existing}
    todo = [ex for ex in examples if ex.query.id not in done_ids]

    records = list(existing)
    completed = True
    failure: Optional[str] = None
    appender = open(records_path, "a", encoding="utf-8") if records_path else None
    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = pool.map(evaluator.record_for, todo)
            while True:
                try:
                    record = next(results)
                except StopIteration:
                    break
                except (TransportError, BackendError) as exc:
                    completed = False
                    failure = str(exc)
                    break
                records.append(record)
                if appender:
                    appender.write(record_line(record) + "\n")
                    appender.flush()
    finally:
        if appender:
            appender.close()

    metric = metric_name_for(task)
    value = accuracy(r["correct"] for r in records) if records else None
    elapsed = time.monotonic() - started
    report = RunReport(mode=cfg.mode, task=task, metric_name=metric, metric_value=value,
                       records=records, config=dict(cfg.config_snapshot),
                       wall_clock_s=elapsed, completed=completed, total=len(examples))
    if out_dir is not None:
        summary = {
            "mode": cfg.mode.value,
            "task": task.value,
            "metric": metric,
            "value": value,
            "total": len(examples),
            "evaluated": len(records),
            "completed": completed,
            "failure": failure,
            "wall_clock_s": elapsed,
            "config": report.config,
        }
        report_io.write_summary(Path(out_dir), summary)
        if figures:
            report_io.render_figures(records, summary, Path(out_dir))
    return report
