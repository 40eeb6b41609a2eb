"""Per-sentence evidence scoring and per-path faithfulness aggregation.

Three aggregation functions over the sentences of an explanation, with
M(s) the premise similarity, E(s) the entailment score, C(s) the
contradiction score, and thresholds t_m, t_e, t_c:

    F1 = sum of [M if M >= t_m else E] - C
    F2 = sum of M + E
    F3 = sum of [E if E >= t_e else 0] - [C if C >= t_c else 0]

Indicator comparisons are >= on every threshold. Sentences with no premise
contribute zero. Sums are not normalized by explanation length.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .errors import InvalidConfig
from .model import (
    FaithfulnessConfig,
    FaithfulnessFunction,
    KnowledgeSnippet,
    KnowledgeSource,
    PathScore,
    ReasoningPath,
    Sentence,
    SentenceEvidence,
    TaskKind,
)
from .paths import is_chaining

NO_EVIDENCE = (0.0, 0.0, 0.0)


def score_sentences(sentences: Sequence[Sentence],
                    premises: Sequence[Optional[KnowledgeSnippet]],
                    gateway) -> list[SentenceEvidence]:
    """Score each sentence against its selected premise in one batch.

    A None premise is the no-evidence case and scores all zero without a
    backend call.
    """
    if len(sentences) != len(premises):
        raise ValueError("sentences and premises must align")
    live = [(i, s, p) for i, (s, p) in enumerate(zip(sentences, premises)) if p is not None]
    sims = gateway.similarity_batch([(s.text, p.text) for _, s, p in live])
    nlis = gateway.nli_batch([(p.text, s.text) for _, s, p in live])
    scored = {
        i: SentenceEvidence(s.index, p, sims[pos], nlis[pos].entailment, nlis[pos].contradiction)
        for pos, (i, s, p) in enumerate(live)
    }
    return [
        scored.get(i, SentenceEvidence(s.index, None, *NO_EVIDENCE))
        for i, s in enumerate(sentences)
    ]


def score_sentence(sentence: Sentence, premise: Optional[KnowledgeSnippet],
                   gateway) -> SentenceEvidence:
    return score_sentences([sentence], [premise], gateway)[0]


def _contribution(ev: SentenceEvidence, cfg: FaithfulnessConfig) -> float:
    m, e, c = ev.similarity, ev.entailment, ev.contradiction
    if cfg.function is FaithfulnessFunction.F1:
        return (m if m >= cfg.t_m else e) - c
    if cfg.function is FaithfulnessFunction.F2:
        return m + e
    return (e if e >= cfg.t_e else 0.0) - (c if c >= cfg.t_c else 0.0)


def _check_config(cfg: FaithfulnessConfig) -> None:
    for name, value in (("t_m", cfg.t_m), ("t_e", cfg.t_e), ("t_c", cfg.t_c)):
        if not 0.0 <= value <= 1.0:
            raise InvalidConfig(f"threshold {name} out of [0, 1]")


def path_faithfulness(evidence: Sequence[SentenceEvidence], cfg: FaithfulnessConfig) -> float:
    _check_config(cfg)
    return sum(_contribution(ev, cfg) for ev in evidence)


def fact_faithfulness(evidence: SentenceEvidence, cfg: FaithfulnessConfig) -> float:
    """Faithfulness of a single fact: the path function over one sentence."""
    return path_faithfulness([evidence], cfg)


def score_path(path: ReasoningPath, premises: Sequence[Optional[KnowledgeSnippet]],
               gateway, cfg: FaithfulnessConfig, skip_chaining: bool = False) -> PathScore:
    """Evidence and aggregate faithfulness for one path.

    With skip_chaining, sentences like "Thus, ..." keep a zero-evidence
    entry so the evidence list stays aligned with the explanation.
    """
    premises = list(premises)
    if skip_chaining:
        premises = [None if is_chaining(s.text) else p
                    for s, p in zip(path.explanation, premises)]
    evidence = score_sentences(path.explanation, premises, gateway)
    return PathScore(path, path_faithfulness(evidence, cfg), tuple(evidence))


def default_config(task: TaskKind, sources: frozenset[KnowledgeSource] | None = None,
                   ) -> FaithfulnessConfig:
    """Task defaults: F1 for commonsense and tabular, F2 for temporal, F3
    when scoring against gold evidence only."""
    if sources == frozenset({KnowledgeSource.GOLD_EVIDENCE}):
        return FaithfulnessConfig(FaithfulnessFunction.F3)
    if task is TaskKind.TEMPORAL:
        return FaithfulnessConfig(FaithfulnessFunction.F2)
    return FaithfulnessConfig(FaithfulnessFunction.F1)
