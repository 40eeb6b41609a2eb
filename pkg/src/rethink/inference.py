"""Final answer selection.

The basic route sums each candidate prediction's path faithfulness and
takes the argmax (ties: larger supporting-path count, then earliest
first-occurrence sample index). Self-consistency is the same vote with
unit scores. Best-path picks the single highest-scoring output. The two
repair variants rebuild the supporting facts of the best output, by
swapping in the most faithful same-topic fact from any sampled path
(selection) or by generating replacement facts from evidence (generation),
then run one final inference step over those facts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

from .errors import NoPaths
from .faithfulness import fact_faithfulness, path_faithfulness, score_sentence
from .gateway import CompletionRequest
from .model import (
    FaithfulnessConfig,
    KnowledgeSnippet,
    PathScore,
    Prediction,
    Query,
    ReasoningPath,
    Sentence,
    SentenceEvidence,
    Verdict,
    VerdictMode,
)
from .paths import (
    build_cot_prompt,
    is_chaining,
    kind_for,
    make_reasoning_path,
    normalize_prediction,
)
from .retrieval.pipeline import select_premise
from .text import squad_normalize


class FactOrigin(Enum):
    ORIGINAL = "original"
    SELECTED = "selected"
    GENERATED = "generated"


@dataclass(frozen=True)
class Fact:
    """One supporting fact with provenance into the scored paths; generated
    facts carry the indices of the fact they replaced."""

    text: str
    faithfulness: float
    origin: FactOrigin
    path_index: int
    sentence_index: int


@dataclass(frozen=True)
class FactSet:
    facts: Tuple[Fact, ...]

    def joined(self) -> str:
        return " ".join(f.text for f in self.facts)


@dataclass(frozen=True)
class TopicCluster:
    representative: str
    members: Tuple[Tuple[int, int], ...]


def _build_per_path(paths: Sequence[ReasoningPath], scores: Sequence[float],
                    evidence: Optional[Sequence[Sequence[SentenceEvidence]]],
                    ) -> tuple[PathScore, ...]:
    ev = evidence if evidence is not None else [()] * len(paths)
    return tuple(PathScore(p, s, tuple(e)) for p, s, e in zip(paths, scores, ev))


def vote(paths: Sequence[ReasoningPath], scores: Sequence[float],
         evidence: Optional[Sequence[Sequence[SentenceEvidence]]] = None,
         mode: VerdictMode = VerdictMode.VOTE) -> Verdict:
    """Faithfulness-weighted vote over the candidate predictions."""
    if not paths:
        raise NoPaths("vote requires at least one reasoning path")
    if len(paths) != len(scores):
        raise ValueError("paths and scores must align")
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    first_prediction: dict[str, Prediction] = {}
    for path, score in zip(paths, scores):
        key = path.prediction.normalized
        totals[key] = totals.get(key, 0.0) + score
        counts[key] = counts.get(key, 0) + 1
        if key not in first_seen:
            first_seen[key] = path.sample_index
            first_prediction[key] = path.prediction
    winner = max(totals, key=lambda k: (totals[k], counts[k], -first_seen[k]))
    return Verdict(prediction=first_prediction[winner], candidate_scores=totals,
                   per_path=_build_per_path(paths, scores, evidence), mode=mode)


def self_consistency(paths: Sequence[ReasoningPath]) -> Verdict:
    """Plain majority vote: every path counts one."""
    if not paths:
        raise NoPaths("self_consistency requires at least one reasoning path")
    return vote(paths, [1.0] * len(paths), mode=VerdictMode.SELF_CONSISTENCY)


def _best_index(paths: Sequence[ReasoningPath], scores: Sequence[float]) -> int:
    return max(range(len(paths)), key=lambda i: (scores[i], -paths[i].sample_index))


def best_path(paths: Sequence[ReasoningPath], scores: Sequence[float],
              evidence: Optional[Sequence[Sequence[SentenceEvidence]]] = None) -> Verdict:
    """The single best-supported output, without voting. Candidate scores
    hold each prediction's best single-path faithfulness."""
    if not paths:
        raise NoPaths("best_path requires at least one reasoning path")
    if len(paths) != len(scores):
        raise ValueError("paths and scores must align")
    top = _best_index(paths, scores)
    maxima: dict[str, float] = {}
    for path, score in zip(paths, scores):
        key = path.prediction.normalized
        maxima[key] = max(maxima.get(key, float("-inf")), score)
    return Verdict(prediction=paths[top].prediction, candidate_scores=maxima,
                   per_path=_build_per_path(paths, scores, evidence),
                   mode=VerdictMode.BEST_PATH)


def cluster_sentences(labeled: Sequence[tuple[tuple[int, int], str]], threshold: float,
                      gateway) -> list[TopicCluster]:
    """Single-pass greedy clustering in input order: each sentence joins the
    first cluster whose representative is at least `threshold` similar,
    otherwise opens a new cluster with itself as representative."""
    reps: list[str] = []
    members: list[list[tuple[int, int]]] = []
    for key, text in labeled:
        sims = gateway.similarity_batch([(text, rep) for rep in reps])
        placed = False
        for i, sim in enumerate(sims):
            if sim >= threshold:
                members[i].append(key)
                placed = True
                break
        if not placed:
            reps.append(text)
            members.append([key])
    return [TopicCluster(rep, tuple(m)) for rep, m in zip(reps, members)]


def fact_selection(paths: Sequence[ReasoningPath],
                   evidence: Sequence[Sequence[SentenceEvidence]],
                   cfg: FaithfulnessConfig, gateway,
                   cluster_threshold: float = 0.5) -> FactSet:
    """Variant I: rebuild the best output's supporting facts by swapping in
    the most faithful fact from the same topic cluster across all paths.

    Chaining sentences are not facts and take no part; ties keep the
    original fact, so a selected fact is never less faithful than the one
    it replaced.
    """
    if not paths:
        raise NoPaths("fact_selection requires at least one reasoning path")
    scores = [path_faithfulness(ev, cfg) for ev in evidence]
    top = _best_index(paths, scores)
    labeled = [
        ((pi, s.index), s.text)
        for pi, path in enumerate(paths)
        for s in path.explanation
        if not is_chaining(s.text)
    ]
    clusters = cluster_sentences(labeled, cluster_threshold, gateway)
    cluster_of: dict[tuple[int, int], TopicCluster] = {}
    for cluster in clusters:
        for key in cluster.members:
            cluster_of[key] = cluster
    texts = {key: text for key, text in labeled}

    facts: list[Fact] = []
    for sentence in paths[top].explanation:
        key = (top, sentence.index)
        if key not in cluster_of:
            continue
        best_key = key
        best_score = fact_faithfulness(evidence[top][sentence.index], cfg)
        for member in cluster_of[key].members:
            if member == key:
                continue
            candidate = fact_faithfulness(evidence[member[0]][member[1]], cfg)
            if candidate > best_score:
                best_key, best_score = member, candidate
        origin = FactOrigin.ORIGINAL if best_key == key else FactOrigin.SELECTED
        facts.append(Fact(texts[best_key], best_score, origin, *best_key))
    return FactSet(tuple(facts))


_ENTITY_RE = re.compile(r"[A-Z][\w.'-]*(?:\s+[A-Z][\w.'-]*)*")
_NUMBER_RE = re.compile(r"\b\d[\w-]*\b")
_ENTITY_STOP = frozenset({"the", "a", "an", "so", "thus", "therefore", "it", "its"})


def default_entities(text: str) -> list[str]:
    """Entity mentions worth asking about: capitalized word runs plus
    number tokens such as years, in order of appearance."""
    found: list[str] = []
    for m in _ENTITY_RE.finditer(text):
        run = m.group(0).rstrip(".")
        if run and run.lower() not in _ENTITY_STOP:
            found.append(run)
    found.extend(m.group(0) for m in _NUMBER_RE.finditer(text))
    out: list[str] = []
    for ent in found:
        if ent not in out:
            out.append(ent)
    return out


def fact_generation(facts: FactSet, knowledge: Sequence[Sequence[KnowledgeSnippet]],
                    gateway, cfg: FaithfulnessConfig, *,
                    entity_extractor=default_entities,
                    questions_per_entity: int = 2) -> FactSet:
    """Variant II: for each insufficiently supported fact (entailment below
    t_e), generate entity questions, keep the ones an extractive reader can
    answer from the fact itself with the target entity, answer them over
    the fact's retrieved snippets, turn the QA pairs into declarative
    sentences, and swap one in when it is strictly more faithful and not
    contradicted. Backend abstains keep the original fact.
    """
    if len(facts.facts) != len(knowledge):
        raise ValueError("facts and knowledge must align")
    out: list[Fact] = []
    for fact, candidates in zip(facts.facts, knowledge):
        sentence = Sentence(fact.text, 0)
        premise = select_premise(fact.text, candidates, gateway)
        current = score_sentence(sentence, premise, gateway)
        if current.entailment >= cfg.t_e:
            out.append(fact)
            continue
        current_score = fact_faithfulness(current, cfg)
        context = " ".join(c.text for c in candidates)
        best: tuple[str, float] | None = None
        for entity in entity_extractor(fact.text):
            for question in gateway.qgen(fact.text, entity, questions_per_entity):
                probe = gateway.answer(question, fact.text)
                if squad_normalize(probe) != squad_normalize(entity):
                    continue
                answer = gateway.answer(question, context)
                if not answer.strip():
                    continue
                generated = gateway.qa2d(question, answer)
                if not generated.strip():
                    continue
                gen_premise = select_premise(generated, candidates, gateway)
                gen_evidence = score_sentence(Sentence(generated, 0), gen_premise, gateway)
                gen_score = fact_faithfulness(gen_evidence, cfg)
                if gen_evidence.contradiction >= cfg.t_c:
                    continue
                if gen_score > current_score and (best is None or gen_score > best[1]):
                    best = (generated, gen_score)
        if best is None:
            out.append(fact)
        else:
            out.append(Fact(best[0], best[1], FactOrigin.GENERATED,
                            fact.path_index, fact.sentence_index))
    return FactSet(tuple(out))


class FinalBackend(Enum):
    QA = "qa"
    COMPLETION = "completion"


def final_inference(query: Query, facts: FactSet, gateway,
                    backend: FinalBackend = FinalBackend.QA,
                    mode: VerdictMode = VerdictMode.VARIANT_I) -> Verdict:
    """Answer the query from the supporting facts alone. The QA backend
    reads the facts as context; the completion backend re-prompts with the
    facts prepended. An abstaining backend yields an unparsed prediction."""
    context = facts.joined()
    if backend is FinalBackend.QA:
        surface = gateway.answer(query.text, context).strip()
        normalized = normalize_prediction(surface, query.task)
        prediction = Prediction(surface, normalized, kind_for(normalized, query.task),
                                unparsed=not surface)
    else:
        prompt = build_cot_prompt(query)
        if context:
            prompt = f"{context}\n\n{prompt}"
        text = gateway.complete(CompletionRequest(prompt, n=1, temperature=0.0))[0]
        prediction = make_reasoning_path(text, task=query.task).prediction
    return Verdict(prediction=prediction,
                   candidate_scores={prediction.normalized: 1.0},
                   per_path=(), mode=mode)
