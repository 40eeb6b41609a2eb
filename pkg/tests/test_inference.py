import random

import pytest

from conftest import score_running_example
from rethink.errors import NoPaths
from rethink.gateway import MockGateway
from rethink.inference import (
    FactOrigin,
    FactSet,
    FinalBackend,
    best_path,
    cluster_sentences,
    fact_generation,
    fact_selection,
    final_inference,
    self_consistency,
    vote,
)
from rethink.model import (
    Prediction,
    PredictionKind,
    Query,
    ReasoningPath,
    TaskKind,
    VerdictMode,
)


def path_for(normalized, sample_index):
    pred = Prediction(normalized, normalized, PredictionKind.FREE_FORM)
    return ReasoningPath(f"So the answer is {normalized}.", (), pred, sample_index)


def paths_for(*normals):
    return [path_for(n, i) for i, n in enumerate(normals)]


class TestVote:
    def test_weighted_sum_beats_single_high_scorer(self):
        verdict = vote(paths_for("yes", "no", "no"), [0.2, 0.5, 0.4])
        assert verdict.prediction.normalized == "no"
        assert verdict.candidate_scores == pytest.approx({"yes": 0.2, "no": 0.9})
        assert verdict.mode is VerdictMode.VOTE

    def test_singleton(self):
        verdict = vote(paths_for("maybe"), [-2.0])
        assert verdict.prediction.normalized == "maybe"

    def test_empty_raises(self):
        with pytest.raises(NoPaths):
            vote([], [])

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            vote(paths_for("a"), [1.0, 2.0])

    def test_tie_prefers_more_supporting_paths(self):
        # yes: one path with 1.0; no: two paths with 0.5 each
        verdict = vote(paths_for("yes", "no", "no"), [1.0, 0.5, 0.5])
        assert verdict.prediction.normalized == "no"

    def test_full_tie_prefers_earliest_sample(self):
        verdict = vote(paths_for("yes", "no"), [0.5, 0.5])
        assert verdict.prediction.normalized == "yes"

    def test_negative_totals_are_legal(self):
        verdict = vote(paths_for("yes", "no"), [-1.0, -2.0])
        assert verdict.prediction.normalized == "yes"
        assert verdict.candidate_scores["no"] == -2.0


class TestSelfConsistency:
    def test_majority(self):
        assert self_consistency(paths_for("yes", "no", "no")).prediction.normalized == "no"

    def test_two_way_tie_goes_to_earliest(self):
        assert self_consistency(paths_for("yes", "no")).prediction.normalized == "yes"

    def test_nine_paths(self):
        labels = ["yes"] * 5 + ["no"] * 4
        assert self_consistency(paths_for(*labels)).prediction.normalized == "yes"

    def test_empty_raises(self):
        with pytest.raises(NoPaths):
            self_consistency([])

    def test_mode_tag(self):
        assert self_consistency(paths_for("x")).mode is VerdictMode.SELF_CONSISTENCY


class TestBestPath:
    def test_picks_maximum(self):
        verdict = best_path(paths_for("yes", "no", "no"), [0.1, 0.9, 2.0])
        assert verdict.prediction.normalized == "no"
        assert verdict.mode is VerdictMode.BEST_PATH

    def test_tie_breaks_to_earliest_sample(self):
        verdict = best_path(paths_for("yes", "no"), [1.0, 1.0])
        assert verdict.prediction.normalized == "yes"

    def test_singleton(self):
        assert best_path(paths_for("only"), [0.0]).prediction.normalized == "only"

    def test_running_example_selects_r3(self, running_gateway, running_index):
        _, _, paths, scored, _ = score_running_example(running_gateway, running_index, 3)
        verdict = best_path(paths, [s.faithfulness for s in scored])
        assert verdict.prediction.normalized == "no"
        winner = max(scored, key=lambda s: s.faithfulness)
        assert winner.path.sample_index == 2


class TestClusterSentences:
    def test_same_topic_clusters_together(self, running_gateway):
        labeled = [((0, 0), "Aristotle died in 2000."),
                   ((1, 0), "Aristotle died in 322BC.")]
        clusters = cluster_sentences(labeled, 0.5, running_gateway)
        assert len(clusters) == 1
        assert clusters[0].members == ((0, 0), (1, 0))

    def test_disjoint_topics_split(self, running_gateway):
        labeled = [((0, 0), "Aristotle died in 2000."),
                   ((0, 1), "Bicycles have two wheels.")]
        clusters = cluster_sentences(labeled, 0.5, running_gateway)
        assert len(clusters) == 2

    def test_empty_input(self, running_gateway):
        assert cluster_sentences([], 0.5, running_gateway) == []

    def test_representative_is_first_member(self, running_gateway):
        labeled = [((0, 0), "Aristotle died in 2000."),
                   ((1, 0), "Aristotle died in 322BC.")]
        clusters = cluster_sentences(labeled, 0.5, running_gateway)
        assert clusters[0].representative == "Aristotle died in 2000."

    def test_deterministic_under_input_order(self, running_gateway):
        labeled = [((0, 0), "Aristotle died in 2000."),
                   ((0, 1), "The first laptop was invented in 1980."),
                   ((1, 0), "Aristotle died in 322BC."),
                   ((1, 1), "The first laptop was invented in 2000.")]
        first = cluster_sentences(labeled, 0.5, running_gateway)
        second = cluster_sentences(labeled, 0.5, running_gateway)
        assert first == second
        assert len(first) == 2


class TestFactSelection:
    def test_running_example_variant_one(self, running_gateway, running_index):
        # with only the first two sampled paths, the selected facts are the
        # first sentence of the second path and the second sentence of the first
        _, cfg, paths, scored, _ = score_running_example(running_gateway, running_index, 2)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        assert [f.text for f in facts.facts] == [
            "Aristotle died in 322BC.",
            "The first laptop was invented in 1980.",
        ]
        assert [(f.path_index, f.sentence_index) for f in facts.facts] == [(1, 0), (0, 1)]

    def test_fixpoint_keeps_originals(self, running_gateway, running_index):
        # the best path of all three is already maximal in both clusters
        _, cfg, paths, scored, _ = score_running_example(running_gateway, running_index, 3)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        assert all(f.origin is FactOrigin.ORIGINAL for f in facts.facts)
        assert [f.text for f in facts.facts] == [
            "Aristotle died in 322BC.",
            "The first laptop was invented in 1980.",
        ]

    def test_singleton_cluster_keeps_original(self, running_gateway, running_index):
        _, cfg, paths, scored, _ = score_running_example(running_gateway, running_index, 1)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        assert all(f.origin is FactOrigin.ORIGINAL for f in facts.facts)

    def test_selection_is_conservative(self, running_gateway, running_index):
        from rethink.faithfulness import fact_faithfulness
        _, cfg, paths, scored, _ = score_running_example(running_gateway, running_index, 3)
        evidence = [s.evidence for s in scored]
        facts = fact_selection(paths, evidence, cfg, running_gateway)
        top = max(range(len(scored)), key=lambda i: (scored[i].faithfulness,
                                                     -paths[i].sample_index))
        originals = [s for s in paths[top].explanation][:len(facts.facts)]
        for fact, original in zip(facts.facts, originals):
            assert fact.faithfulness >= fact_faithfulness(
                evidence[top][original.index], cfg) - 1e-12

    def test_no_paths(self, running_gateway):
        with pytest.raises(NoPaths):
            fact_selection([], [], None, running_gateway)


class TestFactGeneration:
    def test_running_example_variant_two(self, running_gateway, running_index):
        # with only the first path, the unsupported death date is regenerated
        # from the first knowledge paragraph
        _, cfg, paths, scored, candidates = score_running_example(
            running_gateway, running_index, 1)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        knowledge = [candidates[f.path_index][f.sentence_index] for f in facts.facts]
        got = fact_generation(facts, knowledge, running_gateway, cfg)
        assert [f.text for f in got.facts] == [
            "Aristotle died in 322 BC.",
            "The first laptop was invented in 1980.",
        ]
        assert got.facts[0].origin is FactOrigin.GENERATED
        assert got.facts[1].origin is FactOrigin.ORIGINAL
        assert got.facts[0].faithfulness > facts.facts[0].faithfulness

    def test_supported_facts_pass_through(self, running_gateway, running_index):
        _, cfg, paths, scored, candidates = score_running_example(
            running_gateway, running_index, 3)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        knowledge = [candidates[f.path_index][f.sentence_index] for f in facts.facts]
        got = fact_generation(facts, knowledge, running_gateway, cfg)
        assert [f.text for f in got.facts] == [f.text for f in facts.facts]

    def test_abstaining_backends_keep_original(self, running_index, running_gateway):
        # a gateway with no generation tables abstains everywhere
        _, cfg, paths, scored, candidates = score_running_example(
            running_gateway, running_index, 1)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        knowledge = [candidates[f.path_index][f.sentence_index] for f in facts.facts]
        bare = MockGateway({})
        got = fact_generation(facts, knowledge, bare, cfg)
        assert [f.text for f in got.facts] == [f.text for f in facts.facts]
        assert got.facts[0].origin is not FactOrigin.GENERATED


class TestFinalInference:
    def test_variant_answer_over_generated_facts(self, running_gateway, running_index):
        query, cfg, paths, scored, candidates = score_running_example(
            running_gateway, running_index, 1)
        facts = fact_selection(paths, [s.evidence for s in scored], cfg, running_gateway)
        knowledge = [candidates[f.path_index][f.sentence_index] for f in facts.facts]
        generated = fact_generation(facts, knowledge, running_gateway, cfg)
        verdict = final_inference(query, generated, running_gateway,
                                  mode=VerdictMode.VARIANT_II)
        assert verdict.prediction.normalized == "no"
        assert verdict.mode is VerdictMode.VARIANT_II

    def test_empty_facts_fall_back_to_question_only_answer(self):
        gateway = MockGateway({"answers": [
            {"question": "Did Aristotle use a laptop?", "context_contains": "",
             "answer": "unknown"},
        ]})
        query = Query("q", "Did Aristotle use a laptop?", TaskKind.COMMONSENSE)
        verdict = final_inference(query, FactSet(()), gateway)
        assert verdict.prediction.surface == "unknown"

    def test_gold_facts_fixture_identity(self):
        gateway = MockGateway({"answers": [
            {"question": "Did Aristotle use a laptop?",
             "context_contains": "Aristotle died in 322 BC.", "answer": "no"},
        ]})
        query = Query("q", "Did Aristotle use a laptop?", TaskKind.COMMONSENSE)
        from rethink.inference import Fact
        facts = FactSet((Fact("Aristotle died in 322 BC.", 1.0, FactOrigin.ORIGINAL, 0, 0),))
        verdict = final_inference(query, facts, gateway)
        assert verdict.prediction.normalized == "no"

    def test_abstain_yields_unparsed(self):
        query = Query("q", "Did Aristotle use a laptop?", TaskKind.COMMONSENSE)
        verdict = final_inference(query, FactSet(()), MockGateway({}))
        assert verdict.prediction.unparsed

    def test_completion_backend(self, running_gateway):
        query = Query("q", "Did Aristotle use a laptop?", TaskKind.COMMONSENSE)
        verdict = final_inference(query, FactSet(()), running_gateway,
                                  backend=FinalBackend.COMPLETION)
        # the mock returns the first canned path under greedy decoding
        assert verdict.prediction.normalized == "yes"


class TestRandomizedProperties:
    def test_vote_matches_brute_force(self):
        rng = random.Random(42)
        for _ in range(300):
            n = rng.randrange(1, 11)
            labels = [f"p{rng.randrange(4)}" for _ in range(n)]
            scores = [rng.uniform(-3, 3) for _ in range(n)]
            got = vote(paths_for(*labels), scores)
            # brute force over candidates
            candidates = sorted(set(labels))
            totals = {c: sum(s for l, s in zip(labels, scores) if l == c)
                      for c in candidates}
            counts = {c: labels.count(c) for c in candidates}
            firsts = {c: labels.index(c) for c in candidates}
            expected = max(candidates,
                           key=lambda c: (totals[c], counts[c], -firsts[c]))
            assert got.prediction.normalized == expected
            assert got.candidate_scores == pytest.approx(totals)

    def test_unit_vote_equals_self_consistency(self):
        rng = random.Random(43)
        for _ in range(300):
            labels = [f"p{rng.randrange(3)}" for _ in range(rng.randrange(1, 9))]
            paths = paths_for(*labels)
            assert (vote(paths, [1.0] * len(paths)).prediction.normalized
                    == self_consistency(paths).prediction.normalized)

    def test_vote_scale_invariance(self):
        rng = random.Random(44)
        for _ in range(100):
            labels = [f"p{rng.randrange(3)}" for _ in range(rng.randrange(1, 9))]
            scores = [rng.uniform(0.01, 3) for _ in labels]
            paths = paths_for(*labels)
            base = vote(paths, scores).prediction.normalized
            for _ in range(5):
                factor = rng.uniform(0.001, 100)
                scaled = vote(paths, [s * factor for s in scores]).prediction.normalized
                assert scaled == base
