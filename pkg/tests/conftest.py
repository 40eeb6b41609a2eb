from pathlib import Path

import pytest

from rethink.gateway import MockGateway
from rethink.retrieval.bm25 import build_index

FIXTURES = Path(__file__).parent / "fixtures"

K1_TEXT = ("Aristotle (384–322 BC) was a Greek philosopher and polymath "
           "during the Classical period in Ancient Greece.")
K2_TEXT = "The Epson HX-20, the first laptop computer, was invented in 1980."

R1 = ("Aristotle died in 2000. The first laptop was invented in 1980. "
      "Thus, Aristotle used a laptop. So the answer is yes.")
R2 = ("Aristotle died in 322BC. The first laptop was invented in 2000. "
      "Thus, Aristotle did not use a laptop. So the answer is no.")
R3 = ("Aristotle died in 322BC. The first laptop was invented in 1980. "
      "Thus, Aristotle did not use a laptop. So the answer is no.")


@pytest.fixture(scope="session")
def running_gateway():
    return MockGateway.from_file(FIXTURES / "running_example" / "mock_table.json")


@pytest.fixture(scope="session")
def running_index():
    return build_index(FIXTURES / "running_example" / "corpus.jsonl")


def score_running_example(gateway, index, n):
    """Sample n canned paths for the running example and score them against
    the two-paragraph corpus with the default commonsense config."""
    from rethink.faithfulness import default_config, score_path
    from rethink.model import Query, TaskKind
    from rethink.paths import sample_paths
    from rethink.retrieval.pipeline import RetrievalConfig, Retriever, select_premise

    query = Query("aristotle-laptop", "Did Aristotle use a laptop?", TaskKind.COMMONSENSE)
    retriever = Retriever(RetrievalConfig(), index=index)
    cfg = default_config(query.task)
    paths = sample_paths(query, gateway, n=n, temperature=0.7)
    scored, per_path_candidates = [], []
    for path in paths:
        candidates = retriever.retrieve_for_path(path, query)
        premises = [select_premise(s.text, cands, gateway)
                    for s, cands in zip(path.explanation, candidates)]
        scored.append(score_path(path, premises, gateway, cfg))
        per_path_candidates.append(candidates)
    return query, cfg, paths, scored, per_path_candidates


# One visible pass/fail line per acceptance criterion at the end of the run.
_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in str(report.nodeid):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.outcome == "passed" else "FAIL"
        _acceptance_results[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results.items():
        terminalreporter.write_line(f"{outcome}  {name}")
