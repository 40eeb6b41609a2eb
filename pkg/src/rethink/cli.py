"""Command-line surface.

    rethink index CORPUS OUT          build and persist a BM25 snapshot
    rethink run DATASET [options]     evaluate a dataset under one mode
    rethink explain REPORT EXAMPLE    print the audit trace for one example

Metrics go to stdout, diagnostics to stderr. Exit codes: 0 on a completed
run, 2 on a partial run after backend failures, 1 on configuration or
input errors.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import config as config_mod
from .errors import FormatError, IngestError, InvalidConfig
from .evaluation.datasets import load_infotabs, load_strategyqa, load_tempquestions
from .evaluation.runner import KNOWLEDGE_MODES, read_records, run_experiment
from .gateway import BackendConfig, make_gateway
from .model import KnowledgeSource, TaskKind
from .retrieval.bm25 import build_index, load_index
from .retrieval.pipeline import RetrievalConfig, Retriever
from .retrieval.triples import GazetteerLinker, HttpLinker, TemporalTripleStore, WordRelationStore


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Retrieval-checked chain-of-thought reasoning."""


@main.command("index")
@click.argument("corpus", type=click.Path())
@click.argument("out", type=click.Path())
@click.option("--stem/--no-stem", default=False, help="Porter-stem tokens.")
def cmd_index(corpus, out, stem):
    """Build a BM25 index snapshot from a newline-delimited JSON corpus."""
    if not Path(corpus).exists():
        _fail(f"corpus file not found: {corpus}")
    try:
        index = build_index(corpus, stem=stem)
    except IngestError as exc:
        _fail(str(exc))
    if len(index) == 0:
        click.echo(f"warning: {corpus} holds no paragraphs; writing an empty index", err=True)
    index.save(out)
    click.echo(f"indexed {len(index)} paragraphs -> {out}")


def _load_dataset(dataset: str, task: TaskKind, split: str, split_seed):
    if task is TaskKind.COMMONSENSE:
        split_arg = None if split == "all" else split
        return load_strategyqa(dataset, split=split_arg, split_seed=split_seed)
    if task is TaskKind.TEMPORAL:
        return load_tempquestions(dataset)
    return load_infotabs(dataset)


def _build_retriever(resolved: dict, sources: frozenset[KnowledgeSource]) -> Retriever:
    section = resolved["retrieval"]
    retrieval_cfg = RetrievalConfig(
        granularity=config_mod.parse_granularity(section["granularity"]),
        sources=sources,
        top_k=int(section["top_k"]),
    )
    index = None
    if KnowledgeSource.BM25_CORPUS in sources:
        if section.get("index"):
            index = load_index(section["index"])
        elif section.get("corpus"):
            index = build_index(section["corpus"], stem=bool(section["stem"]))
        else:
            raise InvalidConfig("corpus source enabled: set retrieval.corpus or retrieval.index")
    temporal_store = None
    linker = None
    if KnowledgeSource.TEMPORAL_TRIPLES in sources:
        if not section.get("temporal_triples"):
            raise InvalidConfig("temporal source enabled: set retrieval.temporal_triples")
        temporal_store = TemporalTripleStore.from_file(section["temporal_triples"])
        if section.get("linker_endpoint"):
            linker = HttpLinker(section["linker_endpoint"])
        else:
            linker = GazetteerLinker(temporal_store)
    relation_store = None
    if KnowledgeSource.WORD_RELATIONS in sources:
        if not section.get("word_relations"):
            raise InvalidConfig("word-relation source enabled: set retrieval.word_relations")
        relation_store = WordRelationStore.from_file(section["word_relations"])
    return Retriever(retrieval_cfg, index=index, temporal_store=temporal_store,
                     relation_store=relation_store, linker=linker)


@main.command("run")
@click.argument("dataset", type=click.Path())
@click.option("--task", type=click.Choice([t.value for t in TaskKind]), default=None)
@click.option("--mode", default=None,
              help="zero-shot, few-shot, cot, self-consistency, rr, rr-best, "
                   "variant-i, or variant-ii.")
@click.option("--n", type=int, default=None, help="Sampled paths per query.")
@click.option("--temperature", type=float, default=None)
@click.option("--faithfulness", type=click.Choice(["f1", "f2", "f3"]), default=None)
@click.option("--retrieval", "retrieval_granularity",
              type=click.Choice(["decomposition", "query"]), default=None)
@click.option("--sources", default=None,
              help="Comma list of corpus, temporal, word-relations, table, gold.")
@click.option("--config", "config_file", type=click.Path(), default=None)
@click.option("--out", default="report", show_default=True,
              help="Directory for records.jsonl, summary.json, and figures.")
@click.option("--split", type=click.Choice(["all", "dev", "train"]), default=None)
@click.option("--split-seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--resume", is_flag=True, help="Keep existing records and continue.")
@click.option("--figures/--no-figures", default=None)
def cmd_run(dataset, task, mode, n, temperature, faithfulness, retrieval_granularity,
            sources, config_file, out, split, split_seed, workers, resume, figures):
    """Evaluate DATASET and write a run report."""
    overrides = {
        ("run", "task"): task,
        ("run", "mode"): mode,
        ("run", "faithfulness"): faithfulness,
        ("retrieval", "granularity"): retrieval_granularity,
        ("retrieval", "sources"): sources.split(",") if sources else None,
        ("run", "split"): split,
        ("run", "split_seed"): split_seed,
        ("run", "workers"): workers,
        ("run", "figures"): figures,
    }
    try:
        if config_file and not Path(config_file).exists():
            raise InvalidConfig(f"config file not found: {config_file}")
        resolved = config_mod.resolve_config(config_file, overrides)
        runner_cfg = config_mod.build_runner_config(resolved, explicit_n=n,
                                                    explicit_temperature=temperature)
        task_kind = config_mod.parse_task(resolved["run"]["task"])
        source_set = config_mod.parse_sources(resolved["retrieval"]["sources"])
        if not Path(dataset).exists():
            raise InvalidConfig(f"dataset not found: {dataset}")
        gateway_cfg = BackendConfig(
            endpoint=str(resolved["gateway"]["endpoint"]),
            timeout=float(resolved["gateway"]["timeout"]),
            retries=int(resolved["gateway"]["retries"]),
            mock_mode=bool(resolved["gateway"]["mock_mode"]),
            mock_table=resolved["gateway"]["mock_table"],
        )
        examples = _load_dataset(dataset, task_kind,
                                 str(resolved["run"]["split"]),
                                 resolved["run"]["split_seed"])
        if not examples:
            raise InvalidConfig(f"dataset {dataset} yielded no examples")
        retriever = None
        if runner_cfg.mode in KNOWLEDGE_MODES:
            retriever = _build_retriever(resolved, source_set)
    except (InvalidConfig, FormatError, IngestError) as exc:
        _fail(str(exc))

    gateway = make_gateway(gateway_cfg)
    report = run_experiment(examples, runner_cfg, gateway, retriever,
                            out_dir=out, resume=resume,
                            figures=bool(resolved["run"]["figures"]))
    if report.metric_value is not None:
        click.echo(f"{report.metric_name} {report.metric_value:.3f}")
    if not report.completed:
        click.echo(f"warning: run aborted after backend failures; "
                   f"{len(report.records)}/{report.total} examples evaluated", err=True)
        sys.exit(2)


def _format_premise(sentence: dict) -> str:
    premise = sentence.get("premise")
    if not premise:
        return "premise: (none)"
    label = premise["source"]
    if premise.get("doc_id"):
        label += f" {premise['doc_id']}"
    return f"premise[{label}]: {premise['text']}"


@main.command("explain")
@click.argument("report", type=click.Path())
@click.argument("example_id")
def cmd_explain(report, example_id):
    """Print the per-sentence evidence trace for one example."""
    path = Path(report)
    records_path = path / "records.jsonl" if path.is_dir() else path
    if not records_path.exists():
        _fail(f"report not found: {records_path}")
    records, _ = read_records(records_path)
    by_id = {rec.get("id"): rec for rec in records}
    if example_id not in by_id:
        available = ", ".join(str(k) for k in by_id) or "(none)"
        _fail(f"example {example_id!r} not in report; available ids: {available}")
    rec = by_id[example_id]

    prediction = rec["prediction"]
    status = "correct" if rec["correct"] else "wrong"
    click.echo(f"example {rec['id']}: {rec['question']}")
    click.echo(f"mode: {rec['mode']} | gold: {', '.join(rec['gold'])} | "
               f"predicted: {prediction['normalized'] or '(unparsed)'} ({status})")
    for path_rec in rec.get("paths", ()):
        pred = path_rec["prediction"]
        label = pred["normalized"] or "(unparsed)"
        click.echo(f"\npath {path_rec['sample_index']} -> {label}"
                   f"   faithfulness {path_rec['faithfulness']:+.4f}")
        if pred["unparsed"]:
            click.echo("  [unparsed completion; contributes its score to no candidate]")
        for sentence in path_rec.get("sentences", ()):
            tag = " [chaining]" if sentence.get("chaining") else ""
            click.echo(f"  s{sentence['index']}{tag}: {sentence['text']}")
            click.echo(f"      {_format_premise(sentence)}")
            click.echo(f"      M={sentence['similarity']:.4f} "
                       f"E={sentence['entailment']:.4f} C={sentence['contradiction']:.4f}")
    if rec.get("facts"):
        click.echo("\nsupporting facts:")
        for fact in rec["facts"]:
            click.echo(f"  [{fact['origin']}] {fact['text']} "
                       f"(faithfulness {fact['faithfulness']:+.4f})")
    click.echo("\nvote totals:")
    totals = sorted(rec["candidate_scores"].items(), key=lambda kv: -kv[1])
    for candidate, total in totals:
        marker = "  <- verdict" if candidate == prediction["normalized"] else ""
        click.echo(f"  {candidate or '(unparsed)'!s:<12} {total:+.4f}{marker}")


if __name__ == "__main__":
    main()
