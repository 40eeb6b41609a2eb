"""Layered configuration: CLI flag > RR_* environment variable > config
file > built-in default, resolved per field.

The config file is one YAML document with sections mirroring the module
layout (gateway, retrieval, run). Environment overrides are named
RR_<SECTION>_<FIELD>, for example RR_RUN_TEMPERATURE or
RR_GATEWAY_MOCK_MODE. The fully resolved mapping is embedded in every run
report.
"""

from __future__ import annotations

import os
from typing import Any, Mapping, Optional

import yaml

from .errors import InvalidConfig
from .inference import FinalBackend
from .model import FaithfulnessConfig, FaithfulnessFunction, KnowledgeSource, TaskKind
from .retrieval.pipeline import Granularity
from .evaluation.runner import GREEDY_MODES, RunMode, RunnerConfig, parse_mode

ENV_PREFIX = "RR"

DEFAULTS: dict[str, dict[str, Any]] = {
    "gateway": {
        "endpoint": "http://localhost:8080",
        "timeout": 30.0,
        "retries": 2,
        "mock_mode": False,
        "mock_table": None,
    },
    "retrieval": {
        "corpus": None,
        "index": None,
        "temporal_triples": None,
        "word_relations": None,
        "linker_endpoint": None,
        "granularity": "decomposition",
        "sources": ["corpus"],
        "top_k": 10,
        "stem": False,
    },
    "run": {
        "task": None,
        "mode": None,
        "n": None,
        "temperature": None,
        "max_tokens": 256,
        "faithfulness": None,
        "t_m": 0.5,
        "t_e": 0.6,
        "t_c": 0.99,
        "cluster_threshold": 0.5,
        "skip_chaining_sentences": False,
        "split": "all",
        "split_seed": None,
        "workers": None,
        "final_backend": "qa",
        "questions_per_entity": 2,
        "figures": True,
    },
}

# declared types for fields whose default is None
_FIELD_TYPES: dict[tuple[str, str], type] = {
    ("gateway", "mock_table"): str,
    ("retrieval", "corpus"): str,
    ("retrieval", "index"): str,
    ("retrieval", "temporal_triples"): str,
    ("retrieval", "word_relations"): str,
    ("retrieval", "linker_endpoint"): str,
    ("run", "task"): str,
    ("run", "mode"): str,
    ("run", "n"): int,
    ("run", "temperature"): float,
    ("run", "workers"): int,
    ("run", "split_seed"): int,
}

_SOURCE_NAMES = {
    "corpus": KnowledgeSource.BM25_CORPUS,
    "bm25": KnowledgeSource.BM25_CORPUS,
    "temporal": KnowledgeSource.TEMPORAL_TRIPLES,
    "word-relations": KnowledgeSource.WORD_RELATIONS,
    "word_relations": KnowledgeSource.WORD_RELATIONS,
    "table": KnowledgeSource.TABLE_LINEARIZATION,
    "gold": KnowledgeSource.GOLD_EVIDENCE,
}

_TRUE_STRINGS = frozenset({"1", "true", "yes", "on"})
_FALSE_STRINGS = frozenset({"0", "false", "no", "off"})


def _field_type(section: str, key: str) -> type:
    default = DEFAULTS[section][key]
    if default is not None:
        return type(default)
    return _FIELD_TYPES.get((section, key), str)


def _coerce(section: str, key: str, raw: str) -> Any:
    target = _field_type(section, key)
    if target is bool:
        lowered = raw.strip().lower()
        if lowered in _TRUE_STRINGS:
            return True
        if lowered in _FALSE_STRINGS:
            return False
        raise InvalidConfig(f"{section}.{key}: cannot read boolean from {raw!r}")
    if target is int:
        try:
            return int(raw)
        except ValueError as exc:
            raise InvalidConfig(f"{section}.{key}: cannot read integer from {raw!r}") from exc
    if target is float:
        try:
            return float(raw)
        except ValueError as exc:
            raise InvalidConfig(f"{section}.{key}: cannot read number from {raw!r}") from exc
    if target is list:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"{path}: invalid config file ({exc})") from exc
    if not isinstance(data, Mapping):
        raise InvalidConfig(f"{path}: config file must hold a mapping of sections")
    return dict(data)


def resolve_config(config_file: Optional[str] = None,
                   overrides: Optional[Mapping[tuple[str, str], Any]] = None,
                   env: Optional[Mapping[str, str]] = None) -> dict:
    """Merge defaults, file, environment, and explicit flag overrides into
    one plain dict of sections."""
    env = os.environ if env is None else env
    overrides = overrides or {}
    file_data: Mapping = load_config_file(config_file) if config_file else {}
    for section in file_data:
        if section not in DEFAULTS:
            raise InvalidConfig(f"unknown config section {section!r}")

    resolved: dict[str, dict[str, Any]] = {}
    for section, fields in DEFAULTS.items():
        resolved[section] = {}
        file_section = file_data.get(section, {}) or {}
        if not isinstance(file_section, Mapping):
            raise InvalidConfig(f"config section {section!r} must be a mapping")
        for key in file_section:
            if key not in fields:
                raise InvalidConfig(f"unknown config field {section}.{key}")
        for key, default in fields.items():
            value = default
            if key in file_section:
                value = file_section[key]
            env_name = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if env_name in env:
                value = _coerce(section, key, env[env_name])
            if (section, key) in overrides and overrides[(section, key)] is not None:
                value = overrides[(section, key)]
            resolved[section][key] = value
    return resolved


def parse_task(name: str) -> TaskKind:
    for task in TaskKind:
        if task.value == name.strip().lower():
            return task
    raise InvalidConfig(f"unknown task {name!r}")


def parse_sources(names) -> frozenset[KnowledgeSource]:
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    out = set()
    for name in names:
        key = str(name).strip().lower()
        if key not in _SOURCE_NAMES:
            raise InvalidConfig(f"unknown knowledge source {name!r} "
                                f"(expected one of {sorted(set(_SOURCE_NAMES))})")
        out.add(_SOURCE_NAMES[key])
    if not out:
        raise InvalidConfig("at least one knowledge source is required")
    return frozenset(out)


def parse_granularity(name: str) -> Granularity:
    key = str(name).strip().lower()
    if key in ("decomposition", "decomposition-based"):
        return Granularity.DECOMPOSITION
    if key in ("query", "query-based"):
        return Granularity.QUERY_BASED
    raise InvalidConfig(f"unknown retrieval granularity {name!r}")


def default_n(mode: RunMode, task: TaskKind) -> int:
    if mode in GREEDY_MODES:
        return 1
    return 9 if task is TaskKind.COMMONSENSE else 10


def build_runner_config(resolved: dict, explicit_n: Optional[int] = None,
                        explicit_temperature: Optional[float] = None) -> RunnerConfig:
    """Turn a resolved config mapping into a RunnerConfig, applying the
    mode-dependent sampling defaults and rejecting contradictions."""
    run = resolved["run"]
    if not run.get("mode"):
        raise InvalidConfig("run.mode is required")
    if not run.get("task"):
        raise InvalidConfig("run.task is required")
    mode = parse_mode(str(run["mode"]))
    task = parse_task(str(run["task"]))

    n = run.get("n") if explicit_n is None else explicit_n
    temperature = run.get("temperature") if explicit_temperature is None else explicit_temperature
    if mode in GREEDY_MODES:
        if n not in (None, 1):
            raise InvalidConfig(f"mode {mode.value} decodes greedily; n={n} conflicts")
        if temperature not in (None, 0, 0.0):
            raise InvalidConfig(f"mode {mode.value} requires temperature 0")
        n, temperature = 1, 0.0
    else:
        n = default_n(mode, task) if n is None else int(n)
        temperature = 0.7 if temperature is None else float(temperature)

    faithfulness = None
    if run.get("faithfulness"):
        name = str(run["faithfulness"]).strip().lower()
        functions = {f.value: f for f in FaithfulnessFunction}
        if name not in functions:
            raise InvalidConfig(f"unknown faithfulness function {name!r}")
        faithfulness = FaithfulnessConfig(functions[name], run["t_m"], run["t_e"], run["t_c"])

    backend_name = str(run.get("final_backend", "qa")).strip().lower()
    backends = {b.value: b for b in FinalBackend}
    if backend_name not in backends:
        raise InvalidConfig(f"unknown final backend {backend_name!r}")

    workers = run.get("workers")
    if workers is None:
        workers = min(8, os.cpu_count() or 1)

    snapshot = {section: dict(fields) for section, fields in resolved.items()}
    snapshot["run"]["mode"] = mode.value
    snapshot["run"]["task"] = task.value
    snapshot["run"]["n"] = n
    snapshot["run"]["temperature"] = temperature
    snapshot["run"]["workers"] = int(workers)

    return RunnerConfig(
        mode=mode,
        n=n,
        temperature=temperature,
        max_tokens=int(run["max_tokens"]),
        faithfulness=faithfulness,
        cluster_threshold=float(run["cluster_threshold"]),
        skip_chaining_sentences=bool(run["skip_chaining_sentences"]),
        final_backend=backends[backend_name],
        questions_per_entity=int(run["questions_per_entity"]),
        workers=int(workers),
        config_snapshot=snapshot,
    )
