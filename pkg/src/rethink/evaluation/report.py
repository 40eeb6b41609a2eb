"""Report output: the summary document and the figures rendered next to
the delimited records."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def write_summary(out_dir: Path, summary: dict) -> Path:
    path = out_dir / "summary.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return path


def render_figures(records: list[dict], summary: dict, out_dir: Path) -> list[Path]:
    """A metric overview panel, plus a path-faithfulness histogram when the
    run scored any paths."""
    written: list[Path] = []

    fig, (ax_metric, ax_examples) = plt.subplots(1, 2, figsize=(9, 3.5))
    value = summary.get("value") or 0.0
    ax_metric.bar([summary.get("metric", "metric")], [value], color="#4878a8", width=0.5)
    ax_metric.set_ylim(0.0, 1.0)
    ax_metric.set_title(f"{summary.get('mode', '')} on {summary.get('task', '')}")
    ax_metric.set_ylabel(summary.get("metric", "metric"))

    flags = [1 if r.get("correct") else 0 for r in records]
    if flags:
        ax_examples.imshow([flags], aspect="auto", cmap="RdYlGn", vmin=0, vmax=1)
        ax_examples.set_yticks([])
        ax_examples.set_xlabel("example")
        ax_examples.set_title("per-example correctness")
    else:
        ax_examples.axis("off")
    fig.tight_layout()
    overview = out_dir / "summary.png"
    fig.savefig(overview, dpi=150)
    plt.close(fig)
    written.append(overview)

    scores = [p["faithfulness"] for r in records for p in r.get("paths", ())]
    if scores:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(scores, bins=min(20, max(5, len(scores))), color="#4878a8",
                edgecolor="white")
        ax.set_xlabel("path faithfulness")
        ax.set_ylabel("paths")
        ax.set_title("faithfulness distribution")
        fig.tight_layout()
        hist = out_dir / "faithfulness.png"
        fig.savefig(hist, dpi=150)
        plt.close(fig)
        written.append(hist)
    return written
