"""Render report figures to files alongside their CSV data."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_timeline(rows: list[dict], out_path: str | Path, bin_width: int = 2) -> Path:
    """Stacked area chart of document share by continent per time bin."""
    out_path = Path(out_path)
    bins = sorted({r["bin"] for r in rows})
    continents = sorted({r["continent"] for r in rows})
    share = {(r["bin"], r["continent"]): r["share"] for r in rows}
    series = [[share.get((b, c), 0.0) for b in bins] for c in continents]

    fig, ax = plt.subplots(figsize=(12, 5))
    ax.stackplot(bins, series, labels=continents, alpha=0.85)
    ax.set_xlabel("year")
    ax.set_ylabel(f"share of documents per {bin_width}-year period")
    ax.set_ylim(0, 1)
    ax.legend(loc="upper left", fontsize="small", ncol=2)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_linkage_curve(rows: list[dict], out_path: str | Path) -> Path:
    """Linked ratio by mention-rank bucket, most-mentioned first."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot([r["bucket"] for r in rows], [r["linked_ratio"] for r in rows], marker="o")
    ax.set_xlabel("mention-rank bucket (0 = most mentioned)")
    ax.set_ylabel("linked ratio")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_score_table(rows: list[tuple[str, str, float]], out_path: str | Path,
                     top: int = 10, title: str = "PageRank importance") -> Path:
    """Horizontal bar chart of the top-scoring nodes."""
    out_path = Path(out_path)
    top_rows = rows[:top][::-1]
    fig, ax = plt.subplots(figsize=(9, 0.5 * len(top_rows) + 1.5))
    ax.barh([r[1][:60] for r in top_rows], [r[2] for r in top_rows])
    ax.set_xlabel("score (mean = 1)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
