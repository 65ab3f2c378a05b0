"""PNG figures for the CLI reports (matplotlib, headless)."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def rule_bars(rows: list[dict], rules: list[str], path: Path) -> Path:
    """Stacked bars: share of each root rule per middle module, with the class count on top."""
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(rows) + 2), 4.5))
    labels = [r["middle"] for r in rows]
    x = range(len(rows))
    base = [0] * len(rows)
    cmap = plt.get_cmap("tab10")
    for k, rule in enumerate(rules):
        h = [r["rules"].get(rule, 0) / max(r["sequences"], 1) for r in rows]
        ax.bar(x, h, bottom=base, label=rule, color=cmap(k % 10))
        base = [a + b for a, b in zip(base, h)]
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=70, ha="right", fontsize=7)
    for k, r in enumerate(rows):
        ax.text(k, 1.01, str(r["sequences"]), ha="center", va="bottom", fontsize=6)
    ax.set_ylim(0, 1.12)
    ax.set_ylabel("share of isomorphism classes")
    ax.set_title("root rule per middle module")
    ax.legend(fontsize=7, loc="upper left", bbox_to_anchor=(1.01, 1.0))
    return _save(fig, path)


def depth_histogram(depths: list[int], path: Path, title: str = "certificate depth") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    c = Counter(depths)
    ks = sorted(c)
    ax.bar(ks, [c[k] for k in ks], color="tab:blue")
    ax.set_xlabel("depth")
    ax.set_ylabel("count")
    ax.set_title(title)
    return _save(fig, path)


def order_histogram(orders: list[int], path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    c = Counter(orders)
    ks = sorted(c)
    ax.bar([str(k) for k in ks], [c[k] for k in ks], color="tab:green")
    ax.set_xlabel("order of the middle object")
    ax.set_ylabel("count")
    ax.set_title(title)
    return _save(fig, path)
