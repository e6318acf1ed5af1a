"""Report figures rendered headlessly next to the delimited tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless; must precede pyplot import

import matplotlib.pyplot as plt

from .reporting import (
    COLUMN_TITLES,
    KIND_TITLES,
    TABLE_COLUMNS,
    TABLE_KINDS,
    AccuracyTable,
    BehaviorTable,
)

# Pinned so repeated runs emit byte-identical PNGs.
_METADATA = {"Software": "digesteval"}
_DPI = 110

_GRID = [(kind, column) for kind in TABLE_KINDS for column in TABLE_COLUMNS]
_GRID_LABELS = [f"{KIND_TITLES[k]}\n{COLUMN_TITLES[c]}" for k, c in _GRID]


def _grouped_bars(ax, groups: list[str], series: dict[str, list[float | None]]):
    width = 0.8 / max(len(series), 1)
    for i, (label, values) in enumerate(series.items()):
        xs = [g + i * width for g in range(len(groups))]
        heights = [v if v is not None else 0.0 for v in values]
        ax.bar(xs, heights, width=width, label=label)
    ax.set_xticks([g + 0.4 - width / 2 for g in range(len(groups))])
    ax.set_xticklabels(groups, fontsize=8)
    ax.legend(fontsize=7)


def save_accuracy_figure(table: AccuracyTable, path: str | Path) -> Path:
    """Grouped bars: one group per kind x column cell, one bar per investor."""
    fig, ax = plt.subplots(figsize=(10, 4.5))
    series = {
        investor: [table.cells[(investor, k, c)].percent for k, c in _GRID]
        for investor in table.investors
    }
    _grouped_bars(ax, _GRID_LABELS, series)
    ax.set_ylabel("decision accuracy (%)")
    ax.set_title("Decision accuracy by digest condition")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=_DPI, metadata=_METADATA)
    plt.close(fig)
    return out


def save_transactions_figure(table: BehaviorTable, path: str | Path) -> Path:
    """Grouped bars of mean buys/sells per decision opportunity."""
    fig, ax = plt.subplots(figsize=(10, 4.5))
    series = {
        f"{cls} {side}": [table.means[(cls, side, k, c)] for k, c in _GRID]
        for cls in table.classes
        for side in ("buy", "sell")
    }
    _grouped_bars(ax, _GRID_LABELS, series)
    ax.set_ylabel("mean transactions per decision")
    ax.set_title("Average number of transactions")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=_DPI, metadata=_METADATA)
    plt.close(fig)
    return out
