"""Tables and leaderboard built from session scores and decision logs.

table1: per-investor decision accuracy (%) across kind x condition cells,
best cell per investor per kind bolded. table2: average buy/sell counts per
decision opportunity for investor classes. Leaderboard ranks human
annotators and attaches the bonus flags.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .agents import DecisionSet
from .digests import KIND_CLOSING, KIND_MORNING, Digest
from .errors import DanglingDigestReferenceError
from .scoring import ScoredDecision, SessionScore
from .selection import PIPELINE_INSIGHT, PIPELINE_JOURNALIST, PIPELINE_PERFORMANCE

logger = logging.getLogger(__name__)

TABLE_KINDS = (KIND_MORNING, KIND_CLOSING)
TABLE_COLUMNS = (PIPELINE_JOURNALIST, PIPELINE_PERFORMANCE, PIPELINE_INSIGHT)

KIND_TITLES = {KIND_MORNING: "Morning", KIND_CLOSING: "Closing"}
COLUMN_TITLES = {
    PIPELINE_JOURNALIST: "Journalist",
    PIPELINE_PERFORMANCE: "Performance-Based",
    PIPELINE_INSIGHT: "Professional-Insight",
}

CLASS_LLM = "llm"
CLASS_HUMAN = "human"

BONUS_BEAT_LLM_USD = 65
BONUS_RANK1_USD = 100
BONUS_RANK2_USD = 35

ABSENT_CELL = "—"  # em dash in rendered tables only

_BOLD_RE = re.compile(r"^\*\*(.+)\*\*$")


def condition_column(pipeline: str) -> str:
    """Collapse a digest's provenance to its table column."""
    if pipeline not in TABLE_COLUMNS:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    return pipeline


@dataclass(frozen=True)
class AccuracyCell:
    percent: float | None  # rounded to 2 decimals
    best: bool = False

    def render(self) -> str:
        if self.percent is None:
            return ABSENT_CELL
        text = f"{self.percent:.2f}"
        return f"**{text}**" if self.best else text


@dataclass
class AccuracyTable:
    investors: tuple[str, ...]
    # (investor, kind, column) -> cell; every grid position present
    cells: dict[tuple[str, str, str], AccuracyCell] = field(default_factory=dict)


def accuracy_table(scores: list[SessionScore], investor_order: list[str] | None = None) -> AccuracyTable:
    """Pool scores into the investor x (kind x column) accuracy grid.

    Scores from different generator backends that share a pipeline fall into
    the same column and are pooled (micro) before the percentage is taken.
    """
    if not scores:
        raise ValueError("need at least one session score")
    pooled: dict[tuple[str, str, str], dict[str, int]] = {}
    seen: list[str] = []
    for s in scores:
        if s.investor_id not in seen:
            seen.append(s.investor_id)
        key = (s.investor_id, s.kind, condition_column(s.pipeline))
        tally = pooled.setdefault(key, {"n_correct": 0, "n_scored": 0})
        tally["n_correct"] += s.n_correct
        tally["n_scored"] += s.n_scored

    investors = tuple(investor_order) if investor_order is not None else tuple(sorted(seen))
    cells: dict[tuple[str, str, str], AccuracyCell] = {}
    for investor in investors:
        for kind in TABLE_KINDS:
            percents: dict[str, float | None] = {}
            for column in TABLE_COLUMNS:
                tally = pooled.get((investor, kind, column))
                if tally is None or tally["n_scored"] <= 0:
                    percents[column] = None
                else:
                    percents[column] = round(100.0 * tally["n_correct"] / tally["n_scored"], 2)
            present = [p for p in percents.values() if p is not None]
            best = max(present) if present else None
            for column in TABLE_COLUMNS:
                p = percents[column]
                cells[(investor, kind, column)] = AccuracyCell(
                    percent=p, best=(p is not None and p == best)
                )
    return AccuracyTable(investors=investors, cells=cells)


def macro_daily_accuracy_table(
    rows: list[ScoredDecision], investor_order: list[str] | None = None
) -> AccuracyTable:
    """Per-day accuracy averaged over days, instead of pooling decisions."""
    by_day: dict[tuple[str, str, str], dict[object, list[bool]]] = {}
    seen: list[str] = []
    for row in rows:
        if row.investor_id not in seen:
            seen.append(row.investor_id)
        if row.correct is None:
            continue
        key = (row.investor_id, row.kind, condition_column(row.pipeline))
        by_day.setdefault(key, {}).setdefault(row.date, []).append(row.correct)

    investors = tuple(investor_order) if investor_order is not None else tuple(sorted(seen))
    cells: dict[tuple[str, str, str], AccuracyCell] = {}
    for investor in investors:
        for kind in TABLE_KINDS:
            percents: dict[str, float | None] = {}
            for column in TABLE_COLUMNS:
                days = by_day.get((investor, kind, column))
                if not days:
                    percents[column] = None
                else:
                    daily = [sum(flags) / len(flags) for flags in days.values()]
                    percents[column] = round(100.0 * sum(daily) / len(daily), 2)
            present = [p for p in percents.values() if p is not None]
            best = max(present) if present else None
            for column in TABLE_COLUMNS:
                p = percents[column]
                cells[(investor, kind, column)] = AccuracyCell(
                    percent=p, best=(p is not None and p == best)
                )
    return AccuracyTable(investors=investors, cells=cells)


def _header_rows(first_columns: list[str]) -> tuple[str, str]:
    titles = first_columns + [
        f"{KIND_TITLES[kind]}: {COLUMN_TITLES[column]}"
        for kind in TABLE_KINDS
        for column in TABLE_COLUMNS
    ]
    header = "| " + " | ".join(titles) + " |"
    rule = "|" + "|".join(" --- " for _ in titles) + "|"
    return header, rule


def render_accuracy_table(table: AccuracyTable) -> str:
    header, rule = _header_rows(["Investor"])
    lines = ["# Decision accuracy (%)", "", header, rule]
    for investor in table.investors:
        cells = [
            table.cells[(investor, kind, column)].render()
            for kind in TABLE_KINDS
            for column in TABLE_COLUMNS
        ]
        lines.append("| " + " | ".join([investor] + cells) + " |")
    return "\n".join(lines) + "\n"


def parse_accuracy_table(text: str) -> AccuracyTable:
    """Inverse of render_accuracy_table at 2-decimal precision."""
    rows = [line for line in text.splitlines() if line.startswith("|")]
    if len(rows) < 2:
        raise ValueError("not a rendered accuracy table")
    investors: list[str] = []
    cells: dict[tuple[str, str, str], AccuracyCell] = {}
    grid = [(kind, column) for kind in TABLE_KINDS for column in TABLE_COLUMNS]
    for line in rows[2:]:
        parts = [p.strip() for p in line.strip().strip("|").split("|")]
        investor, values = parts[0], parts[1:]
        if len(values) != len(grid):
            raise ValueError(f"row for {investor!r} has {len(values)} cells, wanted {len(grid)}")
        investors.append(investor)
        for (kind, column), raw in zip(grid, values):
            best = bool(_BOLD_RE.match(raw))
            raw_value = _BOLD_RE.sub(r"\1", raw)
            percent = None if raw_value == ABSENT_CELL else float(raw_value)
            cells[(investor, kind, column)] = AccuracyCell(percent=percent, best=best)
    return AccuracyTable(investors=tuple(investors), cells=cells)


@dataclass
class BehaviorTable:
    classes: tuple[str, ...]
    # (investor_class, side, kind, column) -> mean or None
    means: dict[tuple[str, str, str, str], float | None] = field(default_factory=dict)
    # (investor_class, kind, column) -> decision-set count backing the mean
    counts: dict[tuple[str, str, str], int] = field(default_factory=dict)


def behavior_table(
    decisions: list[DecisionSet],
    digest_index: dict[str, Digest],
    human_investors: set[str] | None = None,
) -> BehaviorTable:
    """Mean buys/sells per decision opportunity by class x kind x column.

    A decision opportunity is one (investor, digest) pair; pooling a class
    divides its total side counts by the class's opportunity count, which
    reduces to per-digest means when each investor decides each digest once.
    """
    humans = human_investors or set()
    buys: dict[tuple[str, str, str], int] = {}
    sells: dict[tuple[str, str, str], int] = {}
    opportunities: dict[tuple[str, str, str], int] = {}
    classes_seen: list[str] = []
    for decision in decisions:
        digest = digest_index.get(decision.digest_id)
        if digest is None:
            raise DanglingDigestReferenceError(
                f"decision references unknown digest {decision.digest_id!r}"
            )
        cls = CLASS_HUMAN if decision.investor_id in humans else CLASS_LLM
        if cls not in classes_seen:
            classes_seen.append(cls)
        key = (cls, digest.kind, condition_column(digest.pipeline))
        buys[key] = buys.get(key, 0) + len(decision.buys)
        sells[key] = sells.get(key, 0) + len(decision.sells)
        opportunities[key] = opportunities.get(key, 0) + 1

    ordered = tuple(c for c in (CLASS_LLM, CLASS_HUMAN) if c in classes_seen)
    for cls in (CLASS_LLM, CLASS_HUMAN):
        if cls not in classes_seen:
            logger.warning("behavior table: no decisions for class %r; row omitted", cls)
    means: dict[tuple[str, str, str, str], float | None] = {}
    counts: dict[tuple[str, str, str], int] = {}
    for cls in ordered:
        for kind in TABLE_KINDS:
            for column in TABLE_COLUMNS:
                key = (cls, kind, column)
                n = opportunities.get(key, 0)
                counts[key] = n
                if n == 0:
                    means[(cls, "buy", kind, column)] = None
                    means[(cls, "sell", kind, column)] = None
                else:
                    means[(cls, "buy", kind, column)] = round(buys.get(key, 0) / n, 2)
                    means[(cls, "sell", kind, column)] = round(sells.get(key, 0) / n, 2)
    return BehaviorTable(classes=ordered, means=means, counts=counts)


def render_behavior_table(table: BehaviorTable) -> str:
    header, rule = _header_rows(["Investor class", "Decision"])
    lines = ["# Average number of transactions", "", header, rule]
    for cls in table.classes:
        for side in ("buy", "sell"):
            cells = []
            for kind in TABLE_KINDS:
                for column in TABLE_COLUMNS:
                    mean = table.means[(cls, side, kind, column)]
                    cells.append(ABSENT_CELL if mean is None else f"{mean:.2f}")
            lines.append("| " + " | ".join([cls, side] + cells) + " |")
    return "\n".join(lines) + "\n"


def parse_behavior_table(text: str) -> BehaviorTable:
    rows = [line for line in text.splitlines() if line.startswith("|")]
    grid = [(kind, column) for kind in TABLE_KINDS for column in TABLE_COLUMNS]
    classes: list[str] = []
    means: dict[tuple[str, str, str, str], float | None] = {}
    for line in rows[2:]:
        parts = [p.strip() for p in line.strip().strip("|").split("|")]
        cls, side, values = parts[0], parts[1], parts[2:]
        if cls not in classes:
            classes.append(cls)
        for (kind, column), raw in zip(grid, values):
            means[(cls, side, kind, column)] = None if raw == ABSENT_CELL else float(raw)
    return BehaviorTable(classes=tuple(classes), means=means)


@dataclass(frozen=True)
class LeaderboardEntry:
    annotator_id: str
    accuracy: float | None
    n_scored: int
    n_decisions: int
    rank: int
    beat_llm_average: bool

    @property
    def bonus_usd(self) -> int:
        bonus = 0
        if self.beat_llm_average:
            bonus += BONUS_BEAT_LLM_USD
        if self.rank == 1:
            bonus += BONUS_RANK1_USD
        elif self.rank == 2:
            bonus += BONUS_RANK2_USD
        return bonus

    def to_json(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "accuracy": self.accuracy,
            "n_scored": self.n_scored,
            "n_decisions": self.n_decisions,
            "rank": self.rank,
            "beat_llm_average": self.beat_llm_average,
            "bonus_usd": self.bonus_usd,
        }


@dataclass(frozen=True)
class Leaderboard:
    entries: tuple[LeaderboardEntry, ...]
    llm_average_accuracy: float | None

    def to_json(self) -> dict:
        return {
            "llm_average_accuracy": self.llm_average_accuracy,
            "entries": [e.to_json() for e in self.entries],
        }


def _overall(scores: list[SessionScore]) -> dict[str, dict[str, int]]:
    overall: dict[str, dict[str, int]] = {}
    for s in scores:
        tally = overall.setdefault(s.investor_id, {"n_correct": 0, "n_scored": 0, "n_decisions": 0})
        tally["n_correct"] += s.n_correct
        tally["n_scored"] += s.n_scored
        tally["n_decisions"] += s.n_buy + s.n_sell
    return overall


def leaderboard(human_scores: list[SessionScore], llm_scores: list[SessionScore]) -> Leaderboard:
    """Rank humans by overall micro-accuracy; ties by decision count, then id."""
    humans = _overall(human_scores)
    if not humans:
        raise ValueError("need at least one human investor")
    llms = _overall(llm_scores)
    llm_accuracies = [
        t["n_correct"] / t["n_scored"] for t in llms.values() if t["n_scored"] > 0
    ]
    llm_average = (
        sum(llm_accuracies) / len(llm_accuracies) if llm_accuracies else None
    )

    def accuracy_of(tally: dict[str, int]) -> float | None:
        return tally["n_correct"] / tally["n_scored"] if tally["n_scored"] > 0 else None

    ranked = sorted(
        humans.items(),
        key=lambda item: (
            -(accuracy_of(item[1]) if accuracy_of(item[1]) is not None else float("-inf")),
            -item[1]["n_decisions"],
            item[0],
        ),
    )
    entries = []
    for position, (annotator_id, tally) in enumerate(ranked, start=1):
        acc = accuracy_of(tally)
        entries.append(
            LeaderboardEntry(
                annotator_id=annotator_id,
                accuracy=acc,
                n_scored=tally["n_scored"],
                n_decisions=tally["n_decisions"],
                rank=position,
                beat_llm_average=(
                    acc is not None and llm_average is not None and acc > llm_average
                ),
            )
        )
    return Leaderboard(entries=tuple(entries), llm_average_accuracy=llm_average)


def leaderboard_to_json(board: Leaderboard) -> str:
    return json.dumps(board.to_json(), indent=2, sort_keys=True) + "\n"
