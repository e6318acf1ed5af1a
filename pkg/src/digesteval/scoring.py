"""Thresholded return labels and decision scoring.

A buy is correct only when the realized return rises past the rise
threshold; a sell only when it falls past the fall threshold. Every other
pairing is incorrect. Decisions whose return cannot be computed (halted
ticker, dataset edge) are unscorable: tallied, excluded from the accuracy
denominator.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date as Date

from .agents import DecisionSet
from .digests import KIND_CLOSING, KIND_MORNING, Digest
from .errors import (
    DanglingDigestReferenceError,
    DateOutOfRangeError,
    UnknownTickerError,
)
from .marketdata import MarketDataset, simple_return

LABEL_RISE = "rise"
LABEL_FALL = "fall"
LABEL_NEUTRAL = "neutral"

HORIZON_OPEN_TO_CLOSE = "open_to_close"
HORIZON_CLOSE_TO_NEXT_OPEN = "close_to_next_open"

SIDE_BUY = "buy"
SIDE_SELL = "sell"

SCORES_CSV_HEADER = "investor,kind,source,pipeline,n_buy,n_sell,n_unscorable,n_correct,accuracy"


@dataclass(frozen=True)
class ScoringConfig:
    rise_threshold: float = 0.0055
    fall_threshold: float = 0.0050  # applied with a negative sign

    def __post_init__(self):
        if self.rise_threshold <= 0 or self.fall_threshold <= 0:
            raise ValueError("thresholds must be > 0")


def horizon_for_kind(kind: str) -> str:
    return HORIZON_OPEN_TO_CLOSE if kind == KIND_MORNING else HORIZON_CLOSE_TO_NEXT_OPEN


def label_return(r: float, config: ScoringConfig | None = None) -> str:
    """Rise iff r > rise_threshold, fall iff r < -fall_threshold, else neutral."""
    if not math.isfinite(r):
        raise ValueError(f"return must be finite, got {r}")
    cfg = config or ScoringConfig()
    if r > cfg.rise_threshold:
        return LABEL_RISE
    if r < -cfg.fall_threshold:
        return LABEL_FALL
    return LABEL_NEUTRAL


def realized_return(
    ticker: str,
    digest_date: Date,
    horizon: str,
    dataset: MarketDataset,
) -> float | None:
    """Signed fraction over the horizon, or None when unscorable.

    open_to_close uses digest-day open as basis and same-day close as
    target; close_to_next_open uses digest-day close as basis and the next
    trading day's open as target. Missing records (halts, final day) make
    the decision unscorable rather than an error.
    """
    if ticker not in dataset.universe:
        raise UnknownTickerError(f"unknown ticker {ticker!r}")
    day = dataset.day(digest_date)
    if day is None:
        raise DateOutOfRangeError(f"{digest_date.isoformat()} is not in the dataset")
    record = day.records.get(ticker)
    if record is None:
        return None
    if horizon == HORIZON_OPEN_TO_CLOSE:
        return simple_return(record.open, record.close)
    if horizon == HORIZON_CLOSE_TO_NEXT_OPEN:
        next_day = dataset.next_trading_day(digest_date)
        if next_day is None:
            return None
        next_record = next_day.records.get(ticker)
        if next_record is None:
            return None
        return simple_return(record.close, next_record.open)
    raise ValueError(f"unknown horizon {horizon!r}")


def score_decision(side: str, label: str) -> bool:
    """Only buy+rise and sell+fall are correct."""
    return (side == SIDE_BUY and label == LABEL_RISE) or (
        side == SIDE_SELL and label == LABEL_FALL
    )


@dataclass(frozen=True)
class ScoredDecision:
    """One buy/sell row with its realized outcome; the audit-level record."""

    investor_id: str
    digest_id: str
    kind: str
    source: str
    pipeline: str
    date: Date
    ticker: str
    side: str
    realized: float | None
    label: str | None
    correct: bool | None


@dataclass(frozen=True)
class SessionScore:
    investor_id: str
    kind: str
    source: str
    pipeline: str
    n_buy: int
    n_sell: int
    n_correct: int
    n_unscorable: int

    @property
    def n_scored(self) -> int:
        return self.n_buy + self.n_sell - self.n_unscorable

    @property
    def accuracy(self) -> float | None:
        denominator = self.n_scored
        if denominator <= 0:
            return None
        return self.n_correct / denominator

    def to_json(self) -> dict:
        return {
            "investor_id": self.investor_id,
            "kind": self.kind,
            "source": self.source,
            "pipeline": self.pipeline,
            "n_buy": self.n_buy,
            "n_sell": self.n_sell,
            "n_correct": self.n_correct,
            "n_unscorable": self.n_unscorable,
            "accuracy": self.accuracy,
        }


def score_decisions(
    decisions: list[DecisionSet],
    digest_index: dict[str, Digest],
    dataset: MarketDataset,
    config: ScoringConfig | None = None,
) -> list[ScoredDecision]:
    """Label every individual buy/sell row. Order follows the input."""
    cfg = config or ScoringConfig()
    rows: list[ScoredDecision] = []
    for decision in decisions:
        digest = digest_index.get(decision.digest_id)
        if digest is None:
            raise DanglingDigestReferenceError(
                f"decision references unknown digest {decision.digest_id!r}"
            )
        horizon = horizon_for_kind(digest.kind)
        for side, codes in ((SIDE_BUY, decision.buys), (SIDE_SELL, decision.sells)):
            for code in codes:
                r = realized_return(code, digest.date, horizon, dataset)
                label = None if r is None else label_return(r, cfg)
                rows.append(
                    ScoredDecision(
                        investor_id=decision.investor_id,
                        digest_id=decision.digest_id,
                        kind=digest.kind,
                        source=digest.source,
                        pipeline=digest.pipeline,
                        date=digest.date,
                        ticker=code,
                        side=side,
                        realized=r,
                        label=label,
                        correct=None if label is None else score_decision(side, label),
                    )
                )
    return rows


def tally_scores(
    rows: list[ScoredDecision],
    seed_keys: list[tuple[str, str, str, str]] = (),
) -> list[SessionScore]:
    """Micro-averaged tallies per (investor, kind, source, pipeline).

    seed_keys pre-create zero tallies so an investor who submitted only
    empty decision sets in a condition still gets a (blank-accuracy) row.
    """
    buckets: dict[tuple[str, str, str, str], dict[str, int]] = {}
    for key in seed_keys:
        buckets.setdefault(key, {"n_buy": 0, "n_sell": 0, "n_correct": 0, "n_unscorable": 0})
    for row in rows:
        key = (row.investor_id, row.kind, row.source, row.pipeline)
        tally = buckets.setdefault(
            key, {"n_buy": 0, "n_sell": 0, "n_correct": 0, "n_unscorable": 0}
        )
        if row.side == SIDE_BUY:
            tally["n_buy"] += 1
        else:
            tally["n_sell"] += 1
        if row.correct is None:
            tally["n_unscorable"] += 1
        elif row.correct:
            tally["n_correct"] += 1
    return [
        SessionScore(
            investor_id=investor,
            kind=kind,
            source=source,
            pipeline=pipeline,
            **buckets[(investor, kind, source, pipeline)],
        )
        for investor, kind, source, pipeline in sorted(buckets)
    ]


def evaluate_sessions(
    decisions: list[DecisionSet],
    digest_index: dict[str, Digest],
    dataset: MarketDataset,
    config: ScoringConfig | None = None,
) -> list[SessionScore]:
    rows = score_decisions(decisions, digest_index, dataset, config)
    seed_keys = []
    for decision in decisions:
        digest = digest_index[decision.digest_id]
        seed_keys.append((decision.investor_id, digest.kind, digest.source, digest.pipeline))
    return tally_scores(rows, seed_keys)


def scores_to_csv(scores: list[SessionScore]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCORES_CSV_HEADER.split(","))
    for s in scores:
        writer.writerow(
            [
                s.investor_id,
                s.kind,
                s.source,
                s.pipeline,
                s.n_buy,
                s.n_sell,
                s.n_unscorable,
                s.n_correct,
                "" if s.accuracy is None else f"{s.accuracy:.6f}",
            ]
        )
    return buf.getvalue()


def scores_from_csv(text: str) -> list[SessionScore]:
    reader = csv.DictReader(io.StringIO(text))
    scores = []
    for row in reader:
        scores.append(
            SessionScore(
                investor_id=row["investor"],
                kind=row["kind"],
                source=row["source"],
                pipeline=row["pipeline"],
                n_buy=int(row["n_buy"]),
                n_sell=int(row["n_sell"]),
                n_correct=int(row["n_correct"]),
                n_unscorable=int(row["n_unscorable"]),
            )
        )
    return scores
