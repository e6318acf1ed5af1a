"""Candidate asset selection.

Two pipelines feed digest generation:

* performance-based: rank the prior session's records by intraday
  volatility, share volume, and absolute institutional imbalance, take the
  top K of each, and merge (volatility list first, then volume, then
  imbalance, skipping repeats).
* professional-insight: take the companies explicitly mentioned in the
  journalist transcript, found by a deterministic longest-match scan over
  the universe (an external extractor backend may be plugged in).

Candidate sets serialize to a line-delimited JSON audit file
(``selection.log``) consumed by digest generation and reporting.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Protocol

from .errors import EmptyDayError, ExtractorUnavailableError, MissingTranscriptError
from .marketdata import EquityDayRecord, TradingDay, Universe, institutional_imbalance, intraday_volatility

logger = logging.getLogger(__name__)

METRIC_VOLATILITY = "volatility"
METRIC_VOLUME = "volume"
METRIC_ABS_IMBALANCE = "abs_imbalance"
METRICS = (METRIC_VOLATILITY, METRIC_VOLUME, METRIC_ABS_IMBALANCE)

PIPELINE_PERFORMANCE = "performance_based"
PIPELINE_INSIGHT = "professional_insight"
PIPELINE_JOURNALIST = "journalist"

DEFAULT_K = 10


@dataclass(frozen=True)
class SelectionConfig:
    k: int = DEFAULT_K

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class CandidateSet:
    date: Date
    pipeline: str
    tickers: tuple[str, ...]
    per_metric: dict[str, tuple[str, ...]] = field(default_factory=dict)
    source_articles: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "pipeline": self.pipeline,
            "tickers": list(self.tickers),
            "per_metric": {m: list(v) for m, v in self.per_metric.items()},
            "source_articles": list(self.source_articles),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CandidateSet":
        return cls(
            date=Date.fromisoformat(obj["date"]),
            pipeline=obj["pipeline"],
            tickers=tuple(obj["tickers"]),
            per_metric={m: tuple(v) for m, v in obj.get("per_metric", {}).items()},
            source_articles=tuple(obj.get("source_articles", [])),
        )


def metric_value(record: EquityDayRecord, metric: str) -> float:
    if metric == METRIC_VOLATILITY:
        return intraday_volatility(record)
    if metric == METRIC_VOLUME:
        return float(record.volume)
    if metric == METRIC_ABS_IMBALANCE:
        return float(abs(institutional_imbalance(record)))
    raise ValueError(f"unknown metric {metric!r}")


def rank_top_k(day: TradingDay, metric: str, k: int) -> list[str]:
    """Top k ticker codes by metric, descending; ties broken by ascending code.

    Returns all records (ranked) when fewer than k exist.
    """
    if not day.records:
        raise EmptyDayError(f"no records on {day.date}")
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(day.records.values(), key=lambda r: (-metric_value(r, metric), r.ticker))
    return [r.ticker for r in ranked[:k]]


def performance_based_candidates(
    prior_day: TradingDay,
    config: SelectionConfig,
    *,
    digest_date: Date | None = None,
    universe: Universe | None = None,
) -> CandidateSet:
    """Merge the three per-metric top-K lists from the prior session.

    ``digest_date`` stamps the candidate set for a digest published on a
    later day; it defaults to the prior day's own date.
    """
    per_metric = {m: tuple(rank_top_k(prior_day, m, config.k)) for m in METRICS}
    merged: list[str] = []
    for m in METRICS:
        for code in per_metric[m]:
            if code not in merged:
                merged.append(code)
    article_ids = articles_mentioning(prior_day, merged, universe)
    return CandidateSet(
        date=digest_date or prior_day.date,
        pipeline=PIPELINE_PERFORMANCE,
        tickers=tuple(merged),
        per_metric=per_metric,
        source_articles=article_ids,
    )


class ExtractorBackend(Protocol):
    def __call__(self, text: str, universe: Universe) -> list[str]: ...


def _boundary_pattern(literal: str) -> str:
    return r"(?<!\w)" + re.escape(literal) + r"(?!\w)"


def reference_extract(text: str, universe: Universe) -> list[str]:
    """Deterministic longest-match scan over universe names and codes.

    Names match case-insensitively, codes exactly; overlapping hits resolve
    leftmost-longest. Returns deduplicated codes in first-mention order.
    """
    hits: list[tuple[int, int, str]] = []
    for t in universe.tickers:
        for m in re.finditer(_boundary_pattern(t.name), text, re.IGNORECASE):
            hits.append((m.start(), m.end(), t.code))
        for m in re.finditer(_boundary_pattern(t.code), text):
            hits.append((m.start(), m.end(), t.code))
    hits.sort(key=lambda h: (h[0], -h[1]))
    out: list[str] = []
    pos = 0
    for start, end, code in hits:
        if start < pos:
            continue
        pos = end
        if code not in out:
            out.append(code)
    return out


def extract_mentioned_companies(
    text: str,
    universe: Universe,
    extractor: ExtractorBackend | None = None,
) -> list[str]:
    """Companies explicitly mentioned in a transcript, as universe codes.

    An external extractor's output is filtered to universe codes and
    deduplicated; on ExtractorUnavailableError the caller may fall back to
    the reference extractor.
    """
    if extractor is None:
        return reference_extract(text, universe)
    raw = extractor(text, universe)
    out: list[str] = []
    for code in raw:
        if code in universe and code not in out:
            out.append(code)
    return out


def articles_mentioning(
    day: TradingDay,
    tickers: list[str] | tuple[str, ...],
    universe: Universe | None = None,
) -> tuple[str, ...]:
    """Ids of the day's articles mentioning any of the given tickers.

    Uses each article's tickers field when present; when absent and a
    universe is given, falls back to reference extraction over
    headline+body.
    """
    wanted = set(tickers)
    ids = []
    for article in day.articles:
        codes = set(article.mentioned_tickers)
        if not codes and universe is not None:
            codes = set(reference_extract(f"{article.headline}\n{article.body}", universe))
        if codes & wanted:
            ids.append(article.id)
    return tuple(ids)


def professional_insight_candidates(
    day: TradingDay,
    universe: Universe,
    extractor: ExtractorBackend | None = None,
) -> CandidateSet:
    """Candidates from companies mentioned in the day's morning transcript."""
    if day.morning_transcript is None:
        raise MissingTranscriptError(f"no morning transcript on {day.date}")
    try:
        tickers = extract_mentioned_companies(day.morning_transcript, universe, extractor)
    except ExtractorUnavailableError:
        logger.warning("external extractor unavailable on %s; using reference extractor", day.date)
        tickers = reference_extract(day.morning_transcript, universe)
    if not tickers:
        logger.warning("transcript on %s mentions no universe company", day.date)
    return CandidateSet(
        date=day.date,
        pipeline=PIPELINE_INSIGHT,
        tickers=tuple(tickers),
        source_articles=articles_mentioning(day, tickers, universe),
    )


def write_selection_log(path, candidate_sets: list[CandidateSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cs in candidate_sets:
            fh.write(json.dumps(cs.to_json(), sort_keys=True) + "\n")


def read_selection_log(path) -> list[CandidateSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(CandidateSet.from_json(json.loads(line)))
    return out
