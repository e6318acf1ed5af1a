"""Trading-day dataset: loading, validation, and per-record derived quantities.

Input formats
    companies: CSV with header ``code,name`` (UTF-8); row order defines
        universe order.
    prices: CSV with header
        ``date,code,open,high,low,close,volume,inst_buy,inst_sell``.
    news: line-delimited JSON, keys ``id,date,headline,body,tickers``
        (tickers optional).
    transcripts: line-delimited JSON, keys ``date,kind,text`` with kind
        "morning" or "closing".

Malformed rows are rejected individually and reported (skip-and-report);
``strict=True`` turns the first reject into a typed exception. A loaded
MarketDataset is immutable by convention and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from .errors import (
    DuplicateRecordError,
    MissingFileError,
    NonPositiveBasisError,
    RowParseError,
    UnknownTickerError,
)

logger = logging.getLogger(__name__)

TICKER_CODE_RE = re.compile(r"^[A-Z0-9.]{1,12}$")

PRICE_COLUMNS = ("date", "code", "open", "high", "low", "close", "volume", "inst_buy", "inst_sell")


@dataclass(frozen=True)
class Ticker:
    code: str
    name: str


@dataclass(frozen=True)
class Universe:
    """Ordered ticker list; order is the load order of the companies file."""

    tickers: tuple[Ticker, ...]

    def __post_init__(self):
        codes = [t.code for t in self.tickers]
        if len(set(codes)) != len(codes):
            raise ValueError("duplicate ticker codes in universe")

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(t.code for t in self.tickers)

    def __contains__(self, code: str) -> bool:
        return code in self._by_code()

    def __len__(self) -> int:
        return len(self.tickers)

    def _by_code(self) -> dict[str, Ticker]:
        cached = getattr(self, "_code_map", None)
        if cached is None:
            cached = {t.code: t for t in self.tickers}
            object.__setattr__(self, "_code_map", cached)
        return cached

    def get(self, code: str) -> Ticker | None:
        return self._by_code().get(code)


@dataclass(frozen=True)
class EquityDayRecord:
    """One ticker's OHLC, share volume, and institutional flows for one day."""

    ticker: str
    date: Date
    open: float
    high: float
    low: float
    close: float
    volume: int
    inst_buy: int
    inst_sell: int

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not (self.low <= min(self.open, self.close) <= max(self.open, self.close) <= self.high):
            raise ValueError("price invariant violated: need low <= open/close <= high")
        for name in ("volume", "inst_buy", "inst_sell"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class NewsArticle:
    id: str
    date: Date
    headline: str
    body: str
    mentioned_tickers: tuple[str, ...] = ()


@dataclass(frozen=True)
class TradingDay:
    date: Date
    records: dict[str, EquityDayRecord] = field(default_factory=dict)
    articles: tuple[NewsArticle, ...] = ()
    morning_transcript: str | None = None
    closing_transcript: str | None = None


@dataclass(frozen=True)
class MarketDataset:
    universe: Universe
    days: tuple[TradingDay, ...]

    def __post_init__(self):
        dates = [d.date for d in self.days]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("days must be strictly increasing by date")

    @property
    def dates(self) -> tuple[Date, ...]:
        return tuple(d.date for d in self.days)

    def day(self, date: Date) -> TradingDay | None:
        return self._index().get(date)

    def next_trading_day(self, date: Date) -> TradingDay | None:
        """The next later day that carries at least one price record."""
        for day in self.days:
            if day.date > date and day.records:
                return day
        return None

    def prior_trading_day(self, date: Date) -> TradingDay | None:
        best = None
        for day in self.days:
            if day.date < date and day.records:
                best = day
        return best

    def _index(self) -> dict[Date, TradingDay]:
        cached = getattr(self, "_day_map", None)
        if cached is None:
            cached = {d.date: d for d in self.days}
            object.__setattr__(self, "_day_map", cached)
        return cached


@dataclass(frozen=True)
class RowIssue:
    """One rejected input row."""

    source: str
    row: int
    reason: str


@dataclass(frozen=True)
class LoadResult:
    dataset: MarketDataset
    rejects: tuple[RowIssue, ...]


def simple_return(basis_price: float, target_price: float) -> float:
    """Arithmetic return (target - basis) / basis."""
    if basis_price <= 0:
        raise NonPositiveBasisError(f"basis price must be > 0, got {basis_price}")
    return (target_price - basis_price) / basis_price


def intraday_volatility(record: EquityDayRecord) -> float:
    """Intraday range over open: (high - low) / open. Zero iff high == low."""
    return (record.high - record.low) / record.open


def institutional_imbalance(record: EquityDayRecord) -> int:
    """Net institutional flow in shares: inst_buy - inst_sell."""
    return record.inst_buy - record.inst_sell


def load_universe(companies_path: str | Path, *, strict: bool = False) -> tuple[Universe, list[RowIssue]]:
    path = Path(companies_path)
    if not path.is_file():
        raise MissingFileError(f"companies file not found: {path}")
    rejects: list[RowIssue] = []
    tickers: list[Ticker] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["code", "name"]:
            raise RowParseError("companies", 1, f"expected header code,name, got {reader.fieldnames}")
        for i, row in enumerate(reader, start=2):
            code = (row.get("code") or "").strip()
            name = (row.get("name") or "").strip()
            reason = error = None
            if not TICKER_CODE_RE.match(code):
                reason, error = f"bad ticker code {code!r}", RowParseError
            elif not name:
                reason, error = "empty company name", RowParseError
            elif code in seen:
                reason, error = f"duplicate code {code!r}", DuplicateRecordError
            if reason:
                if strict:
                    if error is DuplicateRecordError:
                        raise DuplicateRecordError(f"companies row {i}: {reason}")
                    raise RowParseError("companies", i, reason)
                rejects.append(RowIssue("companies", i, reason))
                continue
            seen.add(code)
            tickers.append(Ticker(code=code, name=name))
    return Universe(tuple(tickers)), rejects


def _parse_price_row(row: dict[str, str], line: int) -> EquityDayRecord:
    try:
        date = Date.fromisoformat(row["date"].strip())
    except ValueError as exc:
        raise RowParseError("prices", line, f"bad date {row['date']!r}: {exc}") from exc
    code = row["code"].strip()
    if not TICKER_CODE_RE.match(code):
        raise RowParseError("prices", line, f"bad ticker code {code!r}")
    try:
        kwargs = {k: float(row[k]) for k in ("open", "high", "low", "close")}
        kwargs.update({k: int(row[k]) for k in ("volume", "inst_buy", "inst_sell")})
    except (ValueError, KeyError) as exc:
        raise RowParseError("prices", line, f"bad numeric field: {exc}") from exc
    try:
        return EquityDayRecord(ticker=code, date=date, **kwargs)
    except ValueError as exc:
        raise RowParseError("prices", line, str(exc)) from exc


def load_dataset(
    companies_path: str | Path,
    prices_path: str | Path,
    news_path: str | Path,
    transcripts_path: str | Path | None = None,
    *,
    strict: bool = False,
) -> LoadResult:
    """Load and validate the full trading-day dataset.

    Returns the dataset plus the list of rejected rows. Input row order is
    irrelevant: days, records, and articles are canonically ordered by
    date, ticker code, and article id.
    """
    universe, rejects = load_universe(companies_path, strict=strict)

    prices_file = Path(prices_path)
    if not prices_file.is_file():
        raise MissingFileError(f"prices file not found: {prices_file}")
    records: dict[tuple[str, Date], EquityDayRecord] = {}
    with prices_file.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(PRICE_COLUMNS):
            raise RowParseError("prices", 1, f"expected header {','.join(PRICE_COLUMNS)}")
        for i, row in enumerate(reader, start=2):
            try:
                rec = _parse_price_row(row, i)
            except RowParseError as exc:
                if strict:
                    raise
                rejects.append(RowIssue("prices", i, exc.reason))
                continue
            if rec.ticker not in universe:
                if strict:
                    raise UnknownTickerError(f"prices row {i}: unknown ticker {rec.ticker!r}")
                rejects.append(RowIssue("prices", i, f"unknown ticker {rec.ticker!r}"))
                continue
            key = (rec.ticker, rec.date)
            if key in records:
                if strict:
                    raise DuplicateRecordError(f"duplicate record for {rec.ticker} on {rec.date}")
                rejects.append(RowIssue("prices", i, f"duplicate record for {rec.ticker} on {rec.date}"))
                continue
            records[key] = rec

    articles, news_rejects = _load_news(news_path, universe, strict=strict)
    rejects.extend(news_rejects)

    transcripts: dict[tuple[Date, str], str] = {}
    if transcripts_path is not None:
        transcripts, tr_rejects = _load_transcripts(transcripts_path, strict=strict)
        rejects.extend(tr_rejects)

    all_dates = sorted(
        {d for _, d in records}
        | {a.date for a in articles}
        | {d for d, _ in transcripts}
    )
    days = []
    for date in all_dates:
        day_records = {
            rec.ticker: rec
            for (code, d), rec in sorted(records.items())
            if d == date
        }
        day_articles = tuple(sorted((a for a in articles if a.date == date), key=lambda a: a.id))
        days.append(
            TradingDay(
                date=date,
                records=day_records,
                articles=day_articles,
                morning_transcript=transcripts.get((date, "morning")),
                closing_transcript=transcripts.get((date, "closing")),
            )
        )
    dataset = MarketDataset(universe=universe, days=tuple(days))
    if rejects:
        logger.warning("load_dataset rejected %d rows", len(rejects))
    return LoadResult(dataset=dataset, rejects=tuple(rejects))


def _load_news(news_path: str | Path, universe: Universe, *, strict: bool) -> tuple[list[NewsArticle], list[RowIssue]]:
    path = Path(news_path)
    if not path.is_file():
        raise MissingFileError(f"news file not found: {path}")
    articles: list[NewsArticle] = []
    rejects: list[RowIssue] = []
    seen_ids: set[str] = set()

    def reject(line: int, reason: str):
        if strict:
            raise RowParseError("news", line, reason)
        rejects.append(RowIssue("news", line, reason))

    with path.open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                reject(i, f"invalid JSON: {exc}")
                continue
            try:
                art_id = str(obj["id"])
                date = Date.fromisoformat(obj["date"])
                headline = str(obj["headline"])
                body = str(obj["body"])
            except (KeyError, ValueError, TypeError) as exc:
                reject(i, f"bad news record: {exc}")
                continue
            if art_id in seen_ids:
                reject(i, f"duplicate article id {art_id!r}")
                continue
            tickers = []
            for code in obj.get("tickers") or []:
                if code in universe:
                    tickers.append(code)
                else:
                    rejects.append(RowIssue("news", i, f"dropped unknown ticker {code!r} from article {art_id}"))
            seen_ids.add(art_id)
            articles.append(
                NewsArticle(id=art_id, date=date, headline=headline, body=body, mentioned_tickers=tuple(tickers))
            )
    return articles, rejects


def _load_transcripts(transcripts_path: str | Path, *, strict: bool) -> tuple[dict[tuple[Date, str], str], list[RowIssue]]:
    path = Path(transcripts_path)
    if not path.is_file():
        raise MissingFileError(f"transcripts file not found: {path}")
    out: dict[tuple[Date, str], str] = {}
    rejects: list[RowIssue] = []

    def reject(line: int, reason: str):
        if strict:
            raise RowParseError("transcripts", line, reason)
        rejects.append(RowIssue("transcripts", line, reason))

    with path.open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                date = Date.fromisoformat(obj["date"])
                kind = obj["kind"]
                text = str(obj["text"])
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                reject(i, f"bad transcript record: {exc}")
                continue
            if kind not in ("morning", "closing"):
                reject(i, f"bad transcript kind {kind!r}")
                continue
            if (date, kind) in out:
                reject(i, f"duplicate transcript for {date} {kind}")
                continue
            # Journalist digests must pass through byte-identical modulo newlines.
            out[(date, kind)] = text.replace("\r\n", "\n")
    return out, rejects
