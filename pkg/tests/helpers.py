"""Hand-rolled micro-fixtures shared across test modules."""

from __future__ import annotations

from datetime import date as Date

from digesteval.marketdata import (
    EquityDayRecord,
    MarketDataset,
    NewsArticle,
    Ticker,
    TradingDay,
    Universe,
)

D1 = Date(2024, 3, 4)
D2 = Date(2024, 3, 5)
D3 = Date(2024, 3, 6)


def rec(
    code: str,
    date: Date = D1,
    open_: float = 100.0,
    close: float = 101.0,
    high: float | None = None,
    low: float | None = None,
    volume: int = 1000,
    inst_buy: int = 100,
    inst_sell: int = 50,
) -> EquityDayRecord:
    return EquityDayRecord(
        ticker=code,
        date=date,
        open=open_,
        high=high if high is not None else max(open_, close) * 1.01,
        low=low if low is not None else min(open_, close) * 0.99,
        close=close,
        volume=volume,
        inst_buy=inst_buy,
        inst_sell=inst_sell,
    )


def day(
    date: Date = D1,
    records: list[EquityDayRecord] = (),
    articles: tuple[NewsArticle, ...] = (),
    morning: str | None = None,
    closing: str | None = None,
) -> TradingDay:
    return TradingDay(
        date=date,
        records={r.ticker: r for r in records},
        articles=articles,
        morning_transcript=morning,
        closing_transcript=closing,
    )


def universe(*pairs: tuple[str, str]) -> Universe:
    return Universe(tickers=tuple(Ticker(code, name) for code, name in pairs))


def article(
    art_id: str,
    date: Date = D1,
    headline: str = "a headline",
    body: str = "a body",
    tickers: tuple[str, ...] = (),
) -> NewsArticle:
    return NewsArticle(id=art_id, date=date, headline=headline, body=body, mentioned_tickers=tickers)


def dataset(universe_: Universe, *days: TradingDay) -> MarketDataset:
    return MarketDataset(universe=universe_, days=tuple(days))


def oracle_evaluate(decisions, digests, table, rise, fall):
    """Independent scoring recount from primitive dicts.

    table: {date: {ticker: (open, close)}} with every date traded. Returns
    {(investor, kind, source, pipeline): [n_buy, n_sell, n_correct, n_unscorable]}.
    """
    dates = sorted(table)
    tallies = {}
    for ds in decisions:
        dg = digests[ds.digest_id]
        key = (ds.investor_id, dg.kind, dg.source, dg.pipeline)
        t = tallies.setdefault(key, [0, 0, 0, 0])
        for side, codes in (("buy", ds.buys), ("sell", ds.sells)):
            for code in codes:
                t[0 if side == "buy" else 1] += 1
                recs = table[dg.date]
                if code not in recs:
                    t[3] += 1
                    continue
                if dg.kind == "morning":
                    o, c = recs[code]
                    r = (c - o) / o
                else:
                    later = [d for d in dates if d > dg.date]
                    if not later or code not in table[later[0]]:
                        t[3] += 1
                        continue
                    r = (table[later[0]][code][0] - recs[code][1]) / recs[code][1]
                if (side == "buy" and r > rise) or (side == "sell" and r < -fall):
                    t[2] += 1
    return tallies
