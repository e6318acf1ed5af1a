"""Seeded synthetic market fixtures for desk-scale validation.

Construction is label-first: each ticker-day draws a movement label at the
requested rates, then a return uniformly inside that label's band, then
prices are backed out. Bands sit a safety margin away from the default
thresholds so float noise and price formatting can never flip a label.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

from .errors import InvalidRatesError

# Margins: thresholds are 0.0055/0.0050; %.6f prices keep the recomputed
# return within ~1e-6 of the drawn one, far inside the 2e-4 gap.
RISE_BAND = (0.0057, 0.0300)
FALL_BAND = (-0.0300, -0.0052)
NEUTRAL_BAND = (-0.0048, 0.0053)

DEFAULT_RISE_RATE = 0.35
DEFAULT_FALL_RATE = 0.30
DEFAULT_HALT_RATE = 0.01
DEFAULT_START = Date(2024, 1, 2)

# The bundled experiment fixture: regenerate with these, never hand-edit.
FIXTURE_SEED = 20240613
FIXTURE_TICKERS = 50
FIXTURE_DAYS = 30

_ADJECTIVES = (
    "Amber", "Azure", "Cobalt", "Coral", "Crimson", "Golden", "Granite",
    "Harbor", "Ivory", "Jade", "Lunar", "Maple", "Meridian", "Noble",
    "Obsidian", "Pacific", "Quartz", "Silver", "Summit", "Teak",
    "Topaz", "Tidal", "Vermilion", "Willow", "Zephyr",
)
_NOUNS = (
    "Circuit", "Crane", "Current", "Dynamo", "Fiber", "Forge", "Gear",
    "Grid", "Lattice", "Ledger", "Loom", "Orchard", "Reactor", "Reef",
    "Relay", "Spindle", "Spring", "Terrace", "Turbine", "Vessel",
)
_SUFFIXES = (
    "Holdings", "Industries", "Motors", "Foods", "Pharma",
    "Energy", "Logistics", "Textiles", "Materials", "Marine",
)

_HEADLINE_VERBS = (
    "wins a major export order",
    "guides margins higher",
    "flags softer demand",
    "expands plant capacity",
    "trims its outlook",
    "announces a share buyback",
    "reports record shipments",
    "faces supply bottlenecks",
    "secures a long-term contract",
    "plans an overseas listing",
)

_BODY_PHRASES = (
    "Management pointed to order visibility through the coming quarters.",
    "Analysts split on how quickly the effect reaches earnings.",
    "Peers moved in sympathy during the afternoon session.",
    "Institutional desks reported two-way flow into the close.",
    "The update follows a strategy review announced earlier this year.",
    "Channel checks suggest inventories remain tight.",
)


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_tickers: int
    n_days: int
    rise_rate: float
    fall_rate: float
    halt_rate: float = DEFAULT_HALT_RATE
    start: Date = DEFAULT_START

    def __post_init__(self):
        if self.n_tickers < 1 or self.n_days < 1:
            raise ValueError("need n_tickers >= 1 and n_days >= 1")
        if not (0 <= self.rise_rate and 0 <= self.fall_rate):
            raise InvalidRatesError("rates must be non-negative")
        if self.rise_rate + self.fall_rate > 1:
            raise InvalidRatesError("rise_rate + fall_rate must be <= 1")
        if not (0 <= self.halt_rate < 1):
            raise ValueError("halt_rate must be in [0, 1)")


def trading_dates(start: Date, n_days: int) -> list[Date]:
    """n_days consecutive weekdays from start (weekend dates skipped)."""
    dates = []
    current = start
    while len(dates) < n_days:
        if current.weekday() < 5:
            dates.append(current)
        current += timedelta(days=1)
    return dates


def company_names(n: int) -> list[str]:
    """Deterministic names, pairwise non-substring (asserted, not assumed)."""
    names: list[str] = []
    for i in range(n):
        adj = _ADJECTIVES[i % len(_ADJECTIVES)]
        noun = _NOUNS[(i // len(_ADJECTIVES) + i) % len(_NOUNS)]
        suffix = _SUFFIXES[i % len(_SUFFIXES)]
        names.append(f"{adj} {noun} {suffix}")
    if len(set(names)) != len(names):
        raise ValueError(f"name construction collided for n={n}")
    lowered = [x.lower() for x in names]
    for i, a in enumerate(lowered):
        for j, b in enumerate(lowered):
            if i != j and a in b:
                raise ValueError(f"name {names[i]!r} is a substring of {names[j]!r}")
    return names


def _draw_label(rng: random.Random, rise_rate: float, fall_rate: float) -> str:
    u = rng.random()
    if u < rise_rate:
        return "rise"
    if u < rise_rate + fall_rate:
        return "fall"
    return "neutral"


def _draw_return(rng: random.Random, label: str) -> float:
    band = {"rise": RISE_BAND, "fall": FALL_BAND, "neutral": NEUTRAL_BAND}[label]
    return rng.uniform(*band)


def make_synthetic_market(
    outdir: str | Path,
    seed: int,
    n_tickers: int,
    n_days: int,
    rise_rate: float = DEFAULT_RISE_RATE,
    fall_rate: float = DEFAULT_FALL_RATE,
    halt_rate: float = DEFAULT_HALT_RATE,
    start: Date = DEFAULT_START,
) -> dict[str, Path]:
    """Write companies.csv, prices.csv, news.jsonl, transcripts.jsonl.

    Returns the four paths keyed companies/prices/news/transcripts.
    """
    spec = SynthSpec(
        seed=seed,
        n_tickers=n_tickers,
        n_days=n_days,
        rise_rate=rise_rate,
        fall_rate=fall_rate,
        halt_rate=halt_rate,
        start=start,
    )
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(spec.seed)

    codes = [f"{1101 + i}" for i in range(spec.n_tickers)]
    names = company_names(spec.n_tickers)
    name_of = dict(zip(codes, names))
    dates = trading_dates(spec.start, spec.n_days)

    companies_path = out / "companies.csv"
    with companies_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("code,name\n")
        for code in codes:
            fh.write(f"{code},{name_of[code]}\n")

    # Per-ticker price path: intraday return by label, then an overnight
    # return carrying the level into the next session's open.
    price_rows: list[str] = []
    traded: dict[Date, list[str]] = {d: [] for d in dates}
    for code in codes:
        level = rng.uniform(50.0, 300.0)
        for date in dates:
            halted = rng.random() < spec.halt_rate
            label = _draw_label(rng, spec.rise_rate, spec.fall_rate)
            r_intraday = _draw_return(rng, label)
            r_overnight = _draw_return(rng, _draw_label(rng, spec.rise_rate, spec.fall_rate))
            hi_frac = rng.uniform(1e-4, 0.01)
            lo_frac = rng.uniform(1e-4, 0.01)
            volume = int(rng.lognormvariate(13.0, 1.0)) + 1
            buy_share = rng.uniform(0.05, 0.40)
            sell_share = rng.uniform(0.05, 0.40)

            open_ = level
            close = open_ * (1.0 + r_intraday)
            high = max(open_, close) * (1.0 + hi_frac)
            low = min(open_, close) * (1.0 - lo_frac)
            if not halted:
                traded[date].append(code)
                price_rows.append(
                    f"{date.isoformat()},{code},{open_:.6f},{high:.6f},{low:.6f},{close:.6f},"
                    f"{volume},{int(volume * buy_share)},{int(volume * sell_share)}"
                )
            level = close * (1.0 + r_overnight)

    prices_path = out / "prices.csv"
    with prices_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("date,code,open,high,low,close,volume,inst_buy,inst_sell\n")
        fh.write("\n".join(price_rows) + "\n")

    news_path = out / "news.jsonl"
    with news_path.open("w", encoding="utf-8") as fh:
        seq = 0
        for date in dates:
            pool = traded[date] or codes
            for _ in range(rng.randint(2, 5)):
                seq += 1
                mentioned = rng.sample(pool, k=min(rng.randint(1, 3), len(pool)))
                lead = name_of[mentioned[0]]
                headline = f"{lead} {rng.choice(_HEADLINE_VERBS)}"
                others = ", ".join(name_of[c] for c in mentioned[1:])
                body = f"{lead} drew attention in local coverage. "
                if others:
                    body += f"Mentions extended to {others}. "
                body += rng.choice(_BODY_PHRASES)
                fh.write(
                    json.dumps(
                        {
                            "id": f"n{seq:05d}",
                            "date": date.isoformat(),
                            "headline": headline,
                            "body": body,
                            "tickers": mentioned,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )

    # Transcripts carry no calendar dates; they are shown to annotators.
    transcripts_path = out / "transcripts.jsonl"
    with transcripts_path.open("w", encoding="utf-8") as fh:
        for date in dates:
            pool = traded[date] or codes
            picks = rng.sample(pool, k=min(rng.randint(3, 6), len(pool)))
            picked_names = [name_of[c] for c in picks]
            morning = (
                "Good morning from the newsroom. Before the open, desks are watching "
                + ", ".join(picked_names[:-1])
                + f" and {picked_names[-1]}. "
                + "Overnight flows were mixed and positioning stays light into the first hour."
            )
            picks_close = rng.sample(pool, k=min(rng.randint(3, 6), len(pool)))
            close_names = [name_of[c] for c in picks_close]
            closing = (
                "At the bell, turnover concentrated in "
                + ", ".join(close_names[:-1])
                + f" and {close_names[-1]}. "
                + "Breadth narrowed through the afternoon and block trades printed late."
            )
            fh.write(json.dumps({"date": date.isoformat(), "kind": "morning", "text": morning}, sort_keys=True) + "\n")
            fh.write(json.dumps({"date": date.isoformat(), "kind": "closing", "text": closing}, sort_keys=True) + "\n")

    return {
        "companies": companies_path,
        "prices": prices_path,
        "news": news_path,
        "transcripts": transcripts_path,
    }
