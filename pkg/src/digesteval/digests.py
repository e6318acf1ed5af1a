"""Digest generation: request building, backends, and the audit trail.

A GenerationRequest is an ordered list of named text sections plus a token
budget hint. Morning-brief requests carry ``instruction``, ``movers`` (a
compact per-candidate data block the template backend renders from), and
``news``; closing-bell requests carry ``instruction``, ``morning_brief``,
and ``intraday_data``. Instruction texts are versioned files shipped under
``digesteval/prompts`` and enter the audit log via per-section hashes.

The template backend is fully deterministic and is the reference/test
backend; an HTTP backend posts {system, user, temperature=0} to the
endpoint named by DIGEST_LLM_URL / DIGEST_LLM_KEY.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from datetime import date as Date, datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Protocol

import requests as _requests

from .errors import (
    BackendError,
    BackendTimeoutError,
    BudgetExceededError,
    DateMismatchError,
    EmptyCandidatesError,
    EmptyCompletionError,
    KindMismatchError,
)
from .marketdata import TradingDay
from .selection import METRICS, PIPELINE_JOURNALIST, CandidateSet, SelectionConfig, rank_top_k

logger = logging.getLogger(__name__)

KIND_MORNING = "morning"
KIND_CLOSING = "closing"

DEFAULT_TOKEN_BUDGET = 6000


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_prompt(name: str) -> str:
    return resources.files("digesteval.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class GenerationRequest:
    date: Date
    kind: str
    pipeline: str
    sections: tuple[tuple[str, str], ...]
    token_budget_hint: int = DEFAULT_TOKEN_BUDGET

    def __post_init__(self):
        if self.token_budget_hint < 1:
            raise ValueError("token_budget_hint must be positive")
        names = [n for n, _ in self.sections]
        if self.kind == KIND_MORNING and "news" not in names:
            raise ValueError("morning requests require a news section")
        if self.kind == KIND_CLOSING and not {"morning_brief", "intraday_data"} <= set(names):
            raise ValueError("closing requests require morning_brief and intraday_data sections")

    def section(self, name: str) -> str | None:
        for n, text in self.sections:
            if n == name:
                return text
        return None

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "date": self.date.isoformat(),
                "kind": self.kind,
                "pipeline": self.pipeline,
                "sections": [[n, t] for n, t in self.sections],
                "token_budget_hint": self.token_budget_hint,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return _sha256(payload)

    def section_hashes(self) -> dict[str, str]:
        return {n: _sha256(t) for n, t in self.sections}


@dataclass(frozen=True)
class Digest:
    id: str
    date: Date
    kind: str
    source: str
    pipeline: str
    text: str
    request_fingerprint: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError("digest text must be nonempty")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "date": self.date.isoformat(),
            "kind": self.kind,
            "source": self.source,
            "pipeline": self.pipeline,
            "text": self.text,
            "request_fingerprint": self.request_fingerprint,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Digest":
        return cls(
            id=obj["id"],
            date=Date.fromisoformat(obj["date"]),
            kind=obj["kind"],
            source=obj["source"],
            pipeline=obj["pipeline"],
            text=obj["text"],
            request_fingerprint=obj.get("request_fingerprint", ""),
        )


def digest_id(date: Date, kind: str, source: str) -> str:
    return f"{date.isoformat()}-{kind}-{source}"


class GeneratorBackend(Protocol):
    name: str
    deterministic: bool

    def complete(self, request: GenerationRequest) -> str: ...


def _approx_tokens(text: str) -> int:
    return len(text.split())


def _mover_line(code: str, open_: float, close: float, headline: str) -> str:
    return f"{code}|{open_:.4f}|{close:.4f}|{headline}"


def build_morning_request(
    candidates: CandidateSet,
    day: TradingDay,
    *,
    digest_date: Date | None = None,
    prior_day: TradingDay | None = None,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> GenerationRequest:
    """Assemble the morning-brief request from a candidate set.

    ``day`` is the trading day the candidates were drawn from (its date must
    equal ``candidates.date``); ``digest_date`` stamps the request with the
    publication day when the two differ. The movers block always describes
    the prior session: ``day`` itself for prior-day candidate pipelines, or
    an explicit ``prior_day`` when candidates anchor on the digest day.
    """
    if candidates.date != day.date:
        raise DateMismatchError(f"candidates dated {candidates.date}, day is {day.date}")
    if not candidates.tickers:
        raise EmptyCandidatesError(f"empty candidate set on {candidates.date}")

    mover_day = prior_day if prior_day is not None else day
    articles = {a.id: a for a in day.articles}
    mover_lines = []
    for code in candidates.tickers:
        rec = mover_day.records.get(code)
        first_headline = ""
        for art_id in candidates.source_articles:
            art = articles.get(art_id)
            if art is not None and code in art.mentioned_tickers:
                first_headline = art.headline
                break
        if rec is not None:
            mover_lines.append(_mover_line(code, rec.open, rec.close, first_headline))
        else:
            # Candidate without a session record (halt): keep one line per
            # candidate so the template emits one sentence per asset.
            mover_lines.append(f"{code}|||{first_headline}")

    instruction = load_prompt("morning_brief")
    news_blocks = []
    used = _approx_tokens(instruction)
    truncated = 0
    for art_id in candidates.source_articles:
        art = articles.get(art_id)
        if art is None:
            continue
        block = f"### ({', '.join(art.mentioned_tickers) or 'general'}) {art.headline}\n{art.body}"
        cost = _approx_tokens(block)
        if news_blocks and used + cost > token_budget:
            truncated += 1
            continue
        news_blocks.append(block)
        used += cost
    if truncated:
        logger.warning(
            "morning request %s/%s: dropped %d article(s) over token budget %d",
            candidates.date,
            candidates.pipeline,
            truncated,
            token_budget,
        )

    sections = (
        ("instruction", instruction),
        ("candidates", ", ".join(candidates.tickers)),
        ("movers", "\n".join(mover_lines)),
        ("news", "\n\n".join(news_blocks)),
    )
    return GenerationRequest(
        date=digest_date or day.date,
        kind=KIND_MORNING,
        pipeline=candidates.pipeline,
        sections=sections,
        token_budget_hint=token_budget,
    )


def _intraday_table(day: TradingDay, k: int) -> str:
    """Per-metric top-K rows: ticker, open->close change, volume, net flow."""
    lines = []
    for metric in METRICS:
        lines.append(f"[{metric}]")
        lines.append(f"{'code':<12}{'change':>9}{'volume':>14}{'net_flow':>14}")
        for code in rank_top_k(day, metric, k):
            rec = day.records[code]
            change = (rec.close - rec.open) / rec.open * 100.0
            flow = rec.inst_buy - rec.inst_sell
            lines.append(f"{code:<12}{change:>+8.2f}%{rec.volume:>14,}{flow:>+14,}")
        lines.append("")
    return "\n".join(lines).rstrip("\n")


def build_closing_request(
    morning: Digest,
    day: TradingDay,
    config: SelectionConfig,
    *,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> GenerationRequest:
    """Assemble the closing-bell request: morning brief plus intraday top-K data."""
    if morning.kind != KIND_MORNING:
        raise KindMismatchError(f"expected a morning digest, got kind {morning.kind!r}")
    if morning.date != day.date:
        raise DateMismatchError(f"morning digest dated {morning.date}, day is {day.date}")
    sections = (
        ("instruction", load_prompt("closing_bell")),
        ("morning_brief", morning.text),
        ("intraday_data", _intraday_table(day, config.k)),
    )
    return GenerationRequest(
        date=day.date,
        kind=KIND_CLOSING,
        pipeline=morning.pipeline,
        sections=sections,
        token_budget_hint=token_budget,
    )


def _direction(pct: float) -> str:
    if pct > 0:
        return "rose"
    if pct < 0:
        return "fell"
    return "was flat"


def template_generate(request: GenerationRequest) -> str:
    """Deterministic reference digest: header plus one sentence per asset."""
    if request.kind == KIND_MORNING:
        header = f"Morning brief for {request.date.isoformat()}."
        lines = [header, ""]
        movers = (request.section("movers") or "").splitlines()
        if not movers:
            lines.append("No notable movers in the prior session.")
        for line in movers:
            code, open_s, close_s, headline = line.split("|", 3)
            if open_s and close_s:
                open_, close = float(open_s), float(close_s)
                pct = (close - open_) / open_ * 100.0
                sentence = f"{code} {_direction(pct)} {pct:+.2f}% in the prior session"
            else:
                sentence = f"{code} did not trade in the prior session"
            if headline:
                sentence += f', with coverage noting "{headline}"'
            lines.append(sentence + ".")
        return "\n".join(lines)

    header = f"Closing bell report for {request.date.isoformat()}."
    lines = [header, ""]
    rows = _parse_intraday_table(request.section("intraday_data") or "")
    seen: list[str] = []
    for code, change, volume, flow in rows:
        if code in seen:
            continue
        seen.append(code)
        lines.append(
            f"{code} {_direction(change)} {change:+.2f}% on volume {volume:,} "
            f"with a net institutional flow of {flow:+,} shares."
        )
    if not seen:
        lines.append("No notable movers in the session.")
    lines.append("")
    prose = []
    for metric, leaders in _table_leaders(request.section("intraday_data") or "").items():
        if leaders:
            prose.append(f"Leading by {metric.replace('_', ' ')}: {', '.join(leaders)}.")
    lines.append(
        " ".join(prose) + " Positioning into the next open should weigh these moves against the morning view."
    )
    return "\n".join(lines)


def _parse_intraday_table(table: str) -> list[tuple[str, float, int, int]]:
    rows = []
    for line in table.splitlines():
        line = line.rstrip()
        if not line or line.startswith("[") or line.lstrip().startswith("code"):
            continue
        parts = line.split()
        if len(parts) != 4:
            continue
        code, change_s, vol_s, flow_s = parts
        rows.append((code, float(change_s.rstrip("%")), int(vol_s.replace(",", "")), int(flow_s.replace(",", ""))))
    return rows


def _table_leaders(table: str) -> dict[str, list[str]]:
    leaders: dict[str, list[str]] = {}
    current = None
    for line in table.splitlines():
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            leaders[current] = []
        elif current and line and not line.lstrip().startswith("code"):
            parts = line.split()
            if len(parts) == 4 and len(leaders[current]) < 3:
                leaders[current].append(parts[0])
    return leaders


class TemplateBackend:
    """Offline deterministic generator used as the reference/test backend."""

    name = "template"
    deterministic = True

    def complete(self, request: GenerationRequest) -> str:
        return template_generate(request)


class HttpGeneratorBackend:
    """External completion endpoint: POST {system, user, temperature}."""

    deterministic = False

    def __init__(self, name: str, url: str | None = None, api_key: str | None = None, timeout: float = 60.0):
        self.name = name
        self.url = url or os.environ.get("DIGEST_LLM_URL", "")
        self.api_key = api_key or os.environ.get("DIGEST_LLM_KEY", "")
        self.timeout = timeout
        if not self.url:
            raise BackendError("no endpoint URL; set DIGEST_LLM_URL")

    def complete(self, request: GenerationRequest) -> str:
        system = request.section("instruction") or ""
        user = "\n\n".join(f"[{n}]\n{t}" for n, t in request.sections if n != "instruction")
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = _requests.post(
                self.url,
                json={"system": system, "user": user, "temperature": 0.0},
                headers=headers,
                timeout=self.timeout,
            )
        except _requests.Timeout as exc:
            raise BackendTimeoutError(str(exc)) from exc
        except _requests.RequestException as exc:
            raise BackendError(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendError(f"backend returned HTTP {resp.status_code}")
        return resp.json().get("completion", "")


class AuditLog:
    """Append-only line-delimited JSON log, serialized through one writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def read(self) -> list[dict]:
        if not self.path.exists():
            return []
        with self.path.open(encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


def generate(
    request: GenerationRequest,
    backend: GeneratorBackend,
    audit: AuditLog | None = None,
    retry_budget: int = 2,
    backoff_base: float = 0.5,
) -> Digest:
    """Run one generation call, with retries for non-deterministic backends."""
    attempts = 1 if backend.deterministic else 1 + max(retry_budget, 0)
    text = None
    last_timeout: BackendTimeoutError | None = None
    failures = 0
    for attempt in range(attempts):
        try:
            text = backend.complete(request)
            break
        except BackendTimeoutError as exc:
            last_timeout = exc
            failures += 1
            logger.warning("backend %s timed out (attempt %d/%d)", backend.name, attempt + 1, attempts)
        except BackendError:
            if backend.deterministic:
                raise
            failures += 1
            logger.warning("backend %s transient failure (attempt %d/%d)", backend.name, attempt + 1, attempts)
        if attempt < attempts - 1:
            time.sleep(backoff_base * (2**attempt))
    if text is None:
        if last_timeout is not None:
            raise BackendTimeoutError(f"backend {backend.name} timed out after {failures} attempt(s)")
        raise BudgetExceededError(f"backend {backend.name} failed {failures} time(s); retry budget exhausted")
    if not text.strip():
        raise EmptyCompletionError(f"backend {backend.name} returned empty text")

    source = f"{backend.name}+{request.pipeline}"
    digest = Digest(
        id=digest_id(request.date, request.kind, source),
        date=request.date,
        kind=request.kind,
        source=source,
        pipeline=request.pipeline,
        text=text,
        request_fingerprint=request.fingerprint,
    )
    if audit is not None:
        audit.append(
            {
                "digest_id": digest.id,
                "fingerprint": request.fingerprint,
                "backend": backend.name,
                "request_sections_hashes": request.section_hashes(),
                "response_text": text,
                "ts": datetime.now(timezone.utc).isoformat(),
            }
        )
    return digest


def journalist_digest(day: TradingDay, kind: str) -> Digest:
    """Wrap a verbatim transcript as a digest; text passes through untouched."""
    text = day.morning_transcript if kind == KIND_MORNING else day.closing_transcript
    if text is None:
        raise KindMismatchError(f"no {kind} transcript on {day.date}")
    return Digest(
        id=digest_id(day.date, kind, PIPELINE_JOURNALIST),
        date=day.date,
        kind=kind,
        source=PIPELINE_JOURNALIST,
        pipeline=PIPELINE_JOURNALIST,
        text=text,
    )
