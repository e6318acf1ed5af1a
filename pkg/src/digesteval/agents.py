"""Investor agents and decision parsing.

Agents receive a source-stripped view of a digest (id, kind, text; never
the provenance field) and return a DecisionSet. Replies from external
backends must follow a three-line grammar::

    BUY: <comma-separated codes or none>
    SELL: <codes or none>
    REMARK: <free text>

Replies are repaired, never trusted: unknown codes are dropped with a
warning, codes on both sides are removed from both, and an empty decision
gets a default remark. Builtin agents are pure functions of
(seed, digest_id, universe, config).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import time
from dataclasses import dataclass, field
from typing import Protocol

import requests as _requests

from .digests import Digest, load_prompt
from .errors import BackendError, BackendTimeoutError, UnparseableReplyError
from .marketdata import Universe

logger = logging.getLogger(__name__)

BUILTIN_NOACTION = "noaction"
BUILTIN_RANDOM = "random"
BUILTIN_MOMENTUM = "momentum"
BUILTIN_AGENTS = (BUILTIN_NOACTION, BUILTIN_RANDOM, BUILTIN_MOMENTUM)

DEFAULT_EMPTY_REMARK = "no action"

_MOVE_RE = re.compile(r"(?<!\w)([A-Z0-9.]{1,12})(?!\w)[^.%\n]*?([+-]\d+(?:\.\d+)?)%")


@dataclass(frozen=True)
class DecisionSet:
    investor_id: str
    digest_id: str
    buys: tuple[str, ...]
    sells: tuple[str, ...]
    remark: str = ""

    def __post_init__(self):
        if set(self.buys) & set(self.sells):
            raise ValueError("a ticker cannot be on both sides")
        if len(set(self.buys)) != len(self.buys) or len(set(self.sells)) != len(self.sells):
            raise ValueError("duplicate tickers within a side")
        if not self.buys and not self.sells and not self.remark.strip():
            raise ValueError("empty decisions require a remark")

    def to_json(self) -> dict:
        return {
            "investor_id": self.investor_id,
            "digest_id": self.digest_id,
            "buys": list(self.buys),
            "sells": list(self.sells),
            "remark": self.remark,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DecisionSet":
        return cls(
            investor_id=obj["investor_id"],
            digest_id=obj["digest_id"],
            buys=tuple(obj["buys"]),
            sells=tuple(obj["sells"]),
            remark=obj.get("remark", ""),
        )


@dataclass(frozen=True)
class AgentConfig:
    name: str
    backend: str = BUILTIN_NOACTION  # builtin id or endpoint URL
    temperature: float = 0.0  # pinned for external backends
    seed: int = 0
    max_positions: int | None = None
    p_buy: float = 0.1
    p_sell: float = 0.05
    restrict_to_digest: bool = False

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("external agent temperature is pinned to 0.0")
        if self.p_buy < 0 or self.p_sell < 0 or self.p_buy + self.p_sell > 1:
            raise ValueError("need p_buy, p_sell >= 0 and p_buy + p_sell <= 1")


@dataclass(frozen=True)
class DigestView:
    """What an agent is allowed to see: no source, no calendar date."""

    digest_id: str
    kind: str
    text: str

    @classmethod
    def of(cls, digest: Digest) -> "DigestView":
        return cls(digest_id=digest.id, kind=digest.kind, text=digest.text)


@dataclass(frozen=True)
class ParsedReply:
    buys: tuple[str, ...]
    sells: tuple[str, ...]
    remark: str
    warnings: tuple[str, ...] = ()


def _split_codes(value: str) -> list[str]:
    value = value.strip()
    if not value or value.lower() in ("none", "n/a", "-"):
        return []
    return [c.strip().upper() for c in re.split(r"[,\s]+", value) if c.strip()]


def parse_decision_response(text: str, universe: Universe) -> ParsedReply:
    """Extract and repair the BUY:/SELL:/REMARK: lines of an agent reply."""
    buy_line = sell_line = remark_line = None
    for line in text.splitlines():
        stripped = line.strip()
        lower = stripped.lower()
        if lower.startswith("buy:") and buy_line is None:
            buy_line = stripped[4:]
        elif lower.startswith("sell:") and sell_line is None:
            sell_line = stripped[5:]
        elif lower.startswith("remark:") and remark_line is None:
            remark_line = stripped[7:]
    if buy_line is None and sell_line is None:
        raise UnparseableReplyError("reply has neither a BUY: nor a SELL: line")

    warnings: list[str] = []

    def keep_known(codes: list[str], side: str) -> list[str]:
        out = []
        for code in codes:
            if code not in universe:
                warnings.append(f"dropped unknown ticker {code} from {side}")
            elif code in out:
                warnings.append(f"deduplicated {code} in {side}")
            else:
                out.append(code)
        return out

    buys = keep_known(_split_codes(buy_line or ""), "buys")
    sells = keep_known(_split_codes(sell_line or ""), "sells")
    conflicts = [c for c in buys if c in sells]
    for code in conflicts:
        warnings.append(f"{code} listed on both sides; dropped from both")
    buys = [c for c in buys if c not in conflicts]
    sells = [c for c in sells if c not in conflicts]
    for w in warnings:
        logger.warning("reply repair: %s", w)
    return ParsedReply(
        buys=tuple(buys),
        sells=tuple(sells),
        remark=(remark_line or "").strip(),
        warnings=tuple(warnings),
    )


def _derive_rng(seed: int, digest_id: str) -> random.Random:
    # Portable: SHA-256 of "seed:digest_id" seeds a Mersenne Twister.
    digest = hashlib.sha256(f"{seed}:{digest_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def random_agent_decide(
    seed: int,
    universe: Universe,
    p_buy: float,
    p_sell: float,
    *,
    digest_id: str = "",
    investor_id: str = BUILTIN_RANDOM,
) -> DecisionSet:
    """Independently assign each ticker buy (p_buy), sell (p_sell), or skip."""
    if p_buy < 0 or p_sell < 0 or p_buy + p_sell > 1:
        raise ValueError("need p_buy, p_sell >= 0 and p_buy + p_sell <= 1")
    rng = _derive_rng(seed, digest_id)
    buys, sells = [], []
    for code in universe.codes:
        u = rng.random()
        if u < p_buy:
            buys.append(code)
        elif u < p_buy + p_sell:
            sells.append(code)
    remark = "" if buys or sells else "no positions sampled"
    return DecisionSet(
        investor_id=investor_id,
        digest_id=digest_id,
        buys=tuple(buys),
        sells=tuple(sells),
        remark=remark,
    )


def momentum_decide(view: DigestView, universe: Universe, investor_id: str) -> DecisionSet:
    """Buy every asset the digest reports up, sell every one reported down."""
    buys, sells = [], []
    for code, pct_s in _MOVE_RE.findall(view.text):
        if code not in universe:
            continue
        pct = float(pct_s)
        if pct > 0 and code not in buys and code not in sells:
            buys.append(code)
        elif pct < 0 and code not in sells and code not in buys:
            sells.append(code)
    remark = "" if buys or sells else "no directional signals in the text"
    return DecisionSet(
        investor_id=investor_id,
        digest_id=view.digest_id,
        buys=tuple(buys),
        sells=tuple(sells),
        remark=remark,
    )


class AgentBackend(Protocol):
    def reply(self, prompt: str, instruction: str) -> str: ...


class HttpAgentBackend:
    """External LLM investor: POST {system, user, temperature=0}."""

    def __init__(self, url: str, api_key: str | None = None, timeout: float = 60.0):
        self.url = url
        self.api_key = api_key if api_key is not None else os.environ.get("DIGEST_LLM_KEY", "")
        self.timeout = timeout

    def reply(self, prompt: str, instruction: str) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = _requests.post(
                self.url,
                json={"system": instruction, "user": prompt, "temperature": 0.0},
                headers=headers,
                timeout=self.timeout,
            )
        except _requests.Timeout as exc:
            raise BackendTimeoutError(str(exc)) from exc
        except _requests.RequestException as exc:
            raise BackendError(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendError(f"agent backend returned HTTP {resp.status_code}")
        return resp.json().get("completion", "")


def _canonical_reply(buys: tuple[str, ...], sells: tuple[str, ...], remark: str) -> str:
    return (
        f"BUY: {', '.join(buys) or 'none'}\n"
        f"SELL: {', '.join(sells) or 'none'}\n"
        f"REMARK: {remark}"
    )


def _agent_prompt(view: DigestView, universe: Universe, restrict_to_digest: bool) -> str:
    codes = list(universe.codes)
    if restrict_to_digest:
        mentioned = {c for c, _ in _MOVE_RE.findall(view.text) if c in universe}
        codes = [c for c in codes if c in mentioned] or codes
    listing = "\n".join(f"{c} {universe.get(c).name}" for c in codes)
    return f"[stock list]\n{listing}\n\n[market text: {view.kind}]\n{view.text}"


def decide(
    agent: AgentConfig,
    digest: Digest,
    universe: Universe,
    backend: AgentBackend | None = None,
) -> tuple[DecisionSet, str]:
    """Produce one validated DecisionSet; returns (decisions, raw_reply).

    The agent only ever sees a source-stripped DigestView. External replies
    get one reformat-retry on parse failure.
    """
    if not digest.text.strip():
        raise ValueError("digest text is empty")
    view = DigestView.of(digest)

    if agent.backend == BUILTIN_NOACTION:
        decisions = DecisionSet(
            investor_id=agent.name,
            digest_id=view.digest_id,
            buys=(),
            sells=(),
            remark=DEFAULT_EMPTY_REMARK,
        )
        raw = _canonical_reply((), (), DEFAULT_EMPTY_REMARK)
    elif agent.backend == BUILTIN_RANDOM:
        decisions = random_agent_decide(
            agent.seed,
            universe,
            agent.p_buy,
            agent.p_sell,
            digest_id=view.digest_id,
            investor_id=agent.name,
        )
        raw = _canonical_reply(decisions.buys, decisions.sells, decisions.remark)
    elif agent.backend == BUILTIN_MOMENTUM:
        decisions = momentum_decide(view, universe, agent.name)
        raw = _canonical_reply(decisions.buys, decisions.sells, decisions.remark)
    else:
        if backend is None:
            backend = HttpAgentBackend(agent.backend)
        instruction = load_prompt("investor_agent")
        prompt = _agent_prompt(view, universe, agent.restrict_to_digest)
        raw = backend.reply(prompt, instruction)
        try:
            parsed = parse_decision_response(raw, universe)
        except UnparseableReplyError:
            logger.warning("agent %s reply unparseable; re-sending format instruction", agent.name)
            raw = backend.reply(prompt + "\n\nReply using the mandated three-line format only.", instruction)
            parsed = parse_decision_response(raw, universe)
        remark = parsed.remark
        if not parsed.buys and not parsed.sells and not remark.strip():
            remark = DEFAULT_EMPTY_REMARK
        decisions = DecisionSet(
            investor_id=agent.name,
            digest_id=view.digest_id,
            buys=parsed.buys,
            sells=parsed.sells,
            remark=remark,
        )

    if agent.max_positions is not None:
        decisions = _cap_positions(decisions, agent.max_positions)
    return decisions, raw


def _cap_positions(decisions: DecisionSet, cap: int) -> DecisionSet:
    total = len(decisions.buys) + len(decisions.sells)
    if total <= cap:
        return decisions
    buys = decisions.buys[:cap]
    sells = decisions.sells[: max(cap - len(buys), 0)]
    remark = decisions.remark
    if not buys and not sells and not remark.strip():
        remark = DEFAULT_EMPTY_REMARK
    return DecisionSet(
        investor_id=decisions.investor_id,
        digest_id=decisions.digest_id,
        buys=buys,
        sells=sells,
        remark=remark,
    )


def decision_log_record(decisions: DecisionSet, raw_reply: str) -> dict:
    record = decisions.to_json()
    record["raw_reply_hash"] = hashlib.sha256(raw_reply.encode("utf-8")).hexdigest()
    return record


def builtin_agent_config(name: str, seed: int, p_buy: float = 0.1, p_sell: float = 0.05) -> AgentConfig:
    if name not in BUILTIN_AGENTS:
        raise ValueError(f"unknown builtin agent {name!r}")
    return AgentConfig(name=name, backend=name, seed=seed, p_buy=p_buy, p_sell=p_sell)
