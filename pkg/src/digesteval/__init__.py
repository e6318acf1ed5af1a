"""digesteval: evaluate market-digest text by the trading decisions it induces."""

__version__ = "0.1.0"

from .agents import AgentConfig, DecisionSet, decide, parse_decision_response
from .digests import (
    Digest,
    GenerationRequest,
    TemplateBackend,
    build_closing_request,
    build_morning_request,
    generate,
    journalist_digest,
    template_generate,
)
from .errors import DigestEvalError
from .marketdata import (
    EquityDayRecord,
    MarketDataset,
    NewsArticle,
    Ticker,
    TradingDay,
    Universe,
    load_dataset,
    load_universe,
)
from .reporting import accuracy_table, behavior_table, leaderboard
from .scoring import (
    ScoringConfig,
    SessionScore,
    evaluate_sessions,
    label_return,
    realized_return,
    score_decision,
)
from .selection import (
    CandidateSet,
    SelectionConfig,
    extract_mentioned_companies,
    performance_based_candidates,
    professional_insight_candidates,
    rank_top_k,
)
from .synth import make_synthetic_market

__all__ = [
    "AgentConfig",
    "CandidateSet",
    "DecisionSet",
    "Digest",
    "DigestEvalError",
    "EquityDayRecord",
    "GenerationRequest",
    "MarketDataset",
    "NewsArticle",
    "ScoringConfig",
    "SelectionConfig",
    "SessionScore",
    "TemplateBackend",
    "Ticker",
    "TradingDay",
    "Universe",
    "accuracy_table",
    "behavior_table",
    "build_closing_request",
    "build_morning_request",
    "decide",
    "evaluate_sessions",
    "extract_mentioned_companies",
    "generate",
    "journalist_digest",
    "label_return",
    "leaderboard",
    "load_dataset",
    "load_universe",
    "make_synthetic_market",
    "parse_decision_response",
    "performance_based_candidates",
    "professional_insight_candidates",
    "rank_top_k",
    "realized_return",
    "score_decision",
    "template_generate",
]
