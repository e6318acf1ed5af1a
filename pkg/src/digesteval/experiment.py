"""Experiment orchestration: ingest -> select -> generate -> decide ->
score -> report, each stage also runnable standalone on the previous
stage's artifacts.

All randomness flows from one root seed; each stage derives its own
sub-seed by hashing the stage name, so adding stages never shifts another
stage's draws. With builtin backends and agents the whole run is a pure
function of (config, dataset files).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .agents import (
    AgentConfig,
    BUILTIN_AGENTS,
    BUILTIN_RANDOM,
    DecisionSet,
    decide,
    decision_log_record,
)
from .digests import (
    AuditLog,
    Digest,
    GeneratorBackend,
    HttpGeneratorBackend,
    KIND_CLOSING,
    KIND_MORNING,
    TemplateBackend,
    build_closing_request,
    build_morning_request,
    generate,
    journalist_digest,
)
from .errors import ConfigError, DigestEvalError, EmptyCandidatesError
from .figures import save_accuracy_figure, save_transactions_figure
from .marketdata import LoadResult, MarketDataset, TradingDay, load_dataset
from .reporting import (
    accuracy_table,
    behavior_table,
    leaderboard,
    leaderboard_to_json,
    macro_daily_accuracy_table,
    render_accuracy_table,
    render_behavior_table,
)
from .scoring import (
    ScoringConfig,
    SessionScore,
    evaluate_sessions,
    score_decisions,
    scores_to_csv,
)
from .selection import (
    DEFAULT_K,
    PIPELINE_INSIGHT,
    PIPELINE_PERFORMANCE,
    CandidateSet,
    SelectionConfig,
    performance_based_candidates,
    professional_insight_candidates,
    write_selection_log,
)

logger = logging.getLogger(__name__)

DEFAULT_PIPELINES = (PIPELINE_PERFORMANCE, PIPELINE_INSIGHT)
DEFAULT_AGENTS = ("noaction", "random", "momentum")

_CONFIG_KEYS = {
    "companies",
    "prices",
    "news",
    "transcripts",
    "out",
    "k",
    "pipelines",
    "generator",
    "agents",
    "rise_threshold",
    "fall_threshold",
    "seed",
    "strict",
    "p_buy",
    "p_sell",
    "token_budget",
    "title",
    "annotators",
    "macro_daily",
}


@dataclass(frozen=True)
class ExperimentConfig:
    companies: Path
    prices: Path
    news: Path
    outdir: Path
    transcripts: Path | None = None
    k: int = DEFAULT_K
    pipelines: tuple[str, ...] = DEFAULT_PIPELINES
    generator: str = "template"  # "template" or an endpoint URL
    agents: tuple[str, ...] = DEFAULT_AGENTS  # builtin ids or name=url pairs
    rise_threshold: float = 0.0055
    fall_threshold: float = 0.0050
    seed: int = 0
    strict: bool = False
    p_buy: float = 0.1
    p_sell: float = 0.05
    token_budget: int = 6000
    title: str = "digest decision study"
    annotators: tuple[str, ...] = ()
    macro_daily: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.token_budget < 1:
            raise ConfigError("token_budget must be >= 1")
        if self.rise_threshold <= 0 or self.fall_threshold <= 0:
            raise ConfigError("thresholds must be > 0")
        for pipeline in self.pipelines:
            if pipeline not in (PIPELINE_PERFORMANCE, PIPELINE_INSIGHT):
                raise ConfigError(f"unknown pipeline {pipeline!r}")
        if not self.pipelines:
            raise ConfigError("need at least one pipeline")
        if not self.agents:
            raise ConfigError("need at least one agent")
        for spec in self.agents:
            if "=" not in spec and spec not in BUILTIN_AGENTS:
                raise ConfigError(
                    f"agent {spec!r} is neither builtin ({', '.join(BUILTIN_AGENTS)}) nor name=url"
                )

    @property
    def scoring(self) -> ScoringConfig:
        return ScoringConfig(
            rise_threshold=self.rise_threshold, fall_threshold=self.fall_threshold
        )

    @property
    def selection(self) -> SelectionConfig:
        return SelectionConfig(k=self.k)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; # starts a comment; later keys win."""
    out: dict[str, str] = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


def config_from_mapping(mapping: dict[str, str], base_dir: Path | None = None) -> ExperimentConfig:
    unknown = set(mapping) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for required in ("companies", "prices", "news", "out"):
        if required not in mapping:
            raise ConfigError(f"missing required config key {required!r}")
    base = base_dir or Path(".")

    def path_of(key: str) -> Path:
        p = Path(mapping[key])
        return p if p.is_absolute() else base / p

    try:
        kwargs: dict = {
            "companies": path_of("companies"),
            "prices": path_of("prices"),
            "news": path_of("news"),
            "outdir": path_of("out"),
        }
        if "transcripts" in mapping:
            kwargs["transcripts"] = path_of("transcripts")
        if "k" in mapping:
            kwargs["k"] = int(mapping["k"])
        if "pipelines" in mapping:
            kwargs["pipelines"] = tuple(
                p.strip() for p in mapping["pipelines"].split(",") if p.strip()
            )
        if "generator" in mapping:
            kwargs["generator"] = mapping["generator"]
        if "agents" in mapping:
            kwargs["agents"] = tuple(a.strip() for a in mapping["agents"].split(",") if a.strip())
        if "rise_threshold" in mapping:
            kwargs["rise_threshold"] = float(mapping["rise_threshold"])
        if "fall_threshold" in mapping:
            kwargs["fall_threshold"] = float(mapping["fall_threshold"])
        if "seed" in mapping:
            kwargs["seed"] = int(mapping["seed"])
        if "strict" in mapping:
            kwargs["strict"] = _parse_bool(mapping["strict"], "strict")
        if "macro_daily" in mapping:
            kwargs["macro_daily"] = _parse_bool(mapping["macro_daily"], "macro_daily")
        if "p_buy" in mapping:
            kwargs["p_buy"] = float(mapping["p_buy"])
        if "p_sell" in mapping:
            kwargs["p_sell"] = float(mapping["p_sell"])
        if "token_budget" in mapping:
            kwargs["token_budget"] = int(mapping["token_budget"])
        if "title" in mapping:
            kwargs["title"] = mapping["title"]
        if "annotators" in mapping:
            kwargs["annotators"] = tuple(
                a.strip() for a in mapping["annotators"].split(",") if a.strip()
            )
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return ExperimentConfig(**kwargs)


def sub_seed(root_seed: int, stage: str) -> int:
    """Stable per-stage seed: sha256 of "root:stage", first 8 bytes."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def agent_registry(config: ExperimentConfig) -> list[AgentConfig]:
    agents = []
    for spec in config.agents:
        if "=" in spec:
            name, url = spec.split("=", 1)
            agents.append(AgentConfig(name=name.strip(), backend=url.strip()))
        else:
            agents.append(
                AgentConfig(
                    name=spec,
                    backend=spec,
                    seed=sub_seed(config.seed, f"agent:{spec}"),
                    p_buy=config.p_buy,
                    p_sell=config.p_sell,
                )
            )
    names = [a.name for a in agents]
    if len(set(names)) != len(names):
        raise ConfigError("agent names must be unique")
    return agents


def _write_json(path: Path, obj: object) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def read_digests(path: str | Path) -> list[Digest]:
    with Path(path).open(encoding="utf-8") as fh:
        return [Digest.from_json(json.loads(line)) for line in fh if line.strip()]


def read_decisions(path: str | Path) -> list[DecisionSet]:
    with Path(path).open(encoding="utf-8") as fh:
        return [DecisionSet.from_json(json.loads(line)) for line in fh if line.strip()]


def stage_ingest(config: ExperimentConfig) -> LoadResult:
    result = load_dataset(
        config.companies,
        config.prices,
        config.news,
        config.transcripts,
        strict=config.strict,
    )
    if config.k > len(result.dataset.universe):
        raise ConfigError(
            f"k={config.k} exceeds universe size {len(result.dataset.universe)}"
        )
    config.outdir.mkdir(parents=True, exist_ok=True)
    _write_json(
        config.outdir / "ingest_report.json",
        {
            "n_tickers": len(result.dataset.universe),
            "n_days": len(result.dataset.days),
            "n_price_rows": sum(len(d.records) for d in result.dataset.days),
            "n_articles": sum(len(d.articles) for d in result.dataset.days),
            "rejects": [
                {"source": r.source, "row": r.row, "reason": r.reason} for r in result.rejects
            ],
        },
    )
    return result


def digest_days(dataset: MarketDataset) -> list[tuple[TradingDay, TradingDay]]:
    """(digest day, prior trading day) pairs; the first session has no prior."""
    pairs = []
    for day in dataset.days:
        if not day.records:
            continue
        prior = dataset.prior_trading_day(day.date)
        if prior is not None:
            pairs.append((day, prior))
    return pairs


def stage_select(dataset: MarketDataset, config: ExperimentConfig) -> list[CandidateSet]:
    """One candidate set per (digest day, pipeline), in day-major order.

    Performance-based sets are dated on the prior session they rank;
    professional-insight sets are dated on the digest day whose transcript
    they mine.
    """
    sets: list[CandidateSet] = []
    for day, prior in digest_days(dataset):
        for pipeline in config.pipelines:
            if pipeline == PIPELINE_PERFORMANCE:
                sets.append(
                    performance_based_candidates(
                        prior, config.selection, universe=dataset.universe
                    )
                )
            else:
                if day.morning_transcript is None:
                    logger.warning(
                        "%s: no morning transcript; professional-insight skipped", day.date
                    )
                    continue
                sets.append(professional_insight_candidates(day, dataset.universe))
    write_selection_log(config.outdir / "selection.log", sets)
    return sets


def make_generator_backend(config: ExperimentConfig) -> GeneratorBackend:
    if config.generator == "template":
        return TemplateBackend()
    return HttpGeneratorBackend(name="llm", url=config.generator)


def stage_generate(
    dataset: MarketDataset,
    candidate_sets: list[CandidateSet],
    config: ExperimentConfig,
    backend: GeneratorBackend | None = None,
) -> list[Digest]:
    """Journalist passthroughs plus generated morning/closing digests."""
    backend = backend or make_generator_backend(config)
    audit = AuditLog(config.outdir / "generation_audit.jsonl")
    audit.path.unlink(missing_ok=True)
    by_key = {(c.date, c.pipeline): c for c in candidate_sets}
    digests: list[Digest] = []
    for day, prior in digest_days(dataset):
        if day.morning_transcript is not None:
            digests.append(journalist_digest(day, KIND_MORNING))
        morning_by_pipeline: dict[str, Digest] = {}
        for pipeline in config.pipelines:
            if pipeline == PIPELINE_PERFORMANCE:
                candidates = by_key.get((prior.date, pipeline))
                anchor, prior_arg = prior, None
            else:
                candidates = by_key.get((day.date, pipeline))
                anchor, prior_arg = day, prior
            if candidates is None:
                continue
            try:
                request = build_morning_request(
                    candidates,
                    anchor,
                    digest_date=day.date,
                    prior_day=prior_arg,
                    token_budget=config.token_budget,
                )
            except EmptyCandidatesError:
                logger.warning("%s/%s: empty candidates; cell skipped", day.date, pipeline)
                continue
            except DigestEvalError as exc:
                exc.args = (f"[{day.date} {pipeline} morning] {exc}",)
                raise
            morning = generate(request, backend, audit)
            morning_by_pipeline[pipeline] = morning
            digests.append(morning)
        if day.closing_transcript is not None:
            digests.append(journalist_digest(day, KIND_CLOSING))
        for pipeline in config.pipelines:
            morning = morning_by_pipeline.get(pipeline)
            if morning is None:
                continue
            try:
                request = build_closing_request(
                    morning, day, config.selection, token_budget=config.token_budget
                )
                digests.append(generate(request, backend, audit))
            except DigestEvalError as exc:
                exc.args = (f"[{day.date} {pipeline} closing] {exc}",)
                raise
    _write_jsonl(config.outdir / "digests.jsonl", [d.to_json() for d in digests])
    return digests


def stage_decide(
    digests: list[Digest], dataset: MarketDataset, config: ExperimentConfig
) -> list[DecisionSet]:
    agents = agent_registry(config)
    decisions: list[DecisionSet] = []
    log_rows: list[dict] = []
    reply_rows: list[dict] = []
    for digest in digests:
        for agent in agents:
            try:
                decision, raw = decide(agent, digest, dataset.universe)
            except DigestEvalError as exc:
                exc.args = (f"[{digest.id} {agent.name}] {exc}",)
                raise
            decisions.append(decision)
            log_rows.append(decision_log_record(decision, raw))
            reply_rows.append(
                {"investor_id": agent.name, "digest_id": digest.id, "reply": raw}
            )
    _write_jsonl(config.outdir / "decisions.jsonl", log_rows)
    _write_jsonl(config.outdir / "agent_replies.jsonl", reply_rows)
    return decisions


def stage_score(
    decisions: list[DecisionSet],
    digests: list[Digest],
    dataset: MarketDataset,
    config: ExperimentConfig,
) -> list[SessionScore]:
    digest_index = {d.id: d for d in digests}
    scores = evaluate_sessions(decisions, digest_index, dataset, config.scoring)
    (config.outdir / "scores.csv").write_text(scores_to_csv(scores), encoding="utf-8")
    return scores


def stage_report(
    scores: list[SessionScore],
    decisions: list[DecisionSet],
    digests: list[Digest],
    dataset: MarketDataset,
    config: ExperimentConfig,
    human_scores: list[SessionScore] | None = None,
    human_investors: set[str] | None = None,
) -> None:
    digest_index = {d.id: d for d in digests}
    all_scores = list(scores) + list(human_scores or [])
    table1 = accuracy_table(all_scores)
    (config.outdir / "table1.md").write_text(render_accuracy_table(table1), encoding="utf-8")
    if config.macro_daily:
        rows = score_decisions(decisions, digest_index, dataset, config.scoring)
        macro = macro_daily_accuracy_table(rows)
        (config.outdir / "table1_macro.md").write_text(
            render_accuracy_table(macro), encoding="utf-8"
        )
    table2 = behavior_table(decisions, digest_index, human_investors)
    (config.outdir / "table2.md").write_text(render_behavior_table(table2), encoding="utf-8")

    if human_scores:
        board = leaderboard(human_scores, scores)
        (config.outdir / "leaderboard.json").write_text(
            leaderboard_to_json(board), encoding="utf-8"
        )
    else:
        overall: dict[str, dict[str, int]] = {}
        for s in scores:
            tally = overall.setdefault(s.investor_id, {"n_correct": 0, "n_scored": 0})
            tally["n_correct"] += s.n_correct
            tally["n_scored"] += s.n_scored
        per_llm = [
            t["n_correct"] / t["n_scored"] for t in overall.values() if t["n_scored"] > 0
        ]
        _write_json(
            config.outdir / "leaderboard.json",
            {
                "llm_average_accuracy": sum(per_llm) / len(per_llm) if per_llm else None,
                "entries": [],
            },
        )

    figures_dir = config.outdir / "figures"
    figures_dir.mkdir(exist_ok=True)
    save_accuracy_figure(table1, figures_dir / "accuracy.png")
    save_transactions_figure(table2, figures_dir / "transactions.png")


def run_experiment(config: ExperimentConfig) -> dict:
    """Full pipeline; returns the manifest that is also written to disk."""
    result = stage_ingest(config)
    dataset = result.dataset
    candidate_sets = stage_select(dataset, config)
    digests = stage_generate(dataset, candidate_sets, config)
    decisions = stage_decide(digests, dataset, config)
    scores = stage_score(decisions, digests, dataset, config)
    stage_report(scores, decisions, digests, dataset, config)

    outputs = sorted(
        str(p.relative_to(config.outdir))
        for p in config.outdir.rglob("*")
        if p.is_file() and p.name != "manifest.json"
    )
    manifest = {
        "version": __version__,
        "seed": config.seed,
        "k": config.k,
        "pipelines": list(config.pipelines),
        "generator": config.generator,
        "agents": list(config.agents),
        "rise_threshold": config.rise_threshold,
        "fall_threshold": config.fall_threshold,
        "dataset": {
            "companies": str(config.companies),
            "prices": str(config.prices),
            "news": str(config.news),
            "transcripts": str(config.transcripts) if config.transcripts else None,
        },
        "counts": {
            "digests": len(digests),
            "decisions": len(decisions),
            "score_rows": len(scores),
        },
        "outputs": outputs,
    }
    _write_json(config.outdir / "manifest.json", manifest)
    return manifest
