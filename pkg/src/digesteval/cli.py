"""Command-line front end.

Every stage runs standalone on the previous stage's artifacts inside the
output directory, so expensive backend stages can be cached and replayed.
Exit codes: 0 success, 1 validation error, 2 backend failure, 3 data error.
"""

from __future__ import annotations

import sys
from datetime import date as Date
from pathlib import Path

import click

from .errors import BackendError, ConfigError, DataError, DigestEvalError
from .experiment import (
    ExperimentConfig,
    config_from_mapping,
    parse_config_file,
    read_decisions,
    read_digests,
    run_experiment,
    stage_decide,
    stage_generate,
    stage_ingest,
    stage_report,
    stage_score,
    stage_select,
    sub_seed,
)
from .scoring import evaluate_sessions, scores_from_csv
from .selection import read_selection_log
from .sessions import ExperimentSessions, SessionStore, blinded_tasks
from .synth import (
    DEFAULT_FALL_RATE,
    DEFAULT_HALT_RATE,
    DEFAULT_RISE_RATE,
    DEFAULT_START,
    make_synthetic_market,
)


def _build_config(
    config_path: str | None,
    *,
    companies: str | None = None,
    prices: str | None = None,
    news: str | None = None,
    transcripts: str | None = None,
    out: str | None = None,
    seed: int | None = None,
    strict: bool = False,
    k: int | None = None,
    pipelines: str | None = None,
    agents: str | None = None,
    generator: str | None = None,
) -> ExperimentConfig:
    mapping = parse_config_file(config_path) if config_path else {}
    base = Path(config_path).parent if config_path else Path(".")
    overrides: dict[str, str] = {}
    for key, value in (
        ("companies", companies),
        ("prices", prices),
        ("news", news),
        ("transcripts", transcripts),
        ("out", out),
    ):
        if value is not None:
            overrides[key] = str(Path(value).absolute())
    if seed is not None:
        overrides["seed"] = str(seed)
    if strict:
        overrides["strict"] = "true"
    if k is not None:
        overrides["k"] = str(k)
    if pipelines is not None:
        overrides["pipelines"] = pipelines
    if agents is not None:
        overrides["agents"] = agents
    if generator is not None:
        overrides["generator"] = generator
    mapping.update(overrides)
    return config_from_mapping(mapping, base)


def _dataset(config: ExperimentConfig):
    return stage_ingest(config).dataset


_shared = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key = value configuration file"),
    click.option("--companies", type=click.Path(), help="companies CSV (code,name)"),
    click.option("--prices", type=click.Path(), help="daily bars CSV"),
    click.option("--news", type=click.Path(), help="news JSONL"),
    click.option("--transcripts", type=click.Path(), help="journalist transcripts JSONL"),
    click.option("--out", type=click.Path(), help="output directory"),
    click.option("--seed", type=int, default=None, help="root seed"),
    click.option("--strict", is_flag=True, help="fail on the first malformed input row"),
    click.option("--k", type=int, default=None, help="top-K per selection metric"),
    click.option("--pipelines", default=None, help="comma-separated pipeline list"),
    click.option("--agents", default=None, help="comma-separated agents (builtin or name=url)"),
    click.option("--generator", default=None, help='"template" or an endpoint URL'),
]


def shared_options(fn):
    for option in reversed(_shared):
        fn = option(fn)
    return fn


@click.group()
def cli():
    """Evaluate market digests by the trading decisions they induce."""


@cli.command()
@shared_options
def ingest(config_path, **kw):
    """Validate the dataset and write ingest_report.json."""
    config = _build_config(config_path, **kw)
    result = stage_ingest(config)
    click.echo(
        f"ingest: {len(result.dataset.universe)} tickers, "
        f"{len(result.dataset.days)} days, {len(result.rejects)} rejected rows"
    )


@cli.command()
@shared_options
def select(config_path, **kw):
    """Build candidate sets and write selection.log."""
    config = _build_config(config_path, **kw)
    sets = stage_select(_dataset(config), config)
    click.echo(f"select: {len(sets)} candidate sets -> {config.outdir / 'selection.log'}")


@cli.command()
@shared_options
def generate(config_path, **kw):
    """Generate digests from selection.log and write digests.jsonl."""
    config = _build_config(config_path, **kw)
    dataset = _dataset(config)
    sets = read_selection_log(config.outdir / "selection.log")
    digests = stage_generate(dataset, sets, config)
    click.echo(f"generate: {len(digests)} digests -> {config.outdir / 'digests.jsonl'}")


@cli.command()
@shared_options
def decide(config_path, **kw):
    """Collect agent decisions over digests.jsonl."""
    config = _build_config(config_path, **kw)
    dataset = _dataset(config)
    digests = read_digests(config.outdir / "digests.jsonl")
    decisions = stage_decide(digests, dataset, config)
    click.echo(f"decide: {len(decisions)} decision sets -> {config.outdir / 'decisions.jsonl'}")


@cli.command()
@shared_options
def score(config_path, **kw):
    """Score decisions.jsonl against realized returns."""
    config = _build_config(config_path, **kw)
    dataset = _dataset(config)
    digests = read_digests(config.outdir / "digests.jsonl")
    decisions = read_decisions(config.outdir / "decisions.jsonl")
    scores = stage_score(decisions, digests, dataset, config)
    click.echo(f"score: {len(scores)} score rows -> {config.outdir / 'scores.csv'}")


@cli.command()
@shared_options
@click.option("--session-log", type=click.Path(), default=None, help="annotation event log to fold in")
def report(config_path, session_log, **kw):
    """Render tables, leaderboard, and figures from scored artifacts."""
    config = _build_config(config_path, **kw)
    dataset = _dataset(config)
    digests = read_digests(config.outdir / "digests.jsonl")
    decisions = read_decisions(config.outdir / "decisions.jsonl")
    scores = scores_from_csv((config.outdir / "scores.csv").read_text(encoding="utf-8"))
    human_scores = None
    human_investors: set[str] = set()
    all_decisions = list(decisions)
    if session_log:
        tasks, mapping = blinded_tasks(digests)
        sessions = ExperimentSessions(
            tasks,
            mapping,
            dataset.universe,
            sub_seed(config.seed, "sessions"),
            list(config.annotators),
            SessionStore(session_log),
        )
        human_decisions = sessions.decisions()
        if human_decisions:
            digest_index = {d.id: d for d in digests}
            human_scores = evaluate_sessions(
                human_decisions, digest_index, dataset, config.scoring
            )
            human_investors = {d.investor_id for d in human_decisions}
            all_decisions += human_decisions
    stage_report(
        scores,
        all_decisions,
        digests,
        dataset,
        config,
        human_scores=human_scores,
        human_investors=human_investors,
    )
    click.echo(f"report: tables and figures -> {config.outdir}")


@cli.command()
@shared_options
def run(config_path, **kw):
    """Run the full pipeline: ingest through report."""
    config = _build_config(config_path, **kw)
    manifest = run_experiment(config)
    click.echo(
        f"run: {manifest['counts']['digests']} digests, "
        f"{manifest['counts']['decisions']} decision sets -> {config.outdir}"
    )


@cli.command()
@shared_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8040, show_default=True)
@click.option("--session-log", type=click.Path(), default=None, help="event log path (default: <out>/sessions.jsonl)")
@click.option("--annotators", default=None, help="comma-separated annotator ids")
@click.option("--token", envvar="DIGEST_SESSION_TOKEN", default=None, help="shared experiment token")
def serve(config_path, host, port, session_log, annotators, token, **kw):
    """Serve blinded annotation tasks over the generated digests."""
    import uvicorn

    from .service import ServiceContext, create_app

    config = _build_config(config_path, **kw)
    dataset = _dataset(config)
    digests = read_digests(config.outdir / "digests.jsonl")
    tasks, mapping = blinded_tasks(digests)
    ids = [a.strip() for a in annotators.split(",") if a.strip()] if annotators else list(config.annotators)
    if not ids:
        raise ConfigError("no annotators configured; pass --annotators or set annotators in the config")
    log_path = Path(session_log) if session_log else config.outdir / "sessions.jsonl"
    sessions = ExperimentSessions(
        tasks, mapping, dataset.universe, sub_seed(config.seed, "sessions"), ids, SessionStore(log_path)
    )
    scores_path = config.outdir / "scores.csv"
    llm_scores = (
        scores_from_csv(scores_path.read_text(encoding="utf-8")) if scores_path.is_file() else []
    )
    ctx = ServiceContext(
        sessions=sessions,
        dataset=dataset,
        digest_index={d.id: d for d in digests},
        llm_scores=llm_scores,
        scoring=config.scoring,
        title=config.title,
        token=token,
    )
    click.echo(f"serve: {len(tasks)} tasks for {len(ids)} annotators on {host}:{port}")
    uvicorn.run(create_app(ctx), host=host, port=port, log_level="warning")


@cli.command()
@click.option("--out", type=click.Path(), required=True, help="directory for the four dataset files")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tickers", "n_tickers", type=int, default=50, show_default=True)
@click.option("--days", "n_days", type=int, default=30, show_default=True)
@click.option("--rise-rate", type=float, default=DEFAULT_RISE_RATE, show_default=True)
@click.option("--fall-rate", type=float, default=DEFAULT_FALL_RATE, show_default=True)
@click.option("--halt-rate", type=float, default=DEFAULT_HALT_RATE, show_default=True)
@click.option("--start", default=DEFAULT_START.isoformat(), show_default=True, help="first calendar date")
def synth(out, seed, n_tickers, n_days, rise_rate, fall_rate, halt_rate, start):
    """Generate a seeded synthetic market dataset."""
    paths = make_synthetic_market(
        out,
        seed,
        n_tickers,
        n_days,
        rise_rate=rise_rate,
        fall_rate=fall_rate,
        halt_rate=halt_rate,
        start=Date.fromisoformat(start),
    )
    click.echo(f"synth: {n_tickers} tickers x {n_days} days -> {paths['companies'].parent}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="digesteval", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 2
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 3
    except OSError as exc:
        # Missing or unreadable stage artifacts surface as data errors.
        click.echo(f"data error: {exc}", err=True)
        return 3
    except (ConfigError, DigestEvalError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
