"""HTTP session service for blinded human annotation.

Thin JSON layer over ExperimentSessions. Task payloads are blinded before
they reach this module; nothing here re-attaches provenance. Scores are
gated behind the experiment close flag so annotators get no mid-run
feedback.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel

from .digests import Digest
from .errors import (
    DuplicateSubmissionError,
    InvalidDecisionError,
    UnknownAnnotatorError,
    UnknownTaskError,
)
from .marketdata import MarketDataset
from .reporting import leaderboard as build_leaderboard
from .scoring import ScoringConfig, SessionScore, evaluate_sessions
from .sessions import ExperimentSessions


@dataclass
class ServiceContext:
    sessions: ExperimentSessions
    dataset: MarketDataset
    digest_index: dict[str, Digest]
    llm_scores: list[SessionScore] = field(default_factory=list)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    title: str = "digest decision study"
    token: str | None = None


class DecisionBody(BaseModel):
    buys: list[str] = []
    sells: list[str] = []
    remark: str = ""


def _human_scores(ctx: ServiceContext, annotator_id: str | None = None) -> list[SessionScore]:
    decisions = ctx.sessions.decisions()
    if annotator_id is not None:
        decisions = [d for d in decisions if d.investor_id == annotator_id]
    if not decisions:
        return []
    return evaluate_sessions(decisions, ctx.digest_index, ctx.dataset, ctx.scoring)


def create_app(ctx: ServiceContext) -> FastAPI:
    app = FastAPI(title=ctx.title, docs_url=None, redoc_url=None, openapi_url=None)

    def require_token(authorization: str | None = Header(default=None)) -> None:
        if ctx.token is None:
            return
        if authorization != f"Bearer {ctx.token}":
            raise HTTPException(status_code=401, detail="missing or bad experiment token")

    @app.get("/api/config")
    def get_config() -> dict:
        return {
            "title": ctx.title,
            "closed": ctx.sessions.closed,
            "n_tasks": len(ctx.sessions.tasks),
        }

    @app.get("/api/universe", dependencies=[Depends(require_token)])
    def get_universe() -> list[dict]:
        return [{"code": t.code, "name": t.name} for t in ctx.sessions.universe.tickers]

    @app.get("/api/annotators/{annotator_id}/next-task", dependencies=[Depends(require_token)])
    def next_task(annotator_id: str) -> dict:
        try:
            task = ctx.sessions.next_task(annotator_id)
        except UnknownAnnotatorError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if task is None:
            return {"done": True}
        return task.to_json()

    @app.post(
        "/api/annotators/{annotator_id}/tasks/{task_id}/decisions",
        dependencies=[Depends(require_token)],
    )
    def submit(annotator_id: str, task_id: str, body: DecisionBody) -> dict:
        try:
            ctx.sessions.submit(annotator_id, task_id, body.buys, body.sells, body.remark)
        except UnknownAnnotatorError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except UnknownTaskError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except DuplicateSubmissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except InvalidDecisionError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"accepted": True, "task_id": task_id}

    @app.get("/api/annotators/{annotator_id}/progress", dependencies=[Depends(require_token)])
    def progress(annotator_id: str) -> dict:
        try:
            payload = ctx.sessions.progress(annotator_id)
        except UnknownAnnotatorError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if ctx.sessions.closed:
            scores = _human_scores(ctx, annotator_id)
            n_correct = sum(s.n_correct for s in scores)
            n_scored = sum(s.n_scored for s in scores)
            payload["n_scored"] = n_scored
            payload["accuracy"] = n_correct / n_scored if n_scored > 0 else None
        return payload

    @app.get("/api/leaderboard", dependencies=[Depends(require_token)])
    def get_leaderboard() -> dict:
        if not ctx.sessions.closed:
            raise HTTPException(status_code=403, detail="experiment is not closed")
        human = _human_scores(ctx)
        if not human:
            return {"llm_average_accuracy": None, "entries": []}
        return build_leaderboard(human, ctx.llm_scores).to_json()

    @app.post("/api/admin/close", dependencies=[Depends(require_token)])
    def close_experiment() -> dict:
        ctx.sessions.close()
        return {"closed": True}

    return app
