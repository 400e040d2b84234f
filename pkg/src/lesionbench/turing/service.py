"""HTTP+JSON service for the blinded rating study.

Rater-facing endpoints never serialize the source of an item; only the
admin report sees per-source aggregates. Admin endpoints require the shared
token in the X-Admin-Token header.
"""

from __future__ import annotations

import os
from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..errors import (
    ClosedSession,
    InsufficientPool,
    NoCompletedSessions,
    OutOfRangeScore,
    UnknownItem,
    UnknownSession,
)
from .report import turing_report
from .sessions import PER_RATER_RANGE, create_sessions
from .store import SessionStore

DEFAULT_RUBRIC = (
    "Rate the completeness of the segmented lesion and the correctness of "
    "its contours on a 1 (worst) to 6 (best) scale."
)

ADMIN_TOKEN_ENV = "LESIONBENCH_ADMIN_TOKEN"


class PoolEntry(BaseModel):
    case_id: str
    expert_renders: list[str]
    algorithm_renders: list[str]


class CreateSessionsRequest(BaseModel):
    pool: list[PoolEntry]
    raters: list[str]
    seed: int
    per_rater: tuple[int, int] = PER_RATER_RANGE


class ScoreRequest(BaseModel):
    item_id: str
    completeness: int = Field(...)
    correctness: int = Field(...)


def create_app(
    data_dir,
    admin_token: str = None,
    renders_dir=None,
    rubric: str = DEFAULT_RUBRIC,
) -> FastAPI:
    store = SessionStore(data_dir)
    token = admin_token or os.environ.get(ADMIN_TOKEN_ENV)
    if not token:
        raise ValueError(
            f"admin token required (flag or {ADMIN_TOKEN_ENV} environment variable)"
        )

    app = FastAPI(title="lesionbench rating service")
    app.state.store = store

    def require_admin(header_token):
        if header_token != token:
            raise HTTPException(status_code=401, detail="bad admin token")

    @app.post("/sessions")
    def post_sessions(
        body: CreateSessionsRequest, x_admin_token: str = Header(default=None)
    ):
        require_admin(x_admin_token)
        try:
            sessions = create_sessions(
                [e.model_dump() for e in body.pool],
                body.raters,
                body.seed,
                body.per_rater,
            )
        except InsufficientPool as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        store.add_sessions(sessions)
        return {
            "sessions": [
                {"session_id": s.session_id, "rater_id": s.rater_id, "total": s.total}
                for s in sessions
            ]
        }

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str):
        try:
            session = store.get(session_id)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        progress = {"scored": session.scored, "total": session.total}
        item = session.next_unscored()
        if item is None:
            return {"session_id": session_id, "progress": progress, "complete": True}
        # blinded payload: item id and renderings only, never the source
        return {
            "session_id": session_id,
            "progress": progress,
            "complete": False,
            "item": {
                "item_id": item.item_id,
                "renders": item.renders,
                "rubric": rubric,
            },
        }

    @app.post("/sessions/{session_id}/scores")
    def post_score(session_id: str, body: ScoreRequest):
        try:
            progress = store.submit_score(
                session_id, body.item_id, body.completeness, body.correctness
            )
        except OutOfRangeScore as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ClosedSession as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"ok": True, "progress": progress}

    @app.get("/report")
    def get_report(x_admin_token: str = Header(default=None)):
        require_admin(x_admin_token)
        try:
            report = turing_report(store.sessions())
        except NoCompletedSessions as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return asdict(report)

    if renders_dir is not None:
        renders_dir = Path(renders_dir)
        renders_dir.mkdir(parents=True, exist_ok=True)
        app.mount("/renders", StaticFiles(directory=str(renders_dir)), name="renders")

    return app


def serve(data_dir, host: str, port: int, admin_token=None, renders_dir=None) -> None:
    import uvicorn

    app = create_app(data_dir, admin_token=admin_token, renders_dir=renders_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
