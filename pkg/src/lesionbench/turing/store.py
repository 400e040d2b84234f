"""Durable storage for rating sessions: append-only JSONL journal plus an
optional snapshot. State is rebuilt by replaying the journal on load, so a
submitted score survives a service restart."""

from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path

from ..errors import (
    ClosedSession,
    OutOfRangeScore,
    UnknownItem,
    UnknownSession,
)
from .sessions import RatingSession, SessionItem, SCORE_MAX, SCORE_MIN

JOURNAL_NAME = "journal.jsonl"
SNAPSHOT_NAME = "snapshot.json"
SNAPSHOT_EVERY = 200  # journal events between automatic snapshots


def _session_to_dict(s: RatingSession) -> dict:
    return {
        "session_id": s.session_id,
        "rater_id": s.rater_id,
        "closed": s.closed,
        "items": [
            {
                "item_id": i.item_id,
                "case_id": i.case_id,
                "source": i.source,
                "renders": i.renders,
            }
            for i in s.items
        ],
        "scores": s.scores,
    }


def _session_from_dict(d: dict) -> RatingSession:
    return RatingSession(
        session_id=d["session_id"],
        rater_id=d["rater_id"],
        items=[SessionItem(**i) for i in d["items"]],
        scores=dict(d.get("scores") or {}),
        closed=bool(d.get("closed")),
    )


class SessionStore:
    """Thread-safe session state backed by a journal in data_dir."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, RatingSession] = {}
        self._events_since_snapshot = 0
        self._load()

    # --- persistence ---------------------------------------------------

    @property
    def _journal_path(self) -> Path:
        return self.data_dir / JOURNAL_NAME

    @property
    def _snapshot_path(self) -> Path:
        return self.data_dir / SNAPSHOT_NAME

    def _load(self) -> None:
        if self._snapshot_path.exists():
            with open(self._snapshot_path) as f:
                snap = json.load(f)
            for d in snap["sessions"]:
                s = _session_from_dict(d)
                self._sessions[s.session_id] = s
            replay_from = snap.get("journal_offset", 0)
        else:
            replay_from = 0
        if self._journal_path.exists():
            with open(self._journal_path) as f:
                for n, line in enumerate(f):
                    if n < replay_from or not line.strip():
                        continue
                    self._apply(json.loads(line))
            self._journal_lines = sum(
                1 for _ in open(self._journal_path)
            )
        else:
            self._journal_lines = 0

    def _append(self, event: dict) -> None:
        with open(self._journal_path, "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())
        self._journal_lines += 1
        self._events_since_snapshot += 1
        if self._events_since_snapshot >= SNAPSHOT_EVERY:
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {
            "journal_offset": self._journal_lines,
            "sessions": [_session_to_dict(s) for s in self._sessions.values()],
        }
        tmp = self._snapshot_path.with_suffix(".tmp")
        with open(tmp, "w") as f:
            json.dump(snap, f)
            f.flush()
            os.fsync(f.fileno())
        tmp.replace(self._snapshot_path)
        self._events_since_snapshot = 0

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "sessions_created":
            for d in event["sessions"]:
                s = _session_from_dict(d)
                self._sessions[s.session_id] = s
        elif kind == "score":
            s = self._sessions[event["session_id"]]
            s.scores[event["item_id"]] = {
                "completeness": event["completeness"],
                "correctness": event["correctness"],
                "timestamp": event["timestamp"],
            }
        elif kind == "close":
            self._sessions[event["session_id"]].closed = True

    # --- public API ----------------------------------------------------

    def add_sessions(self, sessions: list[RatingSession]) -> None:
        with self._lock:
            event = {
                "type": "sessions_created",
                "sessions": [_session_to_dict(s) for s in sessions],
            }
            self._apply(event)
            self._append(event)

    def get(self, session_id: str) -> RatingSession:
        s = self._sessions.get(session_id)
        if s is None:
            raise UnknownSession(f"no session {session_id!r}")
        return s

    def sessions(self) -> list[RatingSession]:
        return list(self._sessions.values())

    def submit_score(
        self, session_id: str, item_id: str, completeness: int, correctness: int
    ) -> dict:
        """Persist a score; resubmission overwrites (journal keeps the audit
        trail). The write hits disk before this returns."""
        for name, value in (("completeness", completeness), ("correctness", correctness)):
            if not isinstance(value, int) or not SCORE_MIN <= value <= SCORE_MAX:
                raise OutOfRangeScore(
                    f"{name} must be an integer in [{SCORE_MIN}, {SCORE_MAX}], got {value!r}"
                )
        with self._lock:
            session = self.get(session_id)
            if session.closed:
                raise ClosedSession(f"session {session_id} is closed")
            if not any(i.item_id == item_id for i in session.items):
                raise UnknownItem(f"item {item_id!r} not in session {session_id}")
            event = {
                "type": "score",
                "session_id": session_id,
                "item_id": item_id,
                "completeness": completeness,
                "correctness": correctness,
                "timestamp": time.time(),
                "overwrite": item_id in session.scores,
            }
            self._apply(event)
            self._append(event)
            return {"scored": session.scored, "total": session.total}

    def close_session(self, session_id: str) -> None:
        with self._lock:
            self.get(session_id)
            event = {"type": "close", "session_id": session_id}
            self._apply(event)
            self._append(event)

    def snapshot(self) -> None:
        with self._lock:
            self._write_snapshot()
