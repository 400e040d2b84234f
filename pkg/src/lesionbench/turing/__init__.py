from .sessions import RatingSession, SessionItem, create_sessions
from .report import TuringReport, turing_report
from .store import SessionStore

__all__ = [
    "RatingSession",
    "SessionItem",
    "SessionStore",
    "TuringReport",
    "create_sessions",
    "turing_report",
]
