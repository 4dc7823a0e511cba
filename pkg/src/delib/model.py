"""IBIS domain types: discussions, issues, positions, arguments, reflections.

The store that owns instances of these lives in :mod:`delib.store`.  All
types are plain dataclasses; they are constructed by the store from graph
events and should be treated as immutable snapshots by readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from datetime import datetime
from typing import Optional

ROLES = ("participant", "moderator", "admin")
SIDES = ("pro", "con")
ORIGINS = ("human", "import")
REFLECTION_LEVELS = ("agree", "neutral", "disagree")
NODE_KINDS = ("issue", "position", "argument")

EVENT_KINDS = (
    "discussion_created",
    "discussion_closed",
    "issue_added",
    "position_added",
    "argument_added",
    "reflection_set",
    "user_joined",
    "report_published",
)


@dataclass
class SourceSpan:
    """Half-open segment range [start, end) into a transcript."""

    transcript_id: str
    start: int
    end: int

    def to_dict(self) -> dict:
        return {"transcript_id": self.transcript_id, "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, d: dict) -> "SourceSpan":
        return cls(d["transcript_id"], int(d["start"]), int(d["end"]))


@dataclass
class User:
    id: str
    display_name: str
    role: str  # participant | moderator | admin


@dataclass
class Discussion:
    id: str
    title: str
    description: str
    created_at: datetime
    created_by: str
    status: str = "open"  # open | closed
    issues: list[str] = field(default_factory=list)
    participants: set[str] = field(default_factory=set)


@dataclass
class Issue:
    id: str
    discussion_id: str
    text: str
    created_at: datetime
    created_by: str
    origin: str = "human"
    positions: list[str] = field(default_factory=list)


@dataclass
class Position:
    id: str
    issue_id: str
    text: str
    created_at: datetime
    created_by: str
    origin: str = "human"
    arguments: list[str] = field(default_factory=list)


@dataclass
class Argument:
    id: str
    position_id: str
    side: str  # pro | con
    text: str
    created_at: datetime
    created_by: str
    origin: str = "human"
    source_span: Optional[SourceSpan] = None


@dataclass
class Reflection:
    id: str
    position_id: str
    user_id: str
    level: str  # agree | neutral | disagree
    created_at: datetime


@dataclass(frozen=True)
class GraphEvent:
    """One append-only log entry; the payload carries the full entity data
    so that replaying the log from empty reproduces the store exactly."""

    seq: int
    at: datetime
    kind: str
    payload: dict

    def to_json_dict(self) -> dict:
        return {
            "seq": self.seq,
            "at": self.at.isoformat(),
            "kind": self.kind,
            "payload": self.payload,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GraphEvent":
        return cls(
            seq=int(d["seq"]),
            at=datetime.fromisoformat(d["at"]),
            kind=d["kind"],
            payload=d["payload"],
        )


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by a validation scan."""

    code: str
    entity_id: str
    detail: str = ""


def entity_to_dict(entity) -> dict:
    """JSON-ready dict for any domain entity (datetimes as ISO strings)."""
    d = asdict(entity)
    for key, value in list(d.items()):
        if isinstance(value, datetime):
            d[key] = value.isoformat()
        elif isinstance(value, set):
            d[key] = sorted(value)
    return d
