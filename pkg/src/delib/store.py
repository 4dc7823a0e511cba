"""Event-sourced store for the discussion graph.

All mutations funnel through a single writer path that appends a
:class:`GraphEvent` and applies it to in-memory state; replaying the event
log from empty therefore reproduces the store exactly.  When a log path is
given, every event is written as one JSON object per line and flushed
immediately, so a restart recovers the identical state.

Readers take :meth:`DiscussionStore.view`, an immutable deep snapshot that
later mutations cannot touch.
"""

from __future__ import annotations

import copy
import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

from .errors import (
    BadParentKind,
    CorruptStore,
    DiscussionClosed,
    EmptyText,
    EmptyTitle,
    Forbidden,
    MissingSide,
    MissingSourceSpan,
    UnexpectedSide,
    UnknownDiscussion,
    UnknownParent,
    UnknownPosition,
    UnknownUser,
)
from .model import (
    Argument,
    Discussion,
    EVENT_KINDS,
    GraphEvent,
    Issue,
    NODE_KINDS,
    ORIGINS,
    Position,
    Reflection,
    REFLECTION_LEVELS,
    ROLES,
    SIDES,
    SourceSpan,
    User,
    Violation,
    entity_to_dict,
)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class StoreView:
    """Read-only snapshot of the store at a fixed event sequence.

    Holds deep copies, so concurrent writers cannot change what a report
    or analytics pass observes.  Treat all attributes as read-only.
    """

    def __init__(self, store: "DiscussionStore"):
        self.seq = store.seq
        self.users = copy.deepcopy(store.users)
        self.discussions = copy.deepcopy(store.discussions)
        self.issues = copy.deepcopy(store.issues)
        self.positions = copy.deepcopy(store.positions)
        self.arguments = copy.deepcopy(store.arguments)
        self.reflections = copy.deepcopy(store.reflections)
        self.published_reports = copy.deepcopy(store.published_reports)
        self.events = tuple(store.events)

    # -- traversal helpers (insertion order == event order) --

    def issues_of(self, discussion_id: str) -> list[Issue]:
        disc = self.discussions[discussion_id]
        return [self.issues[i] for i in disc.issues]

    def positions_of(self, issue_id: str) -> list[Position]:
        return [self.positions[p] for p in self.issues[issue_id].positions]

    def discussion_positions(self, discussion_id: str) -> list[Position]:
        out = []
        for issue in self.issues_of(discussion_id):
            out.extend(self.positions_of(issue.id))
        return out

    def arguments_of(self, position_id: str) -> list[Argument]:
        return [self.arguments[a] for a in self.positions[position_id].arguments]

    def reflections_of(self, position_id: str) -> list[Reflection]:
        return [r for r in self.reflections.values() if r.position_id == position_id]

    def discussion_of_position(self, position_id: str) -> str:
        return self.issues[self.positions[position_id].issue_id].discussion_id


class DiscussionStore:
    """Single-writer discussion graph with an append-only event log."""

    def __init__(
        self,
        log_path: str | Path | None = None,
        clock: Optional[Callable[[], datetime]] = None,
    ):
        self._lock = threading.RLock()
        self._clock = clock or utc_now
        self._log_path = Path(log_path) if log_path else None
        self._log_file = None

        self.users: dict[str, User] = {}
        self.discussions: dict[str, Discussion] = {}
        self.issues: dict[str, Issue] = {}
        self.positions: dict[str, Position] = {}
        self.arguments: dict[str, Argument] = {}
        self.reflections: dict[str, Reflection] = {}
        self._reflection_key: dict[tuple[str, str], str] = {}
        self.published_reports: dict[str, dict] = {}
        self.events: list[GraphEvent] = []

        if self._log_path is not None:
            if self._log_path.exists():
                self._load(self._log_path)
            self._log_file = open(self._log_path, "a", encoding="utf-8")

    # ------------------------------------------------------------------
    # event machinery

    @property
    def seq(self) -> int:
        return len(self.events)

    def _next_id(self, prefix: str) -> str:
        return f"{prefix}{len(self.events) + 1}"

    def _record(self, kind: str, payload: dict) -> GraphEvent:
        event = GraphEvent(seq=len(self.events) + 1, at=self._clock(), kind=kind, payload=payload)
        self._apply(event)
        if self._log_file is not None:
            self._log_file.write(canonical_json(event.to_json_dict()) + "\n")
            self._log_file.flush()
        return event

    def _apply(self, event: GraphEvent) -> None:
        """The only state-mutation path; used by both live writes and replay."""
        p = event.payload
        kind = event.kind
        if kind == "user_joined":
            if "user" in p:
                u = p["user"]
                self.users[u["id"]] = User(id=u["id"], display_name=u["display_name"], role=u["role"])
            else:
                self.discussions[p["discussion_id"]].participants.add(p["user_id"])
        elif kind == "discussion_created":
            self.discussions[p["id"]] = Discussion(
                id=p["id"],
                title=p["title"],
                description=p["description"],
                created_at=event.at,
                created_by=p["created_by"],
            )
        elif kind == "discussion_closed":
            self.discussions[p["id"]].status = "closed"
        elif kind == "issue_added":
            issue = Issue(
                id=p["id"],
                discussion_id=p["discussion_id"],
                text=p["text"],
                created_at=event.at,
                created_by=p["created_by"],
                origin=p["origin"],
            )
            self.issues[issue.id] = issue
            self.discussions[issue.discussion_id].issues.append(issue.id)
        elif kind == "position_added":
            pos = Position(
                id=p["id"],
                issue_id=p["issue_id"],
                text=p["text"],
                created_at=event.at,
                created_by=p["created_by"],
                origin=p["origin"],
            )
            self.positions[pos.id] = pos
            self.issues[pos.issue_id].positions.append(pos.id)
        elif kind == "argument_added":
            span = SourceSpan.from_dict(p["source_span"]) if p.get("source_span") else None
            arg = Argument(
                id=p["id"],
                position_id=p["position_id"],
                side=p["side"],
                text=p["text"],
                created_at=event.at,
                created_by=p["created_by"],
                origin=p["origin"],
                source_span=span,
            )
            self.arguments[arg.id] = arg
            self.positions[arg.position_id].arguments.append(arg.id)
        elif kind == "reflection_set":
            key = (p["position_id"], p["user_id"])
            old_id = self._reflection_key.get(key)
            if old_id is not None:
                del self.reflections[old_id]
            refl = Reflection(
                id=p["id"],
                position_id=p["position_id"],
                user_id=p["user_id"],
                level=p["level"],
                created_at=event.at,
            )
            self.reflections[refl.id] = refl
            self._reflection_key[key] = refl.id
        elif kind == "report_published":
            self.published_reports[p["report"]["id"]] = p["report"]
        else:
            raise CorruptStore(f"unknown event kind {kind!r}")
        self.events.append(event)

    def _load(self, path: Path) -> None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = GraphEvent.from_json_dict(json.loads(line))
                except (ValueError, KeyError) as exc:
                    raise CorruptStore(f"bad event at line {lineno}: {exc}") from exc
                if event.seq != len(self.events) + 1:
                    raise CorruptStore(
                        f"sequence gap at line {lineno}: expected {len(self.events) + 1}, got {event.seq}"
                    )
                if event.kind not in EVENT_KINDS:
                    raise CorruptStore(f"unknown event kind {event.kind!r} at line {lineno}")
                try:
                    self._apply(event)
                except KeyError as exc:
                    raise CorruptStore(f"event {event.seq} references missing entity: {exc}") from exc

    @classmethod
    def replay(cls, events: Iterable[GraphEvent]) -> "DiscussionStore":
        """Rebuild a store from an event sequence (integrity-checked)."""
        store = cls()
        for event in events:
            if event.seq != store.seq + 1:
                raise CorruptStore(f"sequence gap: expected {store.seq + 1}, got {event.seq}")
            store._apply(event)
        return store

    def close(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None

    # ------------------------------------------------------------------
    # users

    def register_user(self, display_name: str, role: str, user_id: str | None = None) -> User:
        if role not in ROLES:
            raise UnknownUser(f"invalid role {role!r}")
        with self._lock:
            uid = user_id or self._next_id("u")
            if uid in self.users:
                return self.users[uid]
            self._record("user_joined", {"user": {"id": uid, "display_name": display_name, "role": role}})
            return self.users[uid]

    def _require_user(self, user_id: str) -> User:
        user = self.users.get(user_id)
        if user is None:
            raise UnknownUser(f"no such user {user_id!r}")
        return user

    def _ensure_participant(self, discussion: Discussion, user_id: str) -> None:
        if user_id not in discussion.participants:
            self._record("user_joined", {"user_id": user_id, "discussion_id": discussion.id})

    # ------------------------------------------------------------------
    # discussions and nodes

    def create_discussion(self, title: str, description: str, creator: str) -> Discussion:
        if not title.strip():
            raise EmptyTitle("discussion title must be non-empty")
        with self._lock:
            user = self._require_user(creator)
            if user.role not in ("moderator", "admin"):
                raise Forbidden("only moderators or admins may create discussions")
            did = self._next_id("d")
            self._record(
                "discussion_created",
                {"id": did, "title": title, "description": description, "created_by": creator},
            )
            return self.discussions[did]

    def close_discussion(self, discussion_id: str, actor: str) -> Discussion:
        with self._lock:
            disc = self.discussions.get(discussion_id)
            if disc is None:
                raise UnknownDiscussion(discussion_id)
            user = self._require_user(actor)
            if user.role not in ("moderator", "admin"):
                raise Forbidden("only moderators or admins may close discussions")
            if disc.status != "closed":
                self._record("discussion_closed", {"id": discussion_id})
            return disc

    def add_node(
        self,
        discussion_id: str,
        parent_id: str,
        kind: str,
        text: str,
        author: str,
        side: str | None = None,
        source_span: SourceSpan | None = None,
        origin: str = "human",
    ) -> str:
        """Append one IBIS node under the correct parent kind.

        The parent chain is discussion -> issue -> position -> argument;
        side is required exactly for arguments.
        """
        if kind not in NODE_KINDS:
            raise BadParentKind(f"unknown node kind {kind!r}")
        if not text.strip():
            raise EmptyText(f"{kind} text must be non-empty")
        if origin not in ORIGINS:
            raise ValueError(f"unknown origin {origin!r}")
        with self._lock:
            disc = self.discussions.get(discussion_id)
            if disc is None:
                raise UnknownDiscussion(discussion_id)
            if disc.status == "closed":
                raise DiscussionClosed(discussion_id)
            self._require_user(author)

            if kind != "argument":
                if side is not None:
                    raise UnexpectedSide("side is only valid for arguments")
            else:
                if side is None:
                    raise MissingSide("arguments require side=pro|con")
                if side not in SIDES:
                    raise MissingSide(f"side must be pro or con, got {side!r}")
                if origin == "import" and source_span is None:
                    raise MissingSourceSpan("imported arguments must carry a source span")

            if kind == "issue":
                if parent_id != discussion_id:
                    if parent_id in self.issues or parent_id in self.positions or parent_id in self.arguments:
                        raise BadParentKind("issues attach to the discussion itself")
                    raise UnknownParent(parent_id)
                self._ensure_participant(disc, author)
                nid = self._next_id("i")
                self._record(
                    "issue_added",
                    {
                        "id": nid,
                        "discussion_id": discussion_id,
                        "text": text,
                        "created_by": author,
                        "origin": origin,
                    },
                )
                return nid

            if kind == "position":
                issue = self.issues.get(parent_id)
                if issue is None:
                    if parent_id == discussion_id or parent_id in self.positions or parent_id in self.arguments:
                        raise BadParentKind("positions attach to issues")
                    raise UnknownParent(parent_id)
                if issue.discussion_id != discussion_id:
                    raise UnknownParent(f"{parent_id} is not in discussion {discussion_id}")
                self._ensure_participant(disc, author)
                nid = self._next_id("p")
                self._record(
                    "position_added",
                    {
                        "id": nid,
                        "issue_id": parent_id,
                        "text": text,
                        "created_by": author,
                        "origin": origin,
                    },
                )
                return nid

            # argument
            pos = self.positions.get(parent_id)
            if pos is None:
                if parent_id == discussion_id or parent_id in self.issues or parent_id in self.arguments:
                    raise BadParentKind("arguments attach to positions")
                raise UnknownParent(parent_id)
            if self.issues[pos.issue_id].discussion_id != discussion_id:
                raise UnknownParent(f"{parent_id} is not in discussion {discussion_id}")
            self._ensure_participant(disc, author)
            nid = self._next_id("a")
            self._record(
                "argument_added",
                {
                    "id": nid,
                    "position_id": parent_id,
                    "side": side,
                    "text": text,
                    "created_by": author,
                    "origin": origin,
                    "source_span": source_span.to_dict() if source_span else None,
                },
            )
            return nid

    def set_reflection(self, position_id: str, user_id: str, level: str) -> Reflection:
        """Upsert: a second call by the same user on the same position
        replaces the first (at most one reflection per position/user)."""
        if level not in REFLECTION_LEVELS:
            raise ValueError(f"level must be one of {REFLECTION_LEVELS}, got {level!r}")
        with self._lock:
            pos = self.positions.get(position_id)
            if pos is None:
                raise UnknownPosition(position_id)
            self._require_user(user_id)
            disc = self.discussions[self.issues[pos.issue_id].discussion_id]
            if disc.status == "closed":
                raise DiscussionClosed(disc.id)
            self._ensure_participant(disc, user_id)
            rid = self._next_id("r")
            self._record(
                "reflection_set",
                {"id": rid, "position_id": position_id, "user_id": user_id, "level": level},
            )
            return self.reflections[rid]

    def publish_report(self, report: dict) -> None:
        """Record a published geo report in the graph event log."""
        with self._lock:
            self._record("report_published", {"report": report})

    # ------------------------------------------------------------------
    # views, validation, equality

    def view(self) -> StoreView:
        with self._lock:
            return StoreView(self)

    def validate(self) -> list[Violation]:
        """Full-scan invariant check; empty list means the graph is sound."""
        v: list[Violation] = []
        with self._lock:
            for disc in self.discussions.values():
                if not disc.title.strip():
                    v.append(Violation("empty_title", disc.id))
                if len(disc.issues) != len(set(disc.issues)):
                    v.append(Violation("duplicate_issue_ref", disc.id))
                for iid in disc.issues:
                    if iid not in self.issues:
                        v.append(Violation("unknown_issue_ref", disc.id, iid))
                for uid in disc.participants:
                    if uid not in self.users:
                        v.append(Violation("unknown_user", disc.id, uid))
            for issue in self.issues.values():
                if not issue.text.strip():
                    v.append(Violation("empty_text", issue.id))
                if issue.discussion_id not in self.discussions:
                    v.append(Violation("dangling_parent", issue.id, issue.discussion_id))
            for pos in self.positions.values():
                if not pos.text.strip():
                    v.append(Violation("empty_text", pos.id))
                if pos.issue_id not in self.issues:
                    v.append(Violation("dangling_parent", pos.id, pos.issue_id))
            for arg in self.arguments.values():
                if not arg.text.strip():
                    v.append(Violation("empty_text", arg.id))
                if arg.position_id not in self.positions:
                    v.append(Violation("dangling_parent", arg.id, arg.position_id))
                if arg.side not in SIDES:
                    v.append(Violation("bad_side", arg.id, arg.side))
                if arg.origin == "import" and arg.source_span is None:
                    v.append(Violation("missing_source_span", arg.id))
            seen_keys: dict[tuple[str, str], str] = {}
            for refl in self.reflections.values():
                if refl.position_id not in self.positions:
                    v.append(Violation("dangling_parent", refl.id, refl.position_id))
                if refl.user_id not in self.users:
                    v.append(Violation("unknown_user", refl.id, refl.user_id))
                key = (refl.position_id, refl.user_id)
                if key in seen_keys:
                    v.append(Violation("duplicate_reflection", refl.id, seen_keys[key]))
                else:
                    seen_keys[key] = refl.id
            for n, event in enumerate(self.events, start=1):
                if event.seq != n:
                    v.append(Violation("seq_gap", str(event.seq), f"expected {n}"))
            created = set()
            for event in self.events:
                if event.kind in ("discussion_created", "issue_added", "position_added", "argument_added"):
                    created.add(event.payload["id"])
                elif event.kind == "user_joined" and "user" in event.payload:
                    created.add(event.payload["user"]["id"])
            for bucket in (self.discussions, self.issues, self.positions, self.arguments, self.users):
                for eid in bucket:
                    if eid not in created:
                        v.append(Violation("orphan_entity", eid, "no creating event"))
        return v

    def state_dict(self) -> dict:
        """Canonical entity-by-entity representation, for equality checks."""
        with self._lock:
            return {
                "seq": self.seq,
                "users": {k: entity_to_dict(u) for k, u in sorted(self.users.items())},
                "discussions": {k: entity_to_dict(d) for k, d in sorted(self.discussions.items())},
                "issues": {k: entity_to_dict(i) for k, i in sorted(self.issues.items())},
                "positions": {k: entity_to_dict(p) for k, p in sorted(self.positions.items())},
                "arguments": {k: entity_to_dict(a) for k, a in sorted(self.arguments.items())},
                "reflections": {k: entity_to_dict(r) for k, r in sorted(self.reflections.items())},
                "published_reports": dict(sorted(self.published_reports.items())),
            }

    def log_bytes(self) -> bytes:
        """The event log serialized exactly as it is persisted."""
        with self._lock:
            lines = [canonical_json(e.to_json_dict()) + "\n" for e in self.events]
        return "".join(lines).encode("utf-8")
