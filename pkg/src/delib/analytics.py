"""Offline participation and content metrics.

All functions are pure: they take an immutable :class:`StoreView` and
return plain dataclasses, so any metric can be re-derived from a replay
of the event log and compared value-for-value against a naive scan.

Time series bucket to UTC-epoch-aligned windows (daily buckets start at
UTC midnight) so the same log produces the same series on any machine.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional

from .errors import UnknownDiscussion, UnknownPosition
from .model import Argument, GraphEvent, Position
from .store import StoreView

DAY = 86400


@dataclass(frozen=True)
class TimeSeries:
    bucket_seconds: int
    points: tuple[tuple[datetime, int], ...]

    def values(self) -> list[int]:
        return [v for _, v in self.points]

    def to_dict(self) -> dict:
        return {
            "bucket_seconds": self.bucket_seconds,
            "points": [{"t": t.isoformat(), "value": v} for t, v in self.points],
        }


@dataclass(frozen=True)
class AgreementStats:
    position_id: str
    agree: int
    neutral: int
    disagree: int

    @property
    def support_ratio(self) -> float | None:
        voted = self.agree + self.disagree
        if voted == 0:
            return None  # undefined, not 0: silence is not opposition
        return self.agree / voted

    @property
    def contestedness(self) -> int:
        return min(self.agree, self.disagree)

    def to_dict(self) -> dict:
        return {
            "position_id": self.position_id,
            "agree": self.agree,
            "neutral": self.neutral,
            "disagree": self.disagree,
            "support_ratio": self.support_ratio,
            "contestedness": self.contestedness,
        }


@dataclass(frozen=True)
class PointsOfInterest:
    most_consensual: str | None = None
    most_opposed: str | None = None
    most_contested: str | None = None

    def to_dict(self) -> dict:
        return {
            "most_consensual": self.most_consensual,
            "most_opposed": self.most_opposed,
            "most_contested": self.most_contested,
        }


def _bucket_floor(at: datetime, bucket_seconds: int) -> datetime:
    ts = int(at.timestamp())
    return datetime.fromtimestamp(ts - ts % bucket_seconds, tz=timezone.utc)


def _require_discussion(view: StoreView, discussion_id: str) -> None:
    if discussion_id not in view.discussions:
        raise UnknownDiscussion(discussion_id)


def event_discussion(view: StoreView, event: GraphEvent) -> str | None:
    """Resolve which discussion an event belongs to, if any."""
    payload = event.payload
    if event.kind in ("discussion_created", "discussion_closed"):
        return payload["id"]
    if event.kind == "user_joined":
        return payload.get("discussion_id")  # registration events carry none
    if event.kind == "issue_added":
        return payload["discussion_id"]
    if event.kind == "position_added":
        issue = view.issues.get(payload["issue_id"])
        return issue.discussion_id if issue else None
    if event.kind in ("argument_added", "reflection_set"):
        pos = view.positions.get(payload["position_id"])
        if pos is None:
            return None
        issue = view.issues.get(pos.issue_id)
        return issue.discussion_id if issue else None
    if event.kind == "report_published":
        return payload["report"].get("discussion_id")
    return None


def _series(
    stamps: list[datetime], bucket_seconds: int, cumulative: bool
) -> TimeSeries:
    """Bucket timestamps into a gap-free series.

    cumulative=True carries the running total through empty buckets;
    cumulative=False fills them with zero.
    """
    if bucket_seconds <= 0:
        raise ValueError("bucket_seconds must be positive")
    if not stamps:
        return TimeSeries(bucket_seconds=bucket_seconds, points=())
    counts: dict[datetime, int] = {}
    for at in stamps:
        b = _bucket_floor(at, bucket_seconds)
        counts[b] = counts.get(b, 0) + 1
    first = min(counts)
    last = max(counts)
    points: list[tuple[datetime, int]] = []
    running = 0
    b = first
    while b <= last:
        n = counts.get(b, 0)
        if cumulative:
            running += n
            points.append((b, running))
        else:
            points.append((b, n))
        b = datetime.fromtimestamp(int(b.timestamp()) + bucket_seconds, tz=timezone.utc)
    return TimeSeries(bucket_seconds=bucket_seconds, points=tuple(points))


def user_growth(view: StoreView, discussion_id: str, bucket_seconds: int = DAY) -> TimeSeries:
    """Cumulative distinct participants, bucketed by first activity."""
    _require_discussion(view, discussion_id)
    stamps = []
    seen: set[str] = set()
    for ev in view.events:
        if ev.kind != "user_joined":
            continue
        if ev.payload.get("discussion_id") != discussion_id:
            continue
        uid = ev.payload["user_id"]
        if uid in seen:
            continue
        seen.add(uid)
        stamps.append(ev.at)
    return _series(stamps, bucket_seconds, cumulative=True)


def activity(view: StoreView, discussion_id: str, bucket_seconds: int = DAY) -> TimeSeries:
    """Posts per bucket: issue, position and argument creations."""
    _require_discussion(view, discussion_id)
    stamps = [
        ev.at
        for ev in view.events
        if ev.kind in ("issue_added", "position_added", "argument_added")
        and event_discussion(view, ev) == discussion_id
    ]
    return _series(stamps, bucket_seconds, cumulative=False)


def engagement_progression(
    view: StoreView, discussion_id: str, bucket_seconds: int = DAY
) -> TimeSeries:
    """Cumulative reflection count over time.

    Counts every reflection event, including re-votes: the curve tracks
    engagement acts, not the deduplicated vote tally.
    """
    _require_discussion(view, discussion_id)
    stamps = [
        ev.at
        for ev in view.events
        if ev.kind == "reflection_set" and event_discussion(view, ev) == discussion_id
    ]
    return _series(stamps, bucket_seconds, cumulative=True)


def agreement_stats(view: StoreView, position_id: str) -> AgreementStats:
    if position_id not in view.positions:
        raise UnknownPosition(position_id)
    agree = neutral = disagree = 0
    for r in view.reflections_of(position_id):
        if r.level == "agree":
            agree += 1
        elif r.level == "disagree":
            disagree += 1
        else:
            neutral += 1
    return AgreementStats(position_id=position_id, agree=agree, neutral=neutral, disagree=disagree)


def discussion_agreement(view: StoreView, discussion_id: str) -> list[AgreementStats]:
    _require_discussion(view, discussion_id)
    return [agreement_stats(view, p.id) for p in view.discussion_positions(discussion_id)]


def _numeric_id(entity_id: str) -> int:
    digits = "".join(ch for ch in entity_id if ch.isdigit())
    return int(digits) if digits else 0


def points_of_interest(view: StoreView, discussion_id: str) -> PointsOfInterest:
    """The three highlighted positions.

    most_consensual: argmax support_ratio; most_opposed: argmin
    support_ratio (both over positions with at least one agree/disagree
    vote); most_contested: argmax min(A, D) where min(A, D) >= 1.
    Ties break toward larger A+D, then earlier created_at, then smaller
    id, in that order.
    """
    _require_discussion(view, discussion_id)
    rated: list[tuple[Position, AgreementStats]] = []
    for pos in view.discussion_positions(discussion_id):
        stats = agreement_stats(view, pos.id)
        if stats.agree + stats.disagree >= 1:
            rated.append((pos, stats))

    def prefer(pos: Position, stats: AgreementStats) -> tuple:
        # larger is better on every component under max()
        return (
            stats.agree + stats.disagree,
            -pos.created_at.timestamp(),
            -_numeric_id(pos.id),
        )

    consensual = opposed = contested = None
    if rated:
        consensual = max(rated, key=lambda ps: (ps[1].support_ratio,) + prefer(*ps))[0].id
        opposed = max(rated, key=lambda ps: (-ps[1].support_ratio,) + prefer(*ps))[0].id
    fighting = [(p, s) for p, s in rated if s.contestedness >= 1]
    if fighting:
        contested = max(fighting, key=lambda ps: (ps[1].contestedness,) + prefer(*ps))[0].id
    return PointsOfInterest(
        most_consensual=consensual, most_opposed=opposed, most_contested=contested
    )


def position_argument_distribution(
    view: StoreView, discussion_id: str
) -> list[tuple[str, int, int]]:
    """Per position, (pro_count, con_count), in creation order."""
    _require_discussion(view, discussion_id)
    out = []
    for pos in view.discussion_positions(discussion_id):
        pro = sum(1 for a in view.arguments_of(pos.id) if a.side == "pro")
        con = sum(1 for a in view.arguments_of(pos.id) if a.side == "con")
        out.append((pos.id, pro, con))
    return out


def position_agreement_histogram(
    view: StoreView, discussion_id: str, bins: int = 10
) -> dict:
    """Histogram of support_ratio across positions.

    Equal-width bins over [0, 1]; the final bin is closed so ratio 1.0
    lands in it.  Positions with undefined ratio are counted separately.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    _require_discussion(view, discussion_id)
    counts = [0] * bins
    undefined = 0
    for pos in view.discussion_positions(discussion_id):
        ratio = agreement_stats(view, pos.id).support_ratio
        if ratio is None:
            undefined += 1
            continue
        idx = min(int(ratio * bins), bins - 1)
        counts[idx] += 1
    return {
        "bins": [
            {"lo": i / bins, "hi": (i + 1) / bins, "count": counts[i]} for i in range(bins)
        ],
        "undefined": undefined,
    }


NuggetScorer = Callable[[StoreView, Argument], float]


def default_nugget_score(view: StoreView, argument: Argument) -> float:
    """Heuristic: engagement on the parent position plus a length bonus.

    score = reflection count on the parent position
          + 2 if the argument is at least median length among its
            discussion's arguments.
    """
    parent_reflections = len(view.reflections_of(argument.position_id))
    pos = view.positions[argument.position_id]
    discussion_id = view.issues[pos.issue_id].discussion_id
    lengths = [
        len(a.text)
        for p in view.discussion_positions(discussion_id)
        for a in view.arguments_of(p.id)
    ]
    median = statistics.median(lengths) if lengths else 0
    bonus = 2 if len(argument.text) >= median else 0
    return parent_reflections + bonus


def select_nuggets(
    view: StoreView,
    discussion_id: str,
    k: int,
    scorer: Optional[NuggetScorer] = None,
) -> list[tuple[str, float]]:
    """Top-k arguments by nugget score, ties going to the earlier post."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _require_discussion(view, discussion_id)
    scorer = scorer or default_nugget_score
    scored: list[tuple[Argument, float]] = []
    for pos in view.discussion_positions(discussion_id):
        for arg in view.arguments_of(pos.id):
            scored.append((arg, scorer(view, arg)))
    scored.sort(key=lambda av: (-av[1], av[0].created_at, _numeric_id(av[0].id)))
    return [(a.id, s) for a, s in scored[:k]]
