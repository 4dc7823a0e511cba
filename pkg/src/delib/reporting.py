"""Report snapshots, dashboard layout, and export.

A snapshot freezes every requested widget against one pinned event-log
seq; the payloads never change afterwards, only the dashboard layout
may.  Descriptors are canonical JSON (sorted keys, newline-terminated)
so export -> parse -> export is byte-identical; documents render the
widgets in layout reading order as markdown or an HTML fragment.
"""

from __future__ import annotations

import copy
import html as html_mod
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import analytics
from .errors import (
    EmptyInput,
    Forbidden,
    OutOfBounds,
    Overlap,
    UnknownDiscussion,
    UnknownWidget,
)
from .store import DiscussionStore, StoreView, canonical_json, utc_now


class WidgetKind(str, Enum):
    user_growth = "user_growth"
    activity = "activity"
    engagement_progression = "engagement_progression"
    agreement_tracking = "agreement_tracking"
    position_argument_distribution = "position_argument_distribution"
    position_agreement_distribution = "position_agreement_distribution"
    synopsis = "synopsis"
    themes = "themes"
    points_of_interest = "points_of_interest"
    argument_network = "argument_network"


AI_WIDGETS = frozenset(
    {WidgetKind.synopsis, WidgetKind.themes, WidgetKind.argument_network}
)

WIDGET_TITLES = {
    WidgetKind.user_growth: "User growth",
    WidgetKind.activity: "Activity",
    WidgetKind.engagement_progression: "Engagement progression",
    WidgetKind.agreement_tracking: "Agreement tracking",
    WidgetKind.position_argument_distribution: "Position-argument distribution",
    WidgetKind.position_agreement_distribution: "Position agreement distribution",
    WidgetKind.synopsis: "Synopsis",
    WidgetKind.themes: "Discussion themes",
    WidgetKind.points_of_interest: "Points of interest",
    WidgetKind.argument_network: "Argument network",
}


def _discussion_posts(view: StoreView, discussion_id: str) -> list[tuple[str, str]]:
    posts = []
    for issue in view.issues_of(discussion_id):
        posts.append((issue.id, issue.text))
        for pos in view.positions_of(issue.id):
            posts.append((pos.id, pos.text))
            for arg in view.arguments_of(pos.id):
                posts.append((arg.id, arg.text))
    return posts


def _compute_user_growth(view, discussion_id, gateway):
    return analytics.user_growth(view, discussion_id).to_dict()


def _compute_activity(view, discussion_id, gateway):
    return analytics.activity(view, discussion_id).to_dict()


def _compute_engagement(view, discussion_id, gateway):
    return analytics.engagement_progression(view, discussion_id).to_dict()


def _compute_agreement(view, discussion_id, gateway):
    stats = analytics.discussion_agreement(view, discussion_id)
    return {
        "positions": [
            dict(s.to_dict(), text=view.positions[s.position_id].text) for s in stats
        ]
    }


def _compute_arg_distribution(view, discussion_id, gateway):
    rows = analytics.position_argument_distribution(view, discussion_id)
    return {
        "positions": [
            {"position_id": pid, "text": view.positions[pid].text, "pro": pro, "con": con}
            for pid, pro, con in rows
        ]
    }


def _compute_agreement_histogram(view, discussion_id, gateway):
    return analytics.position_agreement_histogram(view, discussion_id)


def _compute_synopsis(view, discussion_id, gateway):
    return gateway.summarize_discussion(view, discussion_id).to_dict()


def _compute_themes(view, discussion_id, gateway):
    return gateway.extract_themes(_discussion_posts(view, discussion_id)).to_dict()


def _compute_poi(view, discussion_id, gateway):
    poi = analytics.points_of_interest(view, discussion_id)
    out = {}
    for key, pid in poi.to_dict().items():
        if pid is None:
            out[key] = None
        else:
            stats = analytics.agreement_stats(view, pid)
            out[key] = {
                "position_id": pid,
                "text": view.positions[pid].text,
                "agree": stats.agree,
                "disagree": stats.disagree,
                "support_ratio": stats.support_ratio,
            }
    return out


def _compute_argument_network(view, discussion_id, gateway):
    return gateway.mine_arguments(view, discussion_id).to_dict()


# closed registry: a missing entry here fails the totality test
WIDGET_REGISTRY: dict[WidgetKind, Callable] = {
    WidgetKind.user_growth: _compute_user_growth,
    WidgetKind.activity: _compute_activity,
    WidgetKind.engagement_progression: _compute_engagement,
    WidgetKind.agreement_tracking: _compute_agreement,
    WidgetKind.position_argument_distribution: _compute_arg_distribution,
    WidgetKind.position_agreement_distribution: _compute_agreement_histogram,
    WidgetKind.synopsis: _compute_synopsis,
    WidgetKind.themes: _compute_themes,
    WidgetKind.points_of_interest: _compute_poi,
    WidgetKind.argument_network: _compute_argument_network,
}

WIDGET_SCHEMAS: dict[WidgetKind, dict] = {
    WidgetKind.user_growth: {"bucket_seconds": "int", "points": "[{t, value}]"},
    WidgetKind.activity: {"bucket_seconds": "int", "points": "[{t, value}]"},
    WidgetKind.engagement_progression: {"bucket_seconds": "int", "points": "[{t, value}]"},
    WidgetKind.agreement_tracking: {
        "positions": "[{position_id, text, agree, neutral, disagree, support_ratio, contestedness}]"
    },
    WidgetKind.position_argument_distribution: {"positions": "[{position_id, text, pro, con}]"},
    WidgetKind.position_agreement_distribution: {"bins": "[{lo, hi, count}]", "undefined": "int"},
    WidgetKind.synopsis: {"text": "str", "generated_at": "iso", "source_event_seq": "int"},
    WidgetKind.themes: {"tree": "{label, keywords, post_ids, children}", "list": "[...]"},
    WidgetKind.points_of_interest: {
        "most_consensual": "{position_id, ...} | null",
        "most_opposed": "{position_id, ...} | null",
        "most_contested": "{position_id, ...} | null",
    },
    WidgetKind.argument_network: {
        "nodes": "[{id, text, kind, source}]",
        "edges": "[{from, to, relation, confidence}]",
    },
}


# ----------------------------------------------------------------------
# layout

GRID_COLUMNS = 12
MIN_CELL = 2
DEFAULT_W = 6
DEFAULT_H = 4


@dataclass
class Cell:
    widget: WidgetKind
    x: int
    y: int
    w: int
    h: int

    def to_dict(self) -> dict:
        return {"widget": self.widget.value, "x": self.x, "y": self.y, "w": self.w, "h": self.h}

    def overlaps(self, other: "Cell") -> bool:
        return not (
            self.x + self.w <= other.x
            or other.x + other.w <= self.x
            or self.y + self.h <= other.y
            or other.y + other.h <= self.y
        )


@dataclass
class DashboardLayout:
    grid_columns: int = GRID_COLUMNS
    cells: list[Cell] = field(default_factory=list)

    def cell_of(self, widget: WidgetKind) -> Cell:
        for cell in self.cells:
            if cell.widget == widget:
                return cell
        raise UnknownWidget(widget.value)

    def validate(self) -> None:
        for cell in self.cells:
            if cell.w < MIN_CELL or cell.h < MIN_CELL:
                raise OutOfBounds(f"{cell.widget.value}: minimum size is {MIN_CELL}x{MIN_CELL}")
            if cell.x < 0 or cell.y < 0 or cell.x + cell.w > self.grid_columns:
                raise OutOfBounds(f"{cell.widget.value}: cell exceeds the {self.grid_columns}-column grid")
        for i, a in enumerate(self.cells):
            for b in self.cells[i + 1 :]:
                if a.overlaps(b):
                    raise Overlap(f"{a.widget.value} overlaps {b.widget.value}")

    def reading_order(self) -> list[Cell]:
        return sorted(self.cells, key=lambda c: (c.y, c.x))

    def to_dict(self) -> dict:
        return {"grid_columns": self.grid_columns, "cells": [c.to_dict() for c in self.cells]}

    @classmethod
    def from_dict(cls, data: dict) -> "DashboardLayout":
        return cls(
            grid_columns=data["grid_columns"],
            cells=[
                Cell(
                    widget=WidgetKind(c["widget"]),
                    x=c["x"],
                    y=c["y"],
                    w=c["w"],
                    h=c["h"],
                )
                for c in data["cells"]
            ],
        )

    @classmethod
    def default_for(cls, kinds: list[WidgetKind]) -> "DashboardLayout":
        """Pack 6x4 cells left-to-right, top-to-bottom, in enum order."""
        layout = cls()
        x = y = 0
        for kind in sorted(kinds, key=lambda k: list(WidgetKind).index(k)):
            if x + DEFAULT_W > layout.grid_columns:
                x = 0
                y += DEFAULT_H
            layout.cells.append(Cell(widget=kind, x=x, y=y, w=DEFAULT_W, h=DEFAULT_H))
            x += DEFAULT_W
        return layout


def update_layout(snapshot: "ReportSnapshot", op: dict) -> DashboardLayout:
    """Apply one move/resize op; rejected ops leave the layout untouched."""
    if not isinstance(op, dict) or op.get("op") not in ("move", "resize"):
        raise ValueError("op must be {'op': 'move'|'resize', 'widget': ..., ...}")
    try:
        kind = WidgetKind(op.get("widget"))
    except ValueError as exc:
        raise UnknownWidget(str(op.get("widget"))) from exc
    layout = snapshot.layout
    cell = layout.cell_of(kind)
    candidate = copy.deepcopy(layout)
    target = candidate.cell_of(kind)
    try:
        if op["op"] == "move":
            target.x, target.y = int(op["x"]), int(op["y"])
        else:
            target.w, target.h = int(op["w"]), int(op["h"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed layout op: {exc}") from exc
    candidate.validate()  # raises Overlap/OutOfBounds, original layout untouched
    cell.x, cell.y, cell.w, cell.h = target.x, target.y, target.w, target.h
    return layout


# ----------------------------------------------------------------------
# snapshots


@dataclass
class WidgetStatus:
    status: str  # ok | degraded
    reason: str | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "reason": self.reason}


class ReportSnapshot:
    """Immutable widget payloads plus a mutable dashboard layout."""

    def __init__(
        self,
        snapshot_id: str,
        discussion_id: str,
        created_at: datetime,
        store_seq: int,
        widgets: dict[WidgetKind, dict],
        statuses: dict[WidgetKind, WidgetStatus],
        layout: DashboardLayout,
    ):
        self.id = snapshot_id
        self.discussion_id = discussion_id
        self.created_at = created_at
        self.store_seq = store_seq
        self._widgets = {k: copy.deepcopy(v) for k, v in widgets.items()}
        self.statuses = statuses
        self.layout = layout

    @property
    def kinds(self) -> list[WidgetKind]:
        return list(self._widgets.keys())

    def widget(self, kind: WidgetKind) -> dict:
        if kind not in self._widgets:
            raise UnknownWidget(kind.value if isinstance(kind, WidgetKind) else str(kind))
        return copy.deepcopy(self._widgets[kind])

    # ------------------------------------------------------------------

    def to_descriptor_dict(self) -> dict:
        return {
            "schema": 1,
            "id": self.id,
            "discussion_id": self.discussion_id,
            "created_at": self.created_at.isoformat(),
            "store_seq": self.store_seq,
            "layout": self.layout.to_dict(),
            "widgets": {
                kind.value: {
                    "status": self.statuses[kind].status,
                    "reason": self.statuses[kind].reason,
                    "payload": payload,
                }
                for kind, payload in self._widgets.items()
            },
        }

    def export_descriptor(self) -> bytes:
        return (canonical_json(self.to_descriptor_dict()) + "\n").encode("utf-8")

    @classmethod
    def from_descriptor(cls, raw: bytes | str) -> "ReportSnapshot":
        import json

        data = json.loads(raw.decode("utf-8") if isinstance(raw, bytes) else raw)
        widgets = {}
        statuses = {}
        for name, entry in data["widgets"].items():
            kind = WidgetKind(name)
            widgets[kind] = entry["payload"]
            statuses[kind] = WidgetStatus(status=entry["status"], reason=entry.get("reason"))
        return cls(
            snapshot_id=data["id"],
            discussion_id=data["discussion_id"],
            created_at=datetime.fromisoformat(data["created_at"]),
            store_seq=data["store_seq"],
            widgets=widgets,
            statuses=statuses,
            layout=DashboardLayout.from_dict(data["layout"]),
        )

    # ------------------------------------------------------------------

    def export_document(self, fmt: str = "markdown") -> bytes:
        if fmt not in ("markdown", "html"):
            raise ValueError(f"format must be markdown or html, got {fmt!r}")
        order = [c.widget for c in self.layout.reading_order()]
        # widgets without a cell (descriptor edits) trail in enum order
        for kind in self.kinds:
            if kind not in order:
                order.append(kind)
        if fmt == "markdown":
            return self._to_markdown(order).encode("utf-8")
        return self._to_html(order).encode("utf-8")

    def _to_markdown(self, order: list[WidgetKind]) -> str:
        lines = [
            f"# Report {self.id}",
            "",
            f"Discussion `{self.discussion_id}` at event {self.store_seq}, "
            f"created {self.created_at.isoformat()}.",
            "",
        ]
        for kind in order:
            lines.append(f"## {WIDGET_TITLES[kind]}")
            lines.append("")
            status = self.statuses[kind]
            if status.status == "degraded":
                lines.append(f"> Widget degraded: {status.reason}")
            else:
                lines.extend(_md_body(kind, self._widgets[kind]))
            lines.append("")
        return "\n".join(lines).rstrip("\n") + "\n"

    def _to_html(self, order: list[WidgetKind]) -> str:
        esc = html_mod.escape
        parts = [
            f"<article><h1>Report {esc(self.id)}</h1>",
            f"<p>Discussion {esc(self.discussion_id)} at event {self.store_seq}, "
            f"created {esc(self.created_at.isoformat())}.</p>",
        ]
        for kind in order:
            parts.append(f"<section><h2>{esc(WIDGET_TITLES[kind])}</h2>")
            status = self.statuses[kind]
            if status.status == "degraded":
                parts.append(f"<blockquote>Widget degraded: {esc(str(status.reason))}</blockquote>")
            else:
                parts.append(_html_body(kind, self._widgets[kind]))
            parts.append("</section>")
        parts.append("</article>")
        return "".join(parts) + "\n"


def _md_table(headers: list[str], rows: list[list]) -> list[str]:
    out = ["| " + " | ".join(headers) + " |", "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        out.append("| " + " | ".join(str(c) for c in row) + " |")
    return out


def _ratio_str(value) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def _md_body(kind: WidgetKind, payload: dict) -> list[str]:
    if kind in (WidgetKind.user_growth, WidgetKind.activity, WidgetKind.engagement_progression):
        rows = [[p["t"], p["value"]] for p in payload["points"]]
        return _md_table(["bucket", "value"], rows) if rows else ["(no data)"]
    if kind == WidgetKind.agreement_tracking:
        rows = [
            [p["position_id"], p["text"], p["agree"], p["neutral"], p["disagree"], _ratio_str(p["support_ratio"])]
            for p in payload["positions"]
        ]
        return _md_table(["position", "text", "agree", "neutral", "disagree", "support"], rows) if rows else ["(no positions)"]
    if kind == WidgetKind.position_argument_distribution:
        rows = [[p["position_id"], p["text"], p["pro"], p["con"]] for p in payload["positions"]]
        return _md_table(["position", "text", "pro", "con"], rows) if rows else ["(no positions)"]
    if kind == WidgetKind.position_agreement_distribution:
        rows = [[f"{b['lo']:.1f}-{b['hi']:.1f}", b["count"]] for b in payload["bins"]]
        return _md_table(["support ratio", "positions"], rows) + [
            "",
            f"Positions without votes: {payload['undefined']}",
        ]
    if kind == WidgetKind.synopsis:
        return [payload["text"]]
    if kind == WidgetKind.themes:
        lines = []
        for theme in payload["list"]:
            lines.append(f"- **{theme['label']}** ({', '.join(theme['keywords'])})")
            for pid in theme["post_ids"]:
                lines.append(f"  - {pid}")
        return lines or ["(no themes)"]
    if kind == WidgetKind.points_of_interest:
        lines = []
        for key in ("most_consensual", "most_opposed", "most_contested"):
            entry = payload[key]
            label = key.replace("_", " ")
            if entry is None:
                lines.append(f"- {label}: none")
            else:
                lines.append(
                    f"- {label}: {entry['position_id']} \"{entry['text']}\" "
                    f"(support {_ratio_str(entry['support_ratio'])})"
                )
        return lines
    if kind == WidgetKind.argument_network:
        lines = [f"Nodes: {len(payload['nodes'])}", ""]
        for e in payload["edges"]:
            lines.append(f"- {e['from']} -[{e['relation']}]-> {e['to']} ({e['confidence']:.2f})")
        return lines
    raise UnknownWidget(str(kind))


def _html_table(headers: list[str], rows: list[list]) -> str:
    esc = html_mod.escape
    head = "".join(f"<th>{esc(str(h))}</th>" for h in headers)
    body = "".join(
        "<tr>" + "".join(f"<td>{esc(str(c))}</td>" for c in row) + "</tr>" for row in rows
    )
    return f"<table><tr>{head}</tr>{body}</table>"


def _html_body(kind: WidgetKind, payload: dict) -> str:
    esc = html_mod.escape
    if kind in (WidgetKind.user_growth, WidgetKind.activity, WidgetKind.engagement_progression):
        rows = [[p["t"], p["value"]] for p in payload["points"]]
        return _html_table(["bucket", "value"], rows) if rows else "<p>(no data)</p>"
    if kind == WidgetKind.agreement_tracking:
        rows = [
            [p["position_id"], p["text"], p["agree"], p["neutral"], p["disagree"], _ratio_str(p["support_ratio"])]
            for p in payload["positions"]
        ]
        return _html_table(["position", "text", "agree", "neutral", "disagree", "support"], rows)
    if kind == WidgetKind.position_argument_distribution:
        rows = [[p["position_id"], p["text"], p["pro"], p["con"]] for p in payload["positions"]]
        return _html_table(["position", "text", "pro", "con"], rows)
    if kind == WidgetKind.position_agreement_distribution:
        rows = [[f"{b['lo']:.1f}-{b['hi']:.1f}", b["count"]] for b in payload["bins"]]
        return (
            _html_table(["support ratio", "positions"], rows)
            + f"<p>Positions without votes: {payload['undefined']}</p>"
        )
    if kind == WidgetKind.synopsis:
        return f"<p>{esc(payload['text'])}</p>"
    if kind == WidgetKind.themes:
        items = []
        for theme in payload["list"]:
            posts = "".join(f"<li>{esc(pid)}</li>" for pid in theme["post_ids"])
            items.append(
                f"<li>{esc(theme['label'])} ({esc(', '.join(theme['keywords']))})<ul>{posts}</ul></li>"
            )
        return f"<ul>{''.join(items)}</ul>"
    if kind == WidgetKind.points_of_interest:
        items = []
        for key in ("most_consensual", "most_opposed", "most_contested"):
            entry = payload[key]
            label = key.replace("_", " ")
            if entry is None:
                items.append(f"<li>{esc(label)}: none</li>")
            else:
                items.append(
                    f"<li>{esc(label)}: {esc(entry['position_id'])} "
                    f"{esc(entry['text'])} (support {_ratio_str(entry['support_ratio'])})</li>"
                )
        return f"<ul>{''.join(items)}</ul>"
    if kind == WidgetKind.argument_network:
        edges = "".join(
            f"<li>{esc(e['from'])} -[{esc(e['relation'])}]-&gt; {esc(e['to'])} "
            f"({e['confidence']:.2f})</li>"
            for e in payload["edges"]
        )
        return f"<p>Nodes: {len(payload['nodes'])}</p><ul>{edges}</ul>"
    raise UnknownWidget(str(kind))


# ----------------------------------------------------------------------
# snapshot creation


def resolve_kinds(kinds: Iterable[WidgetKind | str] | None) -> list[WidgetKind]:
    if kinds is None:
        return list(WidgetKind)
    out: list[WidgetKind] = []
    for k in kinds:
        if isinstance(k, WidgetKind):
            kind = k
        else:
            try:
                kind = WidgetKind(k)
            except ValueError as exc:
                raise UnknownWidget(str(k)) from exc
        if kind not in out:
            out.append(kind)
    if not out:
        raise EmptyInput("a snapshot needs at least one widget kind")
    return out


def create_snapshot(
    store: DiscussionStore,
    discussion_id: str,
    kinds: Iterable[WidgetKind | str] | None,
    actor: str,
    gateway,
    snapshot_id: str | None = None,
    clock: Optional[Callable[[], datetime]] = None,
) -> ReportSnapshot:
    """Compute the requested widgets against one pinned store seq.

    AI-backed widgets degrade on failure instead of aborting; the other
    widgets are deterministic and must succeed.
    """
    wanted = resolve_kinds(kinds)
    user = store.users.get(actor)
    if user is None or user.role not in ("moderator", "admin"):
        raise Forbidden("snapshot creation requires a moderator")
    view = store.view()  # every widget reads this one view: no torn reads
    if discussion_id not in view.discussions:
        raise UnknownDiscussion(discussion_id)
    widgets: dict[WidgetKind, dict] = {}
    statuses: dict[WidgetKind, WidgetStatus] = {}
    for kind in wanted:
        compute = WIDGET_REGISTRY[kind]
        try:
            widgets[kind] = compute(view, discussion_id, gateway)
            statuses[kind] = WidgetStatus(status="ok")
        except Exception as exc:
            if kind not in AI_WIDGETS:
                raise
            widgets[kind] = {}
            statuses[kind] = WidgetStatus(status="degraded", reason=str(exc))
    now = (clock or utc_now)()
    return ReportSnapshot(
        snapshot_id=snapshot_id or f"snap-{discussion_id}-{view.seq}",
        discussion_id=discussion_id,
        created_at=now,
        store_seq=view.seq,
        widgets=widgets,
        statuses=statuses,
        layout=DashboardLayout.default_for(wanted),
    )


def export_descriptor(snapshot: ReportSnapshot) -> bytes:
    return snapshot.export_descriptor()


def export_document(snapshot: ReportSnapshot, fmt: str = "markdown") -> bytes:
    return snapshot.export_document(fmt)


def save_descriptor(snapshot: ReportSnapshot, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(snapshot.export_descriptor())
    return path
