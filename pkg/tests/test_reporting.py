"""Snapshots, dashboard layout, descriptors and document export."""

from __future__ import annotations

import copy
import json
import random
from html.parser import HTMLParser
from pathlib import Path

import httpx
import pytest

from delib import analytics
from delib.aigateway import AiGateway, RemoteBackend
from delib.errors import (
    EmptyInput,
    Forbidden,
    OutOfBounds,
    Overlap,
    UnknownDiscussion,
    UnknownWidget,
)
from delib.reporting import (
    AI_WIDGETS,
    DEFAULT_H,
    DEFAULT_W,
    GRID_COLUMNS,
    MIN_CELL,
    WIDGET_REGISTRY,
    WIDGET_SCHEMAS,
    WIDGET_TITLES,
    Cell,
    DashboardLayout,
    ReportSnapshot,
    WidgetKind,
    WidgetStatus,
    create_snapshot,
    resolve_kinds,
    update_layout,
)

from .conftest import build_fixture_store, make_tick_clock

GOLDEN = Path(__file__).parent / "data" / "fixture_descriptor.json"


def fixture_snapshot(kinds=None):
    """Deterministic snapshot used for the golden descriptor."""
    store, ids = build_fixture_store()
    gateway = AiGateway(clock=make_tick_clock())
    snapshot = create_snapshot(
        store, ids["d"], kinds, "mod", gateway, clock=make_tick_clock()
    )
    return store, ids, snapshot


class TestRegistryTotality:
    def test_every_kind_is_computable(self):
        for kind in WidgetKind:
            assert kind in WIDGET_REGISTRY, f"no compute function for {kind.value}"
            assert callable(WIDGET_REGISTRY[kind])

    def test_every_kind_has_schema_and_title(self):
        for kind in WidgetKind:
            assert kind in WIDGET_SCHEMAS
            assert kind in WIDGET_TITLES

    def test_ai_widgets_are_a_strict_subset(self):
        assert AI_WIDGETS < set(WidgetKind)
        assert WidgetKind.synopsis in AI_WIDGETS
        assert WidgetKind.user_growth not in AI_WIDGETS

    def test_enum_is_the_documented_ten(self):
        assert [k.value for k in WidgetKind] == [
            "user_growth",
            "activity",
            "engagement_progression",
            "agreement_tracking",
            "position_argument_distribution",
            "position_agreement_distribution",
            "synopsis",
            "themes",
            "points_of_interest",
            "argument_network",
        ]


class TestResolveKinds:
    def test_none_means_all(self):
        assert resolve_kinds(None) == list(WidgetKind)

    def test_strings_and_enums_dedup_in_order(self):
        got = resolve_kinds(["themes", WidgetKind.activity, "themes"])
        assert got == [WidgetKind.themes, WidgetKind.activity]

    def test_unknown_kind(self):
        with pytest.raises(UnknownWidget):
            resolve_kinds(["sparkline"])

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            resolve_kinds([])


class TestDefaultLayout:
    def test_packs_two_per_row_in_enum_order(self):
        layout = DashboardLayout.default_for(list(WidgetKind))
        layout.validate()
        cells = {c.widget: c for c in layout.cells}
        assert len(cells) == 10
        for n, kind in enumerate(WidgetKind):
            cell = cells[kind]
            assert (cell.x, cell.y) == ((n % 2) * DEFAULT_W, (n // 2) * DEFAULT_H)
            assert (cell.w, cell.h) == (DEFAULT_W, DEFAULT_H)

    def test_subset_is_reordered_to_enum_order(self):
        layout = DashboardLayout.default_for([WidgetKind.themes, WidgetKind.activity])
        # enum order decides placement: activity comes first on the grid
        assert [c.widget for c in layout.cells] == [WidgetKind.activity, WidgetKind.themes]
        assert layout.cell_of(WidgetKind.activity).x == 0
        assert layout.cell_of(WidgetKind.themes).x == DEFAULT_W

    def test_adjacent_cells_do_not_overlap(self):
        a = Cell(WidgetKind.activity, 0, 0, 6, 4)
        b = Cell(WidgetKind.themes, 6, 0, 6, 4)
        c = Cell(WidgetKind.synopsis, 0, 4, 6, 4)
        assert not a.overlaps(b) and not a.overlaps(c)
        assert a.overlaps(Cell(WidgetKind.user_growth, 5, 3, 2, 2))


class TestUpdateLayout:
    @pytest.fixture
    def snapshot(self):
        return fixture_snapshot([WidgetKind.activity, WidgetKind.synopsis])[2]

    def test_move_to_free_region(self, snapshot):
        update_layout(snapshot, {"op": "move", "widget": "synopsis", "x": 0, "y": 10})
        cell = snapshot.layout.cell_of(WidgetKind.synopsis)
        assert (cell.x, cell.y) == (0, 10)
        snapshot.layout.validate()

    def test_move_onto_occupied_cell_is_rejected(self, snapshot):
        before = snapshot.layout.to_dict()
        with pytest.raises(Overlap):
            update_layout(snapshot, {"op": "move", "widget": "synopsis", "x": 1, "y": 1})
        assert snapshot.layout.to_dict() == before

    def test_resize_below_minimum(self, snapshot):
        before = snapshot.layout.to_dict()
        with pytest.raises(OutOfBounds):
            update_layout(snapshot, {"op": "resize", "widget": "activity", "w": 1, "h": 4})
        with pytest.raises(OutOfBounds):
            update_layout(snapshot, {"op": "resize", "widget": "activity", "w": 4, "h": 1})
        assert snapshot.layout.to_dict() == before

    def test_resize_past_grid_edge(self, snapshot):
        update_layout(snapshot, {"op": "move", "widget": "synopsis", "x": 0, "y": 10})
        with pytest.raises(OutOfBounds):
            update_layout(snapshot, {"op": "resize", "widget": "activity", "w": 13, "h": 4})

    def test_move_to_negative_coordinates(self, snapshot):
        with pytest.raises(OutOfBounds):
            update_layout(snapshot, {"op": "move", "widget": "activity", "x": -1, "y": 0})

    def test_widget_not_in_snapshot(self, snapshot):
        with pytest.raises(UnknownWidget):
            update_layout(snapshot, {"op": "move", "widget": "themes", "x": 0, "y": 20})
        with pytest.raises(UnknownWidget):
            update_layout(snapshot, {"op": "move", "widget": "nonsense", "x": 0, "y": 20})

    def test_malformed_ops(self, snapshot):
        for op in [
            {},
            {"op": "rotate", "widget": "activity"},
            {"op": "move", "widget": "activity"},
            {"op": "resize", "widget": "activity", "w": 4},
            "move synopsis",
        ]:
            with pytest.raises(ValueError):
                update_layout(snapshot, op)

    def test_random_op_sequences_preserve_invariants(self):
        rng = random.Random(5)
        _, _, snapshot = fixture_snapshot()
        widgets = [k.value for k in snapshot.kinds]
        accepted = rejected = 0
        for _ in range(200):
            if rng.random() < 0.5:
                op = {
                    "op": "move",
                    "widget": rng.choice(widgets),
                    "x": rng.randint(-2, 13),
                    "y": rng.randint(-2, 24),
                }
            else:
                op = {
                    "op": "resize",
                    "widget": rng.choice(widgets),
                    "w": rng.randint(0, 14),
                    "h": rng.randint(0, 10),
                }
            before = snapshot.layout.to_dict()
            try:
                update_layout(snapshot, op)
                accepted += 1
            except (Overlap, OutOfBounds):
                assert snapshot.layout.to_dict() == before
                rejected += 1
            snapshot.layout.validate()  # never leaves an invalid layout behind
        assert accepted > 0 and rejected > 0


class TestCreateSnapshot:
    def test_requires_moderator(self):
        store, ids = build_fixture_store()
        gateway = AiGateway()
        with pytest.raises(Forbidden):
            create_snapshot(store, ids["d"], None, "alice", gateway)
        with pytest.raises(Forbidden):
            create_snapshot(store, ids["d"], None, "nobody", gateway)

    def test_unknown_discussion(self):
        store, _ = build_fixture_store()
        with pytest.raises(UnknownDiscussion):
            create_snapshot(store, "d404", None, "mod", AiGateway())

    def test_default_id_pins_the_seq(self):
        store, ids, snapshot = fixture_snapshot([WidgetKind.activity])
        assert snapshot.id == f"snap-{ids['d']}-{snapshot.store_seq}"
        assert snapshot.store_seq == store.seq

    def test_poi_widget_matches_direct_analytics(self):
        store, ids, snapshot = fixture_snapshot([WidgetKind.points_of_interest])
        payload = snapshot.widget(WidgetKind.points_of_interest)
        poi = analytics.points_of_interest(store.view(), ids["d"])
        assert payload["most_consensual"]["position_id"] == poi.most_consensual
        assert payload["most_opposed"]["position_id"] == poi.most_opposed
        assert payload["most_contested"]["position_id"] == poi.most_contested
        assert snapshot.statuses[WidgetKind.points_of_interest].status == "ok"

    def test_ai_down_degrades_ai_widgets_only(self):
        store, ids = build_fixture_store()
        backend = RemoteBackend(
            "http://ai.test/v1",
            "m",
            transport=httpx.MockTransport(lambda request: httpx.Response(503)),
        )
        snapshot = create_snapshot(store, ids["d"], None, "mod", AiGateway(backend=backend))
        for kind in WidgetKind:
            status = snapshot.statuses[kind]
            if kind in AI_WIDGETS:
                assert status.status == "degraded"
                assert status.reason
                assert snapshot.widget(kind) == {}
            else:
                assert status.status == "ok"

    def test_non_ai_widget_failure_aborts(self, monkeypatch):
        store, ids = build_fixture_store()

        def broken(view, discussion_id, gateway):
            raise RuntimeError("deterministic widgets must not fail silently")

        monkeypatch.setitem(WIDGET_REGISTRY, WidgetKind.user_growth, broken)
        with pytest.raises(RuntimeError):
            create_snapshot(store, ids["d"], [WidgetKind.user_growth], "mod", AiGateway())


class TestImmutability:
    def test_payload_bytes_survive_store_mutations(self):
        store, ids, snapshot = fixture_snapshot()
        first = snapshot.export_descriptor()
        for n in range(5):
            store.add_node(ids["d"], ids["i1"], "position", f"late position {n}", "alice")
            store.set_reflection(ids["p1"], "dave", "agree")
        assert snapshot.export_descriptor() == first
        assert snapshot.export_descriptor() == first  # and stable across reads

    def test_widget_returns_defensive_copies(self):
        _, _, snapshot = fixture_snapshot([WidgetKind.agreement_tracking])
        payload = snapshot.widget(WidgetKind.agreement_tracking)
        payload["positions"].clear()
        assert snapshot.widget(WidgetKind.agreement_tracking)["positions"]

    def test_unknown_widget_access(self):
        _, _, snapshot = fixture_snapshot([WidgetKind.activity])
        with pytest.raises(UnknownWidget):
            snapshot.widget(WidgetKind.themes)

    def test_snapshot_copies_inputs(self):
        widgets = {WidgetKind.synopsis: {"text": "before"}}
        snapshot = ReportSnapshot(
            snapshot_id="s1",
            discussion_id="d1",
            created_at=make_tick_clock()(),
            store_seq=1,
            widgets=widgets,
            statuses={WidgetKind.synopsis: WidgetStatus("ok")},
            layout=DashboardLayout.default_for([WidgetKind.synopsis]),
        )
        widgets[WidgetKind.synopsis]["text"] = "after"
        assert snapshot.widget(WidgetKind.synopsis)["text"] == "before"


class TestSingleSeq:
    def test_mid_snapshot_mutation_does_not_leak(self, monkeypatch):
        store, ids = build_fixture_store()
        seq_before = store.seq
        expected = analytics.position_argument_distribution(store.view(), ids["d"])
        original = WIDGET_REGISTRY[WidgetKind.user_growth]

        def mutating(view, discussion_id, gateway):
            # a concurrent writer lands between widget computations
            store.add_node(ids["d"], ids["p1"], "argument", "sneaky new argument", "bob", side="pro")
            return original(view, discussion_id, gateway)

        monkeypatch.setitem(WIDGET_REGISTRY, WidgetKind.user_growth, mutating)
        snapshot = create_snapshot(
            store,
            ids["d"],
            [WidgetKind.user_growth, WidgetKind.position_argument_distribution],
            "mod",
            AiGateway(),
        )
        assert store.seq > seq_before  # the mutation really happened
        assert snapshot.store_seq == seq_before
        payload = snapshot.widget(WidgetKind.position_argument_distribution)
        got = [(p["position_id"], p["pro"], p["con"]) for p in payload["positions"]]
        assert got == expected  # pre-mutation truth, not the racy store


class TestDescriptor:
    def test_round_trip_is_byte_identical(self):
        _, _, snapshot = fixture_snapshot()
        blob = snapshot.export_descriptor()
        reloaded = ReportSnapshot.from_descriptor(blob)
        assert reloaded.export_descriptor() == blob

    def test_descriptor_shape(self):
        _, ids, snapshot = fixture_snapshot([WidgetKind.synopsis])
        data = json.loads(snapshot.export_descriptor())
        assert data["schema"] == 1
        assert data["discussion_id"] == ids["d"]
        assert set(data["widgets"]) == {"synopsis"}
        assert data["widgets"]["synopsis"]["status"] == "ok"
        assert snapshot.export_descriptor().endswith(b"\n")

    def test_degraded_status_round_trips(self):
        store, ids = build_fixture_store()
        backend = RemoteBackend(
            "http://ai.test/v1",
            "m",
            transport=httpx.MockTransport(lambda request: httpx.Response(503)),
        )
        snapshot = create_snapshot(
            store, ids["d"], [WidgetKind.synopsis, WidgetKind.activity], "mod", AiGateway(backend=backend)
        )
        data = json.loads(snapshot.export_descriptor())
        assert data["widgets"]["synopsis"]["status"] == "degraded"
        assert data["widgets"]["synopsis"]["reason"]
        reloaded = ReportSnapshot.from_descriptor(snapshot.export_descriptor())
        assert reloaded.statuses[WidgetKind.synopsis].status == "degraded"

    def test_layout_change_survives_round_trip(self):
        _, _, snapshot = fixture_snapshot([WidgetKind.activity, WidgetKind.themes])
        update_layout(snapshot, {"op": "move", "widget": "themes", "x": 0, "y": 12})
        reloaded = ReportSnapshot.from_descriptor(snapshot.export_descriptor())
        assert reloaded.layout.cell_of(WidgetKind.themes).y == 12

    def test_matches_frozen_golden_file(self):
        _, _, snapshot = fixture_snapshot()
        assert GOLDEN.exists(), "golden descriptor missing; regenerate tests/data/"
        assert snapshot.export_descriptor() == GOLDEN.read_bytes(), (
            "fixture descriptor drifted from the frozen golden file; if the "
            "change is intentional, regenerate tests/data/fixture_descriptor.json"
        )


class FragmentChecker(HTMLParser):
    VOID = {"br", "hr", "img", "meta", "link", "input"}

    def __init__(self):
        super().__init__()
        self.stack: list[str] = []
        self.tags = 0

    def handle_starttag(self, tag, attrs):
        self.tags += 1
        if tag not in self.VOID:
            self.stack.append(tag)

    def handle_endtag(self, tag):
        assert self.stack and self.stack[-1] == tag, f"mismatched </{tag}>"
        self.stack.pop()


class TestDocumentExport:
    def test_markdown_has_one_heading_per_widget(self):
        _, _, snapshot = fixture_snapshot()
        text = snapshot.export_document("markdown").decode()
        assert text.startswith(f"# Report {snapshot.id}\n")
        for kind in WidgetKind:
            assert f"## {WIDGET_TITLES[kind]}" in text
        assert text.count("\n## ") == len(list(WidgetKind))

    def test_sections_follow_reading_order(self):
        _, _, snapshot = fixture_snapshot([WidgetKind.activity, WidgetKind.synopsis])
        text = snapshot.export_document("markdown").decode()
        assert text.index("## Activity") < text.index("## Synopsis")

        update_layout(snapshot, {"op": "move", "widget": "activity", "x": 0, "y": 20})
        text = snapshot.export_document("markdown").decode()
        assert text.index("## Synopsis") < text.index("## Activity")

    def test_markdown_renders_tables_and_lists(self):
        _, ids, snapshot = fixture_snapshot()
        text = snapshot.export_document("markdown").decode()
        assert "| position | text | pro | con |" in text
        assert "| bucket | value |" in text
        assert "- most consensual:" in text
        assert "Extend night bus hours" in text

    def test_degraded_widget_renders_notice(self):
        store, ids = build_fixture_store()
        backend = RemoteBackend(
            "http://ai.test/v1",
            "m",
            transport=httpx.MockTransport(lambda request: httpx.Response(503)),
        )
        snapshot = create_snapshot(store, ids["d"], None, "mod", AiGateway(backend=backend))
        text = snapshot.export_document("markdown").decode()
        assert "> Widget degraded:" in text

    def test_html_is_a_balanced_fragment(self):
        _, _, snapshot = fixture_snapshot()
        html = snapshot.export_document("html").decode()
        checker = FragmentChecker()
        checker.feed(html)
        checker.close()
        assert checker.stack == []
        assert checker.tags > 10
        assert html.count("<section>") == len(list(WidgetKind))

    def test_html_escapes_content(self):
        store, ids = build_fixture_store()
        store.add_node(ids["d"], ids["i1"], "position", "Use <script> tags & win", "alice")
        snapshot = create_snapshot(
            store, ids["d"], [WidgetKind.agreement_tracking], "mod", AiGateway()
        )
        html = snapshot.export_document("html").decode()
        assert "<script>" not in html
        assert "&lt;script&gt;" in html

    def test_unknown_format(self):
        _, _, snapshot = fixture_snapshot([WidgetKind.activity])
        with pytest.raises(ValueError):
            snapshot.export_document("pdf")
