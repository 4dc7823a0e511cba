"""Shared fixtures: deterministic clocks, a populated store, a transcript."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from delib.store import DiscussionStore

T0 = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_tick_clock(start: datetime = T0, step_seconds: int = 3600):
    """Strictly increasing fake clock; one tick per call."""
    state = {"n": -1}

    def clock() -> datetime:
        state["n"] += 1
        return start + timedelta(seconds=step_seconds * state["n"])

    return clock


@pytest.fixture
def tick_clock():
    return make_tick_clock()


FIXTURE_TRANSCRIPT = """Moderator: Welcome everyone to the mobility meeting.
Alice: I think the main street needs a protected bike lane.
Bob: Because cycling feels unsafe there, many people avoid it.
Carol: But the main street would lose thirty parking spots.
Dave: I think buses on the main street should run later at night.
Alice: Because night workers depend on the last bus home.
Bob: However the night routes cost more than they collect.
Carol: I think the park gates must stay open in summer evenings.
Dave: Since the park is the only green space nearby, families need it.
Carol: People gather there every evening in summer.
"""


@pytest.fixture
def fixture_transcript_bytes() -> bytes:
    return FIXTURE_TRANSCRIPT.encode("utf-8")


def build_fixture_store(clock=None) -> tuple[DiscussionStore, dict]:
    """One discussion, two issues, three positions, mixed votes.

    Returns the store plus an id map for assertions.
    """
    store = DiscussionStore(clock=clock or make_tick_clock())
    ids = {}
    store.register_user("Mona", "moderator", user_id="mod")
    for uid, name in [("alice", "Alice"), ("bob", "Bob"), ("carol", "Carol"), ("dave", "Dave")]:
        store.register_user(name, "participant", user_id=uid)
    disc = store.create_discussion("Street mobility", "How should we share the street?", "mod")
    ids["d"] = disc.id
    ids["i1"] = store.add_node(disc.id, disc.id, "issue", "How to make cycling safer?", "alice")
    ids["i2"] = store.add_node(disc.id, disc.id, "issue", "What about bus service at night?", "dave")
    ids["p1"] = store.add_node(disc.id, ids["i1"], "position", "Build a protected bike lane", "alice")
    ids["p2"] = store.add_node(disc.id, ids["i1"], "position", "Lower the speed limit instead", "bob")
    ids["p3"] = store.add_node(disc.id, ids["i2"], "position", "Extend night bus hours", "dave")
    ids["a1"] = store.add_node(disc.id, ids["p1"], "argument", "Because collisions dropped elsewhere after lanes", "bob", side="pro")
    ids["a2"] = store.add_node(disc.id, ids["p1"], "argument", "But it removes parking", "carol", side="con")
    ids["a3"] = store.add_node(disc.id, ids["p2"], "argument", "Cheaper than construction", "alice", side="pro")
    ids["a4"] = store.add_node(disc.id, ids["p3"], "argument", "Night workers need it", "alice", side="pro")
    store.set_reflection(ids["p1"], "alice", "agree")
    store.set_reflection(ids["p1"], "bob", "agree")
    store.set_reflection(ids["p1"], "carol", "disagree")
    store.set_reflection(ids["p2"], "alice", "disagree")
    store.set_reflection(ids["p2"], "bob", "neutral")
    store.set_reflection(ids["p3"], "dave", "agree")
    store.set_reflection(ids["p3"], "carol", "agree")
    return store, ids


@pytest.fixture
def fixture_store():
    return build_fixture_store()
