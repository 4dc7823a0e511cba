"""Proposal staging: review workflow, commit gates, serialization."""

from __future__ import annotations

import pytest

from delib.errors import (
    AlreadyCommitted,
    EmptyText,
    Forbidden,
    PendingItemsRemain,
    UnknownItem,
    WrongProposalState,
)
from delib.proposals import ExtractionProposal, run_extraction
from delib.store import DiscussionStore
from delib.transcripts import ExtractionConfig, RuleBasedExtractor, parse_transcript

from .conftest import make_tick_clock


@pytest.fixture
def proposal(fixture_transcript_bytes):
    t = parse_transcript(fixture_transcript_bytes, fmt="speaker_lines")
    return run_extraction(t, ExtractionConfig(), RuleBasedExtractor())


@pytest.fixture
def store_with_discussion():
    store = DiscussionStore(clock=make_tick_clock())
    store.register_user("Mona", "moderator", user_id="mod")
    store.register_user("Pat", "participant", user_id="pat")
    disc = store.create_discussion("Mobility", "Shared streets", "mod")
    return store, disc.id


class TestStaging:
    def test_item_ids_follow_tree_paths(self, proposal):
        ids = [it.id for it in proposal.items()]
        assert ids == [
            "i0", "i0.p0", "i0.p0.a0", "i0.p0.a1", "i0.p1", "i0.p1.a0", "i0.p1.a1",
            "i1", "i1.p0", "i1.p0.a0",
        ]
        assert proposal.state == "draft"
        assert proposal.pending_items() == ids

    def test_unknown_item(self, proposal):
        with pytest.raises(UnknownItem):
            proposal.item("i9.p9")

    def test_decide_requires_review_state(self, proposal):
        with pytest.raises(WrongProposalState):
            proposal.decide_item("i0", "accepted")

    def test_submit_then_decide(self, proposal):
        proposal.submit_for_review()
        assert proposal.state == "under_review"
        proposal.decide_item("i0", "accepted")
        assert "i0" not in proposal.pending_items()

    def test_double_submit_rejected(self, proposal):
        proposal.submit_for_review()
        with pytest.raises(WrongProposalState):
            proposal.submit_for_review()

    def test_redecide_before_commit_allowed(self, proposal):
        proposal.submit_for_review()
        proposal.decide_item("i0.p0", "rejected")
        proposal.decide_item("i0.p0", "accepted")
        assert proposal.item("i0.p0").decision == "accepted"

    def test_edited_requires_text(self, proposal):
        proposal.submit_for_review()
        with pytest.raises(EmptyText):
            proposal.decide_item("i0", "edited")
        with pytest.raises(EmptyText):
            proposal.decide_item("i0", "edited", text="   ")

    def test_edit_then_accept_clears_replacement(self, proposal):
        proposal.submit_for_review()
        proposal.decide_item("i0", "edited", text="Cycling safety")
        assert proposal.item("i0").effective_text == "Cycling safety"
        proposal.decide_item("i0", "accepted")
        item = proposal.item("i0")
        assert item.edited_text is None
        assert item.effective_text == item.text

    def test_bad_decision_word(self, proposal):
        proposal.submit_for_review()
        with pytest.raises(ValueError):
            proposal.decide_item("i0", "maybe")

    def test_discard(self, proposal):
        proposal.discard()
        assert proposal.state == "discarded"
        with pytest.raises(WrongProposalState):
            proposal.submit_for_review()


class TestCommit:
    def test_commit_requires_review_state(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        with pytest.raises(WrongProposalState):
            proposal.commit(store, did, "mod")

    def test_commit_blocks_on_pending(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review()
        proposal.decide_item("i0", "accepted")
        with pytest.raises(PendingItemsRemain) as exc:
            proposal.commit(store, did, "mod")
        assert "i0.p0" in str(exc.value)

    def test_commit_requires_moderator(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        with pytest.raises(Forbidden):
            proposal.commit(store, did, "pat")
        with pytest.raises(Forbidden):
            proposal.commit(store, did, "ghost")

    def test_commit_all_accepted(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        created = proposal.commit(store, did, "mod")

        assert proposal.state == "committed"
        assert created == proposal.created_entities
        assert len(created) == 10
        view = store.view()
        issues = view.issues_of(did)
        assert [i.text for i in issues] == [
            "Topic: main, street, bike",
            "Topic: evenings, gates, open",
        ]
        for issue in issues:
            assert issue.origin == "import"
        args = view.arguments_of(view.positions_of(issues[0].id)[0].id)
        assert [a.side for a in args] == ["pro", "con"]
        assert all(a.source_span is not None for a in args)

    def test_commit_skips_rejected_subtree(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        proposal.decide_item("i0", "rejected")
        created = proposal.commit(store, did, "mod")

        # descendants of the rejected issue were decided but never created
        assert len(created) == 3
        view = store.view()
        assert [i.text for i in view.issues_of(did)] == ["Topic: evenings, gates, open"]

    def test_commit_skips_rejected_position_keeps_issue(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        proposal.decide_item("i0.p1", "rejected")
        proposal.commit(store, did, "mod")
        view = store.view()
        first = view.issues_of(did)[0]
        assert len(view.positions_of(first.id)) == 1

    def test_commit_uses_edited_text(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        proposal.decide_item("i0.p0", "edited", text="Protected bike lane on Main St")
        proposal.commit(store, did, "mod")
        view = store.view()
        first = view.issues_of(did)[0]
        assert view.positions_of(first.id)[0].text == "Protected bike lane on Main St"

    def test_commit_is_final(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        proposal.commit(store, did, "mod")
        with pytest.raises(AlreadyCommitted):
            proposal.commit(store, did, "mod")
        with pytest.raises(AlreadyCommitted):
            proposal.decide_item("i0", "rejected")
        with pytest.raises(AlreadyCommitted):
            proposal.discard()

    def test_commit_from_discarded_fails(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.discard()
        with pytest.raises(WrongProposalState):
            proposal.commit(store, did, "mod")


class TestSerialization:
    def test_round_trip_preserves_everything(self, proposal):
        proposal.submit_for_review()
        proposal.decide_item("i0", "edited", text="Safer cycling")
        proposal.decide_item("i0.p0.a1", "rejected")
        d = proposal.to_json_dict()
        assert d["schema"] == 1

        loaded = ExtractionProposal.from_json_dict(d)
        assert loaded.to_json_dict() == d
        assert loaded.state == "under_review"
        assert loaded.item("i0").effective_text == "Safer cycling"
        assert loaded.item("i0.p0.a1").decision == "rejected"
        assert loaded.item("i0.p0.a0").side == "pro"
        assert loaded.config == proposal.config

    def test_loaded_proposal_can_commit(self, proposal, store_with_discussion):
        store, did = store_with_discussion
        proposal.submit_for_review().decide_all("accepted")
        loaded = ExtractionProposal.from_json_dict(proposal.to_json_dict())
        created = loaded.commit(store, did, "mod")
        assert len(created) == 10
