"""Reviewable extraction proposals.

A proposal is the staging area between an extractor run and the live
discussion graph: nothing an extractor produces touches the store until a
moderator has decided every item and explicitly committed.  Items under a
rejected parent never commit, but they still have to be decided so the
"no pending items" gate stays simple and auditable.

Proposal JSON schema (stable key names, see docs/api.md):

    {"schema": 1, "id": ..., "transcript_id": ..., "state": ...,
     "config": {...}, "metadata": {...}, "issues": [
        {"id": "i0", "text", "confidence", "source_span",
         "decision", "edited_text", "positions": [
            {"id": "i0.p0", ..., "arguments": [
               {"id": "i0.p0.a0", "side", ...}]}]}]}
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, TYPE_CHECKING

from .errors import (
    AlreadyCommitted,
    EmptyText,
    EmptyTranscript,
    Forbidden,
    PendingItemsRemain,
    UnknownItem,
    WrongProposalState,
)
from .model import SourceSpan
from .store import DiscussionStore
from .transcripts import ExtractionConfig, ExtractionResult

if TYPE_CHECKING:  # pragma: no cover
    from .transcripts import Transcript

DECISIONS = ("pending", "accepted", "edited", "rejected")
PROPOSAL_STATES = ("draft", "under_review", "committed", "discarded")

_proposal_counter = itertools.count(1)


@dataclass
class ProposalItem:
    """One reviewable node (issue, position or argument)."""

    id: str
    kind: str  # issue | position | argument
    text: str
    confidence: float
    source_span: SourceSpan
    side: Optional[str] = None  # arguments only
    decision: str = "pending"
    edited_text: Optional[str] = None
    children: list["ProposalItem"] = field(default_factory=list)

    @property
    def effective_text(self) -> str:
        return self.edited_text if self.decision == "edited" else self.text

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "text": self.text,
            "confidence": self.confidence,
            "source_span": self.source_span.to_dict(),
            "decision": self.decision,
            "edited_text": self.edited_text,
        }
        if self.kind == "argument":
            d["side"] = self.side
        elif self.kind == "issue":
            d["positions"] = [c.to_dict() for c in self.children]
        else:
            d["arguments"] = [c.to_dict() for c in self.children]
        return d


@dataclass
class ExtractionProposal:
    id: str
    transcript_id: str
    config: ExtractionConfig
    issues: list[ProposalItem]
    state: str = "draft"
    metadata: dict = field(default_factory=dict)
    created_entities: list[str] = field(default_factory=list)

    # -- item access --

    def items(self) -> Iterator[ProposalItem]:
        for issue in self.issues:
            yield issue
            for pos in issue.children:
                yield pos
                yield from pos.children

    def item(self, item_id: str) -> ProposalItem:
        for it in self.items():
            if it.id == item_id:
                return it
        raise UnknownItem(item_id)

    def pending_items(self) -> list[str]:
        return [it.id for it in self.items() if it.decision == "pending"]

    # -- review workflow --

    def submit_for_review(self) -> "ExtractionProposal":
        if self.state == "committed":
            raise AlreadyCommitted(self.id)
        if self.state != "draft":
            raise WrongProposalState(f"cannot submit from state {self.state}")
        self.state = "under_review"
        return self

    def decide_item(self, item_id: str, decision: str, text: str | None = None) -> "ExtractionProposal":
        """Record a moderator decision; re-deciding before commit is allowed."""
        if self.state == "committed":
            raise AlreadyCommitted(self.id)
        if self.state != "under_review":
            raise WrongProposalState(f"decisions require state under_review, not {self.state}")
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {decision!r}")
        it = self.item(item_id)
        if decision == "edited":
            if not (text and text.strip()):
                raise EmptyText("edited decision requires replacement text")
            it.edited_text = text
        else:
            it.edited_text = None
        it.decision = decision
        return self

    def decide_all(self, decision: str) -> "ExtractionProposal":
        for it in self.items():
            self.decide_item(it.id, decision)
        return self

    def discard(self) -> "ExtractionProposal":
        if self.state == "committed":
            raise AlreadyCommitted(self.id)
        self.state = "discarded"
        return self

    def commit(self, store: DiscussionStore, discussion_id: str, actor: str) -> list[str]:
        """Create core entities for accepted/edited items.

        Requires an explicit under_review proposal with no pending items
        and a moderator (or admin) actor; items below a rejected ancestor
        are skipped.  The proposal becomes committed and immutable.
        """
        if self.state == "committed":
            raise AlreadyCommitted(self.id)
        if self.state != "under_review":
            raise WrongProposalState(f"commit requires state under_review, not {self.state}")
        pending = self.pending_items()
        if pending:
            raise PendingItemsRemain(", ".join(pending))
        user = store.users.get(actor)
        if user is None or user.role not in ("moderator", "admin"):
            raise Forbidden("commit requires a moderator or admin")

        created: list[str] = []
        for issue in self.issues:
            if issue.decision == "rejected":
                continue
            issue_id = store.add_node(
                discussion_id, discussion_id, "issue", issue.effective_text, actor, origin="import"
            )
            created.append(issue_id)
            for pos in issue.children:
                if pos.decision == "rejected":
                    continue
                pos_id = store.add_node(
                    discussion_id, issue_id, "position", pos.effective_text, actor, origin="import"
                )
                created.append(pos_id)
                for arg in pos.children:
                    if arg.decision == "rejected":
                        continue
                    arg_id = store.add_node(
                        discussion_id,
                        pos_id,
                        "argument",
                        arg.effective_text,
                        actor,
                        side=arg.side,
                        source_span=arg.source_span,
                        origin="import",
                    )
                    created.append(arg_id)
        self.created_entities = created
        self.state = "committed"
        return created

    # -- serialization --

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "id": self.id,
            "transcript_id": self.transcript_id,
            "state": self.state,
            "config": self.config.to_dict(),
            "metadata": self.metadata,
            "created_entities": self.created_entities,
            "issues": [i.to_dict() for i in self.issues],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExtractionProposal":
        config = ExtractionConfig.from_dict(d["config"])

        def load_item(raw: dict, kind: str) -> ProposalItem:
            child_key = {"issue": "positions", "position": "arguments"}.get(kind)
            child_kind = {"issue": "position", "position": "argument"}.get(kind)
            item = ProposalItem(
                id=raw["id"],
                kind=kind,
                text=raw["text"],
                confidence=float(raw["confidence"]),
                source_span=SourceSpan.from_dict(raw["source_span"]),
                side=raw.get("side"),
                decision=raw.get("decision", "pending"),
                edited_text=raw.get("edited_text"),
            )
            if child_key:
                item.children = [load_item(c, child_kind) for c in raw.get(child_key, [])]
            return item

        return cls(
            id=d["id"],
            transcript_id=d["transcript_id"],
            config=config,
            issues=[load_item(i, "issue") for i in d.get("issues", [])],
            state=d.get("state", "draft"),
            metadata=d.get("metadata", {}),
            created_entities=list(d.get("created_entities", [])),
        )


def run_extraction(transcript: "Transcript", config: ExtractionConfig, extractor) -> ExtractionProposal:
    """Run an extractor and wrap its candidates into a pending proposal.

    The store is never touched here; the result is a draft whose every
    item awaits a moderator decision.
    """
    if not transcript.segments:
        raise EmptyTranscript(transcript.id)
    result: ExtractionResult = extractor.extract(transcript, config)
    _check_bounds(result, config)

    issues: list[ProposalItem] = []
    for n, cand_issue in enumerate(result.issues):
        issue_item = ProposalItem(
            id=f"i{n}",
            kind="issue",
            text=cand_issue.text,
            confidence=cand_issue.confidence,
            source_span=cand_issue.source_span,
        )
        for m, cand_pos in enumerate(cand_issue.positions):
            pos_item = ProposalItem(
                id=f"i{n}.p{m}",
                kind="position",
                text=cand_pos.text,
                confidence=cand_pos.confidence,
                source_span=cand_pos.source_span,
            )
            for j, cand_arg in enumerate(cand_pos.arguments):
                pos_item.children.append(
                    ProposalItem(
                        id=f"i{n}.p{m}.a{j}",
                        kind="argument",
                        text=cand_arg.text,
                        confidence=cand_arg.confidence,
                        source_span=cand_arg.source_span,
                        side=cand_arg.side,
                    )
                )
            issue_item.children.append(pos_item)
        issues.append(issue_item)

    return ExtractionProposal(
        id=f"x{next(_proposal_counter)}",
        transcript_id=transcript.id,
        config=config,
        issues=issues,
        metadata=result.metadata,
    )


def _check_bounds(result: ExtractionResult, config: ExtractionConfig) -> None:
    """Extractors must honour the config; a violation here is a bug."""
    for issue in result.issues:
        if len(issue.positions) > config.positions_per_issue:
            raise AssertionError(
                f"extractor produced {len(issue.positions)} positions for one issue, "
                f"config allows {config.positions_per_issue}"
            )
        for pos in issue.positions:
            if len(pos.arguments) > config.arguments_per_position:
                raise AssertionError(
                    f"extractor produced {len(pos.arguments)} arguments for one position, "
                    f"config allows {config.arguments_per_position}"
                )
