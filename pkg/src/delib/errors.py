"""Typed errors shared across the package.

Every error carries a stable machine ``code`` so the HTTP layer can map it
to a status without string matching.  The service keeps a code -> status
table and asserts at startup that the table covers every subclass defined
here, so adding an error without wiring it up fails fast.
"""

from __future__ import annotations


class DelibError(Exception):
    """Base class for all domain errors."""

    code = "internal"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details


# --- core model -----------------------------------------------------------

class EmptyTitle(DelibError):
    code = "empty_title"


class EmptyText(DelibError):
    code = "empty_text"


class UnknownUser(DelibError):
    code = "unknown_user"


class Forbidden(DelibError):
    code = "forbidden"


class UnknownDiscussion(DelibError):
    code = "unknown_discussion"


class DiscussionClosed(DelibError):
    code = "discussion_closed"


class BadParentKind(DelibError):
    code = "bad_parent_kind"


class UnknownParent(DelibError):
    code = "unknown_parent"


class MissingSide(DelibError):
    code = "missing_side"


class UnexpectedSide(DelibError):
    code = "unexpected_side"


class MissingSourceSpan(DelibError):
    code = "missing_source_span"


class UnknownPosition(DelibError):
    code = "unknown_position"


class CorruptStore(DelibError):
    code = "corrupt_store"


# --- transcripts / extraction --------------------------------------------

class NotUtf8(DelibError):
    code = "not_utf8"


class EmptyTranscript(DelibError):
    code = "empty_transcript"


class NonMonotonicTimestamps(DelibError):
    code = "non_monotonic_timestamps"


class UnknownTranscript(DelibError):
    code = "unknown_transcript"


class ConfigOutOfRange(DelibError):
    code = "config_out_of_range"


class ExtractorFailure(DelibError):
    code = "extractor_failure"


class UnknownProposal(DelibError):
    code = "unknown_proposal"


class UnknownItem(DelibError):
    code = "unknown_item"


class WrongProposalState(DelibError):
    code = "wrong_proposal_state"


class PendingItemsRemain(DelibError):
    code = "pending_items_remain"


class AlreadyCommitted(DelibError):
    code = "already_committed"


# --- geo sensing ----------------------------------------------------------

class MalformedUpdate(DelibError):
    code = "malformed_update"


class WrongState(DelibError):
    code = "wrong_state"


class UnknownLabel(DelibError):
    code = "unknown_label"


class UnknownReport(DelibError):
    code = "unknown_report"


class BadBbox(DelibError):
    code = "bad_bbox"


class MissingNote(DelibError):
    code = "missing_note"


# --- ai gateway -----------------------------------------------------------

class BackendUnavailable(DelibError):
    code = "backend_unavailable"


class EmptyInput(DelibError):
    code = "empty_input"


# --- reporting ------------------------------------------------------------

class UnknownWidget(DelibError):
    code = "unknown_widget"


class UnknownSnapshot(DelibError):
    code = "unknown_snapshot"


class Overlap(DelibError):
    code = "overlap"


class OutOfBounds(DelibError):
    code = "out_of_bounds"


# --- service --------------------------------------------------------------

class BindFailure(DelibError):
    code = "bind_failure"


class AuthRequired(DelibError):
    code = "auth_required"


def all_error_classes() -> list[type]:
    """Every concrete error class, for the mapping totality check."""
    out: list[type] = []
    stack: list[type] = [DelibError]
    while stack:
        cls = stack.pop()
        for sub in cls.__subclasses__():
            out.append(sub)
            stack.append(sub)
    return sorted(out, key=lambda c: c.__name__)
