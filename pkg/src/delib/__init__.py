"""delib: a deliberation backend.

Turns unstructured civic input (meeting transcripts, geolocated citizen
reports) into a structured issue/position/argument graph, keeps a human
reviewer in charge of every AI-proposed change, and renders snapshot
reports from composable widgets.

Layering, bottom to top:

    errors, textutil            shared error codes and text helpers
    model, store                IBIS graph + append-only event log
    transcripts, proposals      parsing, extraction, review staging
    aigateway                   audited AI capabilities (stub/remote)
    geo                         report-collection bot + moderation
    analytics, reporting        metrics, snapshots, dashboards, export
    service                     REST API, config, auth, CLI
"""

from .errors import DelibError
from .model import (
    Argument,
    Discussion,
    GraphEvent,
    Issue,
    Position,
    Reflection,
    SourceSpan,
    User,
    Violation,
)
from .store import DiscussionStore, StoreView, canonical_json
from .transcripts import (
    ExtractionConfig,
    RuleBasedExtractor,
    LlmExtractor,
    Transcript,
    balance_select,
    parse_transcript,
)
from .proposals import ExtractionProposal, ProposalItem, run_extraction
from .aigateway import AiGateway, RemoteBackend, ScriptedBackend, StubBackend
from .geo import BotReply, BotUpdate, GeoReport, GeoService, parse_wire
from .reporting import ReportSnapshot, WidgetKind, create_snapshot, update_layout

__version__ = "0.1.0"

__all__ = [
    "DelibError",
    "User",
    "Discussion",
    "Issue",
    "Position",
    "Argument",
    "Reflection",
    "SourceSpan",
    "GraphEvent",
    "Violation",
    "DiscussionStore",
    "StoreView",
    "canonical_json",
    "Transcript",
    "parse_transcript",
    "ExtractionConfig",
    "RuleBasedExtractor",
    "LlmExtractor",
    "balance_select",
    "ExtractionProposal",
    "ProposalItem",
    "run_extraction",
    "AiGateway",
    "StubBackend",
    "ScriptedBackend",
    "RemoteBackend",
    "BotUpdate",
    "BotReply",
    "GeoReport",
    "GeoService",
    "parse_wire",
    "ReportSnapshot",
    "WidgetKind",
    "create_snapshot",
    "update_layout",
    "__version__",
]
