"""Geolocated citizen reporting over a Telegram-compatible webhook.

A per-chat state machine walks each reporter through a linear flow:
describe the problem, share a location, confirm the predicted category,
submit.  Submitted reports pass through moderation (automatic abuse
screening or a fully manual queue) before they are published into the
geo index and echoed into the core event log.

Wire format (frozen, documented in docs/api.md): the webhook accepts the
Telegram update shape, e.g.

    {"update_id": 7, "message": {"chat": {"id": 42}, "text": "pothole"}}
    {"update_id": 8, "message": {"chat": {"id": 42},
                                 "location": {"latitude": 45.1, "longitude": 7.6}}}
    {"update_id": 9, "callback_query": {"chat": {"id": 42}, "data": "accept"}}
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    BackendUnavailable,
    BadBbox,
    MalformedUpdate,
    MissingNote,
    UnknownLabel,
    UnknownReport,
    WrongState,
)
from .store import DiscussionStore, canonical_json, utc_now

logger = logging.getLogger(__name__)

REPORT_STATES = (
    "collecting",
    "awaiting_location",
    "awaiting_confirmation",
    "submitted",
    "published",
    "rejected",
)
MODERATION_MODES = ("auto_validation", "manual")

START_COMMAND = "/start"


@dataclass(frozen=True)
class BotUpdate:
    """One inbound webhook event, already validated."""

    update_id: int
    chat_id: int
    kind: str  # text | location | photo | voice | callback
    text: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    media_ref: str | None = None
    transcript: str | None = None
    callback_data: str | None = None


def parse_wire(body: dict) -> BotUpdate:
    """Parse a Telegram-shaped JSON body into a BotUpdate.

    Raises MalformedUpdate for anything structurally off; the webhook
    maps that to a 4xx instead of advancing any state machine.
    """
    if not isinstance(body, dict):
        raise MalformedUpdate("update body must be a JSON object")
    update_id = body.get("update_id")
    if not isinstance(update_id, int) or isinstance(update_id, bool):
        raise MalformedUpdate("update_id must be an integer")

    if "callback_query" in body:
        cq = body["callback_query"]
        if not isinstance(cq, dict):
            raise MalformedUpdate("callback_query must be an object")
        chat_id = _chat_id_of(cq)
        data = cq.get("data")
        if not isinstance(data, str) or not data:
            raise MalformedUpdate("callback_query.data must be a non-empty string")
        return BotUpdate(update_id=update_id, chat_id=chat_id, kind="callback", callback_data=data)

    message = body.get("message")
    if not isinstance(message, dict):
        raise MalformedUpdate("update carries neither message nor callback_query")
    chat_id = _chat_id_of(message)

    if "location" in message:
        loc = message["location"]
        if not isinstance(loc, dict):
            raise MalformedUpdate("location must be an object")
        try:
            lat = float(loc["latitude"])
            lon = float(loc["longitude"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedUpdate("location needs numeric latitude and longitude") from exc
        if not (-90.0 <= lat <= 90.0):
            raise MalformedUpdate(f"latitude {lat} out of [-90, 90]")
        if not (-180.0 <= lon <= 180.0):
            raise MalformedUpdate(f"longitude {lon} out of [-180, 180]")
        return BotUpdate(update_id=update_id, chat_id=chat_id, kind="location", latitude=lat, longitude=lon)

    if "photo" in message:
        ref = message["photo"]
        if isinstance(ref, list):  # telegram sends a size array; keep the largest ref
            ref = ref[-1].get("file_id") if ref and isinstance(ref[-1], dict) else None
        if not isinstance(ref, str) or not ref:
            raise MalformedUpdate("photo must carry a file reference")
        return BotUpdate(update_id=update_id, chat_id=chat_id, kind="photo", media_ref=ref)

    if "voice" in message:
        voice = message["voice"]
        if not isinstance(voice, dict) or not isinstance(voice.get("file_id"), str):
            raise MalformedUpdate("voice must carry a file_id")
        transcript = message.get("transcript")
        if transcript is not None and not isinstance(transcript, str):
            raise MalformedUpdate("transcript must be a string when present")
        return BotUpdate(
            update_id=update_id,
            chat_id=chat_id,
            kind="voice",
            media_ref=voice["file_id"],
            transcript=transcript,
        )

    text = message.get("text")
    if not isinstance(text, str) or not text.strip():
        raise MalformedUpdate("message must carry text, location, photo or voice")
    return BotUpdate(update_id=update_id, chat_id=chat_id, kind="text", text=text)


def _chat_id_of(obj: dict) -> int:
    chat = obj.get("chat") if "chat" in obj else obj.get("message", {}).get("chat")
    if not isinstance(chat, dict) or not isinstance(chat.get("id"), int) or isinstance(chat.get("id"), bool):
        raise MalformedUpdate("chat.id must be an integer")
    return chat["id"]


@dataclass(frozen=True)
class BotReply:
    text: str
    options: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"text": self.text, "options": list(self.options)}


@dataclass
class GeoReport:
    id: str
    chat_id: int
    created_at: datetime
    description: str = ""
    latitude: float | None = None
    longitude: float | None = None
    media: list[str] = field(default_factory=list)
    predicted_category: tuple[str, float] | None = None
    confirmed_category: str | None = None
    state: str = "collecting"
    moderation_note: str | None = None
    manual_flag: bool = False  # set when prediction fell back, forces manual review

    @property
    def has_location(self) -> bool:
        return self.latitude is not None and self.longitude is not None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "chat_id": self.chat_id,
            "created_at": self.created_at.isoformat(),
            "description": self.description,
            "location": (
                {"lat": self.latitude, "lon": self.longitude} if self.has_location else None
            ),
            "media": list(self.media),
            "predicted_category": (
                {"label": self.predicted_category[0], "confidence": self.predicted_category[1]}
                if self.predicted_category
                else None
            ),
            "confirmed_category": self.confirmed_category,
            "state": self.state,
            "moderation_note": self.moderation_note,
            "manual_flag": self.manual_flag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeoReport":
        loc = data.get("location")
        pred = data.get("predicted_category")
        return cls(
            id=data["id"],
            chat_id=data["chat_id"],
            created_at=datetime.fromisoformat(data["created_at"]),
            description=data.get("description", ""),
            latitude=loc["lat"] if loc else None,
            longitude=loc["lon"] if loc else None,
            media=list(data.get("media", [])),
            predicted_category=(pred["label"], pred["confidence"]) if pred else None,
            confirmed_category=data.get("confirmed_category"),
            state=data["state"],
            moderation_note=data.get("moderation_note"),
            manual_flag=data.get("manual_flag", False),
        )


class GeoService:
    """Webhook handler, report index and moderation queue in one object.

    One in-flight draft per chat; a new "/start" abandons the previous
    draft.  The moderation mode is fixed per service instance (one
    deployment serves one reporting campaign).  State survives process
    restarts via ``state_path`` so update replay stays idempotent.
    """

    def __init__(
        self,
        gateway,
        taxonomy: list[str] | None = None,
        mode: str = "auto_validation",
        store: DiscussionStore | None = None,
        discussion_id: str | None = None,
        state_path: str | Path | None = None,
        clock: Optional[Callable[[], datetime]] = None,
    ):
        if mode not in MODERATION_MODES:
            raise ValueError(f"mode must be one of {MODERATION_MODES}, got {mode!r}")
        if taxonomy is None:
            from .aigateway import load_taxonomy

            taxonomy = load_taxonomy()["labels"]
        if not taxonomy or len(set(taxonomy)) != len(taxonomy) or "other" not in taxonomy:
            raise ValueError("taxonomy must be non-empty, unique, and contain 'other'")
        self.gateway = gateway
        self.taxonomy = list(taxonomy)
        self.mode = mode
        self.store = store
        self.discussion_id = discussion_id
        self.state_path = Path(state_path) if state_path else None
        self._clock = clock or utc_now
        self.reports: dict[str, GeoReport] = {}
        self._drafts: dict[int, str] = {}  # chat_id -> report id of in-flight draft
        self._last_update: dict[int, int] = {}
        self._last_reply: dict[int, BotReply] = {}
        self._counter = 0
        if self.state_path and self.state_path.exists():
            self._load()

    # ------------------------------------------------------------------
    # webhook entry point

    def handle_update(self, update: BotUpdate) -> BotReply:
        last = self._last_update.get(update.chat_id)
        if last is not None and update.update_id <= last:
            # duplicate delivery: answer exactly as before, touch nothing
            return self._last_reply[update.chat_id]
        reply = self._dispatch(update)
        self._last_update[update.chat_id] = update.update_id
        self._last_reply[update.chat_id] = reply
        self._save()
        return reply

    def handle_wire(self, body: dict) -> BotReply:
        return self.handle_update(parse_wire(body))

    def _dispatch(self, update: BotUpdate) -> BotReply:
        if update.kind == "text" and update.text and update.text.strip() == START_COMMAND:
            return self._begin(update.chat_id)
        report = self._draft(update.chat_id)
        handler = {
            "collecting": self._in_collecting,
            "awaiting_location": self._in_awaiting_location,
            "awaiting_confirmation": self._in_awaiting_confirmation,
        }[report.state]
        return handler(report, update)

    def _begin(self, chat_id: int) -> BotReply:
        old = self._drafts.pop(chat_id, None)
        if old is not None and self.reports.get(old) is not None:
            if self.reports[old].state in ("collecting", "awaiting_location", "awaiting_confirmation"):
                del self.reports[old]  # abandoned drafts leave no trace
        self._draft(chat_id)
        return BotReply(text="Hi! Please describe the problem you want to report.")

    def _draft(self, chat_id: int) -> GeoReport:
        rid = self._drafts.get(chat_id)
        if rid is not None and self.reports[rid].state in (
            "collecting",
            "awaiting_location",
            "awaiting_confirmation",
        ):
            return self.reports[rid]
        self._counter += 1
        report = GeoReport(id=f"g{self._counter}", chat_id=chat_id, created_at=self._clock())
        self.reports[report.id] = report
        self._drafts[chat_id] = report.id
        return report

    # ------------------------------------------------------------------
    # per-state handlers

    def _in_collecting(self, report: GeoReport, update: BotUpdate) -> BotReply:
        if update.kind == "text":
            report.description = update.text.strip()
            report.state = "awaiting_location"
            return BotReply(text="Got it. Now please share the location of the problem.")
        if update.kind == "voice":
            if update.media_ref:
                report.media.append(update.media_ref)
            if update.transcript and update.transcript.strip():
                report.description = update.transcript.strip()
                report.state = "awaiting_location"
                return BotReply(text="Got it. Now please share the location of the problem.")
            return BotReply(text="I could not read that audio. Please type what you said.")
        if update.kind == "photo":
            report.media.append(update.media_ref)
            return BotReply(text="Photo attached. Please describe the problem in words.")
        # location / callback before any description: re-prompt, no state change
        return BotReply(text="Please describe the problem first, then share its location.")

    def _in_awaiting_location(self, report: GeoReport, update: BotUpdate) -> BotReply:
        if update.kind == "location":
            report.latitude = update.latitude
            report.longitude = update.longitude
            label, confidence = self.predict_category(report)
            report.state = "awaiting_confirmation"
            options = ("accept",) + tuple(f"choose:{l}" for l in self.taxonomy)
            return BotReply(
                text=(
                    f"Thanks. This looks like a '{label}' issue "
                    f"(confidence {confidence:.2f}). Is that right?"
                ),
                options=options,
            )
        if update.kind == "photo":
            report.media.append(update.media_ref)
            return BotReply(text="Photo attached. Please share the location of the problem.")
        return BotReply(text="Please share the location of the problem (or send /start to restart).")

    def _in_awaiting_confirmation(self, report: GeoReport, update: BotUpdate) -> BotReply:
        if update.kind == "callback":
            data = update.callback_data or ""
            try:
                if data == "accept":
                    self.confirm_category(report.id, "accept")
                elif data.startswith("choose:"):
                    self.confirm_category(report.id, "choose", data.split(":", 1)[1])
                else:
                    return self._confirm_prompt(report)
            except UnknownLabel:
                return self._confirm_prompt(report)
            outcome = self.moderate(report.id)
            if outcome == "published":
                return BotReply(text=f"Report {report.id} published. Thank you!")
            return BotReply(text=f"Report {report.id} received and queued for moderator review. Thank you!")
        if update.kind == "photo":
            report.media.append(update.media_ref)
            return BotReply(text="Photo attached.", options=self._confirm_prompt(report).options)
        return self._confirm_prompt(report)

    def _confirm_prompt(self, report: GeoReport) -> BotReply:
        label = report.predicted_category[0] if report.predicted_category else "other"
        return BotReply(
            text=f"Please confirm the category (predicted: '{label}') or pick another.",
            options=("accept",) + tuple(f"choose:{l}" for l in self.taxonomy),
        )

    # ------------------------------------------------------------------
    # classification and confirmation

    def predict_category(self, report: GeoReport) -> tuple[str, float]:
        """Classify the report description against the taxonomy.

        Backend failures degrade to ("other", 0) with a manual flag so
        an unclassified report can never slip past a moderator.
        """
        if not report.description.strip():
            raise WrongState("cannot classify a report without a description")
        try:
            label, confidence = self.gateway.classify_text(report.description, self.taxonomy)
        except BackendUnavailable:
            logger.warning("category prediction unavailable for %s; flagged manual", report.id)
            report.predicted_category = ("other", 0.0)
            report.manual_flag = True
            return report.predicted_category
        report.predicted_category = (label, confidence)
        return report.predicted_category

    def confirm_category(self, report_id: str, choice: str, label: str | None = None) -> GeoReport:
        report = self._require(report_id)
        if report.state != "awaiting_confirmation":
            raise WrongState(f"report {report_id} is {report.state}, not awaiting_confirmation")
        if choice == "accept":
            predicted = report.predicted_category or ("other", 0.0)
            report.confirmed_category = predicted[0]
        elif choice == "choose":
            if label not in self.taxonomy:
                raise UnknownLabel(f"{label!r} is not in the taxonomy")
            report.confirmed_category = label
        else:
            raise ValueError(f"choice must be 'accept' or 'choose', got {choice!r}")
        report.state = "submitted"
        return report

    # ------------------------------------------------------------------
    # moderation

    def moderate(self, report_id: str) -> str:
        """Run the configured moderation mode on a submitted report.

        Returns one of "published" or "queued" ("queued" leaves the
        report in state submitted for a moderator to approve or reject).
        """
        report = self._require(report_id)
        if report.state != "submitted":
            raise WrongState(f"report {report_id} is {report.state}, not submitted")
        if self.mode == "manual" or report.manual_flag:
            report.moderation_note = report.moderation_note or "queued for manual review"
            return "queued"
        result = self.gateway.abuse_check(report.description)
        if result.flagged:
            report.moderation_note = "flagged: " + ", ".join(result.terms)
            return "queued"
        self._publish(report, note=None)
        return "published"

    def approve(self, report_id: str, note: str | None = None) -> GeoReport:
        report = self._require(report_id)
        if report.state != "submitted":
            raise WrongState(f"report {report_id} is {report.state}, not submitted")
        self._publish(report, note=note)
        self._save()
        return report

    def reject(self, report_id: str, note: str) -> GeoReport:
        report = self._require(report_id)
        if report.state != "submitted":
            raise WrongState(f"report {report_id} is {report.state}, not submitted")
        if not note or not note.strip():
            raise MissingNote("rejection requires a moderation note")
        report.state = "rejected"
        report.moderation_note = note.strip()
        self._save()
        return report

    def _publish(self, report: GeoReport, note: str | None) -> None:
        # safety gate: these cannot be absent if the state machine is sound
        if not (report.confirmed_category and report.description.strip() and report.has_location):
            raise WrongState(f"report {report.id} is missing required fields for publication")
        report.state = "published"
        if note:
            report.moderation_note = note.strip()
        if self.store is not None:
            self.store.publish_report(
                {
                    "id": report.id,
                    "discussion_id": self.discussion_id,
                    "category": report.confirmed_category,
                    "description": report.description,
                    "location": {"lat": report.latitude, "lon": report.longitude},
                }
            )

    def pending_reports(self) -> list[GeoReport]:
        """Moderation queue: submitted reports, oldest first."""
        queued = [r for r in self.reports.values() if r.state == "submitted"]
        return sorted(queued, key=lambda r: (r.created_at, int(r.id[1:])))

    # ------------------------------------------------------------------
    # queries and export

    def query_reports(
        self,
        bbox: tuple[float, float, float, float] | None = None,
        category: str | None = None,
        state: str | None = None,
    ) -> list[GeoReport]:
        """Filter reports; bbox is (min_lat, min_lon, max_lat, max_lon)."""
        if bbox is not None:
            min_lat, min_lon, max_lat, max_lon = bbox
            if min_lat > max_lat or min_lon > max_lon:
                raise BadBbox(f"bbox minimum exceeds maximum: {bbox}")
        out = []
        for report in self.reports.values():
            if bbox is not None:
                if not report.has_location:
                    continue
                if not (min_lat <= report.latitude <= max_lat and min_lon <= report.longitude <= max_lon):
                    continue
            if category is not None and self.category_of(report) != category:
                continue
            if state is not None and report.state != state:
                continue
            out.append(report)
        out.sort(key=lambda r: (r.created_at, int(r.id[1:])), reverse=True)
        return out

    @staticmethod
    def category_of(report: GeoReport) -> str | None:
        if report.confirmed_category:
            return report.confirmed_category
        if report.predicted_category:
            return report.predicted_category[0]
        return None

    def export_json(self) -> str:
        """All reports as one JSON array, newest first."""
        reports = sorted(self.reports.values(), key=lambda r: (r.created_at, int(r.id[1:])), reverse=True)
        return canonical_json([r.to_dict() for r in reports])

    # ------------------------------------------------------------------
    # persistence

    def _require(self, report_id: str) -> GeoReport:
        report = self.reports.get(report_id)
        if report is None:
            raise UnknownReport(report_id)
        return report

    def _save(self) -> None:
        if self.state_path is None:
            return
        payload = {
            "schema": 1,
            "counter": self._counter,
            "reports": [r.to_dict() for r in self.reports.values()],
            "drafts": {str(k): v for k, v in self._drafts.items()},
            "last_update": {str(k): v for k, v in self._last_update.items()},
            "last_reply": {str(k): v.to_dict() for k, v in self._last_reply.items()},
        }
        tmp = self.state_path.with_suffix(self.state_path.suffix + ".tmp")
        tmp.write_text(canonical_json(payload) + "\n", encoding="utf-8")
        tmp.replace(self.state_path)

    def _load(self) -> None:
        data = json.loads(self.state_path.read_text(encoding="utf-8"))
        self._counter = data["counter"]
        self.reports = {r["id"]: GeoReport.from_dict(r) for r in data["reports"]}
        self._drafts = {int(k): v for k, v in data["drafts"].items()}
        self._last_update = {int(k): v for k, v in data["last_update"].items()}
        self._last_reply = {
            int(k): BotReply(text=v["text"], options=tuple(v["options"]))
            for k, v in data["last_reply"].items()
        }
