"""Transcript parsing and candidate extraction.

Two input formats are supported:

* ``plain``: every non-empty line becomes one segment.
* ``speaker_lines``: lines shaped like ``[hh:mm:ss] Name: text`` (the
  timestamp is optional) open a new segment; any other line is appended to
  the previous segment's text.

Extraction is pluggable.  :class:`RuleBasedExtractor` is a deterministic
cue-word heuristic that runs fully offline; :class:`LlmExtractor` asks a
text-generation backend for the structure and then clamps the result to
the configured bounds.  Both produce the same candidate tree shape, which
:func:`delib.proposals.run_extraction` wraps into a reviewable proposal.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, TYPE_CHECKING

from .errors import (
    ConfigOutOfRange,
    EmptyTranscript,
    ExtractorFailure,
    NonMonotonicTimestamps,
    NotUtf8,
)
from .model import SourceSpan
from .textutil import content_words, term_frequencies, top_terms

if TYPE_CHECKING:  # pragma: no cover
    from .aigateway import AiGateway

TRANSCRIPT_FORMATS = ("plain", "speaker_lines")

_SPEAKER_LINE_RE = re.compile(
    r"^(?:\[(\d{2}:\d{2}:\d{2})\]\s*)?([^:\n]{1,60}?)\s*:\s+(\S.*)$"
)


@dataclass
class Segment:
    index: int
    text: str
    speaker: Optional[str] = None
    timestamp: Optional[str] = None  # hh:mm:ss offset

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "text": self.text,
            "speaker": self.speaker,
            "timestamp": self.timestamp,
        }


@dataclass
class Transcript:
    id: str
    source_name: str
    segments: list[Segment]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_name": self.source_name,
            "segments": [s.to_dict() for s in self.segments],
        }


def _timestamp_seconds(ts: str) -> int:
    h, m, s = ts.split(":")
    return int(h) * 3600 + int(m) * 60 + int(s)


def parse_transcript(
    raw: bytes,
    fmt: str = "plain",
    source_name: str = "",
    transcript_id: str | None = None,
) -> Transcript:
    """Decode and segment a transcript file.

    Raises NotUtf8 for undecodable input and EmptyTranscript when no
    segment survives parsing.  The transcript id defaults to a digest of
    the raw bytes, so re-parsing identical input yields an identical
    transcript.
    """
    if fmt not in TRANSCRIPT_FORMATS:
        raise ValueError(f"format must be one of {TRANSCRIPT_FORMATS}, got {fmt!r}")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise NotUtf8(str(exc)) from exc

    segments: list[Segment] = []
    if fmt == "plain":
        for line in text.splitlines():
            line = line.strip()
            if line:
                segments.append(Segment(index=len(segments), text=line))
    else:
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped:
                continue
            m = _SPEAKER_LINE_RE.match(stripped)
            if m:
                ts, speaker, body = m.groups()
                segments.append(
                    Segment(index=len(segments), text=body.strip(), speaker=speaker.strip(), timestamp=ts)
                )
            elif segments:
                segments[-1].text = segments[-1].text + " " + stripped
            else:
                # leading continuation with nothing to attach to: keep it
                # as a speakerless segment rather than losing content
                segments.append(Segment(index=0, text=stripped))

    if not segments:
        raise EmptyTranscript(source_name or "<bytes>")

    last = -1
    for seg in segments:
        if seg.timestamp is not None:
            secs = _timestamp_seconds(seg.timestamp)
            if secs < last:
                raise NonMonotonicTimestamps(f"segment {seg.index} at {seg.timestamp}")
            last = secs

    tid = transcript_id or "t" + hashlib.sha256(raw).hexdigest()[:10]
    return Transcript(id=tid, source_name=source_name, segments=segments)


# ---------------------------------------------------------------------------
# extraction configuration

POSITIONS_PER_ISSUE_RANGE = (3, 10)
ARGUMENTS_PER_POSITION_RANGE = (1, 4)


@dataclass(frozen=True)
class ExtractionConfig:
    """Moderator-tunable extraction bounds, enforced at construction."""

    positions_per_issue: int = 5
    arguments_per_position: int = 2
    balance_bias: float = 0.5  # target fraction of pro arguments

    def __post_init__(self):
        lo, hi = POSITIONS_PER_ISSUE_RANGE
        if not (isinstance(self.positions_per_issue, int) and lo <= self.positions_per_issue <= hi):
            raise ConfigOutOfRange(
                f"positions_per_issue must be an integer in [{lo}, {hi}], got {self.positions_per_issue!r}"
            )
        lo, hi = ARGUMENTS_PER_POSITION_RANGE
        if not (isinstance(self.arguments_per_position, int) and lo <= self.arguments_per_position <= hi):
            raise ConfigOutOfRange(
                f"arguments_per_position must be an integer in [{lo}, {hi}], got {self.arguments_per_position!r}"
            )
        if not (isinstance(self.balance_bias, (int, float)) and 0.0 <= self.balance_bias <= 1.0):
            raise ConfigOutOfRange(f"balance_bias must be in [0, 1], got {self.balance_bias!r}")

    def to_dict(self) -> dict:
        return {
            "positions_per_issue": self.positions_per_issue,
            "arguments_per_position": self.arguments_per_position,
            "balance_bias": float(self.balance_bias),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionConfig":
        return cls(
            positions_per_issue=d["positions_per_issue"],
            arguments_per_position=d["arguments_per_position"],
            balance_bias=d["balance_bias"],
        )


def balance_select(candidates: Sequence[tuple[str, float]], k: int, bias: float) -> list[int]:
    """Pick up to ``k`` candidate indices honouring the pro/con bias.

    The target pro count is ``round_half_up(bias * k)``; each side
    contributes its top candidates by confidence, a short side is
    backfilled from the other, and ties break toward the lower index.
    Returned indices are sorted ascending.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (0.0 <= bias <= 1.0):
        raise ValueError("bias must be in [0, 1]")
    target_pro = min(k, int(math.floor(bias * k + 0.5)))

    def ordered(side: str) -> list[int]:
        idx = [i for i, (s, _) in enumerate(candidates) if s == side]
        return sorted(idx, key=lambda i: (-candidates[i][1], i))

    pros, cons = ordered("pro"), ordered("con")
    selected = pros[:target_pro] + cons[: k - target_pro]
    want = min(k, len(candidates))
    if len(selected) < want:
        rest = pros[target_pro:] + cons[k - target_pro :]
        rest.sort(key=lambda i: (-candidates[i][1], i))
        selected += rest[: want - len(selected)]
    return sorted(selected)


# ---------------------------------------------------------------------------
# candidate tree produced by extractors (decision fields live on proposals)

@dataclass
class CandidateArgument:
    text: str
    side: str
    confidence: float
    source_span: SourceSpan


@dataclass
class CandidatePosition:
    text: str
    confidence: float
    source_span: SourceSpan
    arguments: list[CandidateArgument] = field(default_factory=list)


@dataclass
class CandidateIssue:
    text: str
    confidence: float
    source_span: SourceSpan
    positions: list[CandidatePosition] = field(default_factory=list)


@dataclass
class ExtractionResult:
    issues: list[CandidateIssue]
    metadata: dict


# ---------------------------------------------------------------------------
# rule-based extractor

POSITION_CUES = ("i think", "should", "must")
PRO_CUES = ("because", "since")
CON_CUES = ("but", "however", "disagree")


def _count_cues(text: str, cues: Sequence[str]) -> int:
    low = text.lower()
    total = 0
    for cue in cues:
        total += len(re.findall(r"\b" + re.escape(cue) + r"\b", low))
    return total


def cue_confidence(matches: int) -> float:
    """matches / (1 + matches); strictly inside (0, 1) for matches >= 1."""
    return matches / (1.0 + matches)


class RuleBasedExtractor:
    """Deterministic cue-word heuristic.

    Segments with a stance cue ("should", "must", "I think") become
    position candidates; "because"/"since" segments become pro arguments
    and "but"/"however"/"disagree" segments con arguments, both attached
    to the nearest prior position.  Positions whose texts share at least
    one content word are grouped into a single issue.  A segment matching
    several cue families is classified by precedence position > con > pro.
    """

    name = "rule"

    def extract(self, transcript: Transcript, config: ExtractionConfig) -> ExtractionResult:
        positions: list[dict] = []  # {"seg", "text", "confidence", "arguments": [...]}
        dropped_unattached = 0
        unclassified = 0

        for seg in transcript.segments:
            pos_m = _count_cues(seg.text, POSITION_CUES)
            con_m = _count_cues(seg.text, CON_CUES)
            pro_m = _count_cues(seg.text, PRO_CUES)
            if pos_m > 0:
                positions.append(
                    {"seg": seg.index, "text": seg.text, "confidence": cue_confidence(pos_m), "arguments": []}
                )
            elif con_m > 0 or pro_m > 0:
                side = "con" if con_m > 0 else "pro"
                matches = con_m if con_m > 0 else pro_m
                if positions:
                    positions[-1]["arguments"].append(
                        {"seg": seg.index, "text": seg.text, "side": side, "confidence": cue_confidence(matches)}
                    )
                else:
                    dropped_unattached += 1
            else:
                unclassified += 1

        # group positions into issues: overlap of >= 1 content word, transitive
        keyword_sets = [set(content_words(p["text"])) for p in positions]
        parent = list(range(len(positions)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(positions)):
            for j in range(i + 1, len(positions)):
                if keyword_sets[i] & keyword_sets[j]:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[max(ri, rj)] = min(ri, rj)

        groups: dict[int, list[int]] = {}
        for i in range(len(positions)):
            groups.setdefault(find(i), []).append(i)

        positions_over_cap = 0
        arguments_over_cap = 0
        issues: list[CandidateIssue] = []
        for root in sorted(groups, key=lambda r: positions[r]["seg"]):
            members = groups[root]
            # cap positions per issue by confidence (ties: earlier segment),
            # then present the survivors in transcript order
            capped = sorted(members, key=lambda i: (-positions[i]["confidence"], positions[i]["seg"]))
            kept = sorted(capped[: config.positions_per_issue], key=lambda i: positions[i]["seg"])
            positions_over_cap += len(members) - len(kept)

            cand_positions: list[CandidatePosition] = []
            for i in kept:
                p = positions[i]
                args = p["arguments"]
                chosen = balance_select(
                    [(a["side"], a["confidence"]) for a in args],
                    config.arguments_per_position,
                    config.balance_bias,
                )
                arguments_over_cap += len(args) - len(chosen)
                cand_args = [
                    CandidateArgument(
                        text=args[j]["text"],
                        side=args[j]["side"],
                        confidence=args[j]["confidence"],
                        source_span=SourceSpan(transcript.id, args[j]["seg"], args[j]["seg"] + 1),
                    )
                    for j in chosen
                ]
                cand_positions.append(
                    CandidatePosition(
                        text=p["text"],
                        confidence=p["confidence"],
                        source_span=SourceSpan(transcript.id, p["seg"], p["seg"] + 1),
                        arguments=cand_args,
                    )
                )

            freq = term_frequencies([positions[i]["text"] for i in kept])
            keywords = top_terms(freq, 3)
            label = "Topic: " + ", ".join(keywords) if keywords else "Topic: general"
            lo = min(positions[i]["seg"] for i in kept)
            hi = max(positions[i]["seg"] for i in kept) + 1
            conf = sum(p.confidence for p in cand_positions) / len(cand_positions)
            issues.append(
                CandidateIssue(
                    text=label,
                    confidence=conf,
                    source_span=SourceSpan(transcript.id, lo, hi),
                    positions=cand_positions,
                )
            )

        metadata = {
            "extractor": self.name,
            "segments": len(transcript.segments),
            "unclassified_segments": unclassified,
            "dropped_unattached_arguments": dropped_unattached,
            "positions_over_cap": positions_over_cap,
            "arguments_over_cap": arguments_over_cap,
        }
        return ExtractionResult(issues=issues, metadata=metadata)


# ---------------------------------------------------------------------------
# LLM-backed extractor

class LlmExtractor:
    """Asks a text backend for the IBIS structure, then clamps it.

    The backend answers with JSON (issues -> positions -> arguments, each
    citing a segment index).  Anything malformed is dropped and counted;
    counts beyond the configured bounds are reduced the same way as the
    rule-based path, so the structural invariants hold regardless of what
    the model returns.
    """

    name = "llm"

    def __init__(self, gateway: "AiGateway", max_tokens: int = 2048):
        self.gateway = gateway
        self.max_tokens = max_tokens

    def extract(self, transcript: Transcript, config: ExtractionConfig) -> ExtractionResult:
        prompt = self.gateway.prompts.render_extraction(transcript, config)
        try:
            answer = self.gateway.complete(prompt, max_tokens=self.max_tokens)
        except Exception as exc:
            raise ExtractorFailure(f"backend failed: {exc}") from exc
        try:
            data = _parse_json_answer(answer)
        except ValueError as exc:
            raise ExtractorFailure(f"unparseable extractor answer: {exc}") from exc
        return self._clamp(data, transcript, config)

    def _clamp(self, data: dict, transcript: Transcript, config: ExtractionConfig) -> ExtractionResult:
        n_segments = len(transcript.segments)
        dropped = 0

        def span_for(obj: dict) -> SourceSpan | None:
            seg = obj.get("segment")
            if isinstance(seg, int) and 0 <= seg < n_segments:
                return SourceSpan(transcript.id, seg, seg + 1)
            return None

        issues: list[CandidateIssue] = []
        for raw_issue in data.get("issues", []) or []:
            if not isinstance(raw_issue, dict) or not str(raw_issue.get("text", "")).strip():
                dropped += 1
                continue
            cand_positions: list[CandidatePosition] = []
            for raw_pos in raw_issue.get("positions", []) or []:
                if not isinstance(raw_pos, dict) or not str(raw_pos.get("text", "")).strip():
                    dropped += 1
                    continue
                span = span_for(raw_pos)
                if span is None:
                    dropped += 1
                    continue
                args: list[CandidateArgument] = []
                for raw_arg in raw_pos.get("arguments", []) or []:
                    if not isinstance(raw_arg, dict) or not str(raw_arg.get("text", "")).strip():
                        dropped += 1
                        continue
                    aspan = span_for(raw_arg)
                    side = raw_arg.get("side")
                    if aspan is None or side not in ("pro", "con"):
                        dropped += 1
                        continue
                    args.append(
                        CandidateArgument(
                            text=str(raw_arg["text"]).strip(),
                            side=side,
                            confidence=_confidence(raw_arg),
                            source_span=aspan,
                        )
                    )
                chosen = balance_select(
                    [(a.side, a.confidence) for a in args],
                    config.arguments_per_position,
                    config.balance_bias,
                )
                dropped += len(args) - len(chosen)
                cand_positions.append(
                    CandidatePosition(
                        text=str(raw_pos["text"]).strip(),
                        confidence=_confidence(raw_pos),
                        source_span=span,
                        arguments=[args[i] for i in chosen],
                    )
                )
            if not cand_positions:
                dropped += 1
                continue
            ranked = sorted(
                range(len(cand_positions)), key=lambda i: (-cand_positions[i].confidence, i)
            )
            keep = sorted(ranked[: config.positions_per_issue])
            dropped += len(cand_positions) - len(keep)
            kept_positions = [cand_positions[i] for i in keep]
            lo = min(p.source_span.start for p in kept_positions)
            hi = max(p.source_span.end for p in kept_positions)
            issues.append(
                CandidateIssue(
                    text=str(raw_issue["text"]).strip(),
                    confidence=_confidence(raw_issue),
                    source_span=SourceSpan(transcript.id, lo, hi),
                    positions=kept_positions,
                )
            )
        metadata = {
            "extractor": self.name,
            "segments": n_segments,
            "dropped_items": dropped,
        }
        return ExtractionResult(issues=issues, metadata=metadata)


def _confidence(obj: dict) -> float:
    c = obj.get("confidence", 0.5)
    if not isinstance(c, (int, float)):
        return 0.5
    return min(1.0, max(0.0, float(c)))


def _parse_json_answer(answer: str) -> dict:
    """Accept bare JSON or a fenced code block around it."""
    text = answer.strip()
    if text.startswith("```"):
        text = re.sub(r"^```[a-zA-Z]*\n", "", text)
        text = re.sub(r"\n```$", "", text.strip())
    start = text.find("{")
    end = text.rfind("}")
    if start == -1 or end == -1 or end <= start:
        raise ValueError("no JSON object found")
    data = json.loads(text[start : end + 1])
    if not isinstance(data, dict):
        raise ValueError("top-level JSON is not an object")
    return data
