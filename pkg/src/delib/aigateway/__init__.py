"""Single choke point for generative-AI capabilities.

Every AI-touching operation in the system (completion, classification,
embedding, summarization, theme extraction, argument mining, abuse
checking) goes through :class:`AiGateway`.  The gateway pairs a pluggable
backend with an audit log; with the stub backend all capabilities run as
deterministic offline algorithms, with the remote backend they are driven
by prompt templates and the results are structurally validated before
they leave the gateway.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional, Sequence

from ..errors import BackendUnavailable, EmptyInput
from ..store import StoreView, utc_now
from ..textutil import content_words, term_frequencies, tokenize, top_terms, cosine
from ..transcripts import CON_CUES, PRO_CUES, Transcript, _count_cues
from .backends import (
    AuditLog,
    AuditRecord,
    RemoteBackend,
    ScriptedBackend,
    StubBackend,
    load_taxonomy,
    load_wordlist,
)
from .prompts import PromptLibrary

__all__ = [
    "AiGateway",
    "AuditLog",
    "AuditRecord",
    "StubBackend",
    "ScriptedBackend",
    "RemoteBackend",
    "PromptLibrary",
    "Synopsis",
    "ThemeNode",
    "ThemeTree",
    "ArgNode",
    "ArgEdge",
    "ArgumentGraph",
    "AbuseResult",
    "load_taxonomy",
    "load_wordlist",
]


@dataclass(frozen=True)
class Synopsis:
    text: str
    generated_at: datetime
    source_event_seq: int

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "generated_at": self.generated_at.isoformat(),
            "source_event_seq": self.source_event_seq,
        }


@dataclass
class ThemeNode:
    label: str
    keywords: list[str]
    post_ids: list[str] = field(default_factory=list)
    children: list["ThemeNode"] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "keywords": self.keywords,
            "post_ids": self.post_ids,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass
class ThemeTree:
    root: ThemeNode

    @property
    def leaves(self) -> list[ThemeNode]:
        out: list[ThemeNode] = []
        stack = [self.root]
        while stack:
            node = stack.pop(0)
            if node.children:
                stack.extend(node.children)
            else:
                out.append(node)
        return out

    def to_dict(self) -> dict:
        return {
            "tree": self.root.to_dict(),
            "list": [
                {"label": n.label, "keywords": n.keywords, "post_ids": n.post_ids} for n in self.leaves
            ],
        }


@dataclass(frozen=True)
class ArgNode:
    id: str
    text: str
    kind: str  # claim | premise
    source: dict


@dataclass(frozen=True)
class ArgEdge:
    source: str
    target: str
    relation: str  # support | attack
    confidence: float


@dataclass
class ArgumentGraph:
    nodes: list[ArgNode] = field(default_factory=list)
    edges: list[ArgEdge] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "text": n.text, "kind": n.kind, "source": n.source} for n in self.nodes
            ],
            "edges": [
                {"from": e.source, "to": e.target, "relation": e.relation, "confidence": e.confidence}
                for e in self.edges
            ],
        }


@dataclass(frozen=True)
class AbuseResult:
    flagged: bool
    terms: tuple[str, ...] = ()

    @property
    def clean(self) -> bool:
        return not self.flagged


class AiGateway:
    """Audited front door to AI capabilities.

    One audit record is written per operation, success or failure, so a
    test run can assert record count == call count.
    """

    def __init__(
        self,
        backend=None,
        audit_path: str | Path | None = None,
        wordlist: Sequence[str] | None = None,
        prompts: PromptLibrary | None = None,
        clock: Optional[Callable[[], datetime]] = None,
    ):
        self.backend = backend if backend is not None else StubBackend()
        self.audit = AuditLog(audit_path)
        self.wordlist = list(wordlist) if wordlist is not None else load_wordlist()
        self.prompts = prompts or PromptLibrary.default()
        self._clock = clock or utc_now

    @property
    def is_stub(self) -> bool:
        return self.backend.kind != "remote"

    def _run(self, operation: str, input_obj, fn):
        try:
            result = fn()
        except Exception as exc:
            self.audit.record(operation, input_obj, {"error": str(exc)}, at=self._clock())
            raise
        self.audit.record(operation, input_obj, _auditable(result), at=self._clock())
        return result

    # ------------------------------------------------------------------
    # primitives

    def complete(self, prompt: str, max_tokens: int = 512) -> str:
        return self._run("complete", prompt, lambda: self.backend.complete(prompt, max_tokens))

    def classify_text(self, text: str, labels: list[str]) -> tuple[str, float]:
        def call():
            label, confidence = self.backend.classify(text, labels)
            if label not in labels:
                raise BackendUnavailable(f"backend produced out-of-set label {label!r}")
            return label, min(1.0, max(0.0, confidence))

        return self._run("classify", {"text": text, "labels": labels}, call)

    def embed(self, text: str) -> list[float]:
        return self._run("embed", text, lambda: self.backend.embed(text))

    # ------------------------------------------------------------------
    # summarization

    def summarize_discussion(self, view: StoreView, discussion_id: str) -> Synopsis:
        disc = view.discussions[discussion_id]
        issues = view.issues_of(discussion_id)
        positions = view.discussion_positions(discussion_id)
        if not issues and not positions:
            raise EmptyInput("discussion has no posts to summarize")

        def call():
            pro = con = 0
            for pos in positions:
                for arg in view.arguments_of(pos.id):
                    if arg.side == "pro":
                        pro += 1
                    else:
                        con += 1
            if self.is_stub:
                text = (
                    f"Discussion '{disc.title}': {len(issues)} issues, {len(positions)} positions "
                    f"({pro} pro / {con} con arguments), most-supported position: "
                    f"{_most_supported(view, positions)}"
                )
            else:
                outline = []
                for issue in issues:
                    outline.append(f"- Issue: {issue.text}")
                    for pos in view.positions_of(issue.id):
                        args = view.arguments_of(pos.id)
                        p = sum(1 for a in args if a.side == "pro")
                        c = len(args) - p
                        outline.append(f"  - Position ({p} pro / {c} con): {pos.text}")
                prompt = self.prompts.render_summary(disc.title, disc.description, "\n".join(outline))
                text = self.backend.complete(prompt, max_tokens=400).strip()
                if not text:
                    raise BackendUnavailable("empty summary from backend")
            return Synopsis(text=text, generated_at=self._clock(), source_event_seq=view.seq)

        return self._run("summarize", {"discussion": discussion_id, "seq": view.seq}, call)

    # ------------------------------------------------------------------
    # themes

    def extract_themes(self, posts: list[tuple[str, str]]) -> ThemeTree:
        if not posts:
            raise EmptyInput("theme extraction needs at least one post")

        def call():
            if self.is_stub:
                return self._stub_themes(posts)
            return self._remote_themes(posts)

        return self._run("themes", {"posts": [p[0] for p in posts]}, call)

    def _stub_themes(self, posts: list[tuple[str, str]]) -> ThemeTree:
        # group posts by their single most frequent content word
        groups: dict[str, list[str]] = {}
        texts_by_group: dict[str, list[str]] = {}
        for pid, text in posts:
            freq = term_frequencies([text])
            if not freq:
                key = "misc"
            else:
                key = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
            groups.setdefault(key, []).append(pid)
            texts_by_group.setdefault(key, []).append(text)

        all_freq = term_frequencies([t for _, t in posts])
        root = ThemeNode(label="themes", keywords=top_terms(all_freq, 3) or ["misc"])
        ordered = [k for k in groups if k != "misc"] + (["misc"] if "misc" in groups else [])
        for key in ordered:
            keywords = top_terms(term_frequencies(texts_by_group[key]), 3) or ["misc"]
            root.children.append(ThemeNode(label=key, keywords=keywords, post_ids=groups[key]))
        return ThemeTree(root=root)

    def _remote_themes(self, posts: list[tuple[str, str]]) -> ThemeTree:
        import json as _json
        import re as _re

        answer = self.backend.complete(self.prompts.render_themes(posts), max_tokens=512)
        m = _re.search(r"\{.*\}", answer, _re.DOTALL)
        if not m:
            raise BackendUnavailable("theme answer carried no JSON")
        try:
            raw_themes = _json.loads(m.group(0)).get("themes", [])
        except ValueError as exc:
            raise BackendUnavailable(f"malformed theme answer: {exc}") from exc
        themes = []
        for raw in raw_themes:
            if not isinstance(raw, dict):
                continue
            label = str(raw.get("label", "")).strip()
            keywords = [str(k) for k in raw.get("keywords", []) if str(k).strip()]
            if label:
                themes.append((label, keywords or [label]))
        root = ThemeNode(
            label="themes",
            keywords=top_terms(term_frequencies([t for _, t in posts]), 3) or ["misc"],
        )
        if not themes:
            root.children.append(ThemeNode(label="misc", keywords=["misc"], post_ids=[p[0] for p in posts]))
            return ThemeTree(root=root)
        # assign each post to the embedding-nearest theme label
        theme_vecs = [self.backend.embed(label + " " + " ".join(kws)) for label, kws in themes]
        assignment: dict[int, list[str]] = {}
        for pid, text in posts:
            vec = self.backend.embed(text)
            scores = [cosine(vec, tv) for tv in theme_vecs]
            best = max(range(len(themes)), key=lambda i: (scores[i], -i))
            assignment.setdefault(best, []).append(pid)
        for i, (label, keywords) in enumerate(themes):
            if assignment.get(i):  # empty leaves are dropped post-hoc
                root.children.append(ThemeNode(label=label, keywords=keywords, post_ids=assignment[i]))
        if not root.children:
            root.children.append(ThemeNode(label="misc", keywords=["misc"], post_ids=[p[0] for p in posts]))
        return ThemeTree(root=root)

    # ------------------------------------------------------------------
    # argument mining

    def mine_arguments(
        self, view: StoreView, discussion_id: str, transcripts: Sequence[Transcript] = ()
    ) -> ArgumentGraph:
        positions = view.discussion_positions(discussion_id)
        n_texts = len(positions) + sum(len(view.arguments_of(p.id)) for p in positions)
        n_texts += sum(len(t.segments) for t in transcripts)
        if n_texts == 0:
            raise EmptyInput("argument mining needs at least one text")

        def call():
            if self.is_stub:
                return self._stub_mine(view, positions, transcripts)
            return self._remote_mine(view, discussion_id, positions, transcripts)

        return self._run(
            "mine",
            {"discussion": discussion_id, "transcripts": [t.id for t in transcripts]},
            call,
        )

    def _stub_mine(self, view, positions, transcripts) -> ArgumentGraph:
        graph = ArgumentGraph()
        for pos in positions:
            graph.nodes.append(ArgNode(id=pos.id, text=pos.text, kind="claim", source={"post_id": pos.id}))
            for arg in view.arguments_of(pos.id):
                graph.nodes.append(
                    ArgNode(id=arg.id, text=arg.text, kind="premise", source={"post_id": arg.id})
                )
                relation = "support" if arg.side == "pro" else "attack"
                graph.edges.append(ArgEdge(source=arg.id, target=pos.id, relation=relation, confidence=1.0))
        claim_words = [set(content_words(p.text)) for p in positions]
        for transcript in transcripts:
            for seg in transcript.segments:
                con_m = _count_cues(seg.text, CON_CUES)
                pro_m = _count_cues(seg.text, PRO_CUES)
                if con_m == 0 and pro_m == 0:
                    continue
                words = set(content_words(seg.text))
                overlaps = [len(words & cw) for cw in claim_words]
                if not overlaps or max(overlaps) == 0:
                    continue
                best = overlaps.index(max(overlaps))
                node_id = f"{transcript.id}:{seg.index}"
                graph.nodes.append(
                    ArgNode(
                        id=node_id,
                        text=seg.text,
                        kind="premise",
                        source={"transcript_id": transcript.id, "segment": seg.index},
                    )
                )
                relation = "attack" if con_m > 0 else "support"
                graph.edges.append(
                    ArgEdge(source=node_id, target=positions[best].id, relation=relation, confidence=0.5)
                )
        return graph

    def _remote_mine(self, view, discussion_id, positions, transcripts) -> ArgumentGraph:
        import json as _json
        import re as _re

        texts: list[tuple[str, str]] = []
        for pos in positions:
            texts.append((pos.id, pos.text))
            for arg in view.arguments_of(pos.id):
                texts.append((arg.id, arg.text))
        for transcript in transcripts:
            for seg in transcript.segments:
                texts.append((f"{transcript.id}:{seg.index}", seg.text))
        answer = self.backend.complete(self.prompts.render_mining(texts), max_tokens=1024)
        m = _re.search(r"\{.*\}", answer, _re.DOTALL)
        if not m:
            raise BackendUnavailable("mining answer carried no JSON")
        try:
            data = _json.loads(m.group(0))
        except ValueError as exc:
            raise BackendUnavailable(f"malformed mining answer: {exc}") from exc
        graph = ArgumentGraph()
        seen: set[str] = set()
        for raw in data.get("nodes", []) or []:
            if not isinstance(raw, dict):
                continue
            nid = str(raw.get("id", "")).strip()
            text = str(raw.get("text", "")).strip()
            kind = raw.get("kind")
            if not nid or not text or kind not in ("claim", "premise") or nid in seen:
                continue
            seen.add(nid)
            graph.nodes.append(ArgNode(id=nid, text=text, kind=kind, source={"post_id": nid}))
        for raw in data.get("edges", []) or []:
            if not isinstance(raw, dict):
                continue
            src, dst = str(raw.get("from", "")), str(raw.get("to", ""))
            relation = raw.get("relation")
            if src not in seen or dst not in seen or src == dst or relation not in ("support", "attack"):
                continue  # invalid edges are dropped, not errors
            try:
                confidence = min(1.0, max(0.0, float(raw.get("confidence", 0.5))))
            except (TypeError, ValueError):
                confidence = 0.5
            graph.edges.append(ArgEdge(source=src, target=dst, relation=relation, confidence=confidence))
        return graph

    # ------------------------------------------------------------------
    # abuse checking

    def abuse_check(self, text: str) -> AbuseResult:
        def call():
            if self.is_stub:
                return self._wordlist_check(text)
            label, _ = self.backend.classify(text, ["clean", "abusive"])
            if label == "abusive":
                return AbuseResult(flagged=True, terms=("abusive",))
            return AbuseResult(flagged=False)

        try:
            return self._run("abuse_check", text, call)
        except BackendUnavailable:
            # fail closed: nothing unchecked may auto-publish
            return AbuseResult(flagged=True, terms=("backend-unavailable",))

    def _wordlist_check(self, text: str) -> AbuseResult:
        tokens = tokenize(text)
        normalized = " ".join(tokens)
        token_set = set(tokens)
        hits = []
        for term in self.wordlist:
            if " " in term:
                if f" {term} " in f" {normalized} ":
                    hits.append(term)
            elif term in token_set:
                hits.append(term)
        if hits:
            return AbuseResult(flagged=True, terms=tuple(hits))
        return AbuseResult(flagged=False)


def _most_supported(view: StoreView, positions) -> str:
    if not positions:
        return "none"
    best = max(
        enumerate(positions),
        key=lambda ip: (
            sum(1 for r in view.reflections_of(ip[1].id) if r.level == "agree"),
            -ip[0],
        ),
    )
    return best[1].text


def _auditable(result):
    if hasattr(result, "to_dict"):
        return result.to_dict()
    if isinstance(result, AbuseResult):
        return {"flagged": result.flagged, "terms": list(result.terms)}
    return result
