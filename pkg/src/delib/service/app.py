"""REST facade over the deliberation store, extraction staging, geo bot
and reporting.

Route map (JSON in, JSON out; auth via the X-Auth-Token header):

    POST /auth/login                          issue a token for a known user
    GET  /health                              liveness + store seq + backend mode
    GET  /discussions                         list discussions
    POST /discussions                         create (moderator)
    GET  /discussions/{did}                   full argument tree
    POST /discussions/{did}/close             close (moderator)
    POST /discussions/{did}/nodes             add issue/position/argument
    PUT  /positions/{pid}/reflection          upsert an agree/neutral/disagree vote
    POST /transcripts                         upload + parse a transcript
    GET  /transcripts/{tid}                   parsed transcript
    POST /extractions                         run an extractor -> draft proposal
    GET  /extractions/{xid}                   proposal with per-item decisions
    POST /extractions/{xid}/submit            draft -> under_review
    POST /extractions/{xid}/items/{item}      decide one item
    POST /extractions/{xid}/decide-all        decide every pending item
    POST /extractions/{xid}/commit            write accepted items to the store
    POST /extractions/{xid}/discard           abandon a proposal
    POST /webhook/bot                         Telegram-shaped update (no auth)
    GET  /reports-geo                         query published/any geo reports
    GET  /reports-geo/queue                   moderation queue (moderator)
    POST /reports-geo/{rid}/approve           publish a queued report (moderator)
    POST /reports-geo/{rid}/reject            reject with note (moderator)
    POST /snapshots                           compute a report snapshot (moderator)
    GET  /snapshots/{sid}                     snapshot descriptor
    PATCH /snapshots/{sid}/layout             move/resize one widget
    GET  /snapshots/{sid}/export              markdown/html/json document

Every error response has the shape {"error": {"code", "message"}}; the
code-to-status table is checked for totality at app creation.
"""

from __future__ import annotations

import logging

from fastapi import Body, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse

from ..aigateway import AiGateway, RemoteBackend, StubBackend, load_taxonomy, load_wordlist
from ..errors import (
    DelibError,
    UnknownDiscussion,
    UnknownPosition,
    UnknownProposal,
    UnknownSnapshot,
    UnknownTranscript,
    UnknownUser,
    Forbidden,
    AuthRequired,
    all_error_classes,
)
from ..geo import GeoService, parse_wire
from ..proposals import run_extraction
from ..reporting import ReportSnapshot, create_snapshot, update_layout
from ..store import DiscussionStore, StoreView
from ..transcripts import ExtractionConfig, RuleBasedExtractor, LlmExtractor, parse_transcript
from .auth import issue_token, load_users, verify_token
from .config import ServiceConfig

logger = logging.getLogger(__name__)

# every DelibError code maps to exactly one HTTP status; 4xx caller
# faults, 5xx backend faults
ERROR_STATUS: dict[str, int] = {
    "empty_title": 400,
    "empty_text": 400,
    "unknown_user": 404,
    "forbidden": 403,
    "auth_required": 403,
    "unknown_discussion": 404,
    "discussion_closed": 409,
    "bad_parent_kind": 400,
    "unknown_parent": 404,
    "missing_side": 400,
    "unexpected_side": 400,
    "missing_source_span": 400,
    "unknown_position": 404,
    "corrupt_store": 500,
    "not_utf8": 400,
    "empty_transcript": 400,
    "non_monotonic_timestamps": 400,
    "unknown_transcript": 404,
    "config_out_of_range": 400,
    "extractor_failure": 502,
    "unknown_proposal": 404,
    "unknown_item": 404,
    "wrong_proposal_state": 409,
    "pending_items_remain": 409,
    "already_committed": 409,
    "malformed_update": 400,
    "wrong_state": 409,
    "unknown_label": 400,
    "unknown_report": 404,
    "bad_bbox": 400,
    "missing_note": 400,
    "backend_unavailable": 503,
    "empty_input": 400,
    "unknown_widget": 404,
    "unknown_snapshot": 404,
    "overlap": 409,
    "out_of_bounds": 400,
    "bind_failure": 500,
}


def check_error_mapping() -> None:
    """Startup totality check: no module error may lack an HTTP mapping."""
    missing = [cls.code for cls in all_error_classes() if cls.code not in ERROR_STATUS]
    if missing:
        raise RuntimeError(f"error codes without an HTTP status mapping: {missing}")


def build_gateway(config: ServiceConfig) -> AiGateway:
    if config.ai_mode == "remote":
        backend = RemoteBackend(
            endpoint=config.remote_endpoint,
            model=config.remote_model,
            api_key=config.remote_api_key,
        )
    else:
        taxonomy = load_taxonomy(config.taxonomy_path)
        backend = StubBackend(keyword_table=taxonomy["keywords"])
    return AiGateway(
        backend=backend,
        audit_path=config.audit_path,
        wordlist=load_wordlist(config.wordlist_path),
    )


def discussion_summary(view: StoreView, did: str) -> dict:
    disc = view.discussions[did]
    issues = view.issues_of(did)
    positions = view.discussion_positions(did)
    return {
        "id": disc.id,
        "title": disc.title,
        "description": disc.description,
        "status": disc.status,
        "created_by": disc.created_by,
        "created_at": disc.created_at.isoformat(),
        "participants": sorted(disc.participants),
        "counts": {
            "issues": len(issues),
            "positions": len(positions),
            "arguments": sum(len(view.arguments_of(p.id)) for p in positions),
        },
    }


def discussion_tree(view: StoreView, did: str) -> dict:
    out = discussion_summary(view, did)
    out["issues"] = []
    for issue in view.issues_of(did):
        inode = {
            "id": issue.id,
            "text": issue.text,
            "author": issue.created_by,
            "created_at": issue.created_at.isoformat(),
            "origin": issue.origin,
            "positions": [],
        }
        for pos in view.positions_of(issue.id):
            votes = {"agree": 0, "neutral": 0, "disagree": 0}
            for r in view.reflections_of(pos.id):
                votes[r.level] += 1
            pnode = {
                "id": pos.id,
                "text": pos.text,
                "author": pos.created_by,
                "created_at": pos.created_at.isoformat(),
                "origin": pos.origin,
                "reflections": votes,
                "arguments": [
                    {
                        "id": a.id,
                        "text": a.text,
                        "side": a.side,
                        "author": a.created_by,
                        "created_at": a.created_at.isoformat(),
                        "origin": a.origin,
                        "source_span": a.source_span.to_dict() if a.source_span else None,
                    }
                    for a in view.arguments_of(pos.id)
                ],
            }
            inode["positions"].append(pnode)
        out["issues"].append(inode)
    return out


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    check_error_mapping()
    config.ensure_data_dir()

    store = DiscussionStore(log_path=config.events_path)
    for entry in load_users(config.users_path):
        store.register_user(entry["display_name"], entry["role"], user_id=entry["id"])
    gateway = build_gateway(config)
    taxonomy = load_taxonomy(config.taxonomy_path)
    geo = GeoService(
        gateway=gateway,
        taxonomy=taxonomy["labels"],
        mode=config.moderation_mode,
        store=store,
        state_path=config.geo_state_path,
    )

    app = FastAPI(title="delib", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.store = store
    app.state.gateway = gateway
    app.state.geo = geo
    app.state.transcripts = {}
    app.state.proposals = {}
    app.state.snapshots = {}
    app.state.snapshot_counter = 0

    snapshots_dir = config.data_dir / "snapshots"

    @app.exception_handler(DelibError)
    def on_delib_error(request: Request, exc: DelibError):
        return JSONResponse(
            status_code=ERROR_STATUS[exc.code],
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    def on_value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "bad_request", "message": str(exc)}},
        )

    # ------------------------------------------------------------------
    # auth helpers

    def actor_id(token: str | None) -> str:
        uid = verify_token(config.secret, token)
        if uid not in store.users:
            raise AuthRequired(f"token user {uid!r} does not exist")
        return uid

    def require_moderator(token: str | None) -> str:
        uid = actor_id(token)
        if store.users[uid].role not in ("moderator", "admin"):
            raise Forbidden("moderator role required")
        return uid

    # ------------------------------------------------------------------
    # auth + health

    @app.post("/auth/login")
    def login(payload: dict = Body(...)):
        uid = str(payload.get("user_id", ""))
        user = store.users.get(uid)
        if user is None:
            raise UnknownUser(uid)
        return {
            "token": issue_token(config.secret, uid),
            "user": {"id": user.id, "display_name": user.display_name, "role": user.role},
        }

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "store_seq": store.seq,
            "backend_mode": gateway.backend.kind,
        }

    # ------------------------------------------------------------------
    # discussions and nodes

    @app.get("/discussions")
    def list_discussions():
        view = store.view()
        return {"discussions": [discussion_summary(view, d) for d in view.discussions]}

    @app.post("/discussions", status_code=201)
    def post_discussion(payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        uid = actor_id(x_auth_token)
        disc = store.create_discussion(
            title=str(payload.get("title", "")),
            description=str(payload.get("description", "")),
            creator=uid,
        )
        return discussion_summary(store.view(), disc.id)

    @app.get("/discussions/{did}")
    def get_discussion(did: str):
        view = store.view()
        if did not in view.discussions:
            raise UnknownDiscussion(did)
        return discussion_tree(view, did)

    @app.post("/discussions/{did}/close")
    def close_discussion(did: str, x_auth_token: str | None = Header(default=None)):
        uid = actor_id(x_auth_token)
        store.close_discussion(did, uid)
        return discussion_summary(store.view(), did)

    @app.post("/discussions/{did}/nodes", status_code=201)
    def post_node(did: str, payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        uid = actor_id(x_auth_token)
        node_id = store.add_node(
            discussion_id=did,
            parent_id=str(payload.get("parent_id", "")),
            kind=str(payload.get("kind", "")),
            text=str(payload.get("text", "")),
            author=uid,
            side=payload.get("side"),
        )
        return {"id": node_id, "kind": payload.get("kind")}

    @app.put("/positions/{pid}/reflection")
    def put_reflection(pid: str, payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        uid = actor_id(x_auth_token)
        store.set_reflection(pid, uid, str(payload.get("level", "")))
        view = store.view()
        votes = {"agree": 0, "neutral": 0, "disagree": 0}
        for r in view.reflections_of(pid):
            votes[r.level] += 1
        return {"position_id": pid, "reflections": votes}

    # ------------------------------------------------------------------
    # transcripts and extraction proposals

    @app.post("/transcripts", status_code=201)
    def post_transcript(payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        actor_id(x_auth_token)
        content = payload.get("content")
        if not isinstance(content, str):
            raise ValueError("transcripts upload needs a string 'content' field")
        transcript = parse_transcript(
            content.encode("utf-8"),
            fmt=payload.get("format", "plain"),
            source_name=str(payload.get("name", "")),
        )
        app.state.transcripts[transcript.id] = transcript
        return {
            "id": transcript.id,
            "source_name": transcript.source_name,
            "format": payload.get("format", "plain"),
            "segments": len(transcript.segments),
        }

    @app.get("/transcripts/{tid}")
    def get_transcript(tid: str):
        transcript = app.state.transcripts.get(tid)
        if transcript is None:
            raise UnknownTranscript(tid)
        return transcript.to_dict()

    @app.post("/extractions", status_code=201)
    def post_extraction(payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        actor_id(x_auth_token)
        tid = str(payload.get("transcript_id", ""))
        transcript = app.state.transcripts.get(tid)
        if transcript is None:
            raise UnknownTranscript(tid)
        cfg = ExtractionConfig(
            positions_per_issue=payload.get("positions_per_issue", 5),
            arguments_per_position=payload.get("arguments_per_position", 2),
            balance_bias=payload.get("balance_bias", 0.5),
        )
        if payload.get("extractor") == "llm":
            extractor = LlmExtractor(gateway)
        else:
            extractor = RuleBasedExtractor()
        proposal = run_extraction(transcript, cfg, extractor)
        app.state.proposals[proposal.id] = proposal
        return proposal.to_json_dict()

    def find_proposal(xid: str):
        proposal = app.state.proposals.get(xid)
        if proposal is None:
            raise UnknownProposal(xid)
        return proposal

    @app.get("/extractions/{xid}")
    def get_extraction(xid: str):
        return find_proposal(xid).to_json_dict()

    @app.post("/extractions/{xid}/submit")
    def submit_extraction(xid: str, x_auth_token: str | None = Header(default=None)):
        actor_id(x_auth_token)
        return find_proposal(xid).submit_for_review().to_json_dict()

    @app.post("/extractions/{xid}/items/{item_id}")
    def decide_item(
        xid: str,
        item_id: str,
        payload: dict = Body(...),
        x_auth_token: str | None = Header(default=None),
    ):
        actor_id(x_auth_token)
        proposal = find_proposal(xid)
        proposal.decide_item(item_id, str(payload.get("decision", "")), payload.get("edited_text"))
        return proposal.item(item_id).to_dict()

    @app.post("/extractions/{xid}/decide-all")
    def decide_all(xid: str, payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        actor_id(x_auth_token)
        return find_proposal(xid).decide_all(str(payload.get("decision", ""))).to_json_dict()

    @app.post("/extractions/{xid}/commit")
    def commit_extraction(xid: str, payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        uid = require_moderator(x_auth_token)
        proposal = find_proposal(xid)
        created = proposal.commit(store, str(payload.get("discussion_id", "")), uid)
        return {"proposal_id": xid, "state": proposal.state, "created": created}

    @app.post("/extractions/{xid}/discard")
    def discard_extraction(xid: str, x_auth_token: str | None = Header(default=None)):
        actor_id(x_auth_token)
        return find_proposal(xid).discard().to_json_dict()

    # ------------------------------------------------------------------
    # geo bot + moderation

    @app.post("/webhook/bot")
    def bot_webhook(payload: dict = Body(...)):
        # the bot platform cannot send our auth header; the webhook is
        # the one unauthenticated mutating endpoint, by design
        return geo.handle_update(parse_wire(payload)).to_dict()

    @app.get("/reports-geo")
    def query_geo(
        min_lat: float | None = Query(default=None),
        min_lon: float | None = Query(default=None),
        max_lat: float | None = Query(default=None),
        max_lon: float | None = Query(default=None),
        category: str | None = Query(default=None),
        state: str | None = Query(default=None),
    ):
        corners = (min_lat, min_lon, max_lat, max_lon)
        if any(c is not None for c in corners):
            if any(c is None for c in corners):
                raise ValueError("bbox needs all of min_lat, min_lon, max_lat, max_lon")
            bbox = corners
        else:
            bbox = None
        reports = geo.query_reports(bbox=bbox, category=category, state=state)
        return {"reports": [r.to_dict() for r in reports]}

    @app.get("/reports-geo/queue")
    def geo_queue(x_auth_token: str | None = Header(default=None)):
        require_moderator(x_auth_token)
        return {"reports": [r.to_dict() for r in geo.pending_reports()]}

    @app.post("/reports-geo/{rid}/approve")
    def geo_approve(rid: str, payload: dict = Body(default={}), x_auth_token: str | None = Header(default=None)):
        require_moderator(x_auth_token)
        report = geo.approve(rid, note=payload.get("note"))
        return report.to_dict()

    @app.post("/reports-geo/{rid}/reject")
    def geo_reject(rid: str, payload: dict = Body(default={}), x_auth_token: str | None = Header(default=None)):
        require_moderator(x_auth_token)
        report = geo.reject(rid, note=str(payload.get("note", "")))
        return report.to_dict()

    # ------------------------------------------------------------------
    # snapshots

    def find_snapshot(sid: str) -> ReportSnapshot:
        snapshot = app.state.snapshots.get(sid)
        if snapshot is None:
            path = snapshots_dir / f"{sid}.json"
            if not path.exists():
                raise UnknownSnapshot(sid)
            snapshot = ReportSnapshot.from_descriptor(path.read_bytes())
            app.state.snapshots[sid] = snapshot
        return snapshot

    def persist_snapshot(snapshot: ReportSnapshot) -> None:
        snapshots_dir.mkdir(parents=True, exist_ok=True)
        (snapshots_dir / f"{snapshot.id}.json").write_bytes(snapshot.export_descriptor())

    def next_snapshot_id() -> str:
        while True:
            app.state.snapshot_counter += 1
            sid = f"s{app.state.snapshot_counter}"
            if sid not in app.state.snapshots and not (snapshots_dir / f"{sid}.json").exists():
                return sid

    @app.post("/snapshots", status_code=201)
    def post_snapshot(payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        uid = actor_id(x_auth_token)
        sid = next_snapshot_id()
        snapshot = create_snapshot(
            store,
            discussion_id=str(payload.get("discussion_id", "")),
            kinds=payload.get("kinds"),
            actor=uid,
            gateway=gateway,
            snapshot_id=sid,
        )
        app.state.snapshots[snapshot.id] = snapshot
        persist_snapshot(snapshot)
        return snapshot.to_descriptor_dict()

    @app.get("/snapshots/{sid}")
    def get_snapshot(sid: str):
        return find_snapshot(sid).to_descriptor_dict()

    @app.patch("/snapshots/{sid}/layout")
    def patch_layout(sid: str, payload: dict = Body(...), x_auth_token: str | None = Header(default=None)):
        actor_id(x_auth_token)
        snapshot = find_snapshot(sid)
        layout = update_layout(snapshot, payload)
        persist_snapshot(snapshot)
        return layout.to_dict()

    @app.get("/snapshots/{sid}/export")
    def export_snapshot(sid: str, format: str = Query(default="json")):
        snapshot = find_snapshot(sid)
        if format == "json":
            return Response(content=snapshot.export_descriptor(), media_type="application/json")
        if format == "markdown":
            return Response(content=snapshot.export_document("markdown"), media_type="text/markdown")
        if format == "html":
            return Response(content=snapshot.export_document("html"), media_type="text/html")
        raise ValueError(f"format must be json, markdown or html, got {format!r}")

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service under uvicorn; raises BindFailure on a busy port."""
    import uvicorn

    from ..errors import BindFailure

    app = create_app(config)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except OSError as exc:
        raise BindFailure(f"cannot listen on {config.host}:{config.port}: {exc}") from exc
