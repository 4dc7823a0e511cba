"""Command line entry point.

Exit codes: 0 success, 1 validation/runtime failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..aigateway import AiGateway, StubBackend, load_taxonomy
from ..errors import ConfigOutOfRange, CorruptStore, DelibError
from ..geo import GeoService, parse_wire
from ..proposals import run_extraction
from ..reporting import create_snapshot
from ..store import DiscussionStore
from ..transcripts import ExtractionConfig, RuleBasedExtractor, parse_transcript
from .config import ServiceConfig


@click.group()
def main():
    """Deliberation backend: serve the API or run offline tooling."""


@main.command()
@click.option("--host", default=None, help="Listen address (default from DELIB_LISTEN).")
@click.option("--port", default=None, type=int, help="Listen port.")
@click.option("--data-dir", default=None, type=click.Path(), help="State directory.")
@click.option("--ai-mode", default=None, type=click.Choice(["stub", "remote"]))
def serve(host, port, data_dir, ai_mode):
    """Run the HTTP service."""
    from .app import serve as run_service

    overrides = {}
    if host:
        overrides["host"] = host
    if port:
        overrides["port"] = port
    if data_dir:
        overrides["data_dir"] = Path(data_dir)
    if ai_mode:
        overrides["ai_mode"] = ai_mode
    try:
        config = ServiceConfig.from_env(**overrides)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        run_service(config)
    except DelibError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("import")
@click.argument("transcript_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--positions", default=5, type=int, help="Max positions per issue (3-10).")
@click.option("--args", "args_", default=2, type=int, help="Max arguments per position (1-4).")
@click.option("--bias", default=0.5, type=float, help="Pro/con balance bias in [0, 1].")
@click.option("--format", "fmt", default="plain", type=click.Choice(["plain", "speaker_lines"]))
@click.option("--dry-run", is_flag=True, help="Print the proposal JSON without committing.")
@click.option("--data-dir", default="./delib-data", type=click.Path())
@click.option("--discussion", default=None, help="Existing discussion id to commit into.")
def import_transcript(transcript_file, positions, args_, bias, fmt, dry_run, data_dir, discussion):
    """Extract a structured proposal from a transcript file.

    Without --dry-run every extracted item is accepted and committed;
    use the review API when per-item control matters.
    """
    try:
        config = ExtractionConfig(
            positions_per_issue=positions, arguments_per_position=args_, balance_bias=bias
        )
    except ConfigOutOfRange as exc:
        raise click.UsageError(str(exc))
    raw = Path(transcript_file).read_bytes()
    try:
        transcript = parse_transcript(raw, fmt=fmt, source_name=Path(transcript_file).name)
        proposal = run_extraction(transcript, config, RuleBasedExtractor())
    except DelibError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if dry_run:
        click.echo(json.dumps(proposal.to_json_dict(), indent=2, sort_keys=True))
        return
    data_path = Path(data_dir)
    data_path.mkdir(parents=True, exist_ok=True)
    try:
        store = DiscussionStore(log_path=data_path / "events.jsonl")
        actor = _ensure_moderator(store)
        if discussion is None:
            disc = store.create_discussion(
                title=f"Imported: {transcript.source_name or transcript.id}",
                description="Created by transcript import.",
                creator=actor,
            )
            discussion = disc.id
        proposal.submit_for_review()
        proposal.decide_all("accepted")
        created = proposal.commit(store, discussion, actor)
    except DelibError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"discussion_id": discussion, "created": created}, indent=2))


@main.command()
@click.argument("updates_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", default="./delib-data", type=click.Path())
@click.option("--mode", default="auto_validation", type=click.Choice(["auto_validation", "manual"]))
def replay(updates_file, data_dir, mode):
    """Feed a JSON-lines bot update log through the webhook handler.

    Replaying the same log twice is a no-op the second time: per-chat
    update ids persist in the data directory.
    """
    data_path = Path(data_dir)
    data_path.mkdir(parents=True, exist_ok=True)
    try:
        store = DiscussionStore(log_path=data_path / "events.jsonl")
        gateway = AiGateway(backend=StubBackend(), audit_path=data_path / "audit.jsonl")
        geo = GeoService(
            gateway=gateway,
            mode=mode,
            store=store,
            state_path=data_path / "geo_state.json",
        )
    except DelibError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    processed = 0
    for lineno, line in enumerate(Path(updates_file).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            reply = geo.handle_update(parse_wire(json.loads(line)))
        except (ValueError, DelibError) as exc:
            click.echo(f"error at line {lineno}: {exc}", err=True)
            sys.exit(1)
        processed += 1
        click.echo(f"{lineno}: {reply.text}")
    click.echo(f"processed {processed} updates; store at seq {store.seq}")


@main.command()
@click.argument("discussion_id")
@click.option("--out", default=None, type=click.Path(), help="Descriptor output path.")
@click.option("--data-dir", default="./delib-data", type=click.Path())
@click.option("--kinds", default=None, help="Comma-separated widget kinds (default: all).")
def snapshot(discussion_id, out, data_dir, kinds):
    """Compute a report snapshot and write its JSON descriptor."""
    data_path = Path(data_dir)
    try:
        store = DiscussionStore(log_path=data_path / "events.jsonl")
        gateway = AiGateway(backend=StubBackend(), audit_path=data_path / "audit.jsonl")
        actor = _ensure_moderator(store)
        snap = create_snapshot(
            store,
            discussion_id=discussion_id,
            kinds=[k.strip() for k in kinds.split(",")] if kinds else None,
            actor=actor,
            gateway=gateway,
        )
    except DelibError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    raw = snap.export_descriptor()
    if out:
        Path(out).write_bytes(raw)
        click.echo(f"wrote {out} ({len(raw)} bytes, seq {snap.store_seq})")
    else:
        click.echo(raw.decode("utf-8"), nl=False)


@main.command()
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False))
def validate(data_dir):
    """Check event-log integrity and graph invariants; exit 1 on findings."""
    events_path = Path(data_dir) / "events.jsonl"
    if not events_path.exists():
        click.echo(f"error: no event log at {events_path}", err=True)
        sys.exit(1)
    try:
        store = DiscussionStore(log_path=events_path)
    except CorruptStore as exc:
        click.echo(f"corrupt store: {exc}", err=True)
        sys.exit(1)
    failures = 0
    violations = store.validate()
    for v in violations:
        click.echo(f"violation: {v.code} on {v.entity_id}: {v.detail}")
        failures += 1
    replayed = DiscussionStore.replay(store.view().events)
    if replayed.state_dict() != store.state_dict():
        click.echo("violation: event-log replay does not reproduce the store state")
        failures += 1
    if failures:
        click.echo(f"{failures} problem(s) found")
        sys.exit(1)
    click.echo(f"ok: {store.seq} events, no violations")


def _ensure_moderator(store: DiscussionStore) -> str:
    for user in store.users.values():
        if user.role in ("moderator", "admin"):
            return user.id
    return store.register_user("CLI Moderator", "moderator", user_id="cli").id


if __name__ == "__main__":
    main()
