"""Service configuration from explicit arguments or environment.

Environment variables (all optional, prefix DELIB_):

    DELIB_LISTEN            host:port, default 127.0.0.1:8400
    DELIB_DATA_DIR          state directory, default ./delib-data
    DELIB_AI_MODE           stub | remote, default stub
    DELIB_REMOTE_ENDPOINT   base URL of the OpenAI-compatible API
    DELIB_REMOTE_MODEL      model name for remote completions
    DELIB_REMOTE_API_KEY    bearer token for the remote API
    DELIB_TAXONOMY          path to a category taxonomy JSON file
    DELIB_WORDLIST          path to an abuse wordlist file
    DELIB_MODERATION_MODE   auto_validation | manual, default auto_validation
    DELIB_SECRET            HMAC secret for auth tokens
    DELIB_USERS             path to a static users JSON file
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from ..geo import MODERATION_MODES

AI_MODES = ("stub", "remote")
DEFAULT_LISTEN = "127.0.0.1:8400"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8400
    data_dir: Path = field(default_factory=lambda: Path("./delib-data"))
    ai_mode: str = "stub"
    remote_endpoint: str | None = None
    remote_model: str = "gpt-4o-mini"
    remote_api_key: str | None = None
    taxonomy_path: Path | None = None
    wordlist_path: Path | None = None
    moderation_mode: str = "auto_validation"
    secret: str = "dev-secret"
    users_path: Path | None = None

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if self.ai_mode not in AI_MODES:
            raise ValueError(f"ai_mode must be one of {AI_MODES}, got {self.ai_mode!r}")
        if self.ai_mode == "remote" and not self.remote_endpoint:
            raise ValueError("ai_mode=remote requires remote_endpoint")
        if self.moderation_mode not in MODERATION_MODES:
            raise ValueError(
                f"moderation_mode must be one of {MODERATION_MODES}, got {self.moderation_mode!r}"
            )

    def ensure_data_dir(self) -> Path:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        probe = self.data_dir / ".writable"
        try:
            probe.write_text("ok", encoding="utf-8")
            probe.unlink()
        except OSError as exc:
            raise ValueError(f"data directory {self.data_dir} is not writable: {exc}") from exc
        return self.data_dir

    @property
    def events_path(self) -> Path:
        return self.data_dir / "events.jsonl"

    @property
    def audit_path(self) -> Path:
        return self.data_dir / "audit.jsonl"

    @property
    def geo_state_path(self) -> Path:
        return self.data_dir / "geo_state.json"

    @classmethod
    def from_env(cls, env: dict | None = None, **overrides) -> "ServiceConfig":
        env = dict(os.environ if env is None else env)
        listen = env.get("DELIB_LISTEN", DEFAULT_LISTEN)
        host, _, port = listen.rpartition(":")
        kwargs = {
            "host": host or "127.0.0.1",
            "port": int(port) if port else 8400,
            "data_dir": Path(env.get("DELIB_DATA_DIR", "./delib-data")),
            "ai_mode": env.get("DELIB_AI_MODE", "stub"),
            "remote_endpoint": env.get("DELIB_REMOTE_ENDPOINT"),
            "remote_model": env.get("DELIB_REMOTE_MODEL", "gpt-4o-mini"),
            "remote_api_key": env.get("DELIB_REMOTE_API_KEY"),
            "taxonomy_path": Path(env["DELIB_TAXONOMY"]) if "DELIB_TAXONOMY" in env else None,
            "wordlist_path": Path(env["DELIB_WORDLIST"]) if "DELIB_WORDLIST" in env else None,
            "moderation_mode": env.get("DELIB_MODERATION_MODE", "auto_validation"),
            "secret": env.get("DELIB_SECRET", "dev-secret"),
            "users_path": Path(env["DELIB_USERS"]) if "DELIB_USERS" in env else None,
        }
        kwargs.update(overrides)
        return cls(**kwargs)
