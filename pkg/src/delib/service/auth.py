"""Header-token auth: HMAC-signed user ids, no sessions.

A token is ``user_id.signature`` where the signature is
HMAC-SHA256(secret, user_id).  The login endpoint issues tokens from a
static users file; anything stronger (passwords, OAuth) is explicitly
out of scope for a research deployment.
"""

from __future__ import annotations

import hmac
import hashlib
import json
import logging
from pathlib import Path

from ..errors import AuthRequired

logger = logging.getLogger(__name__)

# seeded when no users file is configured; ids are stable for scripting
DEFAULT_USERS = [
    {"id": "admin", "display_name": "Admin", "role": "admin"},
    {"id": "mod", "display_name": "Moderator", "role": "moderator"},
    {"id": "alice", "display_name": "Alice", "role": "participant"},
    {"id": "bob", "display_name": "Bob", "role": "participant"},
]


def _sign(secret: str, user_id: str) -> str:
    return hmac.new(secret.encode("utf-8"), user_id.encode("utf-8"), hashlib.sha256).hexdigest()


def issue_token(secret: str, user_id: str) -> str:
    return f"{user_id}.{_sign(secret, user_id)}"


def verify_token(secret: str, token: str | None) -> str:
    """Return the user id inside a valid token; raise AuthRequired otherwise."""
    if not token or "." not in token:
        raise AuthRequired("missing or malformed auth token")
    user_id, sig = token.rsplit(".", 1)
    if not user_id or not hmac.compare_digest(sig, _sign(secret, user_id)):
        raise AuthRequired("invalid auth token")
    return user_id


def load_users(path: Path | None) -> list[dict]:
    if path is None:
        return [dict(u) for u in DEFAULT_USERS]
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    users = []
    for raw in data:
        if not isinstance(raw, dict) or "id" not in raw or "role" not in raw:
            raise ValueError(f"users file entries need id and role, got {raw!r}")
        users.append(
            {
                "id": str(raw["id"]),
                "display_name": str(raw.get("display_name", raw["id"])),
                "role": str(raw["role"]),
            }
        )
    if not users:
        raise ValueError("users file must list at least one user")
    return users
