"""Text-generation backends behind the gateway.

``StubBackend`` is pure and fully offline: identical input always yields
identical output, which the test suite and every deterministic fixture
rely on.  ``RemoteBackend`` speaks the OpenAI-compatible chat-completion
and embeddings wire shape over HTTP; all of its failures surface as
``BackendUnavailable`` after one retry.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path

import httpx

from ..errors import BackendUnavailable
from ..store import canonical_json, utc_now
from ..textutil import hash_embed, tokenize


def load_default_taxonomy() -> dict:
    with resources.files("delib.data").joinpath("taxonomy.json").open(encoding="utf-8") as fh:
        return json.load(fh)


def load_taxonomy(path: str | Path | None = None) -> dict:
    if path is None:
        return load_default_taxonomy()
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_wordlist(path: str | Path | None = None) -> list[str]:
    if path is None:
        text = resources.files("delib.data").joinpath("abuse_wordlist.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    terms = []
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            terms.append(line)
    return terms


class StubBackend:
    """Deterministic offline backend.

    ``classify`` scores labels by keyword-table and label-name token
    matches; ``embed`` is a hash-bucket TF vector; ``complete`` echoes a
    digest of the prompt.  No call can fail.
    """

    kind = "stub"

    def __init__(self, keyword_table: dict[str, list[str]] | None = None):
        if keyword_table is None:
            keyword_table = load_default_taxonomy()["keywords"]
        self.keyword_table = {
            label: {kw.lower() for kw in kws} for label, kws in keyword_table.items()
        }

    def complete(self, prompt: str, max_tokens: int = 512) -> str:
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]
        return f"[stub completion {digest}]"

    def classify(self, text: str, labels: list[str]) -> tuple[str, float]:
        if not labels:
            raise ValueError("labels must be non-empty")
        tokens = tokenize(text)
        best_label, best_score = None, -1
        for label in labels:
            vocab = set(self.keyword_table.get(label, set())) | set(tokenize(label))
            score = sum(1 for t in tokens if t in vocab)
            if score > best_score:
                best_label, best_score = label, score
        if best_score <= 0:
            fallback = "other" if "other" in labels else labels[0]
            return fallback, 0.0
        return best_label, best_score / (1.0 + best_score)

    def embed(self, text: str) -> list[float]:
        return hash_embed(text, dim=64)


class ScriptedBackend(StubBackend):
    """Stub whose ``complete`` replays scripted answers (for tests and
    offline demos of the remote code paths)."""

    kind = "scripted"

    def __init__(self, completions: list[str], keyword_table: dict[str, list[str]] | None = None):
        super().__init__(keyword_table)
        self._completions = list(completions)
        self.calls = 0

    def complete(self, prompt: str, max_tokens: int = 512) -> str:
        if not self._completions:
            raise BackendUnavailable("script exhausted")
        self.calls += 1
        return self._completions.pop(0)


class RemoteBackend:
    """OpenAI-compatible HTTP backend.

    Endpoint, model and credentials come from configuration (usually the
    DELIB_AI_* environment variables).  Every request carries a timeout
    and is retried once; anything still failing raises
    ``BackendUnavailable``.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str = "",
        timeout: float = 15.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.model = model
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(
            base_url=endpoint.rstrip("/"), timeout=timeout, headers=headers, transport=transport
        )

    def _post(self, path: str, body: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(2):
            try:
                response = self._client.post(path, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = BackendUnavailable(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise BackendUnavailable(f"backend rejected request: {response.status_code}")
            try:
                return response.json()
            except ValueError as exc:
                raise BackendUnavailable(f"non-JSON backend response: {exc}") from exc
        raise BackendUnavailable(f"backend unreachable: {last_error}")

    def complete(self, prompt: str, max_tokens: int = 512) -> str:
        data = self._post(
            "/chat/completions",
            {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "max_tokens": max_tokens,
            },
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc

    def classify(self, text: str, labels: list[str]) -> tuple[str, float]:
        if not labels:
            raise ValueError("labels must be non-empty")
        prompt = (
            "Classify the text into exactly one of these labels: "
            + ", ".join(labels)
            + "\n\nText:\n"
            + text
            + '\n\nAnswer with a single JSON object, no prose: {"label": "...", "confidence": 0.0}'
        )
        answer = self.complete(prompt, max_tokens=64)
        m = re.search(r"\{.*\}", answer, re.DOTALL)
        if not m:
            raise BackendUnavailable("classifier answer carried no JSON")
        try:
            parsed = json.loads(m.group(0))
            raw_label = str(parsed["label"])
            confidence = float(parsed.get("confidence", 0.5))
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendUnavailable(f"malformed classifier answer: {exc}") from exc
        for label in labels:
            if label.lower() == raw_label.strip().lower():
                return label, min(1.0, max(0.0, confidence))
        raise BackendUnavailable(f"classifier answered with unknown label {raw_label!r}")

    def embed(self, text: str) -> list[float]:
        data = self._post("/embeddings", {"model": self.model, "input": text})
        try:
            return [float(x) for x in data["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnavailable(f"malformed embedding response: {exc}") from exc


@dataclass(frozen=True)
class AuditRecord:
    at: datetime
    operation: str
    input_digest: str
    output_digest: str


def _digest(obj) -> str:
    try:
        blob = canonical_json(obj)
    except TypeError:
        blob = repr(obj)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


class AuditLog:
    """Append-only log of every gateway call; optionally mirrored to a
    JSON-lines file."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[AuditRecord] = []
        self._file = open(path, "a", encoding="utf-8") if path else None

    def record(self, operation: str, input_obj, output_obj, at: datetime | None = None) -> AuditRecord:
        rec = AuditRecord(
            at=at or utc_now(),
            operation=operation,
            input_digest=_digest(input_obj),
            output_digest=_digest(output_obj),
        )
        self.records.append(rec)
        if self._file is not None:
            self._file.write(
                canonical_json(
                    {
                        "at": rec.at.isoformat(),
                        "operation": rec.operation,
                        "input_digest": rec.input_digest,
                        "output_digest": rec.output_digest,
                    }
                )
                + "\n"
            )
            self._file.flush()
        return rec

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
