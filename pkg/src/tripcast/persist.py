"""Model persistence: a self-checking JSON document per fitted model.

Floats survive the round trip exactly (shortest-repr JSON encoding), so a
loaded model reproduces the original's predictions bit for bit. The
payload is guarded by a SHA-256 checksum and a format version; truncation,
corruption, or an unknown version all fail loudly instead of returning a
half-usable model.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import PersistError
from .registry import model_from_payload

FORMAT_NAME = "tripcast-model"
FORMAT_VERSION = 1


def _canonical_bytes(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def model_document(model) -> dict:
    """The persistable document for a fitted registry model."""
    kind = getattr(model, "kind", None)
    to_payload = getattr(model, "to_payload", None)
    if kind is None or to_payload is None:
        raise PersistError(f"object of type {type(model).__name__} is not persistable")
    body = {"format": FORMAT_NAME, "format_version": FORMAT_VERSION, "kind": kind, "payload": to_payload()}
    return {**body, "checksum": hashlib.sha256(_canonical_bytes(body)).hexdigest()}


def dumps_model(model) -> str:
    return json.dumps(model_document(model), sort_keys=True, indent=1)


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def loads_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PersistError(f"model document is not valid JSON (truncated?): {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise PersistError("not a tripcast model document")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise PersistError(
            f"unsupported model format version {version!r} (this build reads {FORMAT_VERSION})"
        )
    stored = doc.get("checksum")
    body = {k: v for k, v in doc.items() if k != "checksum"}
    actual = hashlib.sha256(_canonical_bytes(body)).hexdigest()
    if stored != actual:
        raise PersistError("model document checksum mismatch (corrupted file)")
    return model_from_payload(doc["kind"], doc["payload"])


def load_model(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise PersistError(f"model file not found: {path}")
    return loads_model(path.read_text(encoding="utf-8"))
