"""Canonical JSON serialization, content hashing, and atomic file writes.

Every persisted document in this package goes through ``canonical_dumps`` so
that re-serializing a parsed document reproduces the same bytes: keys are
sorted, separators are fixed, floats print as their shortest round-trip
repr, and NaN/Infinity are rejected outright.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any


def _sanitize(obj: Any) -> Any:
    """Coerce numpy scalars/containers to plain Python and reject non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if hasattr(obj, "item"):  # numpy scalar
        obj = obj.item()
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite float cannot be serialized")
        return obj
    if isinstance(obj, int):
        return obj
    raise TypeError(f"cannot canonically serialize {type(obj).__name__}")


def canonical_dumps(obj: Any) -> str:
    """Serialize to a deterministic, diffable JSON string (no trailing newline)."""
    return json.dumps(_sanitize(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def content_id(obj: Any) -> str:
    """Lowercase-hex content address of a document's canonical bytes."""
    return sha256_hex(canonical_bytes(obj))


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write via temp file + rename so a crash never leaves a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str | Path, obj: Any) -> bytes:
    """Canonically serialize ``obj`` and write it atomically; returns the bytes."""
    data = canonical_bytes(obj)
    atomic_write_bytes(path, data)
    return data


def read_json(path: str | Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
