"""Canonical JSON encoding shared by scene and prior files.

Floats are rounded to 9 significant digits before encoding so that the same
value always serializes to the same bytes and content hashes are stable
across platforms. Values that went through `round_float` once survive a
save/load cycle exactly.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def round_float(x: float) -> float:
    return float(f"{float(x):.9g}")


def _canonize(value: Any) -> Any:
    if isinstance(value, float):
        return round_float(value)
    if isinstance(value, dict):
        return {k: _canonize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonize(v) for v in value]
    return value


def canonical_dumps(doc: Any) -> str:
    return json.dumps(_canonize(doc), sort_keys=True, separators=(",", ":"))


def content_hash(doc: Any) -> str:
    return hashlib.sha256(canonical_dumps(doc).encode("utf-8")).hexdigest()


def key_hash(key: str) -> str:
    return hashlib.sha256(key.encode("utf-8")).hexdigest()
