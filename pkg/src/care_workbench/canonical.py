"""Canonical serialization and hashing helpers.

Anything that is hashed, replayed, or compared byte-for-byte (transport
requests, tool results, fairness configs, reports) goes through
``canonical_json`` so that key order and whitespace can never introduce
spurious differences.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any


def canonical_json(payload: Any) -> str:
    """Serialize to JSON with sorted keys and no insignificant whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(payload: Any) -> bytes:
    return canonical_json(payload).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest(payload: Any, length: int = 16) -> str:
    """Short hex digest of a JSON-serializable payload."""
    return sha256_hex(canonical_bytes(payload))[:length]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def rfc3339(moment: datetime) -> str:
    """RFC 3339 timestamp with second precision, always UTC with Z suffix."""
    return moment.astimezone(timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


def fraction_to_json(value: Fraction) -> dict[str, Any]:
    """Exact-plus-float encoding for rational metric values."""
    return {"exact": f"{value.numerator}/{value.denominator}", "value": float(value)}


def fraction_from_json(payload: dict[str, Any]) -> Fraction:
    num, den = payload["exact"].split("/")
    return Fraction(int(num), int(den))
