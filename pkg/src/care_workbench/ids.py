"""Sortable opaque identifiers.

IDs are ULID-shaped: a 48-bit millisecond timestamp followed by 80 bits of
randomness, rendered as 26 Crockford base32 characters. Lexicographic order
therefore follows creation order, which keeps listings and reports stable.

Within one process the factory is monotonic even when two IDs share a
millisecond: the random tail of the previous ID is incremented instead of
re-rolled. Tests that need fully reproducible IDs can pass a seeded factory.
"""

from __future__ import annotations

import random
import threading
import time

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def _encode_base32(value: int, length: int) -> str:
    chars = []
    for _ in range(length):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


class IdFactory:
    """Monotonic ULID-style ID generator.

    Args:
        seed: optional RNG seed; a seeded factory still embeds wall-clock time
            unless ``clock_ms`` is also pinned.
        clock_ms: optional callable returning milliseconds since the epoch;
            pinning it makes generated IDs fully deterministic.
    """

    def __init__(self, seed: int | None = None, clock_ms=None):
        self._rng = random.Random(seed)
        self._clock_ms = clock_ms or (lambda: time.time_ns() // 1_000_000)
        self._lock = threading.Lock()
        self._last_ms = -1
        self._last_rand = 0

    def new_id(self, prefix: str = "") -> str:
        with self._lock:
            now = self._clock_ms()
            if now <= self._last_ms:
                # Same (or rewound) millisecond: bump the random tail.
                self._last_rand += 1
                if self._last_rand >= 1 << 80:
                    self._last_ms += 1
                    self._last_rand = self._rng.getrandbits(80)
            else:
                self._last_ms = now
                self._last_rand = self._rng.getrandbits(80)
            encoded = _encode_base32(self._last_ms, 10) + _encode_base32(self._last_rand, 16)
        return f"{prefix}{encoded}"


_default_factory = IdFactory()


def new_id(prefix: str = "") -> str:
    """Generate an ID from the process-wide factory."""
    return _default_factory.new_id(prefix)
