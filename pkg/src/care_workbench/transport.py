"""Pluggable model transports with record/replay cassettes.

Everything that talks to a language model goes through ``ModelTransport``,
so the whole workbench can run against a live model, a recorded cassette, or
a deterministic stub interchangeably. Mock transports must behave as pure
functions of the request bytes; live implementations are expected to be
wrapped in ``RecordingTransport`` so every exchange can be replayed later.

Cassettes are JSON-lines files of ``{"request_hash", "request", "response"}``;
replay keys on the request hash, which covers the full canonical request
(system text, messages, temperature, seed).
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

from .canonical import canonical_bytes, sha256_hex
from .errors import TransportFailure

#: Default sampling settings for all facilitation calls: reproducibility
#: under a pinned model beats diversity here.
DEFAULT_TEMPERATURE = 0.0
DEFAULT_SEED = 0


@dataclass(frozen=True)
class ModelRequest:
    system_text: str
    messages: tuple[tuple[str, str], ...]  # (role, text), roles: user|assistant|tool
    temperature: float = DEFAULT_TEMPERATURE
    seed: int | None = DEFAULT_SEED

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be within [0, 1]")

    def to_json(self) -> dict[str, Any]:
        return {
            "system": self.system_text,
            "messages": [{"role": role, "text": text} for role, text in self.messages],
            "temperature": self.temperature,
            "seed": self.seed,
        }

    @property
    def request_hash(self) -> str:
        return sha256_hex(canonical_bytes(self.to_json()))

    def last_message(self, role: str | None = None) -> tuple[str, str] | None:
        for msg_role, text in reversed(self.messages):
            if role is None or msg_role == role:
                return msg_role, text
        return None

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "ModelRequest":
        return cls(
            system_text=payload["system"],
            messages=tuple((m["role"], m["text"]) for m in payload["messages"]),
            temperature=payload.get("temperature", DEFAULT_TEMPERATURE),
            seed=payload.get("seed", DEFAULT_SEED),
        )


class ModelTransport(Protocol):
    def complete(self, request: ModelRequest) -> str: ...

    def identity(self) -> str:
        """Stable identifier used by the fairness check."""
        ...


class FunctionTransport:
    """Mock transport backed by a function; keep the function pure."""

    def __init__(self, fn: Callable[[ModelRequest], str], name: str = "function"):
        self._fn = fn
        self._name = name

    def complete(self, request: ModelRequest) -> str:
        return self._fn(request)

    def identity(self) -> str:
        return f"mock:{self._name}"


class RecordingTransport:
    """Wraps another transport and appends every exchange to a cassette."""

    def __init__(self, inner: ModelTransport, cassette_path: Path | str):
        self.inner = inner
        self.path = Path(cassette_path)
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> str:
        response = self.inner.complete(request)
        entry = {
            "request_hash": request.request_hash,
            "request": request.to_json(),
            "response": response,
        }
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
        return response

    def identity(self) -> str:
        return self.inner.identity()


class ReplayTransport:
    """Serves recorded responses keyed on the request hash; misses fail."""

    def __init__(self, cassette_paths: Path | str | list[Path | str]):
        paths = cassette_paths if isinstance(cassette_paths, list) else [cassette_paths]
        self.paths = [Path(p) for p in paths]
        self._responses: dict[str, str] = {}
        hasher_input = []
        for path in self.paths:
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                known = self._responses.get(entry["request_hash"])
                if known is not None and known != entry["response"]:
                    raise ValueError(
                        f"cassette {path} has conflicting responses for {entry['request_hash']}"
                    )
                self._responses[entry["request_hash"]] = entry["response"]
            hasher_input.append(path.read_bytes())
        self._identity = "replay:" + sha256_hex(b"".join(hasher_input))[:12]

    def complete(self, request: ModelRequest) -> str:
        response = self._responses.get(request.request_hash)
        if response is None:
            raise TransportFailure(
                "no recorded response for request",
                details={"request_hash": request.request_hash},
            )
        return response

    def identity(self) -> str:
        return self._identity


@dataclass
class RetryPolicy:
    retries: int = 2
    backoff_base: float = 0.05
    backoff_cap: float = 0.5
    sleeper: Callable[[float], None] = field(default=time.sleep)


class RetryingTransport:
    """Retries transient failures with capped backoff, then gives up."""

    def __init__(self, inner: ModelTransport, policy: RetryPolicy | None = None):
        self.inner = inner
        self.policy = policy or RetryPolicy()

    def complete(self, request: ModelRequest) -> str:
        attempts = self.policy.retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            try:
                return self.inner.complete(request)
            except Exception as exc:  # noqa: BLE001 - live transports raise anything
                last = exc
                if attempt + 1 < attempts:
                    delay = min(self.policy.backoff_base * (2**attempt), self.policy.backoff_cap)
                    self.policy.sleeper(delay)
        raise TransportFailure(
            f"transport failed after {attempts} attempts: {last}",
            details={"attempts": attempts},
        ) from last

    def identity(self) -> str:
        return self.inner.identity()
