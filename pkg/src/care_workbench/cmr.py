"""Collection-search client for the NASA Common Metadata Repository (CMR).

Three interchangeable catalog sources implement the same ``search`` contract:

* ``LiveCmrClient`` issues HTTPS GETs against the public CMR collection
  search endpoint (JSON flavor), throttled to a conservative fixed rate.
* ``FixtureCatalog`` serves an in-memory catalog loaded from a JSON-lines
  file and ranks records by deterministic keyword token overlap (ties broken
  by ascending concept id). The overlap score is a stand-in for CMR's
  relevance ranking -- deterministic and explainable, not a claim about the
  real ranking. Fixture mode performs no network activity.
* ``CmrReplay`` replays recorded live responses from a cassette file, keyed
  on the canonical query; ``CmrRecorder`` writes such cassettes.

Every record returned by any mode carries a concept id matching the public
identifier shape ``C<digits>-<PROVIDER>``.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Protocol

from .canonical import canonical_bytes, sha256_hex
from .errors import MalformedResponse, NetworkError

CONCEPT_ID_PATTERN = re.compile(r"C\d+-[A-Z0-9_]+")
#: Matches concept ids embedded in prose without grabbing token fragments.
CONCEPT_ID_IN_TEXT = re.compile(r"(?<![A-Za-z0-9_])C\d+-[A-Z0-9_]+")

DEFAULT_ENDPOINT = "https://cmr.earthdata.nasa.gov/search/collections.json"


def validate_concept_id(text: str) -> bool:
    """True when ``text`` is exactly a collection concept id."""
    return bool(CONCEPT_ID_PATTERN.fullmatch(text))


@dataclass(frozen=True)
class CollectionQuery:
    keyword: str = ""
    provider: str | None = None
    temporal: tuple[str, str] | None = None  # (start, end) ISO dates
    page_size: int = 10
    page_num: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.page_size <= 2000:
            raise ValueError("page_size must be within [1, 2000]")
        if self.page_num < 1:
            raise ValueError("page_num must be >= 1")
        if not self.keyword.strip() and self.provider is None and self.temporal is None:
            raise ValueError("keyword must be non-empty when no other filter is present")

    def to_json(self) -> dict[str, Any]:
        return {
            "keyword": self.keyword,
            "provider": self.provider,
            "temporal": list(self.temporal) if self.temporal else None,
            "page_size": self.page_size,
            "page_num": self.page_num,
        }

    @property
    def cache_key(self) -> str:
        return sha256_hex(canonical_bytes(self.to_json()))


@dataclass(frozen=True)
class CollectionRecord:
    concept_id: str
    short_name: str
    title: str
    summary: str
    provider: str

    def __post_init__(self) -> None:
        if not validate_concept_id(self.concept_id):
            raise ValueError(f"invalid concept id {self.concept_id!r}")

    def to_json(self) -> dict[str, Any]:
        return {
            "concept_id": self.concept_id,
            "short_name": self.short_name,
            "title": self.title,
            "summary": self.summary,
            "provider": self.provider,
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "CollectionRecord":
        return cls(
            concept_id=payload["concept_id"],
            short_name=payload.get("short_name", ""),
            title=payload.get("title", ""),
            summary=payload.get("summary", ""),
            provider=payload.get("provider", ""),
        )


class CatalogSource(Protocol):
    """Anything that can answer a collection search."""

    mode: str  # live | fixture

    def search(self, query: CollectionQuery) -> list[CollectionRecord]: ...

    def descriptor(self) -> str:
        """Stable identity string, part of the fairness config."""
        ...


_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> set[str]:
    return set(_TOKEN.findall(text.lower()))


class FixtureCatalog:
    """In-memory catalog with deterministic keyword-overlap ranking."""

    mode = "fixture"

    def __init__(self, records: Iterable[CollectionRecord]):
        self.records = list(records)
        self._tokens = [
            tokenize(" ".join((r.short_name, r.title, r.summary, r.provider)))
            for r in self.records
        ]
        self._digest = sha256_hex(
            canonical_bytes([r.to_json() for r in self.records])
        )[:12]

    @classmethod
    def load(cls, path: Path | str) -> "FixtureCatalog":
        records = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                records.append(CollectionRecord.from_json(json.loads(line)))
        return cls(records)

    def save(self, path: Path | str) -> None:
        text = "".join(
            json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False) + "\n"
            for r in self.records
        )
        Path(path).write_text(text, encoding="utf-8")

    def search(self, query: CollectionQuery) -> list[CollectionRecord]:
        query_tokens = tokenize(query.keyword)
        scored: list[tuple[int, str, CollectionRecord]] = []
        for record, record_tokens in zip(self.records, self._tokens):
            if query.provider is not None and record.provider != query.provider:
                continue
            score = len(query_tokens & record_tokens)
            if query_tokens and score == 0:
                continue
            scored.append((score, record.concept_id, record))
        scored.sort(key=lambda item: (-item[0], item[1]))
        start = (query.page_num - 1) * query.page_size
        return [record for _, _, record in scored[start : start + query.page_size]]

    def descriptor(self) -> str:
        return f"fixture:{self._digest}"


class LiveCmrClient:
    """Live client for the public CMR collection search.

    Throttled to one request per ``min_interval`` seconds; the public service
    is shared infrastructure and the harness never needs bursts.
    """

    mode = "live"

    def __init__(
        self,
        endpoint: str = DEFAULT_ENDPOINT,
        session=None,
        min_interval: float = 0.5,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self._min_interval = min_interval
        self._last_call = 0.0
        self._lock = threading.Lock()
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def search(self, query: CollectionQuery) -> list[CollectionRecord]:
        params: dict[str, Any] = {
            "page_size": query.page_size,
            "page_num": query.page_num,
        }
        if query.keyword.strip():
            params["keyword"] = query.keyword
        if query.provider is not None:
            params["provider"] = query.provider
        if query.temporal is not None:
            params["temporal"] = f"{query.temporal[0]},{query.temporal[1]}"
        self._throttle()
        try:
            response = self._session.get(self.endpoint, params=params, timeout=self.timeout)
        except Exception as exc:
            raise NetworkError(f"collection search failed: {exc}") from exc
        if response.status_code != 200:
            raise NetworkError(
                f"collection search returned HTTP {response.status_code}",
                details={"status": response.status_code},
            )
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedResponse("collection search returned non-JSON body") from exc
        return map_live_response(payload)

    def _throttle(self) -> None:
        with self._lock:
            wait = self._min_interval - (time.monotonic() - self._last_call)
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()

    def descriptor(self) -> str:
        return f"live:{self.endpoint}"


def map_live_response(payload: dict[str, Any]) -> list[CollectionRecord]:
    """Map the endpoint's ``feed.entry`` JSON shape onto catalog records."""
    try:
        entries = payload["feed"]["entry"]
    except (KeyError, TypeError) as exc:
        raise MalformedResponse("response is missing feed.entry") from exc
    records = []
    for entry in entries:
        concept_id = entry.get("id", "")
        if not validate_concept_id(concept_id):
            raise MalformedResponse(
                f"entry id {concept_id!r} is not a collection concept id",
                details={"id": concept_id},
            )
        provider = entry.get("data_center", "")
        if not provider and "-" in concept_id:
            provider = concept_id.rsplit("-", 1)[1]
        records.append(
            CollectionRecord(
                concept_id=concept_id,
                short_name=entry.get("short_name", ""),
                title=entry.get("title", ""),
                summary=entry.get("summary", ""),
                provider=provider,
            )
        )
    return records


class CmrRecorder:
    """Wraps a source and appends every (query, records) pair to a cassette."""

    def __init__(self, inner: CatalogSource, cassette_path: Path | str):
        self.inner = inner
        self.mode = inner.mode
        self.path = Path(cassette_path)
        self._lock = threading.Lock()

    def search(self, query: CollectionQuery) -> list[CollectionRecord]:
        records = self.inner.search(query)
        entry = {
            "key": query.cache_key,
            "query": query.to_json(),
            "records": [r.to_json() for r in records],
        }
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
        return records

    def descriptor(self) -> str:
        return self.inner.descriptor()


class CmrReplay:
    """Serves recorded searches; a cache miss is an error, never a network call."""

    mode = "fixture"

    def __init__(self, cassette_path: Path | str):
        self.path = Path(cassette_path)
        self._responses: dict[str, list[CollectionRecord]] = {}
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            records = [CollectionRecord.from_json(r) for r in entry["records"]]
            known = self._responses.get(entry["key"])
            if known is not None and known != records:
                raise ValueError(f"cassette {self.path} has conflicting records for a query")
            self._responses[entry["key"]] = records
        self._digest = sha256_hex(self.path.read_bytes())[:12]

    def search(self, query: CollectionQuery) -> list[CollectionRecord]:
        records = self._responses.get(query.cache_key)
        if records is None:
            raise NetworkError(
                "no recorded response for query (replay mode performs no network calls)",
                details={"query": query.to_json()},
            )
        return list(records)

    def descriptor(self) -> str:
        return f"replay:{self._digest}"


def search_collections(source: CatalogSource, query: CollectionQuery) -> list[CollectionRecord]:
    """Search a catalog source. An empty result is a valid empty list."""
    return source.search(query)
