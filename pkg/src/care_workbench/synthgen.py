"""Synthetic benchmark generation with a solvability-validation loop.

Queries are drafted from a corpus of documents with known dataset citations:
for every (document, cited id) pair the model writes a natural-language query
grounded in the document text, and a validation loop searches the catalog,
reformulating the query on a miss, until the cited dataset actually appears
in the results or the attempt budget runs out. A query is emitted only when
some attempt retrieved its target, so every emitted query is solvable against
the generation catalog by construction; pairs that never validate are
discarded with a logged reason, never silently dropped. Emitted queries carry
exactly one expected id each, which is what makes Recall@1 the natural
primary metric for this gate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .benchmark import Benchmark, BenchmarkQuery, SYNTHETIC_GATE
from .cmr import CatalogSource, CollectionQuery, search_collections, validate_concept_id
from .errors import EmptyCorpus
from .helper_agent import packaged_prompt
from .transport import ModelRequest, ModelTransport, RetryingTransport, RetryPolicy

DEFAULT_MAX_ATTEMPTS = 5
VALIDATION_PAGE_SIZE = 10


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    text: str
    cited_ids: frozenset[str]

    def __post_init__(self) -> None:
        if not self.cited_ids:
            raise ValueError(f"corpus doc {self.doc_id!r} cites no concept ids")
        bad = sorted(i for i in self.cited_ids if not validate_concept_id(i))
        if bad:
            raise ValueError(f"corpus doc {self.doc_id!r} has invalid cited ids: {bad}")

    def to_json(self) -> dict[str, Any]:
        return {"doc_id": self.doc_id, "text": self.text, "cited_ids": sorted(self.cited_ids)}

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "CorpusDoc":
        return cls(
            doc_id=payload["doc_id"],
            text=payload["text"],
            cited_ids=frozenset(payload["cited_ids"]),
        )


def load_corpus(path: Path | str) -> list[CorpusDoc]:
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            docs.append(CorpusDoc.from_json(json.loads(line)))
    return docs


def save_corpus(docs: list[CorpusDoc], path: Path | str) -> None:
    Path(path).write_text(
        "".join(json.dumps(d.to_json(), sort_keys=True, ensure_ascii=False) + "\n" for d in docs),
        encoding="utf-8",
    )


@dataclass
class DiscardEntry:
    doc_id: str
    cited_id: str
    reason: str
    attempts: int

    def to_json(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "cited_id": self.cited_id,
            "reason": self.reason,
            "attempts": self.attempts,
        }


@dataclass
class GenerationResult:
    benchmark: Benchmark
    discards: list[DiscardEntry] = field(default_factory=list)

    def write_discard_log(self, path: Path | str) -> None:
        Path(path).write_text(
            "".join(
                json.dumps(d.to_json(), sort_keys=True, ensure_ascii=False) + "\n"
                for d in self.discards
            ),
            encoding="utf-8",
        )


def generate_synthetic(
    corpus: list[CorpusDoc],
    transport: ModelTransport,
    cmr: CatalogSource,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    name: str = "synthetic",
    page_size: int = VALIDATION_PAGE_SIZE,
    retry_policy: RetryPolicy | None = None,
) -> GenerationResult:
    """Draft, validate, and emit one-target queries for every citation.

    Deterministic: (doc, cited id) pairs are processed in sorted order and
    emitted query ids are sequential. The same corpus, transport, and catalog
    give the same benchmark.
    """
    if not corpus:
        raise EmptyCorpus("corpus must contain at least one document")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    model = RetryingTransport(transport, retry_policy)
    pairs = sorted(
        ((doc, cited_id) for doc in corpus for cited_id in sorted(doc.cited_ids)),
        key=lambda pair: (pair[0].doc_id, pair[1]),
    )
    queries: list[BenchmarkQuery] = []
    discards: list[DiscardEntry] = []
    for doc, cited_id in pairs:
        emitted = _validate_pair(doc, cited_id, model, cmr, max_attempts, page_size)
        if isinstance(emitted, DiscardEntry):
            discards.append(emitted)
            continue
        queries.append(
            BenchmarkQuery(
                query_id=f"sq{len(queries) + 1:04d}",
                text=emitted,
                expected_ids=frozenset({cited_id}),
                source_doc=doc.doc_id,
                annotations={"query_type": "direct"},
            )
        )
    benchmark = Benchmark(name=name, gate=SYNTHETIC_GATE, queries=queries)
    return GenerationResult(benchmark=benchmark, discards=discards)


def _validate_pair(
    doc: CorpusDoc,
    cited_id: str,
    model: ModelTransport,
    cmr: CatalogSource,
    max_attempts: int,
    page_size: int,
) -> str | DiscardEntry:
    """Run the draft-search-reformulate loop; returns the solvable query text."""
    query_text = _draft_query(model, doc)
    for attempt in range(1, max_attempts + 1):
        if not query_text.strip():
            break
        records = search_collections(
            cmr, CollectionQuery(keyword=query_text, page_size=page_size)
        )
        if any(r.concept_id == cited_id for r in records):
            return query_text
        if attempt < max_attempts:
            query_text = _reformulate_query(model, doc, query_text, records, attempt + 1)
    return DiscardEntry(
        doc_id=doc.doc_id,
        cited_id=cited_id,
        reason="not_retrievable_within_attempts",
        attempts=max_attempts,
    )


def _draft_query(model: ModelTransport, doc: CorpusDoc) -> str:
    prompt = packaged_prompt("draft_query").format(doc_id=doc.doc_id, text=doc.text)
    response = model.complete(
        ModelRequest(system_text=prompt, messages=(("user", "Write the query now."),))
    )
    return " ".join(response.split())


def _reformulate_query(
    model: ModelTransport,
    doc: CorpusDoc,
    previous_query: str,
    records,
    attempt: int,
) -> str:
    miss_context = "\n".join(f"- {r.title}" for r in records[:5]) or "(no results)"
    prompt = packaged_prompt("reformulate_query").format(
        doc_id=doc.doc_id,
        attempt=attempt,
        text=doc.text,
        previous_query=previous_query,
        miss_context=miss_context,
    )
    response = model.complete(
        ModelRequest(system_text=prompt, messages=(("user", "Rewrite the query now."),))
    )
    return " ".join(response.split())
