"""Benchmark data model, Recall@K, evaluation runs, and the two-gate protocol.

Retrieval quality is scored as Recall@K: the fraction of a query's expected
concept ids that appear within the agent's top-K ranked ids. Scores are exact
rationals (hit count over expected count), and per-benchmark means stay exact
all the way into the two-gate comparison, so an inclusive "matches or
exceeds" test can never be decided by a float tie.

The two-gate protocol runs cheap-and-large before small-and-trusted: both
agents are evaluated on the synthetic benchmark first, where Recall@1 is the
primary metric because every synthetic query targets exactly one dataset. If
the engineered agent holds at least the baseline's score there, the evaluation
proceeds to the expert-built gold benchmark (weighted at Recall@5 by
default); otherwise the verdict is to revisit the design. The gold result is
reported as a comparison, not a pass/fail verdict.

Reports are deterministic: queries are evaluated and aggregated in ascending
query-id order, serialization is canonical, and no timestamps or run ids
appear in the payload, so identical inputs produce byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from .agent_runtime import AgentSpec, config_hash, run_config, run_query
from .canonical import fraction_from_json, fraction_to_json
from .cmr import CatalogSource, validate_concept_id
from .errors import (
    BenchmarkMismatch,
    EmptyExpectedSet,
    FairnessViolation,
)
from .transport import ModelTransport

DEFAULT_KS = (1, 3, 5)

SYNTHETIC_GATE = "synthetic"
GOLD_GATE = "gold"


@dataclass(frozen=True)
class BenchmarkQuery:
    query_id: str
    text: str
    expected_ids: frozenset[str]
    source_doc: str | None = None
    annotations: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.expected_ids:
            raise EmptyExpectedSet(f"query {self.query_id!r} has an empty expected set")
        bad = sorted(i for i in self.expected_ids if not validate_concept_id(i))
        if bad:
            raise ValueError(f"query {self.query_id!r} has invalid expected ids: {bad}")
        query_type = self.annotations.get("query_type")
        if query_type not in (None, "direct", "indirect"):
            raise ValueError(f"query_type must be direct or indirect, got {query_type!r}")

    def to_json(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "query_id": self.query_id,
            "text": self.text,
            "expected_ids": sorted(self.expected_ids),
            "source_doc": self.source_doc,
        }
        if self.annotations:
            payload["annotations"] = self.annotations
        return payload

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "BenchmarkQuery":
        return cls(
            query_id=payload["query_id"],
            text=payload["text"],
            expected_ids=frozenset(payload["expected_ids"]),
            source_doc=payload.get("source_doc"),
            annotations=payload.get("annotations", {}),
        )


@dataclass
class Benchmark:
    name: str
    gate: str  # synthetic | gold
    queries: list[BenchmarkQuery]

    def __post_init__(self) -> None:
        if self.gate not in (SYNTHETIC_GATE, GOLD_GATE):
            raise ValueError(f"gate must be synthetic or gold, got {self.gate!r}")
        ids = [q.query_id for q in self.queries]
        if len(set(ids)) != len(ids):
            raise ValueError("query ids must be unique")
        if self.gate == SYNTHETIC_GATE:
            offenders = [q.query_id for q in self.queries if len(q.expected_ids) != 1]
            if offenders:
                raise ValueError(
                    f"synthetic queries must target exactly one dataset; offenders: {offenders}"
                )

    def sorted_queries(self) -> list[BenchmarkQuery]:
        return sorted(self.queries, key=lambda q: q.query_id)


def save_benchmark(benchmark: Benchmark, path: Path | str) -> None:
    lines = [json.dumps({"schema": "benchmark@1", "name": benchmark.name, "gate": benchmark.gate},
                        sort_keys=True, ensure_ascii=False)]
    for query in benchmark.queries:
        lines.append(json.dumps(query.to_json(), sort_keys=True, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_benchmark(path: Path | str) -> Benchmark:
    lines = [
        json.loads(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if not lines or lines[0].get("schema") != "benchmark@1":
        raise ValueError(f"{path} is not a benchmark file (missing benchmark@1 header)")
    header = lines[0]
    queries = [BenchmarkQuery.from_json(p) for p in lines[1:]]
    return Benchmark(name=header["name"], gate=header["gate"], queries=queries)


# -- metric ------------------------------------------------------------------------


def recall_at_k(expected: Iterable[str], ranked: Sequence[str], k: int) -> Fraction:
    """|expected ∩ first_k(ranked)| / |expected| as an exact rational.

    ``ranked`` must already be deduplicated (the runtime guarantees this for
    agent output); when it is shorter than ``k`` the whole list is used.
    """
    expected_set = frozenset(expected)
    if not expected_set:
        raise EmptyExpectedSet("expected id set must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(set(ranked)) != len(ranked):
        raise ValueError("ranked ids must be deduplicated")
    top_k = set(ranked[:k])
    return Fraction(len(expected_set & top_k), len(expected_set))


# -- evaluation ---------------------------------------------------------------------


@dataclass
class PerQueryResult:
    query_id: str
    recall: dict[int, Fraction]
    ranked_ids: list[str]
    partial: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "query_id": self.query_id,
            "recall": {str(k): fraction_to_json(v) for k, v in sorted(self.recall.items())},
            "ranked_ids": list(self.ranked_ids),
            "partial": self.partial,
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "PerQueryResult":
        return cls(
            query_id=payload["query_id"],
            recall={int(k): fraction_from_json(v) for k, v in payload["recall"].items()},
            ranked_ids=list(payload["ranked_ids"]),
            partial=payload.get("partial", False),
        )


@dataclass
class EvaluationReport:
    agent_name: str
    benchmark_name: str
    gate: str
    n: int
    mean_recall: dict[int, Fraction]
    per_query: list[PerQueryResult]
    config: dict[str, Any] | None = None
    config_hash: str | None = None
    pre_gate: bool | None = None  # set when run before the benchmark-gate passed

    def to_json(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "agent_name": self.agent_name,
            "benchmark_name": self.benchmark_name,
            "gate": self.gate,
            "n": self.n,
            "mean_recall": {str(k): fraction_to_json(v) for k, v in sorted(self.mean_recall.items())},
            "per_query": [p.to_json() for p in self.per_query],
            "config": self.config,
            "config_hash": self.config_hash,
        }
        if self.pre_gate is not None:
            payload["pre_gate"] = self.pre_gate
        return payload

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "EvaluationReport":
        return cls(
            agent_name=payload["agent_name"],
            benchmark_name=payload["benchmark_name"],
            gate=payload.get("gate", SYNTHETIC_GATE),
            n=payload["n"],
            mean_recall={int(k): fraction_from_json(v) for k, v in payload["mean_recall"].items()},
            per_query=[PerQueryResult.from_json(p) for p in payload.get("per_query", [])],
            config=payload.get("config"),
            config_hash=payload.get("config_hash"),
            pre_gate=payload.get("pre_gate"),
        )


def save_report(report: EvaluationReport, path: Path | str) -> None:
    Path(path).write_text(report.dumps(), encoding="utf-8")


def load_report(path: Path | str) -> EvaluationReport:
    return EvaluationReport.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def report_from_means(
    agent_name: str,
    benchmark_name: str,
    gate: str,
    n: int,
    means: dict[int, Fraction | float],
) -> EvaluationReport:
    """Build a summary-only report (no per-query rows) from known means."""
    exact = {
        k: v if isinstance(v, Fraction) else Fraction(v).limit_denominator(10**6)
        for k, v in means.items()
    }
    return EvaluationReport(
        agent_name=agent_name,
        benchmark_name=benchmark_name,
        gate=gate,
        n=n,
        mean_recall=exact,
        per_query=[],
    )


def evaluate(
    agent: AgentSpec,
    benchmark: Benchmark,
    transport: ModelTransport,
    cmr: CatalogSource,
    ks: Sequence[int] = DEFAULT_KS,
    k_retrieve: int | None = None,
    trace_dir: Path | str | None = None,
) -> EvaluationReport:
    """Run one agent over a benchmark and aggregate mean Recall@K.

    One retrieval per query at ``k_retrieve`` (default ``max(ks)``); each
    Recall@K is scored on a prefix of that single ranked list. Partial
    results are scored as-is over whatever came back -- excluding failures
    would silently inflate the means -- and flagged per query.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise ValueError("ks must contain integers >= 1")
    k_retrieve = k_retrieve if k_retrieve is not None else max(ks)
    if k_retrieve < max(ks):
        raise ValueError("k_retrieve must be >= max(ks)")
    config = run_config(agent, transport, cmr, k_retrieve)
    trace_path = Path(trace_dir) if trace_dir is not None else None
    per_query: list[PerQueryResult] = []
    totals: dict[int, Fraction] = {k: Fraction(0) for k in ks}
    for query in benchmark.sorted_queries():
        result = run_query(
            agent, query.text, k_retrieve, transport, cmr, query_id=query.query_id
        )
        recalls = {k: recall_at_k(query.expected_ids, result.ranked_ids, k) for k in ks}
        for k in ks:
            totals[k] += recalls[k]
        per_query.append(
            PerQueryResult(
                query_id=query.query_id,
                recall=recalls,
                ranked_ids=result.ranked_ids,
                partial=result.partial,
            )
        )
        if trace_path is not None:
            trace_path.mkdir(parents=True, exist_ok=True)
            lines = [json.dumps(step, sort_keys=True, ensure_ascii=False) for step in result.trace]
            lines.append(
                json.dumps(
                    {"final": {"ranked_ids": result.ranked_ids, "partial": result.partial}},
                    sort_keys=True,
                    ensure_ascii=False,
                )
            )
            (trace_path / f"{query.query_id}.jsonl").write_text(
                "\n".join(lines) + "\n", encoding="utf-8"
            )
    n = len(per_query)
    mean_recall = {k: (totals[k] / n if n else Fraction(0)) for k in ks}
    return EvaluationReport(
        agent_name=agent.name,
        benchmark_name=benchmark.name,
        gate=benchmark.gate,
        n=n,
        mean_recall=mean_recall,
        per_query=per_query,
        config=config,
        config_hash=config_hash(config),
    )


def compare_agents(
    care_agent: AgentSpec,
    baseline_agent: AgentSpec,
    benchmark: Benchmark,
    transport: ModelTransport,
    cmr: CatalogSource,
    ks: Sequence[int] = DEFAULT_KS,
    k_retrieve: int | None = None,
    trace_root: Path | str | None = None,
) -> tuple[EvaluationReport, EvaluationReport]:
    """Evaluate two agents under an enforced-equal model and tool setup.

    Any difference in transport identity, tool schemas, orchestration
    limits, catalog, or k is rejected before a single query executes.
    """
    k_eff = k_retrieve if k_retrieve is not None else max(ks)
    assert_fair_setup(
        run_config(care_agent, transport, cmr, k_eff),
        run_config(baseline_agent, transport, cmr, k_eff),
    )
    root = Path(trace_root) if trace_root is not None else None
    care_report = evaluate(
        care_agent, benchmark, transport, cmr, ks=ks, k_retrieve=k_retrieve,
        trace_dir=root / care_agent.name if root else None,
    )
    base_report = evaluate(
        baseline_agent, benchmark, transport, cmr, ks=ks, k_retrieve=k_retrieve,
        trace_dir=root / baseline_agent.name if root else None,
    )
    return care_report, base_report


def assert_fair_setup(care_config: dict[str, Any], base_config: dict[str, Any]) -> None:
    differing = sorted(
        key
        for key in set(care_config) | set(base_config)
        if care_config.get(key) != base_config.get(key)
    )
    if differing:
        raise FairnessViolation(
            "two-agent comparison requires an equal model and tool setup; "
            f"differing: {', '.join(differing)}",
            details={"differing": differing},
        )


# -- the two-gate decision protocol ----------------------------------------------------


@dataclass
class GoldOutcome:
    primary_metric: int
    care_value: Fraction
    baseline_value: Fraction
    care_better: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "primary_metric": self.primary_metric,
            "care_value": fraction_to_json(self.care_value),
            "baseline_value": fraction_to_json(self.baseline_value),
            "care_better": self.care_better,
        }


@dataclass
class TwoGateDecision:
    synthetic_outcome: str  # proceed_to_gold | revisit_design
    gold_outcome: GoldOutcome | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "synthetic_outcome": self.synthetic_outcome,
            "gold_outcome": self.gold_outcome.to_json() if self.gold_outcome else None,
        }


def _as_fraction(value: Fraction | float | int) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value).limit_denominator(10**9)


def _check_pair(care: EvaluationReport, base: EvaluationReport, label: str) -> None:
    if care.benchmark_name != base.benchmark_name:
        raise BenchmarkMismatch(
            f"{label} reports cover different benchmarks "
            f"({care.benchmark_name!r} vs {base.benchmark_name!r})"
        )
    if care.config_hash and base.config_hash and care.config_hash != base.config_hash:
        raise FairnessViolation(
            f"{label} reports were produced under different run configs",
            details={"care": care.config_hash, "baseline": base.config_hash},
        )


def two_gate(
    care_synth: EvaluationReport,
    base_synth: EvaluationReport,
    care_gold: EvaluationReport | None = None,
    base_gold: EvaluationReport | None = None,
    gold_primary_k: int = 5,
) -> TwoGateDecision:
    """Apply the two-gate decision rule to a pair (or two pairs) of reports.

    The synthetic gate compares mean Recall@1 inclusively: an exact tie still
    proceeds, which is why the means are exact rationals. The gold outcome is
    a comparison at ``gold_primary_k`` and is only produced when the
    synthetic gate passed and both gold reports are present.
    """
    _check_pair(care_synth, base_synth, "synthetic")
    care_value = _as_fraction(care_synth.mean_recall[1])
    base_value = _as_fraction(base_synth.mean_recall[1])
    if care_value >= base_value:
        outcome = "proceed_to_gold"
    else:
        outcome = "revisit_design"
    decision = TwoGateDecision(synthetic_outcome=outcome)
    if outcome == "proceed_to_gold" and care_gold is not None and base_gold is not None:
        _check_pair(care_gold, base_gold, "gold")
        if gold_primary_k not in care_gold.mean_recall or gold_primary_k not in base_gold.mean_recall:
            raise ValueError(f"gold reports do not carry Recall@{gold_primary_k}")
        gold_care = _as_fraction(care_gold.mean_recall[gold_primary_k])
        gold_base = _as_fraction(base_gold.mean_recall[gold_primary_k])
        decision.gold_outcome = GoldOutcome(
            primary_metric=gold_primary_k,
            care_value=gold_care,
            baseline_value=gold_base,
            care_better=gold_care > gold_base,
        )
    return decision


# -- rendering ---------------------------------------------------------------------


def _percent(value: Fraction | float) -> str:
    return f"{float(value) * 100:.1f}%"


def render_report(
    care: EvaluationReport,
    base: EvaluationReport,
    gate_label: str | None = None,
    ks: Sequence[int] = DEFAULT_KS,
) -> str:
    """One gate section of the results table: two agent rows, Recall@K columns."""
    label = gate_label if gate_label is not None else f"{care.gate.capitalize()} (n={care.n})"
    rows = [
        [label, care.agent_name] + [_percent(care.mean_recall[k]) for k in ks],
        ["", base.agent_name] + [_percent(base.mean_recall[k]) for k in ks],
    ]
    header = ["Gate", "Agent"] + [f"Recall@{k}" for k in ks]
    return _format_table(header, rows)


def render_agent_table(report: EvaluationReport, ks: Sequence[int] = DEFAULT_KS) -> str:
    """Single-run table: one agent row under the standard columns."""
    header = ["Gate", "Agent"] + [f"Recall@{k}" for k in ks]
    row = [f"{report.gate.capitalize()} (n={report.n})", report.agent_name] + [
        _percent(report.mean_recall[k]) for k in ks
    ]
    return _format_table(header, [row])


def render_two_gate_report(
    sections: Sequence[tuple[str, EvaluationReport, EvaluationReport]],
    ks: Sequence[int] = DEFAULT_KS,
) -> str:
    """Full results table: one header, one two-row block per gate."""
    header = ["Gate", "Agent"] + [f"Recall@{k}" for k in ks]
    rows = []
    for label, care, base in sections:
        rows.append([label, care.agent_name] + [_percent(care.mean_recall[k]) for k in ks])
        rows.append(["", base.agent_name] + [_percent(base.mean_recall[k]) for k in ks])
    return _format_table(header, rows)


def _format_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(header[col]), *(len(row[col]) for row in rows)) for col in range(len(header))
    ]
    lines = ["  ".join(header[col].ljust(widths[col]) for col in range(len(header))).rstrip()]
    for row in rows:
        lines.append("  ".join(row[col].ljust(widths[col]) for col in range(len(row))).rstrip())
    return "\n".join(lines) + "\n"
