"""Tool-using retrieval agents: prompt assembly, the tool loop, answer parsing.

Two built-in agents ship with the workbench: ``cmr_care_v1`` (its system
prompt engineered through the staged artifact process and packaged with the
repo) and ``cmr_simple`` (a deliberately minimal tool-use prompt). Both
reference the same tool schema and run through the same loop under the same
orchestration limits, so benchmark differences are attributable to the
prompts alone; the fairness check enforces that before any comparison runs.

The model-side wire protocol is plain text: a model turn either contains a
line starting with ``TOOL_CALL `` followed by a JSON object
(``{"tool": ..., "arguments": {...}}``) or it is the final answer, from which
concept ids are extracted in order of first appearance. All multi-step
behavior (clarify, reformulate, verify) lives in the prompts, never in this
loop -- the runtime is behaviorally neutral.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Any

from .artifact_store import ArtifactStore
from .canonical import digest
from .cmr import (
    CatalogSource,
    CollectionQuery,
    CONCEPT_ID_IN_TEXT,
    search_collections,
    validate_concept_id,
)
from .domain import ArtifactKind, ArtifactStatus, PhaseId
from .errors import CareError, GateNotSatisfied, TemplateViolation
from .templates import GROUNDING_SLOT, reorder_sections, validate_document
from .transport import ModelRequest, ModelTransport

TOOL_CALL_PREFIX = "TOOL_CALL "

BUILTIN_CARE_AGENT = "cmr_care_v1"
BUILTIN_BASELINE_AGENT = "cmr_simple"


@dataclass(frozen=True)
class ToolParameter:
    name: str
    type: str
    required: bool
    description: str

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "type": self.type,
            "required": self.required,
            "description": self.description,
        }


@dataclass(frozen=True)
class ToolSchema:
    tool_name: str
    description: str
    parameters: tuple[ToolParameter, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "tool_name": self.tool_name,
            "description": self.description,
            "parameters": [p.to_json() for p in self.parameters],
        }


#: The single tool the dataset-discovery agents may call.
SEARCH_TOOL = ToolSchema(
    tool_name="search_collections",
    description=(
        "Search the Earth science dataset catalog. Returns candidate "
        "collections with concept ids, names, and summaries."
    ),
    parameters=(
        ToolParameter("keyword", "string", False, "free-text search keywords"),
        ToolParameter("provider", "string", False, "archive provider filter"),
        ToolParameter("temporal_start", "string", False, "ISO date lower bound"),
        ToolParameter("temporal_end", "string", False, "ISO date upper bound"),
        ToolParameter("page_size", "integer", False, "maximum results, 1-2000"),
    ),
)


@dataclass(frozen=True)
class Orchestration:
    max_tool_calls: int = 8
    retries_per_call: int = 2
    on_exhaustion: str = "return_partial"  # return_partial | fail

    def to_json(self) -> dict[str, Any]:
        return {
            "max_tool_calls": self.max_tool_calls,
            "retries_per_call": self.retries_per_call,
            "on_exhaustion": self.on_exhaustion,
        }


@dataclass(frozen=True)
class AgentSpec:
    name: str
    system_prompt: str
    tool_schemas: tuple[ToolSchema, ...] = (SEARCH_TOOL,)
    orchestration: Orchestration = Orchestration()

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "system_prompt": self.system_prompt,
            "tool_schemas": [t.to_json() for t in self.tool_schemas],
            "orchestration": self.orchestration.to_json(),
        }


def baseline_prompt() -> str:
    """The fixed minimal 'model plus tool' prompt; no engineered artifacts."""
    return (
        "You help users find Earth science datasets. You may call the "
        "search_collections tool (emit a line `TOOL_CALL {\"tool\": "
        "\"search_collections\", \"arguments\": {...}}`) to search the "
        "catalog, then answer with a ranked list of candidate collection "
        "concept IDs, most relevant first. Reply with concept IDs only.\n"
    )


def care_prompt() -> str:
    """Packaged system prompt of the artifact-engineered agent."""
    return resources.files("care_workbench").joinpath("agents/cmr_care_v1.md").read_text("utf-8")


def built_in_agent(name: str, orchestration: Orchestration | None = None) -> AgentSpec:
    orchestration = orchestration or Orchestration()
    if name == BUILTIN_CARE_AGENT:
        return AgentSpec(name=name, system_prompt=care_prompt(), orchestration=orchestration)
    if name == BUILTIN_BASELINE_AGENT:
        return AgentSpec(name=name, system_prompt=baseline_prompt(), orchestration=orchestration)
    raise ValueError(f"unknown built-in agent {name!r}")


def assemble_care_prompt(store: ArtifactStore, project_id: str) -> str:
    """Build a system prompt from a project's approved prompt architecture.

    Requires the prompt-architecture gate to be satisfied. Sections are
    concatenated in template order and grounding slots are filled from the
    approved heads of the kinds they name.
    """
    from .phase_engine import PhaseEngine

    gate = PhaseEngine(store).gate_status(project_id, PhaseId.P4_prompt)
    if not gate.satisfied:
        raise GateNotSatisfied(
            "prompt architecture is not approved", details=gate.to_json()
        )
    head = store.heads_for(project_id, PhaseId.P4_prompt, ArtifactKind.prompt_architecture)[0]
    validate_document(ArtifactKind.prompt_architecture, head.content)
    approved = {
        a.kind: a for a in store.approved_context(project_id, PhaseId.P5_benchmark)
    }

    def fill(match) -> str:
        kind = ArtifactKind(match.group("kind"))
        artifact = approved.get(kind)
        if artifact is None or artifact.status is not ArtifactStatus.approved:
            raise TemplateViolation(
                f"grounding slot references {kind.value} but no approved head exists",
                details={"kind": kind.value},
            )
        return artifact.content.rstrip("\n")

    parts = []
    for section in reorder_sections(ArtifactKind.prompt_architecture, head.content):
        body = GROUNDING_SLOT.sub(fill, section.body).strip("\n")
        parts.append(f"## {section.title}\n\n{body}" if body else f"## {section.title}")
    return "\n\n".join(parts) + "\n"


@dataclass
class RetrievalResult:
    query_id: str
    agent_name: str
    ranked_ids: list[str]
    trace: list[dict[str, Any]]
    partial: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "query_id": self.query_id,
            "agent_name": self.agent_name,
            "ranked_ids": list(self.ranked_ids),
            "trace": self.trace,
            "partial": self.partial,
        }


def parse_final_answer(model_text: str) -> list[str]:
    """Concept ids in order of first appearance, deduplicated keep-first.

    Tolerant of surrounding prose, list markers, and fenced blocks; anything
    that does not match the concept-id shape is simply not extracted.
    """
    seen: set[str] = set()
    ordered: list[str] = []
    for match in CONCEPT_ID_IN_TEXT.finditer(model_text):
        token = match.group(0)
        if token not in seen:
            seen.add(token)
            ordered.append(token)
    return ordered


def _invalid_id_candidates(model_text: str, valid: list[str]) -> list[str]:
    """Hyphenated id-like tokens that failed validation, for trace notes."""
    notes = []
    for raw in model_text.replace(",", " ").split():
        token = raw.strip("`*()[].:;\"'")
        if "-" in token and token not in valid and not any(ch.isspace() for ch in token):
            if token and all(ch.isalnum() or ch in "-_" for ch in token):
                if not validate_concept_id(token):
                    notes.append(token)
    return notes


def _extract_tool_call(model_text: str) -> dict[str, Any] | None:
    for line in model_text.splitlines():
        line = line.strip()
        if line.startswith(TOOL_CALL_PREFIX):
            try:
                payload = json.loads(line[len(TOOL_CALL_PREFIX):])
            except json.JSONDecodeError:
                return {"tool": None, "arguments": {}, "malformed": line}
            if not isinstance(payload, dict):
                return {"tool": None, "arguments": {}, "malformed": line}
            return {
                "tool": payload.get("tool"),
                "arguments": payload.get("arguments") or {},
            }
    return None


def _query_from_arguments(arguments: dict[str, Any]) -> CollectionQuery:
    temporal = None
    if arguments.get("temporal_start") or arguments.get("temporal_end"):
        temporal = (
            str(arguments.get("temporal_start", "")),
            str(arguments.get("temporal_end", "")),
        )
    return CollectionQuery(
        keyword=str(arguments.get("keyword", "")),
        provider=arguments.get("provider"),
        temporal=temporal,
        page_size=int(arguments.get("page_size", 10)),
        page_num=int(arguments.get("page_num", 1)),
    )


def run_query(
    agent: AgentSpec,
    query: str,
    k: int,
    transport: ModelTransport,
    cmr: CatalogSource,
    query_id: str = "",
) -> RetrievalResult:
    """Run the agent loop for one query and return its ranked concept ids.

    Model turns alternate with tool executions until the model answers
    without a tool call or the tool budget runs out. Tool failures are
    retried ``retries_per_call`` times; after that the loop degrades
    according to ``on_exhaustion``: ``return_partial`` salvages ids from the
    model turns so far (flagged ``partial``), ``fail`` raises. Invalid id
    tokens in the final answer are dropped with a trace note, duplicates are
    deduplicated keep-first, and the ranking is truncated to ``k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query.strip():
        raise ValueError("query must be non-empty")
    orchestration = agent.orchestration
    known_tools = {t.tool_name for t in agent.tool_schemas}
    messages: list[tuple[str, str]] = [("user", query)]
    trace: list[dict[str, Any]] = []
    tool_calls_used = 0
    partial = False
    final_text: str | None = None

    while True:
        response = transport.complete(
            ModelRequest(system_text=agent.system_prompt, messages=tuple(messages))
        )
        messages.append(("assistant", response))
        step: dict[str, Any] = {
            "model_turn_digest": digest(response),
            "tool_call": None,
            "tool_result_digest": None,
            "notes": [],
        }
        trace.append(step)
        call = _extract_tool_call(response)
        if call is None:
            final_text = response
            break
        if tool_calls_used >= orchestration.max_tool_calls:
            step["notes"].append("tool budget exhausted")
            if orchestration.on_exhaustion == "fail":
                raise CareError(
                    "tool budget exhausted before a final answer",
                    code="tool_budget_exhausted",
                    details={"max_tool_calls": orchestration.max_tool_calls},
                )
            partial = True
            break
        step["tool_call"] = {"tool": call.get("tool"), "arguments": call.get("arguments")}
        tool_calls_used += 1
        result_payload = _execute_tool(call, known_tools, cmr, orchestration, step)
        if result_payload is None:
            if orchestration.on_exhaustion == "fail":
                raise CareError(
                    "tool failed after retries",
                    code="tool_failure",
                    details={"tool": call.get("tool")},
                )
            partial = True
            break
        result_text = json.dumps(result_payload, sort_keys=True, ensure_ascii=False)
        step["tool_result_digest"] = digest(result_text)
        messages.append(("tool", result_text))

    if final_text is None:
        # Salvage whatever the model said across its turns so far.
        final_text = "\n".join(text for role, text in messages if role == "assistant")
    ranked = parse_final_answer(final_text)
    for note_token in _invalid_id_candidates(final_text, ranked):
        trace[-1]["notes"].append(f"dropped invalid id token {note_token!r}")
    ranked = ranked[:k]
    return RetrievalResult(
        query_id=query_id,
        agent_name=agent.name,
        ranked_ids=ranked,
        trace=trace,
        partial=partial,
    )


def _execute_tool(
    call: dict[str, Any],
    known_tools: set[str],
    cmr: CatalogSource,
    orchestration: Orchestration,
    step: dict[str, Any],
) -> dict[str, Any] | None:
    """Run one tool call with retries; None means failure after retries."""
    if "malformed" in call:
        step["notes"].append("malformed tool call line")
        return {"error": "malformed tool call"}
    if call.get("tool") not in known_tools:
        step["notes"].append(f"unknown tool {call.get('tool')!r}")
        return {"error": f"unknown tool {call.get('tool')!r}"}
    try:
        query = _query_from_arguments(call.get("arguments") or {})
    except (ValueError, TypeError) as exc:
        step["notes"].append(f"invalid tool arguments: {exc}")
        return {"error": f"invalid arguments: {exc}"}
    attempts = orchestration.retries_per_call + 1
    for attempt in range(attempts):
        try:
            records = search_collections(cmr, query)
            return {
                "tool": call["tool"],
                "records": [r.to_json() for r in records],
            }
        except Exception as exc:  # noqa: BLE001 - live sources raise freely
            step["notes"].append(f"tool attempt {attempt + 1} failed: {exc}")
    return None


# -- fairness ---------------------------------------------------------------------


def run_config(
    agent: AgentSpec, transport: ModelTransport, cmr: CatalogSource, k: int
) -> dict[str, Any]:
    """The run parameters that must match for a fair two-agent comparison."""
    return {
        "transport_identity": transport.identity(),
        "tool_schemas": [t.to_json() for t in agent.tool_schemas],
        "orchestration": agent.orchestration.to_json(),
        "catalog": cmr.descriptor(),
        "k": k,
    }


def config_hash(config: dict[str, Any]) -> str:
    return digest(config, length=16)
