"""Built-in elicitation checklist: what to gather, per phase.

Each phase carries a fixed list of information-gathering dimensions. Question
generation guarantees coverage against this checklist: every dimension with
no answered transcript entry gets at least one targeted question. Coverage is
a first-order risk -- a dimension nobody asked about is a failure mode nobody
specified -- so the checklist is data, not prompt prose, and tests assert
against it by set equality.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import PhaseId


@dataclass(frozen=True)
class ElicitationDimension:
    phase: PhaseId
    dimension_id: str
    description: str


_CHECKLIST: dict[PhaseId, list[tuple[str, str]]] = {
    PhaseId.P1_scope: [
        ("user_role_expertise", "who the user is: role, expertise level, operating constraints"),
        ("tasks", "the tasks the user wants the agent to accomplish"),
        ("workflow_steps", "the workflow steps the user follows today"),
        ("pain_points", "where the current workflow hurts or breaks down"),
        ("non_delegable_decisions", "decisions that must stay with the human"),
        ("outcomes_success", "desired outcomes and the definition of success"),
    ],
    PhaseId.P2_1_tools: [
        ("tools_apis_datasets", "tools, APIs, datasets, and resources the agent may use"),
        ("io_schemas", "input and output schemas for each tool"),
        ("limits_quotas_permissions", "limits, quotas, and permissions on each tool or API"),
        ("provenance_metadata", "provenance and metadata requirements for retrieved results"),
        ("policy_security_governance", "constraints from policy, security, and governance"),
    ],
    PhaseId.P2_2_context: [
        ("context_access", "what context the agent can access, and when"),
        ("retrieval_strategy", "retrieval strategy: metadata search, vector search, or hybrid"),
        ("summarization_rules", "rules for summarizing retrieved or provided material"),
        ("memory_boundaries", "what the agent may carry across turns, and what it may not"),
    ],
    PhaseId.P2_3_output: [
        ("output_templates", "structured output templates the agent should produce"),
        ("citation_provenance", "citation and provenance expectations for answers"),
        ("deferral_rules", "when the agent should withhold a final answer and defer to the user"),
        ("degradation_behavior", "behavior when data is incomplete or of low quality"),
        ("output_styles", "supported output styles such as narrative, table, or JSON"),
    ],
    PhaseId.P3_1_guardrails: [
        ("forbidden_actions", "actions the agent must never take"),
        ("sensitive_domains", "sensitive domains that need special handling"),
        ("never_guess", "things the agent must never guess or fabricate"),
        ("review_escalation", "review and escalation requirements"),
        ("norms", "ethical, organizational, and scientific norms that apply"),
    ],
    PhaseId.P3_2_reasoning: [
        ("decomposition_logic", "how the agent should decompose tasks"),
        ("when_to_ask", "when the agent should ask questions instead of proceeding"),
        (
            "retrieve_compare_critique_synthesize",
            "how the agent should retrieve, compare, critique, and synthesize evidence",
        ),
        ("uncertainty_handling", "how the agent should handle uncertainty"),
        ("tool_selection_criteria", "criteria for choosing among available tools"),
        ("escalation_rules", "escalation rules: abstain, ask the user, or flag an error"),
    ],
    PhaseId.P4_prompt: [
        ("persona_specification", "the persona the prompt should establish"),
        ("flipped_interaction", "where the prompt should have the agent question the user first"),
        ("planning_prompts", "the planning structure the prompt should impose before acting"),
        ("critique_verification", "self-critique and verification steps the prompt should require"),
        ("output_patterns_templates", "output patterns and formatting templates to enforce"),
        ("tool_use_scaffolding", "how the prompt frames when and how to call tools"),
        ("reflection_self_check", "reflection and self-check instructions to include"),
    ],
    PhaseId.P5_benchmark: [
        ("scenario_tasks", "scenario-based tasks the benchmark should cover"),
        ("test_prompts", "concrete test prompts to include"),
        ("expected_outputs", "expected outputs or ground truth for each test"),
        ("rubrics", "human scoring rubrics such as correctness, clarity, safety"),
        ("failure_modes", "failure modes the benchmark must be able to surface"),
        ("acceptance_criteria", "acceptance criteria and pass thresholds"),
    ],
}

CHECKLIST: dict[PhaseId, list[ElicitationDimension]] = {
    phase: [ElicitationDimension(phase, dim_id, desc) for dim_id, desc in rows]
    for phase, rows in _CHECKLIST.items()
}


def dimensions_for(phase: PhaseId) -> list[ElicitationDimension]:
    return list(CHECKLIST[phase])


def dimension_ids(phase: PhaseId) -> list[str]:
    return [d.dimension_id for d in CHECKLIST[phase]]


def find_dimension(phase: PhaseId, dimension_id: str) -> ElicitationDimension:
    for dim in CHECKLIST[phase]:
        if dim.dimension_id == dimension_id:
            return dim
    raise KeyError(f"phase {phase.value} has no dimension {dimension_id!r}")
