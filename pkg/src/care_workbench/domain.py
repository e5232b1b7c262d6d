"""Shared domain vocabulary: phases, artifact kinds, roles, statuses.

The phase ladder is a total order. Each phase requires exactly one artifact
kind at its gate (see ``REQUIRED_ARTIFACTS``); dual-role approval of that
kind's head version is what lets a project advance.
"""

from __future__ import annotations

import enum


class PhaseId(str, enum.Enum):
    """Ordered engineering phases. P1 is always first."""

    P1_scope = "P1_scope"
    P2_1_tools = "P2_1_tools"
    P2_2_context = "P2_2_context"
    P2_3_output = "P2_3_output"
    P3_1_guardrails = "P3_1_guardrails"
    P3_2_reasoning = "P3_2_reasoning"
    P4_prompt = "P4_prompt"
    P5_benchmark = "P5_benchmark"

    @property
    def index(self) -> int:
        return PHASE_ORDER.index(self)

    def __lt__(self, other: "PhaseId") -> bool:  # type: ignore[override]
        return self.index < other.index

    def __le__(self, other: "PhaseId") -> bool:  # type: ignore[override]
        return self.index <= other.index

    def __gt__(self, other: "PhaseId") -> bool:  # type: ignore[override]
        return self.index > other.index

    def __ge__(self, other: "PhaseId") -> bool:  # type: ignore[override]
        return self.index >= other.index


PHASE_ORDER: list[PhaseId] = [
    PhaseId.P1_scope,
    PhaseId.P2_1_tools,
    PhaseId.P2_2_context,
    PhaseId.P2_3_output,
    PhaseId.P3_1_guardrails,
    PhaseId.P3_2_reasoning,
    PhaseId.P4_prompt,
    PhaseId.P5_benchmark,
]

FINAL_PHASE = PHASE_ORDER[-1]


def next_phase(phase: PhaseId) -> PhaseId | None:
    """The phase immediately after ``phase``, or None at the end of the ladder."""
    idx = phase.index
    if idx + 1 >= len(PHASE_ORDER):
        return None
    return PHASE_ORDER[idx + 1]


def phases_between(after: PhaseId, up_to: PhaseId) -> list[PhaseId]:
    """Phases in the half-open interval (after, up_to]."""
    return [p for p in PHASE_ORDER if after < p <= up_to]


class ArtifactKind(str, enum.Enum):
    scope_spec = "scope_spec"
    tools_spec = "tools_spec"
    context_spec = "context_spec"
    output_format_spec = "output_format_spec"
    guardrails_spec = "guardrails_spec"
    reasoning_policy = "reasoning_policy"
    prompt_architecture = "prompt_architecture"
    benchmark_requirements = "benchmark_requirements"


#: Fixed map from phase to the artifact kind its gate requires.
REQUIRED_ARTIFACTS: dict[PhaseId, list[ArtifactKind]] = {
    PhaseId.P1_scope: [ArtifactKind.scope_spec],
    PhaseId.P2_1_tools: [ArtifactKind.tools_spec],
    PhaseId.P2_2_context: [ArtifactKind.context_spec],
    PhaseId.P2_3_output: [ArtifactKind.output_format_spec],
    PhaseId.P3_1_guardrails: [ArtifactKind.guardrails_spec],
    PhaseId.P3_2_reasoning: [ArtifactKind.reasoning_policy],
    PhaseId.P4_prompt: [ArtifactKind.prompt_architecture],
    PhaseId.P5_benchmark: [ArtifactKind.benchmark_requirements],
}

#: Inverse of REQUIRED_ARTIFACTS (kinds and phases are 1:1).
PHASE_OF_KIND: dict[ArtifactKind, PhaseId] = {
    kind: phase for phase, kinds in REQUIRED_ARTIFACTS.items() for kind in kinds
}


def kind_legal_for_phase(kind: ArtifactKind, phase: PhaseId) -> bool:
    return kind in REQUIRED_ARTIFACTS[phase]


class Role(str, enum.Enum):
    sme = "sme"
    developer = "developer"
    helper_agent = "helper_agent"


#: Roles whose approvals count toward gates. The helper agent can draft and
#: propose but never accept -- acceptance stays with humans.
APPROVING_ROLES = frozenset({Role.sme, Role.developer})


class ArtifactStatus(str, enum.Enum):
    draft = "draft"
    under_review = "under_review"
    approved = "approved"
    rejected = "rejected"
    superseded = "superseded"
    stale = "stale"


class Verdict(str, enum.Enum):
    approve = "approve"
    reject = "reject"


class ProposalStatus(str, enum.Enum):
    pending = "pending"
    accepted = "accepted"
    rejected = "rejected"
    stale = "stale"
