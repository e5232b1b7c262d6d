"""Stage-gate state machine: phase ordering, gate policy, advancement, revisits.

A project moves strictly forward through the phase ladder, one phase at a
time, and only when the current phase's gate is satisfied: every required
artifact kind must have an approved, non-stale head carrying the dual-role
approval quorum. Moving backward is always allowed (``revisit``) and never
destroys content -- it marks the approved heads of every downstream phase
stale so they must be re-approved, possibly unchanged, before their gates
pass again. That keeps iteration cheap without letting unreviewed context
leak past a gate.

Gate evaluation is a pure function of store contents, and a gate check plus
its advance run as one atomic step under the project lock, so interleaved
approvals can never race a transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .artifact_store import ArtifactStore, GatePolicy
from .domain import (
    FINAL_PHASE,
    PHASE_OF_KIND,
    REQUIRED_ARTIFACTS,
    ArtifactKind,
    ArtifactStatus,
    PhaseId,
    next_phase,
    phases_between,
)
from .errors import AlreadyAtFinalPhase, GateNotSatisfied, NotAnEarlierPhase

#: Sub-phases whose gates fold into a later composite gate when a project
#: runs with ``merge_subphases``; the value is the phase that reviews them.
_COMPOSITE_GATE_OF = {
    PhaseId.P2_1_tools: PhaseId.P2_3_output,
    PhaseId.P2_2_context: PhaseId.P2_3_output,
    PhaseId.P3_1_guardrails: PhaseId.P3_2_reasoning,
}


def required_artifacts(phase: PhaseId) -> list[ArtifactKind]:
    """Artifact kinds a phase must produce (fixed one-kind-per-phase map)."""
    return list(REQUIRED_ARTIFACTS[phase])


def gate_requirements(phase: PhaseId, policy: GatePolicy) -> list[ArtifactKind]:
    """Artifact kinds the gate out of ``phase`` checks, honoring merged gates."""
    if not policy.merge_subphases:
        return required_artifacts(phase)
    if phase in _COMPOSITE_GATE_OF:
        return []
    composed = [p for p, gate in _COMPOSITE_GATE_OF.items() if gate is phase]
    kinds: list[ArtifactKind] = []
    for earlier in sorted(composed, key=lambda p: p.index):
        kinds.extend(required_artifacts(earlier))
    kinds.extend(required_artifacts(phase))
    return kinds


@dataclass
class GateStatus:
    phase: PhaseId
    required: list[ArtifactKind]
    satisfied: bool
    missing: list[tuple[ArtifactKind, str]] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "phase": self.phase.value,
            "required": [k.value for k in self.required],
            "satisfied": self.satisfied,
            "missing": [{"kind": k.value, "reason": r} for k, r in self.missing],
        }


@dataclass
class ProjectState:
    project_id: str
    current_phase: PhaseId
    history: list[dict[str, Any]]

    def to_json(self) -> dict[str, Any]:
        return {
            "project_id": self.project_id,
            "current_phase": self.current_phase.value,
            "history": self.history,
        }


class PhaseEngine:
    """Gate evaluation and phase transitions over an ``ArtifactStore``."""

    def __init__(self, store: ArtifactStore):
        self.store = store

    def state(self, project_id: str) -> ProjectState:
        return ProjectState(
            project_id=project_id,
            current_phase=self.store.current_phase(project_id),
            history=self.store.history(project_id),
        )

    def gate_status(self, project_id: str, phase: PhaseId) -> GateStatus:
        """Evaluate a phase gate. Pure: same store contents, same result."""
        policy = self.store.project_policy(project_id)
        required = gate_requirements(phase, policy)
        missing: list[tuple[ArtifactKind, str]] = []
        for kind in required:
            heads = self.store.heads_for(project_id, PHASE_OF_KIND[kind], kind)
            if not heads:
                missing.append((kind, "no_artifact"))
                continue
            # Several artifacts of one kind may exist; one satisfying head is
            # enough, a stale head is reported over a merely unapproved one.
            reasons = []
            for head in heads:
                if head.status is ArtifactStatus.approved and policy.quorum_met(head.approvals):
                    reasons = []
                    break
                reasons.append("stale" if head.status is ArtifactStatus.stale else "not_approved")
            if reasons:
                reason = "stale" if "stale" in reasons else "not_approved"
                missing.append((kind, reason))
        return GateStatus(phase=phase, required=required, satisfied=not missing, missing=missing)

    def advance(self, project_id: str, idempotency_key: str | None = None) -> ProjectState:
        """Move to the next phase; the gate check and move are atomic."""
        with self.store.project_lock(project_id):
            current = self.store.current_phase(project_id)
            target = next_phase(current)
            if target is None:
                raise AlreadyAtFinalPhase(
                    f"project is already at {FINAL_PHASE.value}",
                    details={"current_phase": current.value},
                )
            gate = self.gate_status(project_id, current)
            if not gate.satisfied:
                raise GateNotSatisfied(
                    f"gate for {current.value} is not satisfied",
                    details=gate.to_json(),
                )
            self.store.record_transition(
                project_id, target, cause="advance", idempotency_key=idempotency_key
            )
            return self.state(project_id)

    def revisit(
        self, project_id: str, target_phase: PhaseId, idempotency_key: str | None = None
    ) -> ProjectState:
        """Return to an earlier phase, staling every approved downstream head."""
        with self.store.project_lock(project_id):
            current = self.store.current_phase(project_id)
            if not target_phase < current:
                raise NotAnEarlierPhase(
                    f"{target_phase.value} is not earlier than {current.value}",
                    details={"target_phase": target_phase.value, "current_phase": current.value},
                )
            downstream = phases_between(target_phase, current)
            stale = self.store.mark_stale(project_id, downstream)
            self.store.record_transition(
                project_id,
                target_phase,
                cause="revisit",
                stale_artifacts=stale,
                idempotency_key=idempotency_key,
            )
            return self.state(project_id)

