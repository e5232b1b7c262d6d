from __future__ import annotations

import pytest

from care_workbench.artifact_store import ArtifactStore, GatePolicy
from care_workbench.domain import ArtifactKind, ArtifactStatus, PhaseId, Role, Verdict
from care_workbench.errors import AlreadyAtFinalPhase, GateNotSatisfied, NotAnEarlierPhase
from care_workbench.phase_engine import PhaseEngine, gate_requirements, required_artifacts

from .conftest import approve_both, pass_phase, walk_to_phase


def test_required_artifacts_fixed_map():
    assert required_artifacts(PhaseId.P1_scope) == [ArtifactKind.scope_spec]
    assert required_artifacts(PhaseId.P2_1_tools) == [ArtifactKind.tools_spec]
    assert required_artifacts(PhaseId.P2_2_context) == [ArtifactKind.context_spec]
    assert required_artifacts(PhaseId.P2_3_output) == [ArtifactKind.output_format_spec]
    assert required_artifacts(PhaseId.P3_1_guardrails) == [ArtifactKind.guardrails_spec]
    assert required_artifacts(PhaseId.P3_2_reasoning) == [ArtifactKind.reasoning_policy]
    assert required_artifacts(PhaseId.P4_prompt) == [ArtifactKind.prompt_architecture]
    assert required_artifacts(PhaseId.P5_benchmark) == [ArtifactKind.benchmark_requirements]


class TestGateStatus:
    def test_fresh_project_missing_artifact(self, store, engine, project):
        gate = engine.gate_status(project, PhaseId.P1_scope)
        assert not gate.satisfied
        assert gate.missing == [(ArtifactKind.scope_spec, "no_artifact")]

    def test_single_role_approval_not_enough(self, store, engine, project):
        artifact = store.create_artifact(
            project, PhaseId.P1_scope, ArtifactKind.scope_spec, "# Scope\n", Role.helper_agent
        )
        store.record_approval(project, artifact.artifact_id, 1, Role.sme, "ada", Verdict.approve)
        gate = engine.gate_status(project, PhaseId.P1_scope)
        assert not gate.satisfied
        assert gate.missing == [(ArtifactKind.scope_spec, "not_approved")]

    def test_dual_approval_satisfies(self, store, engine, project):
        pass_phase(store, engine, project, PhaseId.P1_scope)
        gate = engine.gate_status(project, PhaseId.P1_scope)
        assert gate.satisfied
        assert gate.missing == []

    def test_deterministic(self, store, engine, project):
        pass_phase(store, engine, project, PhaseId.P1_scope)
        first = engine.gate_status(project, PhaseId.P1_scope)
        second = engine.gate_status(project, PhaseId.P1_scope)
        assert first == second

    def test_one_satisfying_head_among_several_is_enough(self, store, engine, project):
        # Two artifacts of the required kind; only one carries the quorum.
        store.create_artifact(
            project, PhaseId.P1_scope, ArtifactKind.scope_spec, "# Draft A\n", Role.helper_agent
        )
        pass_phase(store, engine, project, PhaseId.P1_scope)
        gate = engine.gate_status(project, PhaseId.P1_scope)
        assert gate.satisfied
        assert gate.missing == []


class TestAdvance:
    def test_advance_moves_one_phase(self, store, engine, project):
        pass_phase(store, engine, project, PhaseId.P1_scope)
        state = engine.advance(project)
        assert state.current_phase is PhaseId.P2_1_tools
        assert state.history[-1]["cause"] == "advance"

    def test_advance_blocked_when_gate_unsatisfied(self, store, engine, project):
        with pytest.raises(GateNotSatisfied) as err:
            engine.advance(project)
        assert err.value.details["missing"] == [{"kind": "scope_spec", "reason": "no_artifact"}]

    def test_advance_past_final_phase_fails(self, store, engine, project):
        walk_to_phase(store, engine, project, PhaseId.P5_benchmark)
        pass_phase(store, engine, project, PhaseId.P5_benchmark)
        with pytest.raises(AlreadyAtFinalPhase):
            engine.advance(project)

    def test_full_ladder_walk(self, store, engine, project):
        walk_to_phase(store, engine, project, PhaseId.P5_benchmark)
        state = engine.state(project)
        assert state.current_phase is PhaseId.P5_benchmark
        assert len(state.history) == 7


class TestRevisit:
    def test_revisit_stales_exactly_downstream(self, store, engine, project):
        created = walk_to_phase(store, engine, project, PhaseId.P4_prompt)
        created[PhaseId.P4_prompt] = pass_phase(store, engine, project, PhaseId.P4_prompt)

        engine.revisit(project, PhaseId.P2_2_context)

        stale_phases = {PhaseId.P2_3_output, PhaseId.P3_1_guardrails, PhaseId.P3_2_reasoning, PhaseId.P4_prompt}
        for phase, artifact_id in created.items():
            head = store.head(project, artifact_id)
            if phase in stale_phases:
                assert head.status is ArtifactStatus.stale, phase
                assert head.approvals == []
            else:
                assert head.status is ArtifactStatus.approved, phase

    def test_revisit_to_current_or_later_fails(self, store, engine, project):
        with pytest.raises(NotAnEarlierPhase):
            engine.revisit(project, PhaseId.P1_scope)
        with pytest.raises(NotAnEarlierPhase):
            engine.revisit(project, PhaseId.P4_prompt)

    def test_revisit_preserves_lineage(self, store, engine, project):
        created = walk_to_phase(store, engine, project, PhaseId.P2_2_context)
        before = {
            aid: [v.content for v in store.artifact_lineage(project, aid)] for aid in created.values()
        }
        engine.revisit(project, PhaseId.P1_scope)
        after = {
            aid: [v.content for v in store.artifact_lineage(project, aid)] for aid in created.values()
        }
        assert before == after

    def test_reapproval_resatisfies_gates(self, store, engine, project):
        created = walk_to_phase(store, engine, project, PhaseId.P2_2_context)
        engine.revisit(project, PhaseId.P1_scope)
        gate = engine.gate_status(project, PhaseId.P2_1_tools)
        assert not gate.satisfied
        assert gate.missing == [(ArtifactKind.tools_spec, "stale")]
        # Re-approve the unchanged head to pass the gate again.
        stale_id = created[PhaseId.P2_1_tools]
        head = store.head(project, stale_id)
        approve_both(store, project, stale_id, head.version)
        assert engine.gate_status(project, PhaseId.P2_1_tools).satisfied

    def test_history_records_revisit(self, store, engine, project):
        walk_to_phase(store, engine, project, PhaseId.P2_2_context)
        state = engine.revisit(project, PhaseId.P1_scope)
        assert state.current_phase is PhaseId.P1_scope
        assert state.history[-1]["cause"] == "revisit"
        assert state.history[-1]["from_phase"] == "P2_2_context"


class TestMergedSubphaseGates:
    def test_subphase_gates_pass_through_and_composite_checks_all(self, store):
        engine = PhaseEngine(store)
        project = store.create_project(name="merged", policy=GatePolicy(merge_subphases=True))
        pass_phase(store, engine, project, PhaseId.P1_scope)
        engine.advance(project)
        # 2.1 and 2.2 gates are folded into the 2.3 composite gate.
        assert gate_requirements(PhaseId.P2_1_tools, store.project_policy(project)) == []
        engine.advance(project)
        engine.advance(project)
        assert store.current_phase(project) is PhaseId.P2_3_output
        gate = engine.gate_status(project, PhaseId.P2_3_output)
        assert [k.value for k in gate.required] == [
            "tools_spec",
            "context_spec",
            "output_format_spec",
        ]
        with pytest.raises(GateNotSatisfied):
            engine.advance(project)
        for phase in (PhaseId.P2_1_tools, PhaseId.P2_2_context, PhaseId.P2_3_output):
            pass_phase(store, engine, project, phase)
        engine.advance(project)
        assert store.current_phase(project) is PhaseId.P3_1_guardrails


class TestPersistence:
    def test_state_survives_reload(self, tmp_path):
        root = tmp_path / "projects"
        store = ArtifactStore(root=root)
        engine = PhaseEngine(store)
        project = store.create_project(project_id="p1")
        walk_to_phase(store, engine, project, PhaseId.P2_2_context)
        pass_phase(store, engine, project, PhaseId.P2_2_context)
        engine.revisit(project, PhaseId.P2_1_tools)

        reloaded = ArtifactStore(root=root)
        rengine = PhaseEngine(reloaded)
        state = rengine.state(project)
        assert state.current_phase is PhaseId.P2_1_tools
        assert [t["cause"] for t in state.history] == ["advance", "advance", "revisit"]
        gate = rengine.gate_status(project, PhaseId.P2_2_context)
        assert gate.missing == [(ArtifactKind.context_spec, "stale")]
