from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from care_workbench.agent_runtime import (
    AgentSpec,
    BUILTIN_BASELINE_AGENT,
    BUILTIN_CARE_AGENT,
    Orchestration,
    SEARCH_TOOL,
    assemble_care_prompt,
    baseline_prompt,
    built_in_agent,
    config_hash,
    parse_final_answer,
    run_config,
    run_query,
)
from care_workbench.cmr import CollectionRecord, FixtureCatalog, validate_concept_id
from care_workbench.domain import ArtifactKind, PhaseId, Role
from care_workbench.errors import CareError, GateNotSatisfied, TemplateViolation
from care_workbench.stub_models import StubRetrievalModel, refine_keywords
from care_workbench.templates import load_template
from care_workbench.transport import FunctionTransport, ModelRequest

from .conftest import approve_both, walk_to_phase


def scripted_transport(turns):
    """Transport that answers by inspecting how many assistant turns exist."""

    def fn(request: ModelRequest) -> str:
        count = sum(1 for role, _ in request.messages if role == "assistant")
        return turns[min(count, len(turns) - 1)]

    return FunctionTransport(fn, name="scripted")


def small_catalog() -> FixtureCatalog:
    return FixtureCatalog(
        [
            CollectionRecord("C0001-TEST", "SST_A", "sea surface temperature analysis", "daily sst", "TEST"),
            CollectionRecord("C0002-TEST", "SST_B", "sea surface temperature climatology", "monthly sst", "TEST"),
            CollectionRecord("C0003-TEST", "WIND", "ocean surface wind", "scatterometer", "TEST"),
        ]
    )


SEARCH_CALL = 'TOOL_CALL {"tool": "search_collections", "arguments": {"keyword": "sea surface temperature", "page_size": 5}}'


class TestParseFinalAnswer:
    def test_extracts_in_order_of_first_appearance(self):
        text = "I recommend C0002-TEST first, then C0001-TEST.\nAlso C0002-TEST again."
        assert parse_final_answer(text) == ["C0002-TEST", "C0001-TEST"]

    def test_tolerates_lists_prose_and_fences(self):
        text = "Ranked:\n1. `C10-A`\n2. C11-B\n```\nC12-C\n```"
        assert parse_final_answer(text) == ["C10-A", "C11-B", "C12-C"]

    def test_ignores_invalid_tokens(self):
        assert parse_final_answer("not-an-id, X123, C1- , C5-OK") == ["C5-OK"]

    def test_does_not_grab_embedded_fragments(self):
        assert parse_final_answer("XC123-PROV") == []


class TestRunQuery:
    def test_search_then_answer(self):
        transport = scripted_transport([SEARCH_CALL, "C0001-TEST, C0002-TEST"])
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "sea surface temperature", 1, transport, small_catalog(), query_id="q1")
        assert result.ranked_ids == ["C0001-TEST"]
        assert result.partial is False
        assert result.trace[0]["tool_call"]["tool"] == "search_collections"
        assert result.trace[0]["tool_result_digest"]

    def test_duplicate_answer_ids_deduped_keep_first(self):
        transport = scripted_transport([SEARCH_CALL, "C0001-TEST C0001-TEST C0002-TEST"])
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "sst", 5, transport, small_catalog())
        assert result.ranked_ids == ["C0001-TEST", "C0002-TEST"]

    def test_invalid_token_dropped_with_trace_note(self):
        transport = scripted_transport([SEARCH_CALL, "not-an-id C0001-TEST"])
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "sst", 3, transport, small_catalog())
        assert result.ranked_ids == ["C0001-TEST"]
        assert any("not-an-id" in note for note in result.trace[-1]["notes"])

    def test_result_truncated_to_k_after_dedupe(self):
        transport = scripted_transport([SEARCH_CALL, "C0001-TEST C0001-TEST C0002-TEST C0003-TEST"])
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "sst", 2, transport, small_catalog())
        assert result.ranked_ids == ["C0001-TEST", "C0002-TEST"]

    def test_tool_budget_enforced(self):
        transport = scripted_transport([SEARCH_CALL])  # never answers
        agent = AgentSpec(
            name="loops",
            system_prompt="loop forever",
            orchestration=Orchestration(max_tool_calls=3),
        )
        result = run_query(agent, "sst", 3, transport, small_catalog())
        assert result.partial is True
        tool_steps = [s for s in result.trace if s["tool_call"]]
        assert len(tool_steps) == 3

    def test_tool_budget_fail_mode_raises(self):
        transport = scripted_transport([SEARCH_CALL])
        agent = AgentSpec(
            name="loops",
            system_prompt="loop forever",
            orchestration=Orchestration(max_tool_calls=2, on_exhaustion="fail"),
        )
        with pytest.raises(CareError) as err:
            run_query(agent, "sst", 3, transport, small_catalog())
        assert err.value.code == "tool_budget_exhausted"

    def test_tool_failure_returns_partial_with_salvaged_ids(self):
        class FailingSource:
            mode = "fixture"

            def search(self, query):
                raise RuntimeError("catalog offline")

            def descriptor(self):
                return "fixture:broken"

        transport = scripted_transport(["Looking at C0009-TEST first.\n" + SEARCH_CALL])
        agent = AgentSpec(
            name="unlucky",
            system_prompt="search",
            orchestration=Orchestration(retries_per_call=1),
        )
        result = run_query(agent, "sst", 3, transport, FailingSource())
        assert result.partial is True
        assert result.ranked_ids == ["C0009-TEST"]
        notes = [n for step in result.trace for n in step["notes"]]
        assert sum("failed" in n for n in notes) == 2  # initial try plus one retry

    def test_tool_failure_fail_mode_raises(self):
        class FailingSource:
            mode = "fixture"

            def search(self, query):
                raise RuntimeError("catalog offline")

            def descriptor(self):
                return "fixture:broken"

        transport = scripted_transport([SEARCH_CALL])
        agent = AgentSpec(
            name="unlucky",
            system_prompt="search",
            orchestration=Orchestration(retries_per_call=0, on_exhaustion="fail"),
        )
        with pytest.raises(CareError) as err:
            run_query(agent, "sst", 3, transport, FailingSource())
        assert err.value.code == "tool_failure"

    def test_unknown_tool_reported_back_to_model(self):
        transport = scripted_transport(
            ['TOOL_CALL {"tool": "rm_rf", "arguments": {}}', "C0001-TEST"]
        )
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "sst", 1, transport, small_catalog())
        assert result.ranked_ids == ["C0001-TEST"]
        assert any("unknown tool" in note for step in result.trace for note in step["notes"])

    def test_preconditions(self):
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        transport = scripted_transport(["C1-A"])
        with pytest.raises(ValueError):
            run_query(agent, "", 1, transport, small_catalog())
        with pytest.raises(ValueError):
            run_query(agent, "q", 0, transport, small_catalog())

    @settings(max_examples=60, deadline=None)
    @given(text=st.text(max_size=300))
    def test_output_hygiene_over_adversarial_answers(self, text):
        transport = scripted_transport([text if text.strip() else "nothing"])
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "query", 4, transport, small_catalog())
        assert len(result.ranked_ids) <= 4
        assert len(set(result.ranked_ids)) == len(result.ranked_ids)
        assert all(validate_concept_id(i) for i in result.ranked_ids)


class TestStubRetrievalModel:
    def test_baseline_single_search(self):
        transport = FunctionTransport(StubRetrievalModel(), name="stub")
        agent = built_in_agent(BUILTIN_BASELINE_AGENT)
        result = run_query(agent, "sea surface temperature analysis", 3, transport, small_catalog())
        assert result.ranked_ids
        tool_steps = [s for s in result.trace if s["tool_call"]]
        assert len(tool_steps) == 1

    def test_care_prompt_triggers_refined_second_search(self):
        transport = FunctionTransport(StubRetrievalModel(), name="stub")
        agent = built_in_agent(BUILTIN_CARE_AGENT)
        result = run_query(
            agent, "daily global data on sea surface temperature analysis", 3, transport, small_catalog()
        )
        tool_steps = [s for s in result.trace if s["tool_call"]]
        assert len(tool_steps) == 2
        assert tool_steps[1]["tool_call"]["arguments"]["keyword"] == refine_keywords(
            "daily global data on sea surface temperature analysis"
        )

    def test_refine_keywords_drops_generic_terms(self):
        refined = refine_keywords("daily global data on chlorophyll concentration for the shelf")
        assert refined == "chlorophyll concentration shelf"


class TestPrompts:
    def test_baseline_prompt_is_fixed_and_minimal(self):
        assert baseline_prompt() == baseline_prompt()
        assert "TOOL_CALL" in baseline_prompt()
        assert len(baseline_prompt()) < 600

    def test_built_in_agents_share_tooling(self):
        care = built_in_agent(BUILTIN_CARE_AGENT)
        base = built_in_agent(BUILTIN_BASELINE_AGENT)
        assert care.tool_schemas == base.tool_schemas == (SEARCH_TOOL,)
        assert care.orchestration == base.orchestration
        assert care.system_prompt != base.system_prompt

    def test_unknown_built_in_rejected(self):
        with pytest.raises(ValueError):
            built_in_agent("cmr_other")


class TestAssembleCarePrompt:
    def approve_architecture(self, store, engine, project, content):
        walk_to_phase(store, engine, project, PhaseId.P4_prompt)
        artifact = store.create_artifact(
            project, PhaseId.P4_prompt, ArtifactKind.prompt_architecture, content, Role.helper_agent
        )
        approve_both(store, project, artifact.artifact_id, 1)
        return artifact

    def architecture_content(self) -> str:
        # The packaged template, with slots, plus filled sections.
        template = load_template(ArtifactKind.prompt_architecture)
        return template.replace("## Persona\n", "## Persona\n\n- A careful librarian.\n")

    def test_requires_satisfied_gate(self, store, engine, project):
        with pytest.raises(GateNotSatisfied):
            assemble_care_prompt(store, project)

    def test_concatenates_sections_and_fills_grounding(self, store, engine, project):
        self.approve_architecture(store, engine, project, self.architecture_content())
        prompt = assemble_care_prompt(store, project)
        assert prompt.index("## Persona") < prompt.index("## Grounding")
        assert "- A careful librarian." in prompt
        # Grounding slots are replaced by the approved spec contents.
        assert "[[grounding:" not in prompt
        assert "context_spec" in prompt  # injected artifact content mentions its kind header
        twice = assemble_care_prompt(store, project)
        assert twice == prompt

    def test_grounding_without_approved_head_fails(self, store, engine, project):
        walk_to_phase(store, engine, project, PhaseId.P4_prompt)
        engine.revisit(project, PhaseId.P2_1_tools)
        # context_spec head is now stale; re-approve everything except it.
        # Re-walk forward without re-approving context_spec is not possible via
        # gates, so build a fresh project instead.
        fresh = store.create_project(name="no-context")
        content = self.architecture_content()
        artifact = store.create_artifact(
            fresh, PhaseId.P4_prompt, ArtifactKind.prompt_architecture, content, Role.helper_agent
        )
        approve_both(store, fresh, artifact.artifact_id, 1)
        with pytest.raises(TemplateViolation):
            assemble_care_prompt(store, fresh)


class TestFairnessConfig:
    def test_equal_setups_hash_equal(self):
        transport = FunctionTransport(StubRetrievalModel(), name="stub")
        catalog = small_catalog()
        care = built_in_agent(BUILTIN_CARE_AGENT)
        base = built_in_agent(BUILTIN_BASELINE_AGENT)
        assert config_hash(run_config(care, transport, catalog, 5)) == config_hash(
            run_config(base, transport, catalog, 5)
        )

    def test_differing_orchestration_hash_differs(self):
        transport = FunctionTransport(StubRetrievalModel(), name="stub")
        catalog = small_catalog()
        care = built_in_agent(BUILTIN_CARE_AGENT)
        base = built_in_agent(BUILTIN_BASELINE_AGENT, orchestration=Orchestration(max_tool_calls=2))
        assert config_hash(run_config(care, transport, catalog, 5)) != config_hash(
            run_config(base, transport, catalog, 5)
        )

    def test_differing_transport_identity_hash_differs(self):
        catalog = small_catalog()
        care = built_in_agent(BUILTIN_CARE_AGENT)
        one = FunctionTransport(StubRetrievalModel(), name="model-a")
        two = FunctionTransport(StubRetrievalModel(), name="model-b")
        assert config_hash(run_config(care, one, catalog, 5)) != config_hash(
            run_config(care, two, catalog, 5)
        )
