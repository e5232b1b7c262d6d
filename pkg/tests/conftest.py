from __future__ import annotations

from pathlib import Path

import pytest

from care_workbench.artifact_store import ArtifactStore
from care_workbench.domain import ArtifactKind, PhaseId, Role, Verdict
from care_workbench.phase_engine import PhaseEngine

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def store() -> ArtifactStore:
    return ArtifactStore(root=None)


@pytest.fixture
def disk_store(tmp_path) -> ArtifactStore:
    return ArtifactStore(root=tmp_path / "store")


@pytest.fixture
def engine(store) -> PhaseEngine:
    return PhaseEngine(store)


@pytest.fixture
def project(store) -> str:
    return store.create_project(name="demo")


def approve_both(store: ArtifactStore, project_id: str, artifact_id: str, version: int) -> None:
    """Record the minimal dual-role quorum on one artifact version."""
    store.record_approval(project_id, artifact_id, version, Role.sme, "ada", Verdict.approve)
    store.record_approval(project_id, artifact_id, version, Role.developer, "dev", Verdict.approve)


def pass_phase(store: ArtifactStore, engine: PhaseEngine, project_id: str, phase: PhaseId) -> str:
    """Create and dual-approve the artifact a phase requires; return its id."""
    from care_workbench.phase_engine import required_artifacts

    kind = required_artifacts(phase)[0]
    artifact = store.create_artifact(
        project_id, phase, kind, f"# {kind.value}\n\n- content\n", Role.helper_agent
    )
    approve_both(store, project_id, artifact.artifact_id, artifact.version)
    return artifact.artifact_id


def walk_to_phase(store: ArtifactStore, engine: PhaseEngine, project_id: str, target: PhaseId) -> dict[PhaseId, str]:
    """Advance a fresh project to ``target``, approving every gate on the way.

    Returns the artifact id created for each passed phase.
    """
    created: dict[PhaseId, str] = {}
    while store.current_phase(project_id) < target:
        phase = store.current_phase(project_id)
        created[phase] = pass_phase(store, engine, project_id, phase)
        engine.advance(project_id)
    return created


ALL_KINDS = list(ArtifactKind)
ALL_PHASES = list(PhaseId)
