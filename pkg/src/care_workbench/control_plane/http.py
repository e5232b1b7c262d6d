"""HTTP API over the shared service layer.

Every failure is an ``ApiError`` body ``{"code", "message", "details"}``
whose code comes from the closed set in ``errors.HTTP_STATUS_BY_CODE`` and
maps deterministically to a status. Auth is a static bearer token carrying a
role claim (sme, developer, or helper_agent); the store itself rejects
approvals from the helper-agent role, so even a UI bug cannot leak
acceptance authority to the machine.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..errors import AuthFailure, CareError, HTTP_STATUS_BY_CODE
from .service import Workbench


class Identity(BaseModel):
    actor: str
    role: str  # sme | developer | helper_agent


DEFAULT_TOKENS = {
    "sme-token": Identity(actor="sme", role="sme"),
    "developer-token": Identity(actor="developer", role="developer"),
    "helper-token": Identity(actor="helper", role="helper_agent"),
}


def load_token_file(path: Path | str) -> dict[str, Identity]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {token: Identity(**claims) for token, claims in payload.items()}


def write_default_token_file(path: Path | str) -> None:
    payload = {t: {"actor": i.actor, "role": i.role} for t, i in DEFAULT_TOKENS.items()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# -- request payloads ---------------------------------------------------------


class ProjectIn(BaseModel):
    project_id: str | None = None
    name: str = ""
    min_sme: int = 1
    min_developer: int = 1
    merge_subphases: bool = False


class ArtifactIn(BaseModel):
    phase: str
    kind: str
    content: str


class RevisionIn(BaseModel):
    artifact_id: str
    base_version: int
    diff: str
    rationale: str = ""


class DecisionIn(BaseModel):
    decision: str  # accept | reject


class ApprovalIn(BaseModel):
    artifact_id: str
    version: int
    verdict: str  # approve | reject
    note: str = ""


class TransitionIn(BaseModel):
    idempotency_key: str | None = None
    target_phase: str | None = None


class SessionIn(BaseModel):
    phase: str
    session_id: str | None = None


class AnswerIn(BaseModel):
    entry_id: str
    text: str


class DraftIn(BaseModel):
    kind: str | None = None


class FeedbackDiffIn(BaseModel):
    artifact_id: str
    feedback: str


class GenerateIn(BaseModel):
    corpus: str
    catalog: str
    out: str
    name: str = "synthetic"
    max_attempts: int = 5
    discard_log: str | None = None


class RunIn(BaseModel):
    agent: str
    benchmark: str
    catalog: str | None = None
    cmr_cassette: str | None = None
    transport: str | None = None
    ks: list[int] = Field(default_factory=lambda: [1, 3, 5])
    run_id: str | None = None
    project_id: str | None = None


class ImportReportIn(BaseModel):
    report: dict[str, Any]
    run_id: str | None = None


def create_app(workbench: Workbench, tokens: dict[str, Identity] | None = None) -> FastAPI:
    """Build the API app; ``tokens=None`` disables auth (local dev only)."""
    app = FastAPI(title="care-workbench", version="0.1.0")

    def identify(authorization: str | None = Header(default=None)) -> Identity:
        if tokens is None:
            return Identity(actor="anonymous", role="developer")
        if not authorization or not authorization.startswith("Bearer "):
            raise AuthFailure("missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        identity = tokens.get(token)
        if identity is None:
            raise AuthFailure("unknown token")
        return identity

    @app.exception_handler(CareError)
    async def care_error_handler(_request: Request, exc: CareError):
        status = HTTP_STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status, content=exc.to_payload())

    @app.exception_handler(ValueError)
    async def value_error_handler(_request: Request, exc: ValueError):
        return JSONResponse(
            status_code=HTTP_STATUS_BY_CODE["invalid_request"],
            content={"code": "invalid_request", "message": str(exc), "details": {}},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- projects ---------------------------------------------------------

    @app.post("/projects")
    def create_project(payload: ProjectIn, identity: Identity = Depends(identify)):
        return workbench.create_project(
            project_id=payload.project_id,
            name=payload.name,
            min_sme=payload.min_sme,
            min_developer=payload.min_developer,
            merge_subphases=payload.merge_subphases,
        )

    @app.get("/projects")
    def list_projects(identity: Identity = Depends(identify)):
        return workbench.list_projects()

    @app.get("/projects/{project_id}")
    def get_project(project_id: str, identity: Identity = Depends(identify)):
        return workbench.project(project_id)

    # -- artifacts -----------------------------------------------------------

    @app.get("/projects/{project_id}/artifacts")
    def list_artifacts(project_id: str, identity: Identity = Depends(identify)):
        return workbench.list_artifacts(project_id)

    @app.post("/projects/{project_id}/artifacts")
    def create_artifact(
        project_id: str, payload: ArtifactIn, identity: Identity = Depends(identify)
    ):
        return workbench.create_artifact(
            project_id, payload.phase, payload.kind, payload.content, identity.role
        )

    @app.get("/projects/{project_id}/artifacts/{artifact_id}")
    def get_artifact(
        project_id: str,
        artifact_id: str,
        version: int | None = Query(default=None),
        identity: Identity = Depends(identify),
    ):
        return workbench.artifact(project_id, artifact_id, version)

    @app.get("/projects/{project_id}/artifacts/{artifact_id}/lineage")
    def get_lineage(project_id: str, artifact_id: str, identity: Identity = Depends(identify)):
        return workbench.lineage(project_id, artifact_id)

    # -- revisions -------------------------------------------------------------

    @app.post("/projects/{project_id}/revisions")
    def propose_revision(
        project_id: str, payload: RevisionIn, identity: Identity = Depends(identify)
    ):
        return workbench.propose_revision(
            project_id,
            payload.artifact_id,
            payload.base_version,
            payload.diff,
            payload.rationale,
            identity.role,
        )

    @app.get("/projects/{project_id}/revisions")
    def list_revisions(
        project_id: str,
        artifact_id: str | None = Query(default=None),
        identity: Identity = Depends(identify),
    ):
        return workbench.list_proposals(project_id, artifact_id)

    @app.post("/projects/{project_id}/revisions/{proposal_id}/decision")
    def decide_revision(
        project_id: str,
        proposal_id: str,
        payload: DecisionIn,
        identity: Identity = Depends(identify),
    ):
        return workbench.decide_revision(project_id, proposal_id, payload.decision)

    @app.post("/projects/{project_id}/diff-proposals")
    def feedback_diff(
        project_id: str, payload: FeedbackDiffIn, identity: Identity = Depends(identify)
    ):
        return workbench.propose_feedback_diff(project_id, payload.artifact_id, payload.feedback)

    # -- approvals ----------------------------------------------------------------

    @app.post("/projects/{project_id}/approvals")
    def record_approval(
        project_id: str, payload: ApprovalIn, identity: Identity = Depends(identify)
    ):
        return workbench.record_approval(
            project_id,
            payload.artifact_id,
            payload.version,
            identity.role,
            identity.actor,
            payload.verdict,
            payload.note,
        )

    # -- gates ---------------------------------------------------------------------

    @app.get("/projects/{project_id}/gate-status")
    def gate_status(
        project_id: str,
        phase: str | None = Query(default=None),
        identity: Identity = Depends(identify),
    ):
        return workbench.gate_status(project_id, phase)

    @app.post("/projects/{project_id}/advance")
    def advance(project_id: str, payload: TransitionIn, identity: Identity = Depends(identify)):
        return workbench.advance(project_id, idempotency_key=payload.idempotency_key)

    @app.post("/projects/{project_id}/revisit")
    def revisit(project_id: str, payload: TransitionIn, identity: Identity = Depends(identify)):
        if payload.target_phase is None:
            raise ValueError("target_phase is required")
        return workbench.revisit(
            project_id, payload.target_phase, idempotency_key=payload.idempotency_key
        )

    # -- sessions --------------------------------------------------------------------

    @app.post("/projects/{project_id}/sessions")
    def create_session(
        project_id: str, payload: SessionIn, identity: Identity = Depends(identify)
    ):
        return workbench.create_session(project_id, payload.phase, payload.session_id)

    @app.get("/projects/{project_id}/sessions")
    def list_sessions(project_id: str, identity: Identity = Depends(identify)):
        return workbench.list_sessions(project_id)

    @app.get("/projects/{project_id}/sessions/{session_id}")
    def get_session(project_id: str, session_id: str, identity: Identity = Depends(identify)):
        return workbench.session(project_id, session_id)

    @app.get("/projects/{project_id}/sessions/{session_id}/next-questions")
    def next_questions(project_id: str, session_id: str, identity: Identity = Depends(identify)):
        return workbench.next_questions(project_id, session_id)

    @app.post("/projects/{project_id}/sessions/{session_id}/answers")
    def answer(
        project_id: str,
        session_id: str,
        payload: AnswerIn,
        identity: Identity = Depends(identify),
    ):
        return workbench.answer_question(
            project_id, session_id, payload.entry_id, payload.text, identity.role
        )

    @app.post("/projects/{project_id}/sessions/{session_id}/draft")
    def draft(
        project_id: str,
        session_id: str,
        payload: DraftIn,
        identity: Identity = Depends(identify),
    ):
        return workbench.draft(project_id, session_id, payload.kind)

    # -- benchmarks and runs ------------------------------------------------------------

    @app.post("/benchmarks/generate")
    def generate(payload: GenerateIn, identity: Identity = Depends(identify)):
        return workbench.bench_generate(
            corpus_path=payload.corpus,
            catalog_path=payload.catalog,
            out_path=payload.out,
            name=payload.name,
            max_attempts=payload.max_attempts,
            discard_log_path=payload.discard_log,
        )

    @app.post("/runs")
    def run(payload: RunIn, identity: Identity = Depends(identify)):
        return workbench.bench_run(
            agent=payload.agent,
            benchmark_path=payload.benchmark,
            catalog_path=payload.catalog,
            cmr_cassette=payload.cmr_cassette,
            transport_spec=payload.transport,
            ks=tuple(payload.ks),
            run_id=payload.run_id,
            project_id=payload.project_id,
        )

    @app.post("/runs/import")
    def import_report(payload: ImportReportIn, identity: Identity = Depends(identify)):
        return workbench.import_report(payload.report, payload.run_id)

    @app.get("/runs")
    def list_runs(identity: Identity = Depends(identify)):
        return workbench.list_runs()

    @app.get("/runs/two-gate")
    def two_gate_endpoint(
        care: str,
        base: str,
        care_gold: str | None = Query(default=None),
        base_gold: str | None = Query(default=None),
        gold_k: int = Query(default=5),
        identity: Identity = Depends(identify),
    ):
        return workbench.bench_two_gate(care, base, care_gold, base_gold, gold_primary_k=gold_k)

    @app.get("/runs/{run_id}/report")
    def run_report(run_id: str, identity: Identity = Depends(identify)):
        return workbench.run_report(run_id)

    return app
