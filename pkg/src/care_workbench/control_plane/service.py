"""Shared service layer behind the HTTP API and the CLI.

Every state mutation reachable from either surface goes through this one
class, which is what makes API/CLI parity a structural property rather than
a test hope. Responses are plain JSON-shaped dicts so both surfaces can
serialize them untouched.

On-disk layout under the workbench root::

    <root>/<project_id>/...   # artifact store per-project layout
    <root>/runs/<run_id>/     # report.json, agent.json, traces/<query>.jsonl

``runs`` and ``helper-prompt-modules`` are reserved names and cannot be used
as project ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..agent_runtime import (
    AgentSpec,
    BUILTIN_BASELINE_AGENT,
    BUILTIN_CARE_AGENT,
    assemble_care_prompt,
    built_in_agent,
)
from ..artifact_store import ArtifactStore, GatePolicy
from ..benchmark import (
    EvaluationReport,
    evaluate,
    load_benchmark,
    load_report,
    render_agent_table,
    render_two_gate_report,
    save_report,
    two_gate,
)
from ..cmr import CatalogSource, CmrReplay, FixtureCatalog, LiveCmrClient
from ..domain import ArtifactKind, PhaseId, Role, Verdict
from ..errors import NotFoundError
from ..helper_agent import HelperAgent, SessionStore
from ..ids import IdFactory
from ..phase_engine import PhaseEngine, required_artifacts
from ..stub_models import StubDrafter, StubRetrievalModel
from ..synthgen import generate_synthetic, load_corpus
from ..transport import (
    FunctionTransport,
    ModelTransport,
    RecordingTransport,
    ReplayTransport,
)

RESERVED_PROJECT_IDS = {"runs", "helper-prompt-modules"}


def resolve_transport(spec: str | None, purpose: str = "helper") -> ModelTransport:
    """Build a transport from a mode string.

    Modes: ``stub`` (deterministic offline model, the default),
    ``replay:<cassette>`` (recorded exchanges only), ``record:<cassette>``
    (stub wrapped in a recorder). A live LLM client can be plugged in
    programmatically through the same interface.
    """
    spec = spec or "stub"
    if spec == "stub":
        stub = StubDrafter() if purpose == "helper" else StubRetrievalModel()
        return FunctionTransport(stub, name=f"stub-{purpose}")
    mode, _, path = spec.partition(":")
    if mode == "replay" and path:
        return ReplayTransport(path)
    if mode == "record" and path:
        stub = StubDrafter() if purpose == "helper" else StubRetrievalModel()
        return RecordingTransport(FunctionTransport(stub, name=f"stub-{purpose}"), path)
    raise ValueError(f"unknown transport spec {spec!r}")


@dataclass
class RunPaths:
    run_dir: Path

    @property
    def report(self) -> Path:
        return self.run_dir / "report.json"

    @property
    def agent(self) -> Path:
        return self.run_dir / "agent.json"

    @property
    def traces(self) -> Path:
        # Trace files sit directly in the run directory: runs/<run_id>/<query_id>.jsonl
        return self.run_dir


class Workbench:
    """One workbench rooted at a directory (or fully in memory)."""

    def __init__(
        self,
        root: Path | str | None = None,
        helper_transport: ModelTransport | None = None,
        id_factory: IdFactory | None = None,
    ):
        self.root = Path(root) if root is not None else None
        self.store = ArtifactStore(self.root, id_factory=id_factory)
        self.engine = PhaseEngine(self.store)
        self.sessions = SessionStore(self.root, id_factory=id_factory)
        self.helper_transport = helper_transport or resolve_transport("stub", "helper")
        self.helper = HelperAgent(self.store, self.helper_transport, self.sessions)
        self._idempotent: dict[tuple[str, str, str], dict[str, Any]] = {}
        self._memory_runs: dict[str, EvaluationReport] = {}
        self._ids = id_factory or IdFactory()

    # -- projects -----------------------------------------------------------

    def create_project(
        self,
        project_id: str | None = None,
        name: str = "",
        min_sme: int = 1,
        min_developer: int = 1,
        merge_subphases: bool = False,
    ) -> dict[str, Any]:
        if project_id in RESERVED_PROJECT_IDS:
            raise ValueError(f"{project_id!r} is a reserved name")
        policy = GatePolicy(
            min_sme=min_sme, min_developer=min_developer, merge_subphases=merge_subphases
        )
        project_id = self.store.create_project(project_id, name=name, policy=policy)
        return self.project(project_id)

    def list_projects(self) -> list[dict[str, Any]]:
        return [p for p in self.store.list_projects() if p["project_id"] not in RESERVED_PROJECT_IDS]

    def project(self, project_id: str) -> dict[str, Any]:
        """Project state plus the full phase ladder with gate badges."""
        state = self.engine.state(project_id)
        ladder = []
        for phase in PhaseId:
            gate = self.engine.gate_status(project_id, phase)
            ladder.append(
                {
                    "phase": phase.value,
                    "required": [k.value for k in required_artifacts(phase)],
                    "gate": gate.to_json(),
                    "current": phase is state.current_phase,
                }
            )
        return {
            "project_id": project_id,
            "name": self.store.project_name(project_id),
            "current_phase": state.current_phase.value,
            "history": state.history,
            "phases": ladder,
        }

    # -- artifacts -----------------------------------------------------------

    def create_artifact(
        self, project_id: str, phase: str, kind: str, content: str, role: str
    ) -> dict[str, Any]:
        artifact = self.store.create_artifact(
            project_id, PhaseId(phase), ArtifactKind(kind), content, Role(role)
        )
        return artifact.to_json()

    def list_artifacts(self, project_id: str) -> list[dict[str, Any]]:
        return [a.to_json(include_content=False) for a in self.store.list_artifacts(project_id)]

    def artifact(self, project_id: str, artifact_id: str, version: int | None = None) -> dict[str, Any]:
        return self.store.get_artifact(project_id, artifact_id, version).to_json()

    def lineage(self, project_id: str, artifact_id: str) -> list[dict[str, Any]]:
        return [v.to_json() for v in self.store.artifact_lineage(project_id, artifact_id)]

    def propose_revision(
        self,
        project_id: str,
        artifact_id: str,
        base_version: int,
        diff: str,
        rationale: str,
        role: str,
    ) -> dict[str, Any]:
        proposal = self.store.propose_revision(
            project_id, artifact_id, base_version, diff, rationale, Role(role)
        )
        return proposal.to_json()

    def list_proposals(self, project_id: str, artifact_id: str | None = None) -> list[dict[str, Any]]:
        return [p.to_json() for p in self.store.list_proposals(project_id, artifact_id)]

    def decide_revision(self, project_id: str, proposal_id: str, decision: str) -> dict[str, Any]:
        artifact = self.store.apply_revision(project_id, proposal_id, decision)
        return artifact.to_json()

    def record_approval(
        self,
        project_id: str,
        artifact_id: str,
        version: int,
        role: str,
        actor: str,
        verdict: str,
        note: str = "",
    ) -> dict[str, Any]:
        approval = self.store.record_approval(
            project_id, artifact_id, version, Role(role), actor, Verdict(verdict), note
        )
        head = self.store.head(project_id, artifact_id)
        return {"approval": approval.to_json(), "artifact_status": head.status.value}

    # -- gates and transitions --------------------------------------------------

    def gate_status(self, project_id: str, phase: str | None = None) -> dict[str, Any]:
        target = PhaseId(phase) if phase else self.store.current_phase(project_id)
        return self.engine.gate_status(project_id, target).to_json()

    def advance(self, project_id: str, idempotency_key: str | None = None) -> dict[str, Any]:
        return self._transition("advance", project_id, idempotency_key)

    def revisit(
        self, project_id: str, target_phase: str, idempotency_key: str | None = None
    ) -> dict[str, Any]:
        return self._transition("revisit", project_id, idempotency_key, target_phase)

    def _transition(
        self, kind: str, project_id: str, key: str | None, target_phase: str | None = None
    ) -> dict[str, Any]:
        # The cache check and the transition are one atomic step per project,
        # so concurrent retries with the same key cannot double-fire.
        with self.store.project_lock(project_id):
            if key is not None:
                cached = self._idempotent.get((project_id, kind, key))
                if cached is not None:
                    return cached
            if kind == "advance":
                state = self.engine.advance(project_id, idempotency_key=key)
            else:
                state = self.engine.revisit(project_id, PhaseId(target_phase), idempotency_key=key)
            payload = state.to_json()
            if key is not None:
                self._idempotent[(project_id, kind, key)] = payload
            return payload

    # -- elicitation ---------------------------------------------------------------

    def create_session(
        self, project_id: str, phase: str, session_id: str | None = None
    ) -> dict[str, Any]:
        if not self.store.has_project(project_id):
            raise NotFoundError(f"project {project_id!r} not found")
        session = self.helper.new_session(project_id, PhaseId(phase), session_id=session_id)
        return session.to_json()

    def session(self, project_id: str, session_id: str) -> dict[str, Any]:
        return self.sessions.get(project_id, session_id).to_json()

    def list_sessions(self, project_id: str) -> list[dict[str, Any]]:
        return [s.to_json() for s in self.sessions.list_for(project_id)]

    def next_questions(self, project_id: str, session_id: str) -> dict[str, Any]:
        """Generate questions for uncovered dimensions and report coverage.

        The coverage sets are computed server-side; clients render them
        verbatim rather than re-deriving coverage locally.
        """
        from ..dimensions import dimension_ids

        session = self.sessions.get(project_id, session_id)
        self.helper.generate_questions(session)
        answered = sorted(session.answered_dimensions())
        all_dims = dimension_ids(session.phase)
        pending = [
            {
                "entry_id": q.entry_id,
                "dimension_id": q.dimension_id,
                "text": q.text,
            }
            for q in session.pending_questions()
        ]
        return {
            "session_id": session_id,
            "phase": session.phase.value,
            "pending": pending,
            "answered_dimensions": answered,
            "unanswered_dimensions": [d for d in all_dims if d not in answered],
        }

    def answer_question(
        self, project_id: str, session_id: str, entry_id: str, text: str, role: str = "sme"
    ) -> dict[str, Any]:
        session = self.sessions.get(project_id, session_id)
        entry = self.helper.answer_question(session, entry_id, text, author=Role(role))
        return entry.to_json()

    def draft(self, project_id: str, session_id: str, kind: str | None = None) -> dict[str, Any]:
        session = self.sessions.get(project_id, session_id)
        result = self.helper.draft_artifact(session, ArtifactKind(kind) if kind else None)
        return {
            "content": result.draft.content,
            "kind": result.draft.kind.value,
            "phase": result.draft.phase.value,
            "violations": [v.to_json() for v in result.violations],
            "artifact": result.artifact.to_json() if result.artifact else None,
            "proposal": result.proposal.to_json() if result.proposal else None,
        }

    def propose_feedback_diff(
        self, project_id: str, artifact_id: str, feedback: str
    ) -> dict[str, Any]:
        return self.helper.propose_diff(project_id, artifact_id, feedback).to_json()

    # -- benchmarks and runs -----------------------------------------------------------

    def bench_generate(
        self,
        corpus_path: str,
        catalog_path: str,
        out_path: str,
        name: str = "synthetic",
        max_attempts: int = 5,
        discard_log_path: str | None = None,
        transport_spec: str | None = None,
    ) -> dict[str, Any]:
        from ..benchmark import save_benchmark

        corpus = load_corpus(corpus_path)
        catalog = FixtureCatalog.load(catalog_path)
        transport = resolve_transport(transport_spec, "helper")
        result = generate_synthetic(corpus, transport, catalog, max_attempts=max_attempts, name=name)
        save_benchmark(result.benchmark, out_path)
        if discard_log_path:
            result.write_discard_log(discard_log_path)
        return {
            "benchmark": out_path,
            "emitted": len(result.benchmark.queries),
            "discarded": [d.to_json() for d in result.discards],
        }

    def _agent_spec(self, agent: str, project_id: str | None) -> AgentSpec:
        if agent in (BUILTIN_CARE_AGENT, BUILTIN_BASELINE_AGENT):
            return built_in_agent(agent)
        if agent == "project" and project_id:
            prompt = assemble_care_prompt(self.store, project_id)
            return AgentSpec(name=f"care:{project_id}", system_prompt=prompt)
        raise ValueError(
            f"unknown agent {agent!r}; use {BUILTIN_CARE_AGENT}, {BUILTIN_BASELINE_AGENT}, "
            "or 'project' with a project id"
        )

    def _catalog(self, catalog_path: str | None, cmr_cassette: str | None, live: bool) -> CatalogSource:
        if catalog_path:
            return FixtureCatalog.load(catalog_path)
        if cmr_cassette:
            return CmrReplay(cmr_cassette)
        if live:
            return LiveCmrClient()
        raise ValueError("a catalog fixture, a cmr cassette, or live mode is required")

    def bench_run(
        self,
        agent: str,
        benchmark_path: str,
        catalog_path: str | None = None,
        cmr_cassette: str | None = None,
        live_cmr: bool = False,
        transport_spec: str | None = None,
        ks: tuple[int, ...] = (1, 3, 5),
        run_id: str | None = None,
        project_id: str | None = None,
    ) -> dict[str, Any]:
        """Evaluate one agent over a benchmark; registers the run."""
        benchmark = load_benchmark(benchmark_path)
        catalog = self._catalog(catalog_path, cmr_cassette, live_cmr)
        transport = resolve_transport(transport_spec, "retrieval")
        spec = self._agent_spec(agent, project_id)
        run_id = run_id or f"run-{self._ids.new_id()}"
        paths = self._run_paths(run_id)
        report = evaluate(
            spec,
            benchmark,
            transport,
            catalog,
            ks=ks,
            trace_dir=paths.traces if paths else None,
        )
        if project_id:
            gate = self.engine.gate_status(project_id, PhaseId.P5_benchmark)
            report.pre_gate = not gate.satisfied
        self._register_run(run_id, report, spec)
        return {"run_id": run_id, "report": report.to_json(), "table": render_agent_table(report)}

    def import_report(self, report_payload: dict[str, Any], run_id: str | None = None) -> dict[str, Any]:
        """Register an externally produced report (e.g. published numbers)."""
        report = EvaluationReport.from_json(report_payload)
        run_id = run_id or f"run-{self._ids.new_id()}"
        self._register_run(run_id, report, None)
        return {"run_id": run_id, "report": report.to_json()}

    def _run_paths(self, run_id: str) -> RunPaths | None:
        if self.root is None:
            return None
        return RunPaths(self.root / "runs" / run_id)

    def _register_run(self, run_id: str, report: EvaluationReport, spec: AgentSpec | None) -> None:
        self._memory_runs[run_id] = report
        paths = self._run_paths(run_id)
        if paths is None:
            return
        paths.run_dir.mkdir(parents=True, exist_ok=True)
        save_report(report, paths.report)
        (paths.run_dir / "report.txt").write_text(render_agent_table(report), encoding="utf-8")
        if spec is not None:
            paths.agent.write_text(
                json.dumps(spec.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )

    def list_runs(self) -> list[dict[str, Any]]:
        runs = set(self._memory_runs)
        if self.root is not None and (self.root / "runs").exists():
            runs.update(p.name for p in (self.root / "runs").iterdir() if (p / "report.json").exists())
        out = []
        for run_id in sorted(runs):
            report = self._load_run(run_id)
            out.append(
                {
                    "run_id": run_id,
                    "agent_name": report.agent_name,
                    "benchmark_name": report.benchmark_name,
                    "gate": report.gate,
                    "n": report.n,
                }
            )
        return out

    def _load_run(self, run_id: str) -> EvaluationReport:
        if run_id in self._memory_runs:
            return self._memory_runs[run_id]
        paths = self._run_paths(run_id)
        if paths is not None and paths.report.exists():
            return load_report(paths.report)
        raise NotFoundError(f"run {run_id!r} not found", details={"run_id": run_id})

    def run_report(self, run_id: str) -> dict[str, Any]:
        report = self._load_run(run_id)
        return {"run_id": run_id, "report": report.to_json(), "table": render_agent_table(report)}

    def bench_two_gate(
        self,
        care_run: str,
        base_run: str,
        care_gold_run: str | None = None,
        base_gold_run: str | None = None,
        gold_primary_k: int = 5,
    ) -> dict[str, Any]:
        care = self._load_run(care_run)
        base = self._load_run(base_run)
        care_gold = self._load_run(care_gold_run) if care_gold_run else None
        base_gold = self._load_run(base_gold_run) if base_gold_run else None
        decision = two_gate(care, base, care_gold, base_gold, gold_primary_k=gold_primary_k)
        sections = [(f"{care.gate.capitalize()} (n={care.n})", care, base)]
        if care_gold is not None and base_gold is not None:
            sections.append((f"{care_gold.gate.capitalize()} (n={care_gold.n})", care_gold, base_gold))
        reports = {
            "synthetic": {"care": care.to_json(), "baseline": base.to_json()},
        }
        if care_gold is not None and base_gold is not None:
            reports["gold"] = {"care": care_gold.to_json(), "baseline": base_gold.to_json()}
        return {
            "decision": decision.to_json(),
            "table": render_two_gate_report(sections),
            "reports": reports,
        }
