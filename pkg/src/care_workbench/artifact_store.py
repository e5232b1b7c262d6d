"""Versioned artifact store with diff-based revisions and role-attributed approvals.

Artifacts are engineering objects: each one is a contiguous sequence of
immutable versions (1..N) of Markdown content, where exactly one version is
the non-superseded head. Edits never mutate a version; they go through a
``RevisionProposal`` carrying unified-diff text that, when accepted, produces
the next version and supersedes the prior head.

Approval is role-attributed. An artifact head becomes ``approved`` only when
the project's gate policy is met (by default at least one ``sme`` and one
``developer`` approve verdict on that same version). The ``helper_agent``
role can author and propose but can never approve: acceptance authority stays
with humans.

Persistence is an append-only JSON-lines event log per project plus one
snapshot file per version::

    <root>/<project_id>/log.jsonl
    <root>/<project_id>/artifacts/<artifact_id>/v<N>.md

Event field names are documented in the README and stable across versions.
A store opened on an existing root rebuilds its state by replaying the log.
Passing ``root=None`` gives a purely in-memory store (used heavily in tests).

Concurrency: all mutations to one project are serialized behind a per-project
re-entrant lock; cross-project operations are independent. Optimistic
``base_version`` checks make interleaved proposals safe.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterator

from .canonical import rfc3339, sha256_hex, utc_now
from .diffs import apply_unified_diff, parse_unified_diff
from .domain import (
    APPROVING_ROLES,
    ArtifactKind,
    ArtifactStatus,
    PhaseId,
    ProposalStatus,
    Role,
    Verdict,
    kind_legal_for_phase,
)
from .errors import (
    DiffConflict,
    EmptyContent,
    HelperAgentCannotApprove,
    IllegalKindForPhase,
    MalformedDiff,
    NotFoundError,
    ProposalNotPending,
    RejectedRequiresRevision,
    StaleBase,
    VersionNotHead,
)
from .ids import IdFactory


@dataclass
class GatePolicy:
    """Approval quorum and gate composition for one project.

    ``min_sme``/``min_developer`` are the per-version approve counts required
    before a head counts as approved (the floor is one of each; projects may
    raise it). ``merge_subphases`` collapses the 2.x and 3.x sub-phase gates
    into two composite gates reviewed at the end of each group.
    """

    min_sme: int = 1
    min_developer: int = 1
    merge_subphases: bool = False

    def __post_init__(self) -> None:
        if self.min_sme < 1 or self.min_developer < 1:
            raise ValueError("gate policy requires at least one approval per role")

    def quorum_met(self, approvals: list["ApprovalRecord"]) -> bool:
        by_role = {Role.sme: 0, Role.developer: 0}
        for record in approvals:
            if record.verdict is Verdict.approve and record.role in by_role:
                by_role[record.role] += 1
        return by_role[Role.sme] >= self.min_sme and by_role[Role.developer] >= self.min_developer

    def to_json(self) -> dict[str, Any]:
        return {
            "min_sme": self.min_sme,
            "min_developer": self.min_developer,
            "merge_subphases": self.merge_subphases,
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "GatePolicy":
        return cls(
            min_sme=int(payload.get("min_sme", 1)),
            min_developer=int(payload.get("min_developer", 1)),
            merge_subphases=bool(payload.get("merge_subphases", False)),
        )


@dataclass
class ApprovalRecord:
    artifact_id: str
    version: int
    role: Role
    actor: str
    verdict: Verdict
    note: str
    timestamp: datetime

    def to_json(self) -> dict[str, Any]:
        return {
            "artifact_id": self.artifact_id,
            "version": self.version,
            "role": self.role.value,
            "actor": self.actor,
            "verdict": self.verdict.value,
            "note": self.note,
            "timestamp": rfc3339(self.timestamp),
        }


@dataclass
class Artifact:
    """One version of an artifact. Content is immutable once created."""

    artifact_id: str
    project_id: str
    phase: PhaseId
    kind: ArtifactKind
    version: int
    content: str
    status: ArtifactStatus
    authored_by: Role
    parent_version: int | None = None
    approvals: list[ApprovalRecord] = field(default_factory=list)

    def to_json(self, include_content: bool = True) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "artifact_id": self.artifact_id,
            "project_id": self.project_id,
            "phase": self.phase.value,
            "kind": self.kind.value,
            "version": self.version,
            "status": self.status.value,
            "authored_by": self.authored_by.value,
            "parent_version": self.parent_version,
            "approvals": [a.to_json() for a in self.approvals],
        }
        if include_content:
            payload["content"] = self.content
        return payload


@dataclass
class RevisionProposal:
    proposal_id: str
    project_id: str
    artifact_id: str
    base_version: int
    diff: str
    rationale: str
    proposed_by: Role
    status: ProposalStatus = ProposalStatus.pending
    result_version: int | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "proposal_id": self.proposal_id,
            "project_id": self.project_id,
            "artifact_id": self.artifact_id,
            "base_version": self.base_version,
            "diff": self.diff,
            "rationale": self.rationale,
            "proposed_by": self.proposed_by.value,
            "status": self.status.value,
            "result_version": self.result_version,
        }


@dataclass
class _ArtifactSeries:
    artifact_id: str
    project_id: str
    phase: PhaseId
    kind: ArtifactKind
    versions: list[Artifact] = field(default_factory=list)
    status_before_review: ArtifactStatus | None = None

    @property
    def head(self) -> Artifact:
        return self.versions[-1]


@dataclass
class _Transition:
    from_phase: PhaseId
    to_phase: PhaseId
    cause: str  # advance | revisit
    timestamp: datetime

    def to_json(self) -> dict[str, Any]:
        return {
            "from_phase": self.from_phase.value,
            "to_phase": self.to_phase.value,
            "cause": self.cause,
            "timestamp": rfc3339(self.timestamp),
        }


@dataclass
class _ProjectRecord:
    project_id: str
    name: str
    policy: GatePolicy
    current_phase: PhaseId = PhaseId.P1_scope
    history: list[_Transition] = field(default_factory=list)
    artifacts: dict[str, _ArtifactSeries] = field(default_factory=dict)
    proposals: dict[str, RevisionProposal] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)


class ArtifactStore:
    """Store for projects, artifacts, proposals, approvals, and phase state.

    Phase *semantics* (gates, advancement, revisitation) live in
    ``phase_engine``; this class owns the data, the locking, and the log.
    """

    def __init__(
        self,
        root: Path | str | None = None,
        *,
        id_factory: IdFactory | None = None,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.root = Path(root) if root is not None else None
        self._ids = id_factory or IdFactory()
        self._clock = clock
        self._projects: dict[str, _ProjectRecord] = {}
        self._registry_lock = threading.Lock()
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._load_all()

    # -- projects ------------------------------------------------------------

    def create_project(
        self,
        project_id: str | None = None,
        name: str = "",
        policy: GatePolicy | None = None,
    ) -> str:
        project_id = project_id or self._ids.new_id()
        with self._registry_lock:
            if project_id in self._projects:
                raise ValueError(f"project {project_id!r} already exists")
            record = _ProjectRecord(project_id=project_id, name=name, policy=policy or GatePolicy())
            self._projects[project_id] = record
        self._log(
            record,
            {
                "event": "project_created",
                "project_id": project_id,
                "name": name,
                "policy": record.policy.to_json(),
            },
        )
        return project_id

    def list_projects(self) -> list[dict[str, Any]]:
        with self._registry_lock:
            records = sorted(self._projects.values(), key=lambda r: r.project_id)
        return [
            {"project_id": r.project_id, "name": r.name, "current_phase": r.current_phase.value}
            for r in records
        ]

    def has_project(self, project_id: str) -> bool:
        with self._registry_lock:
            return project_id in self._projects

    def _project(self, project_id: str) -> _ProjectRecord:
        with self._registry_lock:
            record = self._projects.get(project_id)
        if record is None:
            raise NotFoundError(f"project {project_id!r} not found", details={"project_id": project_id})
        return record

    def project_lock(self, project_id: str) -> threading.RLock:
        """Per-project lock; phase transitions take it around gate+advance."""
        return self._project(project_id).lock

    def project_policy(self, project_id: str) -> GatePolicy:
        return self._project(project_id).policy

    def project_name(self, project_id: str) -> str:
        return self._project(project_id).name

    # -- phase state (mutated by phase_engine under the project lock) ---------

    def current_phase(self, project_id: str) -> PhaseId:
        return self._project(project_id).current_phase

    def history(self, project_id: str) -> list[dict[str, Any]]:
        record = self._project(project_id)
        with record.lock:
            return [t.to_json() for t in record.history]

    def record_transition(
        self,
        project_id: str,
        to_phase: PhaseId,
        cause: str,
        stale_artifacts: list[str] | None = None,
        idempotency_key: str | None = None,
    ) -> None:
        record = self._project(project_id)
        with record.lock:
            transition = _Transition(
                from_phase=record.current_phase,
                to_phase=to_phase,
                cause=cause,
                timestamp=self._clock(),
            )
            record.history.append(transition)
            record.current_phase = to_phase
            self._log(
                record,
                {
                    "event": cause,
                    "project_id": project_id,
                    "from_phase": transition.from_phase.value,
                    "to_phase": to_phase.value,
                    "stale_artifacts": stale_artifacts or [],
                    "idempotency_key": idempotency_key,
                },
            )

    def mark_stale(self, project_id: str, phases: list[PhaseId]) -> list[str]:
        """Mark approved heads of the given phases stale, resetting approvals.

        Content and lineage are untouched; only the head's approval state is
        invalidated, so gates downstream of a revisit must be re-passed.
        Heads that are under review with a previously approved status lose
        that pending restore target too. Returns the affected artifact ids.
        """
        record = self._project(project_id)
        affected: list[str] = []
        with record.lock:
            for series in record.artifacts.values():
                if series.phase in phases and _stale_head(series):
                    affected.append(series.artifact_id)
        return sorted(affected)

    # -- artifacts -------------------------------------------------------------

    def create_artifact(
        self,
        project_id: str,
        phase: PhaseId,
        kind: ArtifactKind,
        content: str,
        authored_by: Role,
    ) -> Artifact:
        if not kind_legal_for_phase(kind, phase):
            raise IllegalKindForPhase(
                f"kind {kind.value} is not legal for phase {phase.value}",
                details={"kind": kind.value, "phase": phase.value},
            )
        if not content or not content.strip():
            raise EmptyContent("artifact content must be non-empty")
        record = self._project(project_id)
        with record.lock:
            artifact_id = self._ids.new_id()
            artifact = Artifact(
                artifact_id=artifact_id,
                project_id=project_id,
                phase=phase,
                kind=kind,
                version=1,
                content=_normalize(content),
                status=ArtifactStatus.draft,
                authored_by=authored_by,
            )
            record.artifacts[artifact_id] = _ArtifactSeries(
                artifact_id=artifact_id,
                project_id=project_id,
                phase=phase,
                kind=kind,
                versions=[artifact],
            )
            self._write_snapshot(artifact)
            self._log(
                record,
                {
                    "event": "create",
                    "project_id": project_id,
                    "artifact_id": artifact_id,
                    "phase": phase.value,
                    "kind": kind.value,
                    "version": 1,
                    "authored_by": authored_by.value,
                    "content_sha256": sha256_hex(artifact.content.encode("utf-8")),
                },
            )
            return replace(artifact)

    def _series(self, project_id: str, artifact_id: str) -> _ArtifactSeries:
        record = self._project(project_id)
        series = record.artifacts.get(artifact_id)
        if series is None:
            raise NotFoundError(
                f"artifact {artifact_id!r} not found in project {project_id!r}",
                details={"artifact_id": artifact_id, "project_id": project_id},
            )
        return series

    def get_artifact(self, project_id: str, artifact_id: str, version: int | None = None) -> Artifact:
        series = self._series(project_id, artifact_id)
        with self._project(project_id).lock:
            if version is None:
                return replace(series.head, approvals=list(series.head.approvals))
            if not 1 <= version <= len(series.versions):
                raise NotFoundError(
                    f"artifact {artifact_id!r} has no version {version}",
                    details={"artifact_id": artifact_id, "version": version},
                )
            found = series.versions[version - 1]
            return replace(found, approvals=list(found.approvals))

    def head(self, project_id: str, artifact_id: str) -> Artifact:
        return self.get_artifact(project_id, artifact_id)

    def list_artifacts(self, project_id: str) -> list[Artifact]:
        """Head version of every artifact in the project, ordered by phase."""
        record = self._project(project_id)
        with record.lock:
            heads = [series.head for series in record.artifacts.values()]
            heads.sort(key=lambda a: (a.phase.index, a.artifact_id))
            return [replace(h, approvals=list(h.approvals)) for h in heads]

    def heads_for(self, project_id: str, phase: PhaseId, kind: ArtifactKind) -> list[Artifact]:
        return [a for a in self.list_artifacts(project_id) if a.phase is phase and a.kind is kind]

    # -- revisions ---------------------------------------------------------------

    def propose_revision(
        self,
        project_id: str,
        artifact_id: str,
        base_version: int,
        diff: str,
        rationale: str,
        proposed_by: Role,
    ) -> RevisionProposal:
        record = self._project(project_id)
        with record.lock:
            series = self._series(project_id, artifact_id)
            head = series.head
            if base_version != head.version:
                raise StaleBase(
                    f"base version {base_version} is not the head ({head.version})",
                    details={"base_version": base_version, "head_version": head.version},
                )
            parse_unified_diff(diff)  # structural check
            try:
                apply_unified_diff(head.content, diff)
            except DiffConflict as exc:
                raise MalformedDiff(
                    f"diff does not apply cleanly to version {base_version}: {exc.message}"
                ) from exc
            proposal = RevisionProposal(
                proposal_id=self._ids.new_id(),
                project_id=project_id,
                artifact_id=artifact_id,
                base_version=base_version,
                diff=diff,
                rationale=rationale,
                proposed_by=proposed_by,
            )
            record.proposals[proposal.proposal_id] = proposal
            if head.status is not ArtifactStatus.under_review:
                series.status_before_review = head.status
                head.status = ArtifactStatus.under_review
            self._log(
                record,
                {
                    "event": "propose",
                    "project_id": project_id,
                    "proposal_id": proposal.proposal_id,
                    "artifact_id": artifact_id,
                    "base_version": base_version,
                    "proposed_by": proposed_by.value,
                    "rationale": rationale,
                    "diff": diff,
                },
            )
            return replace(proposal)

    def get_proposal(self, project_id: str, proposal_id: str) -> RevisionProposal:
        record = self._project(project_id)
        with record.lock:
            proposal = record.proposals.get(proposal_id)
            if proposal is None:
                raise NotFoundError(
                    f"proposal {proposal_id!r} not found", details={"proposal_id": proposal_id}
                )
            return replace(proposal)

    def list_proposals(self, project_id: str, artifact_id: str | None = None) -> list[RevisionProposal]:
        record = self._project(project_id)
        with record.lock:
            proposals = sorted(record.proposals.values(), key=lambda p: p.proposal_id)
            if artifact_id is not None:
                proposals = [p for p in proposals if p.artifact_id == artifact_id]
            return [replace(p) for p in proposals]

    def apply_revision(self, project_id: str, proposal_id: str, decision: str) -> Artifact:
        if decision not in ("accept", "reject"):
            raise ValueError(f"decision must be accept or reject, got {decision!r}")
        record = self._project(project_id)
        with record.lock:
            proposal = record.proposals.get(proposal_id)
            if proposal is None:
                raise NotFoundError(
                    f"proposal {proposal_id!r} not found", details={"proposal_id": proposal_id}
                )
            if proposal.status is not ProposalStatus.pending:
                raise ProposalNotPending(
                    f"proposal {proposal_id!r} is {proposal.status.value}",
                    details={"proposal_id": proposal_id, "status": proposal.status.value},
                )
            series = self._series(project_id, proposal.artifact_id)
            head = series.head
            if proposal.base_version != head.version:
                proposal.status = ProposalStatus.stale
                self._log_applied(record, proposal, decision="stale", new_version=None)
                raise StaleBase(
                    f"head moved to {head.version}; proposal based on {proposal.base_version}",
                    details={"base_version": proposal.base_version, "head_version": head.version},
                )
            if decision == "reject":
                proposal.status = ProposalStatus.rejected
                if not self._pending_for(record, proposal.artifact_id):
                    # Restore only if nothing (approval/rejection) already
                    # moved the head out of review.
                    if head.status is ArtifactStatus.under_review:
                        head.status = series.status_before_review or ArtifactStatus.draft
                    series.status_before_review = None
                self._log_applied(record, proposal, decision="reject", new_version=None)
                return replace(head, approvals=list(head.approvals))
            new_content = _normalize(apply_unified_diff(head.content, proposal.diff))
            new_version = Artifact(
                artifact_id=head.artifact_id,
                project_id=project_id,
                phase=head.phase,
                kind=head.kind,
                version=head.version + 1,
                content=new_content,
                status=ArtifactStatus.draft,
                authored_by=proposal.proposed_by,
                parent_version=head.version,
            )
            head.status = ArtifactStatus.superseded
            series.versions.append(new_version)
            series.status_before_review = None
            proposal.status = ProposalStatus.accepted
            proposal.result_version = new_version.version
            self._write_snapshot(new_version)
            self._log_applied(record, proposal, decision="accept", new_version=new_version.version)
            return replace(new_version)

    def _pending_for(self, record: _ProjectRecord, artifact_id: str) -> list[RevisionProposal]:
        return [
            p
            for p in record.proposals.values()
            if p.artifact_id == artifact_id and p.status is ProposalStatus.pending
        ]

    def _log_applied(
        self, record: _ProjectRecord, proposal: RevisionProposal, decision: str, new_version: int | None
    ) -> None:
        payload: dict[str, Any] = {
            "event": "apply",
            "project_id": record.project_id,
            "proposal_id": proposal.proposal_id,
            "artifact_id": proposal.artifact_id,
            "decision": decision,
            "new_version": new_version,
        }
        if new_version is not None:
            series = record.artifacts[proposal.artifact_id]
            payload["content_sha256"] = sha256_hex(
                series.versions[new_version - 1].content.encode("utf-8")
            )
        self._log(record, payload)

    # -- approvals ----------------------------------------------------------------

    def record_approval(
        self,
        project_id: str,
        artifact_id: str,
        version: int,
        role: Role,
        actor: str,
        verdict: Verdict,
        note: str = "",
    ) -> ApprovalRecord:
        record = self._project(project_id)
        with record.lock:
            series = self._series(project_id, artifact_id)
            head = series.head
            if role not in APPROVING_ROLES:
                raise HelperAgentCannotApprove(
                    "approval verdicts are reserved for sme and developer roles",
                    details={"role": role.value},
                )
            if version != head.version:
                raise VersionNotHead(
                    f"version {version} is not the head ({head.version})",
                    details={"version": version, "head_version": head.version},
                )
            if head.status is ArtifactStatus.rejected:
                raise RejectedRequiresRevision(
                    "a rejected version needs an accepted revision before further review",
                    details={"artifact_id": artifact_id, "version": version},
                )
            approval = ApprovalRecord(
                artifact_id=artifact_id,
                version=version,
                role=role,
                actor=actor,
                verdict=verdict,
                note=note,
                timestamp=self._clock(),
            )
            head.approvals.append(approval)
            if verdict is Verdict.reject:
                head.status = ArtifactStatus.rejected
                series.status_before_review = None
            elif record.policy.quorum_met(head.approvals):
                head.status = ArtifactStatus.approved
                series.status_before_review = None
            self._log(
                record,
                {
                    "event": "approve",
                    "project_id": project_id,
                    "artifact_id": artifact_id,
                    "version": version,
                    "role": role.value,
                    "actor": actor,
                    "verdict": verdict.value,
                    "note": note,
                    "resulting_status": head.status.value,
                },
            )
            return approval

    # -- queries --------------------------------------------------------------------

    def artifact_lineage(self, project_id: str, artifact_id: str) -> list[Artifact]:
        """Every version of an artifact in order, with its approvals."""
        series = self._series(project_id, artifact_id)
        with self._project(project_id).lock:
            return [replace(v, approvals=list(v.approvals)) for v in series.versions]

    def verify_lineage(self, project_id: str, artifact_id: str) -> bool:
        """Replay accepted diffs from v1 and check byte equality per version.

        Raises ``AssertionError`` on any divergence; returns True otherwise.
        """
        record = self._project(project_id)
        with record.lock:
            series = self._series(project_id, artifact_id)
            accepted = sorted(
                (
                    p
                    for p in record.proposals.values()
                    if p.artifact_id == artifact_id and p.status is ProposalStatus.accepted
                ),
                key=lambda p: p.result_version or 0,
            )
            content = series.versions[0].content
            if len(accepted) != len(series.versions) - 1:
                raise AssertionError("accepted revision count does not match version count")
            for proposal in accepted:
                content = _normalize(apply_unified_diff(content, proposal.diff))
                stored = series.versions[(proposal.result_version or 0) - 1].content
                if content != stored:
                    raise AssertionError(
                        f"replayed content for v{proposal.result_version} diverges from snapshot"
                    )
        return True

    def approved_context(self, project_id: str, up_to_phase: PhaseId) -> list[Artifact]:
        """Approved heads of every artifact from phases <= up_to_phase, by phase."""
        return [
            a
            for a in self.list_artifacts(project_id)
            if a.phase <= up_to_phase and a.status is ArtifactStatus.approved
        ]

    # -- persistence ------------------------------------------------------------------

    def _project_dir(self, project_id: str) -> Path | None:
        if self.root is None:
            return None
        return self.root / project_id

    def _write_snapshot(self, artifact: Artifact) -> None:
        base = self._project_dir(artifact.project_id)
        if base is None:
            return
        path = base / "artifacts" / artifact.artifact_id / f"v{artifact.version}.md"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(artifact.content, encoding="utf-8")

    def _log(self, record: _ProjectRecord, payload: dict[str, Any]) -> None:
        base = self._project_dir(record.project_id)
        if base is None:
            return
        base.mkdir(parents=True, exist_ok=True)
        payload = {"ts": rfc3339(self._clock()), **payload}
        with (base / "log.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")

    def _load_all(self) -> None:
        assert self.root is not None
        for log_path in sorted(self.root.glob("*/log.jsonl")):
            self._replay_log(log_path)

    def _replay_log(self, log_path: Path) -> None:
        project_dir = log_path.parent
        for line in log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            self._replay_event(project_dir, event)

    def _replay_event(self, project_dir: Path, event: dict[str, Any]) -> None:
        kind = event["event"]
        project_id = event["project_id"]
        if kind == "project_created":
            record = _ProjectRecord(
                project_id=project_id,
                name=event.get("name", ""),
                policy=GatePolicy.from_json(event.get("policy", {})),
            )
            with self._registry_lock:
                self._projects[project_id] = record
            return
        record = self._projects[project_id]
        if kind == "create":
            artifact_id = event["artifact_id"]
            content = (project_dir / "artifacts" / artifact_id / "v1.md").read_text(encoding="utf-8")
            artifact = Artifact(
                artifact_id=artifact_id,
                project_id=project_id,
                phase=PhaseId(event["phase"]),
                kind=ArtifactKind(event["kind"]),
                version=1,
                content=content,
                status=ArtifactStatus.draft,
                authored_by=Role(event["authored_by"]),
            )
            record.artifacts[artifact_id] = _ArtifactSeries(
                artifact_id=artifact_id,
                project_id=project_id,
                phase=artifact.phase,
                kind=artifact.kind,
                versions=[artifact],
            )
        elif kind == "propose":
            series = record.artifacts[event["artifact_id"]]
            proposal = RevisionProposal(
                proposal_id=event["proposal_id"],
                project_id=project_id,
                artifact_id=event["artifact_id"],
                base_version=event["base_version"],
                diff=event["diff"],
                rationale=event.get("rationale", ""),
                proposed_by=Role(event["proposed_by"]),
            )
            record.proposals[proposal.proposal_id] = proposal
            head = series.head
            if head.status is not ArtifactStatus.under_review:
                series.status_before_review = head.status
                head.status = ArtifactStatus.under_review
        elif kind == "apply":
            proposal = record.proposals[event["proposal_id"]]
            series = record.artifacts[proposal.artifact_id]
            decision = event["decision"]
            if decision == "accept":
                head = series.head
                new_version_num = event["new_version"]
                content = (
                    project_dir / "artifacts" / proposal.artifact_id / f"v{new_version_num}.md"
                ).read_text(encoding="utf-8")
                new_version = Artifact(
                    artifact_id=proposal.artifact_id,
                    project_id=project_id,
                    phase=head.phase,
                    kind=head.kind,
                    version=new_version_num,
                    content=content,
                    status=ArtifactStatus.draft,
                    authored_by=proposal.proposed_by,
                    parent_version=head.version,
                )
                head.status = ArtifactStatus.superseded
                series.versions.append(new_version)
                series.status_before_review = None
                proposal.status = ProposalStatus.accepted
                proposal.result_version = new_version_num
            elif decision == "reject":
                proposal.status = ProposalStatus.rejected
                if not self._pending_for(record, proposal.artifact_id):
                    if series.head.status is ArtifactStatus.under_review:
                        series.head.status = series.status_before_review or ArtifactStatus.draft
                    series.status_before_review = None
            else:  # stale
                proposal.status = ProposalStatus.stale
        elif kind == "approve":
            series = record.artifacts[event["artifact_id"]]
            head = series.head
            approval = ApprovalRecord(
                artifact_id=event["artifact_id"],
                version=event["version"],
                role=Role(event["role"]),
                actor=event["actor"],
                verdict=Verdict(event["verdict"]),
                note=event.get("note", ""),
                timestamp=datetime.fromisoformat(event["ts"].replace("Z", "+00:00")),
            )
            head.approvals.append(approval)
            head.status = ArtifactStatus(event["resulting_status"])
            if head.status in (ArtifactStatus.rejected, ArtifactStatus.approved):
                series.status_before_review = None
        elif kind in ("advance", "revisit"):
            cause = kind
            transition = _Transition(
                from_phase=PhaseId(event["from_phase"]),
                to_phase=PhaseId(event["to_phase"]),
                cause=cause,
                timestamp=datetime.fromisoformat(event["ts"].replace("Z", "+00:00")),
            )
            record.history.append(transition)
            record.current_phase = transition.to_phase
            if cause == "revisit":
                for artifact_id in event.get("stale_artifacts", []):
                    _stale_head(record.artifacts[artifact_id])

    def iter_log(self, project_id: str) -> Iterator[dict[str, Any]]:
        """Yield the raw event log for a project (empty for in-memory stores)."""
        base = self._project_dir(project_id)
        if base is None:
            return
        log_path = base / "log.jsonl"
        if not log_path.exists():
            return
        for line in log_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                yield json.loads(line)


def _stale_head(series: _ArtifactSeries) -> bool:
    """Invalidate a head's approval state after a revisit; True if affected."""
    head = series.head
    if head.status is ArtifactStatus.approved:
        head.status = ArtifactStatus.stale
        head.approvals = []
        return True
    if (
        head.status is ArtifactStatus.under_review
        and series.status_before_review is ArtifactStatus.approved
    ):
        series.status_before_review = ArtifactStatus.stale
        head.approvals = []
        return True
    return False


def _normalize(content: str) -> str:
    """Stored content always ends with a newline so diffs stay well-formed."""
    return content if content.endswith("\n") else content + "\n"
