"""LLM-backed facilitation: elicitation, summarization, drafting, diffing.

The helper agent converts informal stakeholder answers into reviewable
artifacts. It can ask phase-aligned questions for every uncovered checklist
dimension, summarize intent with per-bullet provenance, draft artifact
documents from a session transcript, and propose unified-diff revisions from
reviewer feedback. It can never approve anything: every write path goes
through the store as the ``helper_agent`` role, which the store refuses to
accept approvals from.

Faithfulness is checked structurally, not semantically: every normative
bullet must cite transcript entries (``[e:a4]``) or prior artifacts
(``[art:<id>]``), and every answered dimension must surface in some bullet.
Semantic fidelity stays with the human reviewers at the gates.

Prompt modules for question generation are themselves versioned artifacts in
a reserved project (one per phase, under that phase's own kind), so prompt
changes are auditable like any other engineering object; packaged defaults
under ``prompts/`` are used until a project overrides them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .artifact_store import Artifact, ArtifactStore, RevisionProposal
from .diffs import make_unified_diff
from .dimensions import ElicitationDimension, dimension_ids, dimensions_for
from .domain import ArtifactKind, PhaseId, REQUIRED_ARTIFACTS, Role, kind_legal_for_phase
from .errors import IllegalKindForPhase, MalformedDiff, NotFoundError
from .templates import (
    SECTIONS,
    TITLES,
    load_template,
    metadata_block,
    split_sections,
    validate_document,
)
from .transport import ModelRequest, ModelTransport, RetryingTransport, RetryPolicy

#: Reserved project holding the versioned question-generation prompt modules.
RESERVED_PROMPT_PROJECT = "helper-prompt-modules"

_QUESTION_LINE = re.compile(r"^- \[(?P<dim>[a-z0-9_]+)\]\s*(?P<text>.+?)\s*$")
_ANNOTATION = re.compile(r"\[(?P<ref>(?:e|art):[^\]\s]+)\]")
_BULLET_LINE = re.compile(r"^- (?P<text>.+?)\s*$")

_PHASE_FOCUS: dict[PhaseId, str] = {
    PhaseId.P1_scope: "Understand the user and their tasks before anything else.",
    PhaseId.P2_1_tools: "Pin down tools, data sources, and system constraints.",
    PhaseId.P2_2_context: "Pin down context access, retrieval strategy, and memory boundaries.",
    PhaseId.P2_3_output: "Pin down output formats, citations, and degradation behavior.",
    PhaseId.P3_1_guardrails: "Capture safety boundaries and guardrails.",
    PhaseId.P3_2_reasoning: "Capture the reasoning strategy the prompt must implement.",
    PhaseId.P4_prompt: "Gather what the prompt architecture must include.",
    PhaseId.P5_benchmark: "Gather what a credible benchmark needs.",
}


@dataclass
class TranscriptEntry:
    entry_id: str
    kind: str  # question | answer | summary
    text: str
    author: Role
    dimension_id: str | None = None
    answers_entry_id: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "entry_id": self.entry_id,
            "kind": self.kind,
            "text": self.text,
            "author": self.author.value,
            "dimension_id": self.dimension_id,
            "answers_entry_id": self.answers_entry_id,
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "TranscriptEntry":
        return cls(
            entry_id=payload["entry_id"],
            kind=payload["kind"],
            text=payload["text"],
            author=Role(payload["author"]),
            dimension_id=payload.get("dimension_id"),
            answers_entry_id=payload.get("answers_entry_id"),
        )


@dataclass
class ElicitationSession:
    session_id: str
    project_id: str
    phase: PhaseId
    transcript: list[TranscriptEntry] = field(default_factory=list)

    def next_entry_id(self) -> str:
        # Sequential ids keep replayed sessions byte-identical.
        return f"e{len(self.transcript) + 1}"

    def entry(self, entry_id: str) -> TranscriptEntry:
        for item in self.transcript:
            if item.entry_id == entry_id:
                return item
        raise NotFoundError(
            f"session has no entry {entry_id!r}",
            details={"session_id": self.session_id, "entry_id": entry_id},
        )

    def dimension_of(self, entry_id: str) -> str | None:
        """Dimension an entry speaks to (answers resolve via their question)."""
        item = self.entry(entry_id)
        if item.kind == "question":
            return item.dimension_id
        if item.kind == "answer" and item.answers_entry_id:
            return self.entry(item.answers_entry_id).dimension_id
        return None

    def answered_dimensions(self) -> set[str]:
        answered: set[str] = set()
        for item in self.transcript:
            if item.kind == "answer":
                dim = self.dimension_of(item.entry_id)
                if dim:
                    answered.add(dim)
        return answered

    def open_question_dimensions(self) -> set[str]:
        answered_questions = {
            item.answers_entry_id for item in self.transcript if item.kind == "answer"
        }
        return {
            item.dimension_id
            for item in self.transcript
            if item.kind == "question"
            and item.dimension_id
            and item.entry_id not in answered_questions
        }

    def pending_questions(self) -> list[TranscriptEntry]:
        answered_questions = {
            item.answers_entry_id for item in self.transcript if item.kind == "answer"
        }
        return [
            item
            for item in self.transcript
            if item.kind == "question" and item.entry_id not in answered_questions
        ]

    def to_json(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "project_id": self.project_id,
            "phase": self.phase.value,
            "transcript": [e.to_json() for e in self.transcript],
        }


class SessionStore:
    """Append-only session persistence under ``<root>/<project>/sessions/``."""

    def __init__(self, root: Path | str | None = None, id_factory=None):
        from .ids import IdFactory

        self.root = Path(root) if root is not None else None
        self._ids = id_factory or IdFactory()
        self._sessions: dict[tuple[str, str], ElicitationSession] = {}
        if self.root is not None:
            for path in sorted(self.root.glob("*/sessions/*.jsonl")):
                session = _read_session_file(path)
                self._sessions[(session.project_id, session.session_id)] = session

    def create(self, project_id: str, phase: PhaseId, session_id: str | None = None) -> ElicitationSession:
        session = ElicitationSession(
            session_id=session_id or self._ids.new_id(), project_id=project_id, phase=phase
        )
        self._sessions[(project_id, session.session_id)] = session
        path = self._path(session)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            header = {
                "session_id": session.session_id,
                "project_id": project_id,
                "phase": phase.value,
            }
            path.write_text(json.dumps(header, sort_keys=True) + "\n", encoding="utf-8")
        return session

    def get(self, project_id: str, session_id: str) -> ElicitationSession:
        session = self._sessions.get((project_id, session_id))
        if session is None:
            raise NotFoundError(
                f"session {session_id!r} not found", details={"session_id": session_id}
            )
        return session

    def list_for(self, project_id: str) -> list[ElicitationSession]:
        return [s for (pid, _), s in sorted(self._sessions.items()) if pid == project_id]

    def append(self, session: ElicitationSession, entry: TranscriptEntry) -> TranscriptEntry:
        session.transcript.append(entry)
        path = self._path(session)
        if path is not None:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
        return entry

    def _path(self, session: ElicitationSession) -> Path | None:
        if self.root is None:
            return None
        return self.root / session.project_id / "sessions" / f"{session.session_id}.jsonl"


def _read_session_file(path: Path) -> ElicitationSession:
    lines = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    header = lines[0]
    return ElicitationSession(
        session_id=header["session_id"],
        project_id=header["project_id"],
        phase=PhaseId(header["phase"]),
        transcript=[TranscriptEntry.from_json(e) for e in lines[1:]],
    )


# -- drafts and faithfulness ---------------------------------------------------


@dataclass
class ProvenanceBullet:
    section: str
    text: str  # without annotations
    refs: list[str]  # "e:<entry_id>" and "art:<artifact_id>" references


@dataclass
class DraftProposal:
    kind: ArtifactKind
    phase: PhaseId
    content: str
    bullets: list[ProvenanceBullet]

    @property
    def provenance(self) -> dict[str, list[str]]:
        return {b.text: list(b.refs) for b in self.bullets}


@dataclass
class FaithfulnessViolation:
    kind: str  # introduced_requirement | omitted_constraint
    bullet: str | None = None
    dimension_id: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "bullet": self.bullet, "dimension_id": self.dimension_id}


def extract_bullets(content: str) -> list[ProvenanceBullet]:
    """Pull normative bullets (with their annotations) out of a document."""
    bullets: list[ProvenanceBullet] = []
    _, sections = split_sections(content)
    for section in sections:
        for line in section.body.splitlines():
            match = _BULLET_LINE.match(line.strip())
            if not match:
                continue
            raw = match.group("text")
            refs = [m.group("ref") for m in _ANNOTATION.finditer(raw)]
            text = _ANNOTATION.sub("", raw).strip()
            bullets.append(ProvenanceBullet(section=section.title, text=text, refs=refs))
    return bullets


def check_faithfulness(
    draft: DraftProposal, session: ElicitationSession
) -> list[FaithfulnessViolation]:
    """Structural faithfulness: no unsourced bullets, no dropped answers.

    Pure function of the draft and the session; never consults a transport.
    Returns one ``introduced_requirement`` violation per bullet whose
    provenance is empty or unresolvable, and one ``omitted_constraint`` per
    answered dimension no bullet traces back to. An empty list means the
    draft passes.
    """
    transcript_ids = {e.entry_id for e in session.transcript}
    violations: list[FaithfulnessViolation] = []
    covered: set[str] = set()
    for bullet in draft.bullets:
        valid_refs = []
        for ref in bullet.refs:
            scheme, _, target = ref.partition(":")
            if scheme == "e" and target in transcript_ids:
                valid_refs.append(ref)
                dim = session.dimension_of(target)
                if dim:
                    covered.add(dim)
            elif scheme == "art" and target:
                valid_refs.append(ref)
        if not valid_refs:
            violations.append(
                FaithfulnessViolation(kind="introduced_requirement", bullet=bullet.text)
            )
    for dim_id in dimension_ids(session.phase):
        if dim_id in session.answered_dimensions() and dim_id not in covered:
            violations.append(
                FaithfulnessViolation(kind="omitted_constraint", dimension_id=dim_id)
            )
    return violations


@dataclass
class SummaryResult:
    text: str
    provenance: dict[str, list[str]]
    rejected: list[str]


@dataclass
class DraftResult:
    draft: DraftProposal
    artifact: Artifact | None
    proposal: RevisionProposal | None
    violations: list[FaithfulnessViolation]


# -- prompt rendering -------------------------------------------------------------


def packaged_prompt(name: str) -> str:
    return resources.files("care_workbench").joinpath(f"prompts/{name}.md").read_text("utf-8")


class PromptLibrary:
    """Resolves prompt modules, preferring versioned store overrides."""

    def __init__(self, store: ArtifactStore | None = None):
        self.store = store

    def seed(self) -> None:
        """Create the reserved project and per-phase question modules once."""
        if self.store is None or self.store.has_project(RESERVED_PROMPT_PROJECT):
            return
        self.store.create_project(RESERVED_PROMPT_PROJECT, name="Helper prompt modules")
        base = packaged_prompt("question_generation")
        for phase, kinds in REQUIRED_ARTIFACTS.items():
            content = metadata_block(kinds[0], phase) + "\n" + base
            self.store.create_artifact(
                RESERVED_PROMPT_PROJECT, phase, kinds[0], content, Role.helper_agent
            )

    def question_template(self, phase: PhaseId) -> str:
        if self.store is not None and self.store.has_project(RESERVED_PROMPT_PROJECT):
            heads = self.store.heads_for(
                RESERVED_PROMPT_PROJECT, phase, REQUIRED_ARTIFACTS[phase][0]
            )
            if heads:
                return _strip_metadata(heads[0].content)
        return packaged_prompt("question_generation")

    def render_questions(
        self,
        phase: PhaseId,
        prior_context: str,
        transcript: str,
        dimensions: list[ElicitationDimension],
    ) -> str:
        dim_lines = "\n".join(f"- {d.dimension_id}: {d.description}" for d in dimensions)
        return self.question_template(phase).format(
            phase=phase.value,
            phase_focus=_PHASE_FOCUS[phase],
            prior_context=prior_context or "(none)",
            transcript=transcript or "(empty)",
            dimensions=dim_lines,
        )


def _strip_metadata(content: str) -> str:
    lines = content.splitlines()
    cut = 0
    for i, line in enumerate(lines):
        if not line.strip():
            cut = i + 1
            break
        if ":" not in line:
            break
    return "\n".join(lines[cut:]).lstrip("\n")


def render_transcript(session: ElicitationSession) -> str:
    lines = []
    for entry in session.transcript:
        text = " ".join(entry.text.split())
        if entry.kind == "question":
            lines.append(f"[{entry.entry_id}] question ({entry.dimension_id}): {text}")
        elif entry.kind == "answer":
            dim = session.dimension_of(entry.entry_id) or "?"
            lines.append(
                f"[{entry.entry_id}] answer to {entry.answers_entry_id} ({dim}): {text}"
            )
        else:
            lines.append(f"[{entry.entry_id}] summary: {text}")
    return "\n".join(lines)


# -- the helper agent ---------------------------------------------------------------


class HelperAgent:
    """Facilitation operations bound to one store, transport, and session store."""

    def __init__(
        self,
        store: ArtifactStore,
        transport: ModelTransport,
        sessions: SessionStore | None = None,
        retry_policy: RetryPolicy | None = None,
        prompts: PromptLibrary | None = None,
    ):
        self.store = store
        self.transport = RetryingTransport(transport, retry_policy)
        self.sessions = sessions or SessionStore(root=None)
        self.prompts = prompts or PromptLibrary(store)

    # -- elicitation ------------------------------------------------------------

    def new_session(
        self, project_id: str, phase: PhaseId, session_id: str | None = None
    ) -> ElicitationSession:
        return self.sessions.create(project_id, phase, session_id=session_id)

    def generate_questions(
        self,
        session: ElicitationSession,
        prior_artifacts: list[Artifact] | None = None,
    ) -> list[TranscriptEntry]:
        """Ask one question per uncovered dimension of the session's phase.

        Coverage is guaranteed structurally: any target dimension the model
        response skips gets a deterministic fallback question, so after this
        call every unanswered dimension has an open question.
        """
        dims = dimensions_for(session.phase)
        answered = session.answered_dimensions()
        open_dims = session.open_question_dimensions()
        targets = [d for d in dims if d.dimension_id not in answered and d.dimension_id not in open_dims]
        if not targets:
            return []
        self.prompts.seed()
        prior = prior_artifacts
        if prior is None:
            prior = self._prior_context_artifacts(session.project_id, session.phase)
        prompt = self.prompts.render_questions(
            phase=session.phase,
            prior_context=_context_bundle(prior),
            transcript=render_transcript(session),
            dimensions=targets,
        )
        response = self.transport.complete(
            ModelRequest(system_text=prompt, messages=(("user", "Generate the questions now."),))
        )
        proposed: dict[str, str] = {}
        for line in response.splitlines():
            match = _QUESTION_LINE.match(line.strip())
            if match:
                proposed.setdefault(match.group("dim"), match.group("text"))
        created: list[TranscriptEntry] = []
        for dim in targets:
            text = proposed.get(
                dim.dimension_id, f"Could you walk us through {dim.description}?"
            )
            entry = TranscriptEntry(
                entry_id=session.next_entry_id(),
                kind="question",
                text=text,
                author=Role.helper_agent,
                dimension_id=dim.dimension_id,
            )
            self.sessions.append(session, entry)
            created.append(entry)
        return created

    def answer_question(
        self,
        session: ElicitationSession,
        entry_id: str,
        text: str,
        author: Role = Role.sme,
    ) -> TranscriptEntry:
        question = session.entry(entry_id)
        if question.kind != "question":
            raise ValueError(f"entry {entry_id!r} is a {question.kind}, not a question")
        entry = TranscriptEntry(
            entry_id=session.next_entry_id(),
            kind="answer",
            text=text,
            author=author,
            answers_entry_id=entry_id,
        )
        return self.sessions.append(session, entry)

    def summarize_intent(self, session: ElicitationSession) -> SummaryResult:
        """Summarize the transcript as provenance-annotated bullets.

        Bullets the validator cannot map to any transcript entry are rejected
        rather than silently kept, and are reported back to the caller.
        """
        prompt = packaged_prompt("summarize_intent").format(
            phase=session.phase.value, transcript=render_transcript(session)
        )
        response = self.transport.complete(
            ModelRequest(system_text=prompt, messages=(("user", "Summarize now."),))
        )
        transcript_ids = {e.entry_id for e in session.transcript}
        kept: list[str] = []
        provenance: dict[str, list[str]] = {}
        rejected: list[str] = []
        for line in response.splitlines():
            match = _BULLET_LINE.match(line.strip())
            if not match:
                continue
            raw = match.group("text")
            refs = [m.group("ref") for m in _ANNOTATION.finditer(raw)]
            entry_refs = [r for r in refs if r.partition(":")[2] in transcript_ids and r.startswith("e:")]
            text = _ANNOTATION.sub("", raw).strip()
            if entry_refs:
                kept.append(f"- {text} " + "".join(f"[{r}]" for r in refs))
                provenance[text] = refs
            else:
                rejected.append(text)
        summary_text = "\n".join(kept)
        if summary_text:
            self.sessions.append(
                session,
                TranscriptEntry(
                    entry_id=session.next_entry_id(),
                    kind="summary",
                    text=summary_text,
                    author=Role.helper_agent,
                ),
            )
        return SummaryResult(text=summary_text, provenance=provenance, rejected=rejected)

    # -- drafting -----------------------------------------------------------------

    def draft_artifact(
        self,
        session: ElicitationSession,
        kind: ArtifactKind | None = None,
        prior_artifacts: list[Artifact] | None = None,
    ) -> DraftResult:
        """Draft the phase artifact from the session and submit it to the store.

        Creates version 1 when the project has no artifact of this kind yet,
        otherwise opens a revision proposal against the current head. The
        returned result carries the structural faithfulness violations (if
        any) for the human reviewers; it never self-approves.
        """
        phase = session.phase
        kind = kind or REQUIRED_ARTIFACTS[phase][0]
        if not kind_legal_for_phase(kind, phase):
            raise IllegalKindForPhase(
                f"kind {kind.value} is not legal for phase {phase.value}",
                details={"kind": kind.value, "phase": phase.value},
            )
        prior = prior_artifacts
        if prior is None:
            prior = self._prior_context_artifacts(session.project_id, phase)
        sections = "\n".join(
            f"- {title} [dimension: {dim}]"
            for title, dim in zip(SECTIONS[kind], dimension_ids(phase))
        )
        prompt = packaged_prompt("draft_artifact").format(
            kind=kind.value,
            phase=phase.value,
            title=TITLES[kind],
            sections=sections,
            skeleton=load_template(kind).rstrip("\n"),
            prior_context=_context_bundle(prior),
            transcript=render_transcript(session),
        )
        content = self.transport.complete(
            ModelRequest(system_text=prompt, messages=(("user", "Draft the document now."),))
        )
        if not content.endswith("\n"):
            content += "\n"
        validate_document(kind, content)
        draft = DraftProposal(kind=kind, phase=phase, content=content, bullets=extract_bullets(content))
        violations = check_faithfulness(draft, session)

        heads = self.store.heads_for(session.project_id, phase, kind)
        artifact = proposal = None
        if not heads:
            artifact = self.store.create_artifact(
                session.project_id, phase, kind, content, Role.helper_agent
            )
        else:
            head = heads[0]
            if head.content == content:
                artifact = head
            else:
                diff = make_unified_diff(head.content, content)
                proposal = self.store.propose_revision(
                    session.project_id,
                    head.artifact_id,
                    head.version,
                    diff,
                    rationale=f"Redraft from elicitation session {session.session_id}",
                    proposed_by=Role.helper_agent,
                )
        return DraftResult(draft=draft, artifact=artifact, proposal=proposal, violations=violations)

    def propose_diff(self, project_id: str, artifact_id: str, feedback_text: str) -> RevisionProposal:
        """Turn reviewer feedback into a revision proposal against the head."""
        head = self.store.head(project_id, artifact_id)
        prompt = packaged_prompt("revise_artifact").format(
            kind=head.kind.value, content=head.content, feedback=feedback_text
        )
        revised = self.transport.complete(
            ModelRequest(system_text=prompt, messages=(("user", "Revise the document now."),))
        )
        if not revised.endswith("\n"):
            revised += "\n"
        if revised == head.content:
            raise MalformedDiff("revision produced no change to the document")
        diff = make_unified_diff(head.content, revised)
        return self.store.propose_revision(
            project_id,
            artifact_id,
            head.version,
            diff,
            rationale=f'Applied reviewer feedback: "{feedback_text}"',
            proposed_by=Role.helper_agent,
        )

    # -- context assembly -------------------------------------------------------------

    def assemble_prompt_context(self, project_id: str, phase: PhaseId) -> str:
        """Approved artifacts from earlier phases as one byte-stable bundle."""
        return _context_bundle(self._prior_context_artifacts(project_id, phase))

    def _prior_context_artifacts(self, project_id: str, phase: PhaseId) -> list[Artifact]:
        return [
            a for a in self.store.approved_context(project_id, phase) if a.phase < phase
        ]


def _context_bundle(artifacts: list[Artifact]) -> str:
    blocks = []
    for a in sorted(artifacts, key=lambda a: (a.phase.index, a.artifact_id)):
        blocks.append(
            f"===== artifact {a.kind.value} {a.artifact_id} v{a.version} ({a.phase.value}) =====\n"
            f"{a.content}"
        )
    return "\n".join(blocks)
