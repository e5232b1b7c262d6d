"""Artifact templates: metadata block, required sections, validation.

Every artifact document starts with a fixed machine-checkable metadata block
(plain ``key: value`` lines terminated by a blank line) carrying ``kind``,
``phase``, and ``version``, followed by a title heading and one ``##`` section
per required template section. Template files ship with the package under
``templates/<kind>.md`` and are the single source of the section order used
when assembling prompts.

The ``version`` header value is informational at draft time; the store's
version counter is authoritative.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .dimensions import dimension_ids
from .domain import ArtifactKind, PHASE_OF_KIND, PhaseId
from .errors import TemplateViolation

TITLES: dict[ArtifactKind, str] = {
    ArtifactKind.scope_spec: "Scope Specification",
    ArtifactKind.tools_spec: "Tools Specification",
    ArtifactKind.context_spec: "Context Specification",
    ArtifactKind.output_format_spec: "Output Format Specification",
    ArtifactKind.guardrails_spec: "Guardrails Specification",
    ArtifactKind.reasoning_policy: "Reasoning Policy",
    ArtifactKind.prompt_architecture: "Prompt Architecture",
    ArtifactKind.benchmark_requirements: "Benchmark Requirements",
}

#: Required ``##`` sections per kind, in template order. For elicited kinds the
#: sections mirror the phase's dimension checklist one-to-one; the prompt
#: architecture additionally carries a Grounding section holding injection
#: slots for approved upstream specs.
SECTIONS: dict[ArtifactKind, list[str]] = {
    ArtifactKind.scope_spec: [
        "User Role And Expertise",
        "Tasks",
        "Workflow Steps",
        "Pain Points",
        "Non-Delegable Decisions",
        "Outcomes And Success",
    ],
    ArtifactKind.tools_spec: [
        "Tools APIs And Datasets",
        "IO Schemas",
        "Limits Quotas And Permissions",
        "Provenance And Metadata",
        "Policy Security And Governance",
    ],
    ArtifactKind.context_spec: [
        "Context Access",
        "Retrieval Strategy",
        "Summarization Rules",
        "Memory Boundaries",
    ],
    ArtifactKind.output_format_spec: [
        "Output Templates",
        "Citation And Provenance",
        "Deferral Rules",
        "Degradation Behavior",
        "Output Styles",
    ],
    ArtifactKind.guardrails_spec: [
        "Forbidden Actions",
        "Sensitive Domains",
        "Never Guess",
        "Review And Escalation",
        "Norms",
    ],
    ArtifactKind.reasoning_policy: [
        "Decomposition Logic",
        "When To Ask",
        "Retrieve Compare Critique Synthesize",
        "Uncertainty Handling",
        "Tool Selection Criteria",
        "Escalation Rules",
    ],
    ArtifactKind.prompt_architecture: [
        "Persona",
        "Flipped Interaction",
        "Planning",
        "Critique And Verification",
        "Output Patterns",
        "Tool Use Scaffolding",
        "Reflection",
        "Grounding",
    ],
    ArtifactKind.benchmark_requirements: [
        "Scenario Tasks",
        "Test Prompts",
        "Expected Outputs",
        "Rubrics",
        "Failure Modes",
        "Acceptance Criteria",
    ],
}

#: Grounding-injection slot markers allowed inside a prompt_architecture
#: document; assembly replaces them with the named kind's approved head.
GROUNDING_SLOT = re.compile(r"\[\[grounding:(?P<kind>[a-z_]+)\]\]")

_SECTION_HEADING = re.compile(r"^## (?P<title>.+?)\s*$", re.MULTILINE)


def section_of_dimension(kind: ArtifactKind, dimension_id: str) -> str:
    """Template section that holds requirements for one elicitation dimension."""
    phase = PHASE_OF_KIND[kind]
    ids = dimension_ids(phase)
    sections = SECTIONS[kind]
    try:
        return sections[ids.index(dimension_id)]
    except (ValueError, IndexError):
        raise KeyError(f"{kind.value} has no section for dimension {dimension_id!r}") from None


def metadata_block(kind: ArtifactKind, phase: PhaseId, version: int = 1) -> str:
    return f"kind: {kind.value}\nphase: {phase.value}\nversion: {version}\n"


def parse_metadata_block(content: str) -> dict[str, str]:
    """Parse the leading ``key: value`` block (everything before the first blank line)."""
    meta: dict[str, str] = {}
    for line in content.splitlines():
        if not line.strip():
            break
        if ":" not in line:
            break
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    return meta


def section_titles(content: str) -> list[str]:
    return [m.group("title") for m in _SECTION_HEADING.finditer(content)]


def validate_document(kind: ArtifactKind, content: str) -> None:
    """Check metadata and required sections; raise TemplateViolation if off.

    Extra sections are allowed; missing required sections or a metadata block
    disagreeing with the kind/phase are violations.
    """
    meta = parse_metadata_block(content)
    phase = PHASE_OF_KIND[kind]
    problems: list[str] = []
    if meta.get("kind") != kind.value:
        problems.append(f"metadata kind is {meta.get('kind')!r}, expected {kind.value!r}")
    if meta.get("phase") != phase.value:
        problems.append(f"metadata phase is {meta.get('phase')!r}, expected {phase.value!r}")
    present = set(section_titles(content))
    for required in SECTIONS[kind]:
        if required not in present:
            problems.append(f"missing section {required!r}")
    if problems:
        raise TemplateViolation(
            f"document violates the {kind.value} template",
            details={"problems": problems, "kind": kind.value},
        )


def load_template(kind: ArtifactKind) -> str:
    """Packaged skeleton document for a kind."""
    return (
        resources.files("care_workbench").joinpath(f"templates/{kind.value}.md").read_text("utf-8")
    )


@dataclass
class Section:
    title: str
    body: str


def split_sections(content: str) -> tuple[str, list[Section]]:
    """Split a document into its preamble and ``##`` sections."""
    matches = list(_SECTION_HEADING.finditer(content))
    if not matches:
        return content, []
    preamble = content[: matches[0].start()]
    sections = []
    for i, match in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(content)
        sections.append(Section(title=match.group("title"), body=content[match.end():end].strip("\n")))
    return preamble, sections


def reorder_sections(kind: ArtifactKind, content: str) -> list[Section]:
    """Document sections arranged in template order (extras appended last)."""
    _, sections = split_sections(content)
    by_title = {s.title: s for s in sections}
    ordered = [by_title[t] for t in SECTIONS[kind] if t in by_title]
    extras = [s for s in sections if s.title not in SECTIONS[kind]]
    return ordered + extras
