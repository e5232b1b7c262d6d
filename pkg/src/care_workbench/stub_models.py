"""Deterministic offline stand-ins for the language model.

Two stubs cover the two prompt families. ``StubDrafter`` understands the
facilitation prompts (question generation, summarization, drafting, revision,
query writing) by parsing the ``TASK:`` directive and the structured blocks
each prompt carries. ``StubRetrievalModel`` drives the agent tool loop: it
issues a catalog search, optionally refines it when the system prompt asks
for reformulation, and answers with the ids it saw.

Both are pure functions of the request bytes, which makes every offline run
reproducible and lets cassettes recorded from them stand in for a live model
in CI. They follow instructions literally; they do not paraphrase.
"""

from __future__ import annotations

import json
import re
from typing import Any

from .transport import ModelRequest

_TASK_RE = re.compile(r"^TASK: (?P<task>[a-z_]+)$", re.MULTILINE)
_FIELD_RE = re.compile(r"^(?P<key>[A-Z_]+): (?P<value>.*)$", re.MULTILINE)
_DIM_LINE = re.compile(r"^- (?P<dim>[a-z0-9_]+): (?P<desc>.+)$")
_SECTION_LINE = re.compile(r"^- (?P<title>.+?) \[dimension: (?P<dim>[a-z0-9_]+)\]$")
_ANSWER_LINE = re.compile(
    r"^\[(?P<entry>e\d+)\] answer to (?P<question>e\d+) \((?P<dim>[a-z0-9_?]+)\): (?P<text>.+)$"
)
_REPLACE_DIRECTIVE = re.compile(r"replace:\s*(?P<old>.+?)\s*=>\s*(?P<new>.+)")


def _block(text: str, tag: str) -> str:
    """Extract a `<<<tag ... >>>` block from a prompt."""
    match = re.search(rf"<<<{tag}\n(?P<body>.*?)\n>>>", text, re.DOTALL)
    return match.group("body") if match else ""


def _section_after(text: str, heading: str) -> list[str]:
    """Lines of the block following ``heading`` up to the next blank line."""
    lines = text.splitlines()
    try:
        start = next(i for i, line in enumerate(lines) if line.startswith(heading))
    except StopIteration:
        return []
    body = []
    for line in lines[start + 1 :]:
        if not line.strip():
            break
        body.append(line)
    return body


def _fields(text: str) -> dict[str, str]:
    return {m.group("key"): m.group("value") for m in _FIELD_RE.finditer(text)}


def _sentences(text: str) -> list[str]:
    parts = [p.strip() for p in re.split(r"(?<=[.!?])\s+", " ".join(text.split())) if p.strip()]
    return [p.rstrip(".!?") for p in parts]


class StubDrafter:
    """Deterministic facilitation model for offline elicitation and drafting."""

    name = "stub-drafter"

    def __call__(self, request: ModelRequest) -> str:
        prompt = request.system_text
        match = _TASK_RE.search(prompt)
        if not match:
            return ""
        task = match.group("task")
        handler = getattr(self, f"_{task}", None)
        return handler(prompt) if handler else ""

    # Each handler mirrors the instructions of one packaged prompt module.

    def _generate_questions(self, prompt: str) -> str:
        lines = []
        for raw in _section_after(prompt, "Uncovered dimensions:"):
            dim = _DIM_LINE.match(raw.strip())
            if dim:
                desc = dim.group("desc").rstrip(".")
                lines.append(f"- [{dim.group('dim')}] What should we capture about {desc}?")
        return "\n".join(lines)

    def _summarize_intent(self, prompt: str) -> str:
        bullets = []
        for raw in _section_after(prompt, "Transcript:"):
            answer = _ANSWER_LINE.match(raw.strip())
            if answer:
                bullets.append(f"- {answer.group('text')} [e:{answer.group('entry')}]")
        return "\n".join(bullets)

    def _draft_artifact(self, prompt: str) -> str:
        skeleton = _block(prompt, "skeleton")
        dim_of_section: dict[str, str] = {}
        for raw in _section_after(prompt, "Sections to fill"):
            match = _SECTION_LINE.match(raw.strip())
            if match:
                dim_of_section[match.group("title")] = match.group("dim")
        answers_by_dim: dict[str, list[tuple[str, str]]] = {}
        for raw in _section_after(prompt, "Transcript:"):
            answer = _ANSWER_LINE.match(raw.strip())
            if answer:
                answers_by_dim.setdefault(answer.group("dim"), []).append(
                    (answer.group("entry"), answer.group("text"))
                )
        out: list[str] = []
        for line in skeleton.split("\n"):
            out.append(line)
            if line.startswith("## "):
                dim = dim_of_section.get(line[3:].strip())
                for entry_id, text in answers_by_dim.get(dim or "", []):
                    out.append("")
                    out.append(f"- {text} [e:{entry_id}]")
        return "\n".join(out) + "\n"

    def _revise_artifact(self, prompt: str) -> str:
        content = _block(prompt, "document")
        feedback = _block(prompt, "feedback")
        revised = content
        applied = False
        for directive in _REPLACE_DIRECTIVE.finditer(feedback):
            old, new = directive.group("old"), directive.group("new")
            if old in revised:
                revised = revised.replace(old, new, 1)
                applied = True
        if not applied:
            revised = revised.rstrip("\n") + f"\n\n- {' '.join(feedback.split())}\n"
        return revised

    def _draft_query(self, prompt: str) -> str:
        sentences = _sentences(_block(prompt, "document"))
        return sentences[0] if sentences else ""

    def _reformulate_query(self, prompt: str) -> str:
        fields = _fields(prompt)
        attempt = int(fields.get("ATTEMPT", "2"))
        sentences = _sentences(_block(prompt, "document"))
        if not sentences:
            return ""
        return sentences[min(attempt - 1, len(sentences) - 1)]


#: Generic words the engineered prompt tells the model to drop when refining
#: a catalog search; they match too many unrelated collections.
GENERIC_SEARCH_WORDS = frozenset(
    """
    a an and any are at about been browse by chatty can could daily data
    dataset datasets do find for from get give global has have help i in is
    it latest like looking me measurements my need observations of on or our
    over please product products records search searching set sets show some
    that the their them there these they this to up us want we what where
    which with would you
    """.split()
)


def refine_keywords(query: str) -> str:
    """Drop generic words, keeping the distinctive science terms in order."""
    kept = [
        token
        for token in re.findall(r"[A-Za-z0-9]+", query)
        if token.lower() not in GENERIC_SEARCH_WORDS
    ]
    return " ".join(kept)


class StubRetrievalModel:
    """Deterministic fake chat model for the retrieval tool loop.

    Behavior is driven entirely by the system prompt, mirroring how the real
    loop attributes behavior differences to the prompts: a prompt that asks
    for reformulation gets a second, refined search; a minimal prompt gets a
    single literal search. The final answer ranks the ids the model saw,
    refined results first when a refinement was made.
    """

    name = "stub-retrieval"

    def __init__(self, page_size: int = 10):
        self.page_size = page_size

    def __call__(self, request: ModelRequest) -> str:
        user = request.last_message("user")
        query = user[1] if user else ""
        tool_results = [text for role, text in request.messages if role == "tool"]
        iterative = "reformulate" in request.system_text.lower()

        if not tool_results:
            return self._tool_call(query)
        if iterative and len(tool_results) == 1:
            refined = refine_keywords(query)
            if refined and refined != query:
                return self._tool_call(refined)
        return self._answer(tool_results, iterative)

    def _tool_call(self, keyword: str) -> str:
        payload = {"tool": "search_collections", "arguments": {"keyword": keyword, "page_size": self.page_size}}
        return "TOOL_CALL " + json.dumps(payload, sort_keys=True)

    def _answer(self, tool_results: list[str], iterative: bool) -> str:
        ordered_results = list(reversed(tool_results)) if iterative else list(tool_results)
        seen: set[str] = set()
        ranked: list[str] = []
        for raw in ordered_results:
            try:
                payload: dict[str, Any] = json.loads(raw)
            except json.JSONDecodeError:
                continue
            for record in payload.get("records", []):
                concept_id = record.get("concept_id", "")
                if concept_id and concept_id not in seen:
                    seen.add(concept_id)
                    ranked.append(concept_id)
        if not ranked:
            return "No confident match was found in the catalog."
        return "\n".join(ranked)
