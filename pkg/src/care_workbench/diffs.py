"""Line-based unified diffs: generation, parsing, and application.

Revision proposals carry standard unified-diff text so humans can review them
and the store can apply them deterministically. Application is strict: every
context and removal line must match the base text exactly, otherwise the diff
is reported as conflicting rather than fuzzily applied.

Artifact content is normalized to end with a newline before it is stored
(see ``artifact_store``), which keeps diff text well-formed; the helpers here
still tolerate a missing final newline on input.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field

from .errors import DiffConflict, MalformedDiff

_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def split_lines(text: str) -> list[str]:
    """Split into lines keeping line endings, like ``str.splitlines(True)``."""
    return text.splitlines(keepends=True)


def make_unified_diff(old: str, new: str, from_label: str = "a", to_label: str = "b") -> str:
    """Unified diff text transforming ``old`` into ``new``."""
    lines = difflib.unified_diff(
        split_lines(old), split_lines(new), fromfile=from_label, tofile=to_label
    )
    out = []
    for line in lines:
        out.append(line if line.endswith("\n") else line + "\n")
    return "".join(out)


@dataclass
class Hunk:
    old_start: int  # 1-based; 0 when the old file is empty
    old_count: int
    new_start: int
    new_count: int
    lines: list[tuple[str, str]] = field(default_factory=list)  # (marker, content)


def parse_unified_diff(diff_text: str) -> list[Hunk]:
    """Parse unified-diff text into hunks.

    Raises:
        MalformedDiff: on structural problems (bad headers, bad markers,
            line counts that do not match the hunk header).
    """
    if not diff_text.strip():
        raise MalformedDiff("diff text is empty")
    hunks: list[Hunk] = []
    current: Hunk | None = None
    for raw in diff_text.splitlines():
        if raw.startswith("---") or raw.startswith("+++"):
            if current is not None:
                raise MalformedDiff("file header inside hunk body")
            continue
        match = _HUNK_HEADER.match(raw)
        if match:
            if current is not None:
                _check_hunk_counts(current)
            current = Hunk(
                old_start=int(match.group(1)),
                old_count=int(match.group(2) or "1"),
                new_start=int(match.group(3)),
                new_count=int(match.group(4) or "1"),
            )
            hunks.append(current)
            continue
        if current is None:
            # Allow leading junk (e.g. "diff --git" style headers) but nothing
            # that looks like hunk content.
            if raw.startswith(("+", "-", " ")):
                raise MalformedDiff("hunk content before any @@ header")
            continue
        if raw == r"\ No newline at end of file":
            if not current.lines:
                raise MalformedDiff("newline marker before any hunk line")
            marker, content = current.lines[-1]
            current.lines[-1] = (marker, content.rstrip("\n"))
            continue
        if raw == "":
            # A context line whose content is an empty line.
            current.lines.append((" ", "\n"))
            continue
        marker, content = raw[0], raw[1:] + "\n"
        if marker not in ("+", "-", " "):
            raise MalformedDiff(f"unknown line marker {marker!r}")
        current.lines.append((marker, content))
    if current is None:
        raise MalformedDiff("no hunks found")
    _check_hunk_counts(current)
    return hunks


def _check_hunk_counts(hunk: Hunk) -> None:
    old = sum(1 for marker, _ in hunk.lines if marker in (" ", "-"))
    new = sum(1 for marker, _ in hunk.lines if marker in (" ", "+"))
    if old != hunk.old_count or new != hunk.new_count:
        raise MalformedDiff(
            f"hunk counts do not match body: header -{hunk.old_count}/+{hunk.new_count}, "
            f"body -{old}/+{new}"
        )


def apply_unified_diff(base: str, diff_text: str) -> str:
    """Apply unified-diff text to ``base`` and return the new text.

    Raises:
        MalformedDiff: if the diff cannot be parsed.
        DiffConflict: if any context or removal line disagrees with ``base``.
    """
    hunks = parse_unified_diff(diff_text)
    base_lines = split_lines(base)
    result: list[str] = []
    cursor = 0  # index into base_lines of the next unconsumed line
    for hunk in hunks:
        # old_start is 1-based; a start of 0 with count 0 means "insert at top".
        anchor = hunk.old_start - 1 if hunk.old_count > 0 else hunk.old_start
        if anchor < cursor or anchor > len(base_lines):
            raise DiffConflict(f"hunk at line {hunk.old_start} overlaps or exceeds base")
        result.extend(base_lines[cursor:anchor])
        cursor = anchor
        for marker, content in hunk.lines:
            if marker == "+":
                result.append(content)
                continue
            if cursor >= len(base_lines):
                raise DiffConflict("hunk runs past end of base content")
            if not _lines_match(base_lines[cursor], content):
                raise DiffConflict(
                    f"base line {cursor + 1} does not match diff "
                    f"({base_lines[cursor]!r} != {content!r})"
                )
            if marker == " ":
                result.append(base_lines[cursor])
            cursor += 1
    result.extend(base_lines[cursor:])
    return "".join(result)


def _lines_match(base_line: str, diff_line: str) -> bool:
    if base_line == diff_line:
        return True
    # Tolerate final lines without a trailing newline on either side.
    return base_line.rstrip("\n") == diff_line.rstrip("\n")
