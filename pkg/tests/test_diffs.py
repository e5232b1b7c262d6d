from __future__ import annotations

import pytest

from care_workbench.diffs import apply_unified_diff, make_unified_diff, parse_unified_diff
from care_workbench.errors import DiffConflict, MalformedDiff

DOC = "# Title\n\n## Scope\n- item one\n- item two\n\n## Notes\n- note\n"


def test_round_trip_simple_edit():
    new = DOC.replace("- item two\n", "- item two\n- item three\n")
    diff = make_unified_diff(DOC, new)
    assert apply_unified_diff(DOC, diff) == new


def test_round_trip_multiple_hunks():
    lines = [f"line {i}\n" for i in range(60)]
    old = "".join(lines)
    lines[3] = "edited 3\n"
    lines[50] = "edited 50\n"
    new = "".join(lines)
    diff = make_unified_diff(old, new)
    assert len(parse_unified_diff(diff)) == 2
    assert apply_unified_diff(old, diff) == new


def test_round_trip_deletions_and_insertions():
    old = "a\nb\nc\nd\n"
    new = "a\nc\nX\nd\nY\n"
    diff = make_unified_diff(old, new)
    assert apply_unified_diff(old, diff) == new


def test_apply_to_changed_base_conflicts():
    new = DOC.replace("- note\n", "- different note\n")
    diff = make_unified_diff(DOC, new)
    moved = DOC.replace("- note\n", "- someone else edited\n")
    with pytest.raises(DiffConflict):
        apply_unified_diff(moved, diff)


def test_diff_from_empty_content():
    diff = make_unified_diff("", "hello\nworld\n")
    assert apply_unified_diff("", diff) == "hello\nworld\n"


def test_diff_to_empty_content():
    diff = make_unified_diff("hello\nworld\n", "")
    assert apply_unified_diff("hello\nworld\n", diff) == ""


def test_missing_trailing_newline_tolerated():
    old = "a\nb"
    new = "a\nc"
    diff = make_unified_diff(old, new)
    assert apply_unified_diff(old, diff).rstrip("\n") == "a\nc"


@pytest.mark.parametrize(
    "text",
    [
        "",
        "not a diff at all",
        "@@ -1,2 +1,2 @@\n malformed count\n",
        "@@ -1 +1 @@\n?bad marker\n",
    ],
)
def test_malformed_diffs_rejected(text):
    with pytest.raises(MalformedDiff):
        parse_unified_diff(text)


def test_context_mismatch_is_conflict():
    diff = "--- a\n+++ b\n@@ -1,2 +1,2 @@\n context\n-old\n+new\n"
    with pytest.raises(DiffConflict):
        apply_unified_diff("different\nold\n", diff)


def test_empty_line_context_round_trip():
    old = "a\n\nb\n"
    new = "a\n\nb\nc\n"
    diff = make_unified_diff(old, new)
    assert apply_unified_diff(old, diff) == new
