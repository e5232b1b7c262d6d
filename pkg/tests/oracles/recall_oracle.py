"""Brute-force recall oracle, written before and independently of the harness.

No set intersection, no slicing tricks: scan the first k ranked entries one
by one for each expected id and count the hits. Exact rational arithmetic so
comparisons against the production implementation are equality, not
approximate.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


def oracle_recall_at_k(expected: Iterable[str], ranked: Sequence[str], k: int) -> Fraction:
    expected = list(expected)
    if not expected:
        raise ValueError("expected set must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = 0
    for expected_id in expected:
        found = False
        position = 0
        for candidate in ranked:
            if position >= k:
                break
            if candidate == expected_id:
                found = True
                break
            position += 1
        if found:
            hits += 1
    return Fraction(hits, len(expected))


def oracle_mean(values: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for value in values:
        total += value
    return total / len(values)
