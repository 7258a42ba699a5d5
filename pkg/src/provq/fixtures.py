"""Bundled sample workflow used across tests, docs, and CLI smoke runs.

The grammar has one recursive module (A), a choice of implementations for it,
and a parallel branch through B, so it exercises every labeling case:
plain replacement, a linear recursion unfolded several times, and parallel
paths with different state behavior.  Edge tags follow the source-module
naming convention.
"""

from __future__ import annotations

from .derivation import Run, derive
from .grammar import Production, WorkflowSpec, make_rhs, make_spec


def sample_spec() -> WorkflowSpec:
    """S fans out through A (recursive) and B (not) and re-joins at b."""
    p1 = Production(1, "S", make_rhs(
        ["c", "A", "B", "b"],
        [(1, 2, "c"), (1, 3, "c"), (2, 4, "A"), (3, 4, "B")]))
    p2 = Production(2, "A", make_rhs(
        ["a", "A", "d"],
        [(1, 2, "a"), (2, 3, "A")]))
    p3 = Production(3, "A", make_rhs(
        ["e", "e"],
        [(1, 2, "e")]))
    p4 = Production(4, "B", make_rhs(
        ["b", "b"],
        [(1, 2, "b")]))
    return make_spec("sample", "S", [p1, p2, p3, p4])


def sample_run() -> Run:
    """The reference run: A unfolded twice then closed, B expanded once.

    10 nodes, 10 edges; labels include the recursion entries, e.g.
    a:1 -> (1,2)(1,1,1)(2,1) and b:2 -> (1,3)(4,1).
    """
    return derive(sample_spec(), [
        ("S:1", 1),
        ("A:1", 2),
        ("A:2", 2),
        ("A:3", 3),
        ("B:1", 4),
    ])
