"""Constant-time pairwise query answering from two node labels.

Whether some u-to-v path matches the query reduces to boolean-matrix algebra
over the decode tables: locate the least common ancestor of u and v in the
compressed parse tree by longest common label prefix, cross between the two
divergent children there, and fold transfer matrices up u's side and down
v's side.  All multiplications involve precomputed per-production matrices
(and power-oracle lookups for recursion segments), so the work per call is
bounded by twice the parse-tree depth bound plus the crossing, independent
of run size.

Convention: the zero-length path from u to u matches exactly when the query
accepts the empty word.  Every oracle in the test suite mirrors this.
"""

from __future__ import annotations

from .boolmat import BoolMat
from .derivation import Label, is_rec_entry
from .intersect import DecodeTables


class LabelError(ValueError):
    pass


def lcp_split(label_u: Label, label_v: Label) -> tuple[Label, Label, Label]:
    """Split off the maximal common entry prefix (the LCA's label)."""
    d = 0
    limit = min(len(label_u), len(label_v))
    while d < limit and label_u[d] == label_v[d]:
        d += 1
    return label_u[:d], label_u[d:], label_v[d:]


def _check_entry(tables: DecodeTables, entry) -> None:
    if len(entry) == 2:
        k, i = entry
        try:
            prod = tables.spec.production(k)
        except (KeyError, IndexError):
            raise LabelError(f"label references unknown production {k}") from None
        if not 1 <= i <= prod.rhs.size:
            raise LabelError(f"label references position {i} outside production {k}")
    elif len(entry) == 3:
        s, t, i = entry
        if not 1 <= s <= len(tables.analysis.cycles):
            raise LabelError(f"label references unknown cycle {s}")
        if not 1 <= t <= len(tables.analysis.cycle(s)):
            raise LabelError(f"label references cycle edge {t} outside cycle {s}")
        if i < 1:
            raise LabelError(f"bad unfolding ordinal {i}")
    else:
        raise LabelError(f"malformed label entry {entry!r}")


def _up_chain(entries: Label, tables: DecodeTables) -> BoolMat:
    """Transfer from out(u) to the out-ports of the subtree the entries hang off."""
    acc = BoolMat.identity(tables.n_states)
    for entry in reversed(entries):
        _check_entry(tables, entry)
        if is_rec_entry(entry):
            s, t, i = entry
            acc = acc.mul(tables.power_out(s, t, i - 1, i - 1))
        else:
            k, i = entry
            acc = acc.mul(tables.up[(k, i)])
    return acc


def _down_chain(entries: Label, tables: DecodeTables) -> BoolMat:
    """Transfer from the subtree's in-ports down to in(v)."""
    acc = BoolMat.identity(tables.n_states)
    for entry in entries:
        _check_entry(tables, entry)
        if is_rec_entry(entry):
            s, t, j = entry
            acc = acc.mul(tables.power_in(s, t, 1, j - 1))
        else:
            k, j = entry
            acc = acc.mul(tables.down[(k, j)])
    return acc


def answer_pairwise_safe_query(label_u: Label, label_v: Label,
                               tables: DecodeTables) -> bool:
    """Does some u-to-v path match the (safe) query the tables were built for?"""
    dfa = tables.dfa
    if label_u == label_v:
        return dfa.start in dfa.accepting
    prefix, rest_u, rest_v = lcp_split(label_u, label_v)
    if not rest_u or not rest_v:
        raise LabelError("one label is a prefix of the other; labels must name leaves")
    a, b = rest_u[0], rest_v[0]
    _check_entry(tables, a)
    _check_entry(tables, b)

    if not is_rec_entry(a) and not is_rec_entry(b):
        k, i = a
        k2, j = b
        if k != k2:
            raise LabelError(f"labels diverge into different productions {k} and {k2}")
        m = _up_chain(rest_u[1:], tables)
        m = m.mul(tables.cross[(k, i, j)])
        m = m.mul(_down_chain(rest_v[1:], tables))
    elif is_rec_entry(a) and is_rec_entry(b):
        s, t, i = a
        s2, t2, j = b
        if (s, t) != (s2, t2):
            raise LabelError("labels diverge into different recursion unfoldings")
        if i < j:
            # v sits in a deeper unfolding: cross into the next cycle child,
            # step down j-i-1 children, then descend within child j
            if not rest_u[1:] or is_rec_entry(rest_u[1]):
                raise LabelError("recursion child label must continue with a production entry")
            k_i, x = rest_u[1]
            p = tables.cycle_position(k_i)
            if p is None:
                raise LabelError(f"production {k_i} does not continue a cycle")
            m = _up_chain(rest_u[2:], tables)
            m = m.mul(tables.cross[(k_i, x, p)])
            m = m.mul(tables.power_in(s, t, i + 1, j - i - 1))
            m = m.mul(_down_chain(rest_v[1:], tables))
        else:
            # u sits deeper: climb out i-j-1 children, then cross from the
            # recursive position to v's entry position inside child j
            if not rest_v[1:] or is_rec_entry(rest_v[1]):
                raise LabelError("recursion child label must continue with a production entry")
            k_j, y = rest_v[1]
            p = tables.cycle_position(k_j)
            if p is None:
                raise LabelError(f"production {k_j} does not continue a cycle")
            m = _up_chain(rest_u[1:], tables)
            m = m.mul(tables.power_out(s, t, i - 1, i - 1 - j))
            m = m.mul(tables.cross[(k_j, p, y)])
            m = m.mul(_down_chain(rest_v[2:], tables))
    else:
        raise LabelError("labels diverge at incompatible entry kinds; runs differ")

    q0 = dfa.start
    return any(m.get(q0, qf) for qf in dfa.accepting)


def decode_reach(label_u: Label, label_v: Label, reach_tables: DecodeTables) -> bool:
    """Plain reachability: the 1-state specialization of the pairwise decoder."""
    if reach_tables.n_states != 1:
        raise ValueError("decode_reach needs tables built from the universal DFA")
    return answer_pairwise_safe_query(label_u, label_v, reach_tables)
