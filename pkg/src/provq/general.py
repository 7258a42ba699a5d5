"""Evaluation of arbitrary (possibly unsafe) all-pairs queries.

Baselines:

  * join tree: evaluate the expression bottom-up with relational operators
    over an inverted tag index (union, join, semi-naive fixpoint for +/*);
  * indexed filters: for queries shaped ``_* a1 _* ... ak _*``, chain the
    per-tag edge lists through label-decoded reachability tests;
  * product DFS: simulate the query DFA while searching the run from every
    source node; the ground truth for every equivalence suite.

The hybrid splits the expression tree top-down into maximal safe subtrees,
answers each with the filtered all-pairs engine, and composes the results
through the residual skeleton with the join-tree operators.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .allpairs import answer_all_pairs_safe_query, build_label_tree, sorted_by_label
from .derivation import Run
from .grammar import WorkflowSpec
from .intersect import DecodeTables, build_tables, reach_tables
from .decode import decode_reach
from .rpq import (Alt, Concat, Dfa, Epsilon, Plus, RegexAst, Star, Symbol,
                  Wildcard, compile_minimal_dfa)
from .safety import is_safe_query

PairRelation = set[tuple[int, int]]
TagIndex = dict[str, list[tuple[int, int]]]


def build_tag_index(run: Run) -> TagIndex:
    index: TagIndex = defaultdict(list)
    for s, d, tag in run.edges:
        index[tag].append((s, d))
    return dict(index)


def write_tag_index(index: TagIndex, run: Run) -> str:
    names = {n.nid: n.display for n in run.nodes}
    lines = []
    for tag in sorted(index):
        pairs = " ".join(f"{names[u]},{names[v]}" for u, v in index[tag])
        lines.append(f"{tag} {pairs}".rstrip())
    return "\n".join(lines) + "\n"


def read_tag_index(text: str, run: Run) -> TagIndex:
    ids = {n.display: n.nid for n in run.nodes}
    index: TagIndex = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        parts = ln.split()
        pairs = []
        for pair in parts[1:]:
            u, v = pair.split(",")
            pairs.append((ids[u], ids[v]))
        index[parts[0]] = pairs
    return index


# --- relational combinators ----------------------------------------------


def _join(a: PairRelation, b: PairRelation) -> PairRelation:
    by_src: dict[int, list[int]] = defaultdict(list)
    for w, v in b:
        by_src[w].append(v)
    return {(u, v) for u, w in a for v in by_src.get(w, ())}


def _closure(rel: PairRelation, max_iters: list[int] | None = None) -> PairRelation:
    """Transitive closure by semi-naive iteration; optionally records rounds."""
    total = set(rel)
    delta = set(rel)
    by_src: dict[int, list[int]] = defaultdict(list)
    for u, v in rel:
        by_src[u].append(v)
    rounds = 0
    while delta:
        new = {(u, w) for u, v in delta for w in by_src.get(v, ())} - total
        total |= new
        delta = new
        if new:
            rounds += 1
    if max_iters is not None:
        max_iters.append(rounds)
    return total


def eval_join_tree(ast: RegexAst, run: Run, index: TagIndex,
                   iteration_log: list[int] | None = None) -> PairRelation:
    """Bottom-up relational evaluation of the full expression."""
    if isinstance(ast, Symbol):
        return set(index.get(ast.tag, ()))
    if isinstance(ast, Wildcard):
        return {(s, d) for s, d, _ in run.edges}
    if isinstance(ast, Epsilon):
        return {(n.nid, n.nid) for n in run.nodes}
    if isinstance(ast, Concat):
        return _join(eval_join_tree(ast.left, run, index, iteration_log),
                     eval_join_tree(ast.right, run, index, iteration_log))
    if isinstance(ast, Alt):
        return eval_join_tree(ast.left, run, index, iteration_log) | \
            eval_join_tree(ast.right, run, index, iteration_log)
    if isinstance(ast, Plus):
        return _closure(eval_join_tree(ast.inner, run, index, iteration_log), iteration_log)
    if isinstance(ast, Star):
        rel = _closure(eval_join_tree(ast.inner, run, index, iteration_log), iteration_log)
        return rel | {(n.nid, n.nid) for n in run.nodes}
    raise TypeError(f"not a regex node: {ast!r}")


def eval_ifq(symbols: list[str], run: Run, index: TagIndex,
             rtables: DecodeTables) -> PairRelation:
    """Indexed-filter evaluation for ``_* a1 _* ... ak _*`` shapes.

    Edge lists for consecutive symbols are linked by label-decoded
    reachability; the outer wildcard stars then expand chain endpoints
    through the filtered reachability join.
    """
    labels = {n.nid: n.label for n in run.nodes}
    all_nodes = sorted_by_label(run.nodes)
    t_all = build_label_tree(all_nodes, rtables)
    if not symbols:
        return all_pairs_reach_all(t_all, rtables)
    chains: set[tuple[int, int]] = set(index.get(symbols[0], ()))
    for sym in symbols[1:]:
        nxt: set[tuple[int, int]] = set()
        hops = index.get(sym, ())
        for u0, v in chains:
            for x, y in hops:
                if decode_reach(labels[v], labels[x], rtables):
                    nxt.add((u0, y))
        chains = nxt
        if not chains:
            return set()
    by_id = {n.nid: n for n in run.nodes}
    starts = sorted_by_label({by_id[s] for s, _ in chains})
    ends = sorted_by_label({by_id[e] for _, e in chains})
    into = answer_all_pairs_safe_query(t_all, build_label_tree(starts, rtables), rtables)
    outof = answer_all_pairs_safe_query(build_label_tree(ends, rtables), t_all, rtables)
    succ_of_end: dict[int, set[int]] = defaultdict(set)
    for e, y in outof:
        succ_of_end[e].add(y)
    pred_of_start: dict[int, set[int]] = defaultdict(set)
    for x, s in into:
        pred_of_start[s].add(x)
    out: PairRelation = set()
    for s, e in chains:
        for x in pred_of_start.get(s, ()):
            out.update((x, y) for y in succ_of_end.get(e, ()))
    return out


def all_pairs_reach_all(t_all, rtables: DecodeTables) -> PairRelation:
    from .allpairs import all_pairs_reach
    return all_pairs_reach(t_all, t_all, rtables)


def dfs_oracle(ast: RegexAst, run: Run,
               l1: list[int] | None = None, l2: list[int] | None = None,
               dfa: Dfa | None = None) -> PairRelation:
    """Product-graph search ground truth; honors the empty-path convention."""
    if dfa is None:
        from .rpq import ast_symbols
        dfa = compile_minimal_dfa(ast, _run_gamma(run) | ast_symbols(ast))
    adj: dict[int, list[tuple[int, str]]] = defaultdict(list)
    for s, d, tag in run.edges:
        adj[s].append((d, tag))
    sources = l1 if l1 is not None else [n.nid for n in run.nodes]
    targets = set(l2) if l2 is not None else None
    out: PairRelation = set()
    for u in sources:
        seen = {(u, dfa.start)}
        stack = [(u, dfa.start)]
        if dfa.start in dfa.accepting:
            if targets is None or u in targets:
                out.add((u, u))
        while stack:
            node, q = stack.pop()
            for (d, tag) in adj.get(node, ()):
                q2 = dfa.step(q, tag)
                if dfa.dead is not None and q2 == dfa.dead:
                    continue
                if (d, q2) in seen:
                    continue
                seen.add((d, q2))
                stack.append((d, q2))
                if q2 in dfa.accepting and (targets is None or d in targets):
                    out.add((u, d))
    return out


def pairwise_oracle(ast: RegexAst, run: Run, u: int, v: int) -> bool:
    return (u, v) in dfs_oracle(ast, run, l1=[u], l2=[v])


def _run_gamma(run: Run) -> set[str]:
    return {tag for _, _, tag in run.edges} or {"_none_"}


# --- safe-subtree decomposition -------------------------------------------


@dataclass(frozen=True)
class SafeUnitRef(RegexAst):
    idx: int


@dataclass(frozen=True)
class Decomposition:
    safe_units: tuple[RegexAst, ...]
    skeleton: RegexAst

    @property
    def fully_safe(self) -> bool:
        return isinstance(self.skeleton, SafeUnitRef)


def largest_safe_subtrees(ast: RegexAst, spec: WorkflowSpec) -> Decomposition:
    """Top-down split: a safe subtree becomes an opaque unit, never descended."""
    units: list[RegexAst] = []

    def walk(node: RegexAst) -> RegexAst:
        safe, _ = is_safe_query(spec, node)
        if safe:
            units.append(node)
            return SafeUnitRef(len(units) - 1)
        if isinstance(node, Concat):
            return Concat(walk(node.left), walk(node.right))
        if isinstance(node, Alt):
            return Alt(walk(node.left), walk(node.right))
        if isinstance(node, Star):
            return Star(walk(node.inner))
        if isinstance(node, Plus):
            return Plus(walk(node.inner))
        return node  # unsafe leaf stays residual

    skeleton = walk(ast)
    return Decomposition(tuple(units), skeleton)


def eval_general(ast: RegexAst, run: Run, spec: WorkflowSpec, index: TagIndex,
                 narrow: bool = True) -> PairRelation:
    """Hybrid evaluation: safe units via the label engine, residue via joins.

    With ``narrow`` on, a safe unit directly under a concatenation only
    receives the endpoint projection of its already-evaluated sibling as an
    input list; this is a pure optimization and never changes the result.
    """
    decomp = largest_safe_subtrees(ast, spec)
    tables: dict[int, DecodeTables] = {}
    for i, unit in enumerate(decomp.safe_units):
        tables[i] = build_tables(spec, unit)
    all_sorted = sorted_by_label(run.nodes)
    by_id = {n.nid: n for n in run.nodes}

    def eval_unit(idx: int, l1_ids: set[int] | None, l2_ids: set[int] | None) -> PairRelation:
        t = tables[idx]
        nodes1 = all_sorted if l1_ids is None else sorted_by_label(by_id[i] for i in l1_ids)
        nodes2 = all_sorted if l2_ids is None else sorted_by_label(by_id[i] for i in l2_ids)
        if not nodes1 or not nodes2:
            return set()
        return answer_all_pairs_safe_query(
            build_label_tree(nodes1, t), build_label_tree(nodes2, t), t)

    def walk(node: RegexAst) -> PairRelation:
        if isinstance(node, SafeUnitRef):
            return eval_unit(node.idx, None, None)
        if isinstance(node, Concat):
            # restricting a unit's input list to its sibling's endpoints is
            # sound: the join discards everything outside that list anyway
            if narrow and isinstance(node.right, SafeUnitRef) and not isinstance(node.left, SafeUnitRef):
                left = walk(node.left)
                right = eval_unit(node.right.idx, {v for _, v in left}, None)
                return _join(left, right)
            if narrow and isinstance(node.left, SafeUnitRef) and not isinstance(node.right, SafeUnitRef):
                right = walk(node.right)
                left = eval_unit(node.left.idx, None, {u for u, _ in right})
                return _join(left, right)
            return _join(walk(node.left), walk(node.right))
        if isinstance(node, Alt):
            return walk(node.left) | walk(node.right)
        if isinstance(node, Plus):
            return _closure(walk(node.inner))
        if isinstance(node, Star):
            return _closure(walk(node.inner)) | {(n.nid, n.nid) for n in run.nodes}
        return eval_join_tree(node, run, index)

    return walk(decomp.skeleton)
