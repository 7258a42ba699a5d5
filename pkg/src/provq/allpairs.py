"""All-pairs safe query evaluation over two node lists.

Two strategies compute the same set:

  * nested loop: one pairwise decode per (u, v) in l1 x l2;
  * filtered (optRPL): project both lists onto the compressed parse tree as
    label tries, merge the tries top-down, and emit candidate pairs only for
    child pairs that can reach each other; every candidate is reachable, so
    the pairwise filter runs exactly once per reachable pair.

Within one production's replacement, position-level reachability decides
whole subtree-range cross products at once.  Across a recursion unfolding,
an earlier child's leaves reach a later child exactly through subtrees whose
entry position reaches the cycle position (a red edge), and dually a later
child reaches earlier leaves through blue edges.  Colors come from the
query-independent position reachability, so the trees serve any query.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .decode import answer_pairwise_safe_query
from .derivation import Label, RunNode, is_rec_entry
from .intersect import DecodeTables


class TreeInputError(ValueError):
    pass


@dataclass(eq=False)
class LabelTreeNode:
    entry: tuple | None
    children: list["LabelTreeNode"] = field(default_factory=list)
    leaf_lo: int = 0
    leaf_hi: int = 0            # exclusive
    color: str | None = None    # "red" | "blue" | None
    is_leaf: bool = False


@dataclass(eq=False)
class LabelTree:
    leaves: list[RunNode]       # sorted by label
    root: LabelTreeNode


def label_sort_key(label: Label):
    return label


def build_label_tree(nodes: list[RunNode], tables: DecodeTables) -> LabelTree:
    """Build the label trie of a sorted node list; linear in the list size.

    Colors are assigned on edges leaving recursion children: with parent
    entry (s,t,m) and child entry (k,x), the child is red when position x
    reaches the cycle position of production k, blue when it is reached from
    it.  Raises TreeInputError on unsorted input.
    """
    for a, b in zip(nodes, nodes[1:]):
        if a.label > b.label:
            raise TreeInputError("node list must be sorted by label")
        if a.label == b.label:
            raise TreeInputError(f"duplicate label for {a.display} and {b.display}")
    root = LabelTreeNode(entry=None)
    stack: list[LabelTreeNode] = [root]  # stack[d] = current node at depth d
    prev: Label = ()
    for idx, node in enumerate(nodes):
        label = node.label
        common = 0
        limit = min(len(prev), len(label))
        while common < limit and prev[common] == label[common]:
            common += 1
        if common == len(label):
            raise TreeInputError("labels must be prefix-free")
        del stack[common + 1:]
        for depth in range(common, len(label)):
            parent = stack[-1]
            child = LabelTreeNode(entry=label[depth], leaf_lo=idx)
            if parent.entry is not None and is_rec_entry(parent.entry) \
                    and not is_rec_entry(label[depth]):
                k, x = label[depth]
                p = tables.cycle_position(k)
                if p is not None:
                    if tables.reaches(k, x, p):
                        child.color = "red"
                    elif tables.reaches(k, p, x):
                        child.color = "blue"
            parent.children.append(child)
            stack.append(child)
        stack[-1].is_leaf = True
        for n in stack:
            n.leaf_hi = idx + 1
        prev = label
    return LabelTree(list(nodes), root)


@dataclass
class TraversalStats:
    """Operation counters backing the output-sensitivity and work-bound checks."""

    candidates: int = 0
    filter_calls: int = 0
    level_work: dict[int, int] = field(default_factory=dict)

    def work(self, depth: int, amount: int = 1) -> None:
        self.level_work[depth] = self.level_work.get(depth, 0) + amount

    @property
    def max_level_work(self) -> int:
        return max(self.level_work.values(), default=0)


PairRelation = set[tuple[int, int]]


def answer_all_pairs_safe_query(t1: LabelTree, t2: LabelTree, tables: DecodeTables,
                                stats: TraversalStats | None = None) -> PairRelation:
    """Filtered all-pairs evaluation; equals the nested loop on the same lists."""
    return _traverse(t1, t2, tables, apply_filter=True,
                     stats=stats if stats is not None else TraversalStats())


def all_pairs_reach(t1: LabelTree, t2: LabelTree, reach_tables: DecodeTables,
                    stats: TraversalStats | None = None) -> PairRelation:
    """Reachable pairs in l1 x l2 (zero-length paths included); no query filter."""
    return _traverse(t1, t2, reach_tables, apply_filter=False,
                     stats=stats if stats is not None else TraversalStats())


def nested_loop_all_pairs(l1: list[RunNode], l2: list[RunNode],
                          tables: DecodeTables) -> PairRelation:
    out: PairRelation = set()
    for u in l1:
        for v in l2:
            if answer_pairwise_safe_query(u.label, v.label, tables):
                out.add((u.nid, v.nid))
    return out


def _traverse(t1: LabelTree, t2: LabelTree, tables: DecodeTables,
              apply_filter: bool, stats: TraversalStats) -> PairRelation:
    out: PairRelation = set()

    def emit(n1: LabelTreeNode, n2: LabelTreeNode) -> None:
        for ui in range(n1.leaf_lo, n1.leaf_hi):
            u = t1.leaves[ui]
            for vi in range(n2.leaf_lo, n2.leaf_hi):
                v = t2.leaves[vi]
                stats.candidates += 1
                if apply_filter:
                    stats.filter_calls += 1
                    if not answer_pairwise_safe_query(u.label, v.label, tables):
                        continue
                out.add((u.nid, v.nid))

    def merge(n1: LabelTreeNode, n2: LabelTreeNode, depth: int) -> None:
        if n1.is_leaf or n2.is_leaf:
            if not (n1.is_leaf and n2.is_leaf):
                raise TreeInputError("same label is a leaf in one tree only; runs differ")
            emit(n1, n2)  # the self pair (u, u)
            return
        if not n1.children or not n2.children:
            return
        rec1 = is_rec_entry(n1.children[0].entry)
        rec2 = is_rec_entry(n2.children[0].entry)
        if rec1 != rec2:
            raise TreeInputError("child entry kinds disagree at a shared node; runs differ")
        if not rec1:
            k = n1.children[0].entry[0]
            for c in n1.children + n2.children:
                stats.work(depth)
                if c.entry[0] != k:
                    raise TreeInputError("shared node expanded by different productions; runs differ")
            for c1 in n1.children:
                for c2 in n2.children:
                    stats.work(depth)
                    i, j = c1.entry[1], c2.entry[1]
                    if i == j:
                        merge(c1, c2, depth + 1)
                    elif tables.reaches(k, i, j):
                        emit(c1, c2)
        else:
            st = n1.children[0].entry[:2]
            for c in n1.children + n2.children:
                stats.work(depth)
                if c.entry[:2] != st:
                    raise TreeInputError("shared recursion unfolded differently; runs differ")
            # merge join by unfolding ordinal
            i1 = i2 = 0
            c1s, c2s = n1.children, n2.children
            while i1 < len(c1s) and i2 < len(c2s):
                stats.work(depth)
                o1, o2 = c1s[i1].entry[2], c2s[i2].entry[2]
                if o1 == o2:
                    merge(c1s[i1], c2s[i2], depth + 1)
                    i1 += 1
                    i2 += 1
                elif o1 < o2:
                    i1 += 1
                else:
                    i2 += 1
            # earlier children of t1 with red subtrees reach all later t2 children
            ords2 = [c.entry[2] for c in c2s]
            for c1 in c1s:
                stats.work(depth, 1 + len(c1.children))
                reds = [c for c in c1.children if c.color == "red"]
                if not reds:
                    continue
                lo = bisect.bisect_right(ords2, c1.entry[2])
                for c2 in c2s[lo:]:
                    for r in reds:
                        emit(r, c2)
            # later children of t1 reach blue subtrees of earlier t2 children
            ords1 = [c.entry[2] for c in c1s]
            for c2 in c2s:
                stats.work(depth, 1 + len(c2.children))
                blues = [c for c in c2.children if c.color == "blue"]
                if not blues:
                    continue
                lo = bisect.bisect_right(ords1, c2.entry[2])
                for c1 in c1s[lo:]:
                    for b in blues:
                        emit(c1, b)

    merge(t1.root, t2.root, 0)
    return out


def sorted_by_label(nodes) -> list[RunNode]:
    return sorted(nodes, key=lambda n: n.label)
