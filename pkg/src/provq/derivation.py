"""Derivation of runs by node replacement, with dynamic derivation labels.

A run starts as a single start-module node and grows by replacing composite
nodes with production right-hand sides: incoming edges retarget to the rhs
source, outgoing edges re-source from the rhs sink, tags are preserved.

Every created node immediately receives its label: the entry sequence along
the path from the root of the compressed parse tree.  Entries are plain
tuples, discriminated by arity:

    (k, i)     child at position i of a production-k replacement
    (s, t, i)  i-th unfolding of cycle s, entered on the cycle's t-th edge

Linear-recursion unfoldings are flattened: when a module fires the production
that continues its cycle, a recursive parse node is inserted (once) and each
successive cycle execution becomes its next child rather than a deeper
descendant.  That keeps parse-tree depth bounded by the grammar, which is
what makes constant-time label decoding possible.
"""

from __future__ import annotations

import random
import re
import warnings
from dataclasses import dataclass, field

from .grammar import SpecAnalysis, WorkflowSpec, analyze_spec

LabelEntry = tuple  # (k, i) or (s, t, i)
Label = tuple


def is_rec_entry(entry: LabelEntry) -> bool:
    return len(entry) == 3


@dataclass(frozen=True)
class RunNode:
    nid: int
    name: str
    occ: int
    label: Label

    @property
    def display(self) -> str:
        return f"{self.name}:{self.occ}"


@dataclass(frozen=True)
class Run:
    spec_name: str
    seed: int | None
    nodes: tuple[RunNode, ...]            # nodes[i].nid == i
    edges: tuple[tuple[int, int, str], ...]

    def node(self, display: str) -> RunNode:
        for n in self.nodes:
            if n.display == display:
                return n
        raise KeyError(f"no node {display} in run")

    def by_display(self) -> dict[str, RunNode]:
        return {n.display: n for n in self.nodes}

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass
class ParseNode:
    pid: int
    parent: int | None
    entry: LabelEntry | None   # incoming edge label; None at the root
    kind: str                  # "exec" | "rec" | "leaf"
    name: str = ""
    occ: int = 0
    children: list[int] = field(default_factory=list)


class DerivationError(ValueError):
    pass


class DerivationState:
    """Mutable in-progress derivation; single-owner, not thread-safe."""

    def __init__(self, analysis: SpecAnalysis, seed: int | None = None):
        self.analysis = analysis
        self.spec = analysis.spec
        self.seed = seed
        self.next_id = 0
        self.occ_counter: dict[str, int] = {}
        self.edges: set[tuple[int, int, str]] = set()
        self.in_edges: dict[int, set[tuple[int, str]]] = {}
        self.out_edges: dict[int, set[tuple[int, str]]] = {}
        self.parse_nodes: dict[int, ParseNode] = {}
        self.next_pid = 0
        # frontier/atomic bookkeeping: run node id -> info
        self.frontier: dict[int, dict] = {}
        self.atoms: dict[int, dict] = {}
        self.creation_order: list[int] = []
        spec = self.spec
        nid = self._new_node(spec.start)
        pid = self._new_parse(None, None, "exec", spec.start, 1)
        self.frontier[nid] = {
            "name": spec.start, "occ": 1, "label": (), "pid": pid, "rec": None,
        }

    # -- low-level helpers

    def _new_node(self, name: str) -> int:
        nid = self.next_id
        self.next_id += 1
        self.in_edges[nid] = set()
        self.out_edges[nid] = set()
        self.creation_order.append(nid)
        return nid

    def _new_parse(self, parent, entry, kind, name="", occ=0) -> int:
        pid = self.next_pid
        self.next_pid += 1
        self.parse_nodes[pid] = ParseNode(pid, parent, entry, kind, name, occ)
        if parent is not None:
            self.parse_nodes[parent].children.append(pid)
        return pid

    def _occ(self, name: str) -> int:
        self.occ_counter[name] = self.occ_counter.get(name, 0) + 1
        return self.occ_counter[name]

    def _add_edge(self, src: int, dst: int, tag: str) -> None:
        self.edges.add((src, dst, tag))
        self.out_edges[src].add((dst, tag))
        self.in_edges[dst].add((src, tag))

    def _del_edge(self, src: int, dst: int, tag: str) -> None:
        self.edges.discard((src, dst, tag))
        self.out_edges[src].discard((dst, tag))
        self.in_edges[dst].discard((src, tag))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def frontier_ids(self) -> list[int]:
        return sorted(self.frontier)

    # -- the replacement step

    def fire(self, nid: int, k: int) -> None:
        """Replace frontier node ``nid`` using production ``k``."""
        if nid not in self.frontier:
            raise DerivationError(f"node {nid} is not a replaceable composite")
        info = self.frontier.pop(nid)
        name = info["name"]
        prod = self.spec.production(k)
        if prod.lhs != name:
            self.frontier[nid] = info
            raise DerivationError(f"production {k} rewrites {prod.lhs}, node is {name}")

        cyc = self.analysis.cyclic_production.get(name)
        continues_cycle = cyc is not None and cyc[0] == k
        cycle_pos = cyc[1] if continues_cycle else None

        exec_pid = info["pid"]
        exec_label = info["label"]
        next_rec = None  # (s, t, ordinal, rec_pid, rec_label) for the continuation node
        if continues_cycle:
            s, off0 = self.analysis.cycle_of_module[name]
            if info["rec"] is not None:
                rs, rt, rord = info["rec"]
                assert rs == s, "cycle children belong to one cycle"
                rec_pid = self.parse_nodes[exec_pid].parent
                next_rec = (s, rt, rord + 1, rec_pid, exec_label[:-1])
            else:
                # first unfolding: splice a recursive node in at this position
                t = off0 + 1
                old = self.parse_nodes[exec_pid]
                assert not old.children, "relabel only before any descendant exists"
                rec_pid = self.next_pid
                self.next_pid += 1
                rec = ParseNode(rec_pid, old.parent, old.entry, "rec")
                self.parse_nodes[rec_pid] = rec
                if old.parent is not None:
                    siblings = self.parse_nodes[old.parent].children
                    siblings[siblings.index(exec_pid)] = rec_pid
                old.parent = rec_pid
                old.entry = (s, t, 1)
                rec.children.append(exec_pid)
                exec_label = exec_label + ((s, t, 1),)
                info["label"] = exec_label
                next_rec = (s, t, 2, rec_pid, exec_label[:-1])

        # run-graph surgery: fresh nodes, then retarget/re-source boundary edges
        pos_ids: dict[int, int] = {}
        for pos, node_name in enumerate(prod.rhs.nodes, start=1):
            pos_ids[pos] = self._new_node(node_name)
        src_id = pos_ids[prod.rhs.source]
        sink_id = pos_ids[prod.rhs.sink]
        for pred, tag in list(self.in_edges[nid]):
            self._del_edge(pred, nid, tag)
            self._add_edge(pred, src_id, tag)
        for succ, tag in list(self.out_edges[nid]):
            self._del_edge(nid, succ, tag)
            self._add_edge(sink_id, succ, tag)
        for s_pos, d_pos, tag in prod.rhs.edges:
            self._add_edge(pos_ids[s_pos], pos_ids[d_pos], tag)
        del self.in_edges[nid]
        del self.out_edges[nid]

        # parse bookkeeping + labels, in position order
        for pos, node_name in enumerate(prod.rhs.nodes, start=1):
            new_id = pos_ids[pos]
            occ = self._occ(node_name)
            composite = self.spec.is_composite(node_name)
            if continues_cycle and pos == cycle_pos:
                s, t, ordinal, rec_pid, rec_label = next_rec
                entry = (s, t, ordinal)
                label = rec_label + (entry,)
                pid = self._new_parse(rec_pid, entry, "exec", node_name, occ)
                rec_ctx = (s, t, ordinal)
            else:
                entry = (k, pos)
                label = exec_label + (entry,)
                pid = self._new_parse(exec_pid, entry,
                                      "exec" if composite else "leaf", node_name, occ)
                rec_ctx = None
            rec_info = {"name": node_name, "occ": occ, "label": label, "pid": pid, "rec": rec_ctx}
            if composite:
                self.frontier[new_id] = rec_info
            else:
                self.atoms[new_id] = rec_info

    def to_run(self) -> Run:
        """Freeze the fully derived run; node ids are re-packed densely."""
        if self.frontier:
            pending = sorted(f"{v['name']}:{v['occ']}" for v in self.frontier.values())
            raise DerivationError(f"derivation incomplete; composite nodes remain: {pending}")
        remap = {}
        nodes = []
        for old_id in self.creation_order:
            if old_id not in self.atoms:
                continue
            info = self.atoms[old_id]
            remap[old_id] = len(nodes)
            nodes.append(RunNode(len(nodes), info["name"], info["occ"], info["label"]))
        edges = tuple(sorted((remap[s], remap[d], tag) for s, d, tag in self.edges))
        return Run(self.spec.name, self.seed, tuple(nodes), edges)

    def label_by_walk(self, pid: int) -> Label:
        """Recompute a node's label by walking the parse tree (test oracle)."""
        entries = []
        node = self.parse_nodes[pid]
        while node.entry is not None:
            entries.append(node.entry)
            node = self.parse_nodes[node.parent]
        return tuple(reversed(entries))


def init_run(spec: WorkflowSpec, seed: int | None = None) -> DerivationState:
    return DerivationState(analyze_spec(spec), seed)


def fire_production(state: DerivationState, nid: int, k: int) -> DerivationState:
    state.fire(nid, k)
    return state


def derive(spec: WorkflowSpec, steps: list[tuple[str, int]], seed: int | None = None) -> Run:
    """Fire productions addressed by display name, e.g. [("S:1", 1), ("A:1", 2)]."""
    state = init_run(spec, seed)
    for display, k in steps:
        target = None
        for nid, info in state.frontier.items():
            if f"{info['name']}:{info['occ']}" == display:
                target = nid
                break
        if target is None:
            raise DerivationError(f"no composite node {display} on the frontier")
        state.fire(target, k)
    return state.to_run()


# --- random runs --------------------------------------------------------


def min_completion_edges(spec: WorkflowSpec) -> dict[str, int]:
    """Fewest edges a module's full expansion can add (atomic modules: 0)."""
    best = {m: 0 for m in spec.sigma if m not in spec.delta}
    inf = float("inf")
    for m in spec.delta:
        best[m] = inf
    changed = True
    while changed:
        changed = False
        for p in spec.productions:
            cost = len(p.rhs.edges) + sum(best[nm] for nm in p.rhs.nodes)
            if cost < best[p.lhs]:
                best[p.lhs] = cost
                changed = True
    return best


def random_run(spec: WorkflowSpec, target_edges: int, seed: int,
               recursion_bias: float = 0.5) -> Run:
    """Derive a pseudo-random run aiming for edge count in [target, 2*target].

    Composite frontier nodes are picked uniformly.  While growth is still
    wanted, a module on a cycle continues the cycle with probability
    ``recursion_bias`` as long as that cycle's unroll budget (geometric,
    mean scaled to the target) lasts.  Once the minimal completion of the
    frontier already reaches the target, every remaining node is finished
    with its cheapest production.  Warns when the band cannot be met.
    """
    if target_edges < 1:
        raise ValueError("target_edges must be >= 1")
    analysis = analyze_spec(spec)
    state = DerivationState(analysis, seed)
    rng = random.Random(seed)
    min_edges = min_completion_edges(spec)
    min_prod_cost = {
        p.k: len(p.rhs.edges) + sum(min_edges[nm] for nm in p.rhs.nodes)
        for p in spec.productions
    }
    budgets = {}
    for c in analysis.cycles:
        step = max(1, min(min_prod_cost[e.k] for e in c.edges))
        # floor guarantees the target stays reachable through this cycle
        # alone even after several short-lived chains; the geometric tail
        # adds seed-dependent variety on top
        mean = max(2.0, float(target_edges) / step)
        budgets[c.index] = 8 * target_edges // step + 16 + int(rng.expovariate(1.0 / mean))

    while state.frontier:
        pending_min = sum(min_edges[info["name"]] for info in state.frontier.values())
        if state.edge_count + pending_min >= target_edges:
            # minimal completions keep the final count inside the band
            nid = rng.choice(state.frontier_ids())
            prods = spec.productions_of(state.frontier[nid]["name"])
            state.fire(nid, min(prods, key=lambda p: (min_prod_cost[p.k], p.k)).k)
            continue
        # growth phase: cycles are the only unbounded source of edges, so
        # prefer frontier nodes that can continue one; the bias (floored by
        # the remaining deficit) decides whether a chain survives this fire,
        # and the last live chain is never dropped
        ids = state.frontier_ids()
        cyc_ids = [i for i in ids
                   if state.frontier[i]["name"] in analysis.cyclic_production]
        if cyc_ids:
            nid = rng.choice(cyc_ids)
            name = state.frontier[nid]["name"]
            cyc = analysis.cyclic_production[name]
            s = analysis.cycle_of_module[name][0]
            deficit = max(0.0, 1.0 - state.edge_count / target_edges)
            keep = max(recursion_bias, deficit if len(cyc_ids) > 1 else 1.0)
            if budgets[s] > 0 and rng.random() < keep:
                budgets[s] -= 1
                state.fire(nid, cyc[0])
                continue
            base = [p for p in spec.productions_of(name) if p.k != cyc[0]]
            state.fire(nid, rng.choice(base or spec.productions_of(name)).k)
        else:
            nid = rng.choice(ids)
            prods = spec.productions_of(state.frontier[nid]["name"])
            state.fire(nid, rng.choice(prods).k)

    run = state.to_run()
    if not (target_edges <= run.edge_count <= 2 * target_edges):
        warnings.warn(
            f"random_run: best effort ({run.edge_count} edges, target {target_edges})",
            stacklevel=2,
        )
    return run


# --- run file format -----------------------------------------------------

_LABEL_RE = re.compile(r"\((\d+),(\d+)(?:,(\d+))?\)")


def format_label(label: Label) -> str:
    return "".join("(" + ",".join(str(x) for x in e) + ")" for e in label)


def parse_label(text: str) -> Label:
    entries = []
    pos = 0
    for m in _LABEL_RE.finditer(text):
        if m.start() != pos:
            raise ValueError(f"bad label text {text!r}")
        groups = [g for g in m.groups() if g is not None]
        entries.append(tuple(int(g) for g in groups))
        pos = m.end()
    if pos != len(text) or not entries:
        raise ValueError(f"bad label text {text!r}")
    return tuple(entries)


def serialize_run(run: Run) -> str:
    out = [f"run {run.spec_name} {'-' if run.seed is None else run.seed}"]
    for n in run.nodes:
        out.append(f"node {n.nid} {n.name} {n.occ} {format_label(n.label)}")
    for s, d, tag in run.edges:
        out.append(f"edge {s} {d} {tag}")
    return "\n".join(out) + "\n"


def deserialize_run(text: str) -> Run:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("run "):
        raise ValueError("missing run header")
    _, spec_name, seed_text = lines[0].split()
    seed = None if seed_text == "-" else int(seed_text)
    nodes = []
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "node" and len(parts) == 5:
            nodes.append(RunNode(int(parts[1]), parts[2], int(parts[3]), parse_label(parts[4])))
        elif parts[0] == "edge" and len(parts) == 4:
            edges.append((int(parts[1]), int(parts[2]), parts[3]))
        else:
            raise ValueError(f"bad run line: {ln!r}")
    if not nodes:
        raise ValueError("empty run: no nodes")
    nodes.sort(key=lambda n: n.nid)
    if [n.nid for n in nodes] != list(range(len(nodes))):
        raise ValueError("run node ids must be dense 0..n-1")
    return Run(spec_name, seed, tuple(nodes), tuple(sorted(edges)))
