"""Workflow specifications as context-free graph grammars.

A specification is a set of productions rewriting composite modules into
simple workflows (single-source/single-sink DAGs of module occurrences with
tagged data edges).  This module owns validation, the production graph with
its (k, i) edge numbering, cycle extraction for strictly linear-recursive
grammars, and the line-based spec file format.

Numbering is deterministic: productions are numbered by file order, nodes in
each right-hand side by their (topological) file order, and cycles by the
smallest production index they touch, starting from their smallest (k, i)
edge.  Everything downstream (derivation labels, decode tables) depends on
this numbering staying stable across loads.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ModuleSym:
    name: str
    kind: str  # "atomic" | "composite"


@dataclass(frozen=True)
class SimpleWorkflow:
    """Right-hand side of a production: positions are 1-based."""

    nodes: tuple[str, ...]                     # module name at position p = nodes[p-1]
    edges: tuple[tuple[int, int, str], ...]    # (src_pos, dst_pos, tag), sorted
    source: int
    sink: int

    def node_at(self, pos: int) -> str:
        return self.nodes[pos - 1]

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Production:
    k: int
    lhs: str
    rhs: SimpleWorkflow


@dataclass(frozen=True)
class WorkflowSpec:
    name: str
    start: str
    productions: tuple[Production, ...]
    sigma: frozenset[str]
    delta: frozenset[str]
    gamma: frozenset[str]

    def modules(self) -> list[ModuleSym]:
        return [ModuleSym(n, "composite" if n in self.delta else "atomic")
                for n in sorted(self.sigma)]

    def is_composite(self, name: str) -> bool:
        return name in self.delta

    def productions_of(self, name: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == name]

    def production(self, k: int) -> Production:
        p = self.productions[k - 1]
        if p.k != k:
            raise KeyError(f"no production numbered {k}")
        return p

    @property
    def size(self) -> int:
        """Grammar size: sum over productions of 1 + |rhs|."""
        return sum(1 + p.rhs.size for p in self.productions)


def make_spec(name: str, start: str, productions, extra_composites=()) -> WorkflowSpec:
    """Assemble a WorkflowSpec, deriving sigma/delta/gamma from the productions."""
    prods = tuple(productions)
    delta = {p.lhs for p in prods} | set(extra_composites)
    sigma = set(delta) | {start}
    gamma = set()
    for p in prods:
        sigma.update(p.rhs.nodes)
        gamma.update(tag for _, _, tag in p.rhs.edges)
    return WorkflowSpec(name, start, prods,
                        frozenset(sigma), frozenset(delta), frozenset(gamma))


def make_rhs(nodes, edges, source=None, sink=None) -> SimpleWorkflow:
    nodes = tuple(nodes)
    edges = tuple(sorted(edges))
    if source is None or sink is None:
        indeg = {p: 0 for p in range(1, len(nodes) + 1)}
        outdeg = {p: 0 for p in range(1, len(nodes) + 1)}
        for s, d, _ in edges:
            outdeg[s] += 1
            indeg[d] += 1
        sources = [p for p in indeg if indeg[p] == 0]
        sinks = [p for p in outdeg if outdeg[p] == 0]
        source = sources[0] if len(sources) == 1 else (source or 0)
        sink = sinks[0] if len(sinks) == 1 else (sink or 0)
    return SimpleWorkflow(nodes, edges, source, sink)


# --- validation --------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


def validate_spec(spec: WorkflowSpec) -> ValidationReport:
    """Check structural invariants and productivity; collects all violations."""
    v: list[str] = []
    if spec.start not in spec.sigma:
        v.append(f"start module {spec.start} not in sigma")
    if spec.start not in spec.delta:
        v.append(f"start module {spec.start} must be composite")
    seen_k = set()
    for idx, p in enumerate(spec.productions, start=1):
        if p.k != idx:
            v.append(f"production {p.k} out of order (expected {idx})")
        if p.k in seen_k:
            v.append(f"duplicate production index {p.k}")
        seen_k.add(p.k)
        if p.lhs not in spec.delta:
            v.append(f"production {p.k}: lhs {p.lhs} is not composite")
        _validate_rhs(p, v)
        for name in p.rhs.nodes:
            if name not in spec.sigma:
                v.append(f"production {p.k}: node {name} not in sigma")
    for m in sorted(spec.delta):
        if not spec.productions_of(m):
            v.append(f"unproductive module {m}: composite with no production")
    for m in sorted(_unproductive(spec)):
        v.append(f"unproductive module {m}: derives no all-atomic execution")
    return ValidationReport(ok=not v, violations=v)


def _validate_rhs(p: Production, v: list[str]) -> None:
    n = p.rhs.size
    if n == 0:
        v.append(f"production {p.k}: empty right-hand side")
        return
    pos_ok = True
    for s, d, _ in p.rhs.edges:
        if not (1 <= s <= n and 1 <= d <= n):
            v.append(f"production {p.k}: edge references position outside 1..{n}")
            pos_ok = False
    if not pos_ok:
        return
    for s, d, _ in p.rhs.edges:
        if s >= d:
            # node order must be topological, so edges go strictly forward
            v.append(f"production {p.k}: edge {s}->{d} violates topological node order")
    seen_edges = set()
    for s, d, tag in p.rhs.edges:
        if (s, d, tag) in seen_edges:
            v.append(f"production {p.k}: duplicate edge {s}->{d} tag {tag}")
        seen_edges.add((s, d, tag))
    indeg = [0] * (n + 1)
    outdeg = [0] * (n + 1)
    for s, d, _ in p.rhs.edges:
        if s < d:
            outdeg[s] += 1
            indeg[d] += 1
    sources = [q for q in range(1, n + 1) if indeg[q] == 0]
    sinks = [q for q in range(1, n + 1) if outdeg[q] == 0]
    if len(sources) != 1:
        v.append(f"multiple sources in production {p.k}: positions {sources}")
    elif sources[0] != p.rhs.source:
        v.append(f"production {p.k}: declared source {p.rhs.source}, actual {sources[0]}")
    if len(sinks) != 1:
        v.append(f"multiple sinks in production {p.k}: positions {sinks}")
    elif sinks[0] != p.rhs.sink:
        v.append(f"production {p.k}: declared sink {p.rhs.sink}, actual {sinks[0]}")


def _unproductive(spec: WorkflowSpec) -> set[str]:
    """Composite modules that cannot derive an all-atomic execution."""
    productive = {m for m in spec.sigma if m not in spec.delta}
    changed = True
    while changed:
        changed = False
        for p in spec.productions:
            if p.lhs not in productive and all(nm in productive for nm in p.rhs.nodes):
                productive.add(p.lhs)
                changed = True
    return set(spec.delta) - productive


# --- production graph and cycles ---------------------------------------


@dataclass(frozen=True)
class PGEdge:
    src: str
    dst: str
    k: int
    i: int


@dataclass(frozen=True)
class ProductionGraph:
    vertices: frozenset[str]
    edges: tuple[PGEdge, ...]


@dataclass(frozen=True)
class CycleInfo:
    """One cycle of the production graph.

    ``edges`` is the closed walk starting at the designated first edge
    (ordinal t=1); ``modules[m]`` is the source module of ``edges[m]``.
    """

    index: int
    edges: tuple[PGEdge, ...]
    modules: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.edges)


class StrictLinearityError(ValueError):
    def __init__(self, module: str):
        super().__init__(f"cycles are not vertex-disjoint: module {module} lies on more than one cycle")
        self.module = module


def build_production_graph(spec: WorkflowSpec) -> ProductionGraph:
    edges = []
    for p in spec.productions:
        for i, name in enumerate(p.rhs.nodes, start=1):
            edges.append(PGEdge(p.lhs, name, p.k, i))
    return ProductionGraph(frozenset(spec.sigma), tuple(edges))


def check_strictly_linear_recursive(pg: ProductionGraph) -> list[CycleInfo]:
    """Return all cycles with canonical (s, t) numbering.

    Raises StrictLinearityError naming a shared module when two cycles meet.
    Strict linearity forces every nontrivial SCC to be a single simple cycle,
    which is what this checks directly.
    """
    adj: dict[str, list[PGEdge]] = {v: [] for v in pg.vertices}
    for e in pg.edges:
        adj[e.src].append(e)
    sccs = _tarjan_sccs(pg.vertices, adj)
    cycles: list[CycleInfo] = []
    for scc in sccs:
        members = set(scc)
        internal = [e for v in scc for e in adj[v] if e.dst in members]
        if len(scc) == 1 and not internal:
            continue
        out_count: dict[str, int] = {v: 0 for v in scc}
        in_count: dict[str, int] = {v: 0 for v in scc}
        for e in internal:
            out_count[e.src] += 1
            in_count[e.dst] += 1
        for v in sorted(scc):
            if out_count[v] > 1 or in_count[v] > 1:
                raise StrictLinearityError(v)
        # exactly one in/out per member: the SCC is one simple cycle
        first = min(internal, key=lambda e: (e.k, e.i))
        walk = [first]
        nxt = {e.src: e for e in internal}
        while walk[-1].dst != first.src:
            walk.append(nxt[walk[-1].dst])
        cycles.append(CycleInfo(0, tuple(walk), tuple(e.src for e in walk)))
    cycles.sort(key=lambda c: min(e.k for e in c.edges))
    return [CycleInfo(s, c.edges, c.modules) for s, c in enumerate(cycles, start=1)]


def _tarjan_sccs(vertices, adj) -> list[list[str]]:
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = [0]

    for root in sorted(vertices):
        if root in index:
            continue
        work = [(root, iter(sorted(adj[root], key=lambda e: (e.dst, e.k, e.i))))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for e in it:
                w = e.dst
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(adj[w], key=lambda e2: (e2.dst, e2.k, e2.i)))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


@dataclass(frozen=True, eq=False)
class SpecAnalysis:
    """Validated spec plus the cycle structure the labeling scheme needs."""

    spec: WorkflowSpec
    pg: ProductionGraph
    cycles: tuple[CycleInfo, ...]
    cycle_of_module: dict    # module -> (s, offset0 of its cycle edge)
    cyclic_production: dict  # module -> (k, position of next cycle module)

    def cycle(self, s: int) -> CycleInfo:
        return self.cycles[s - 1]


@functools.lru_cache(maxsize=256)
def analyze_spec(spec: WorkflowSpec) -> SpecAnalysis:
    """Validate and extract cycles; raises on invalid or non-strictly-linear input."""
    report = validate_spec(spec)
    if not report.ok:
        raise ValueError("invalid specification: " + "; ".join(report.violations))
    pg = build_production_graph(spec)
    cycles = tuple(check_strictly_linear_recursive(pg))
    cycle_of_module = {}
    cyclic_production = {}
    for c in cycles:
        for off, e in enumerate(c.edges):
            cycle_of_module[e.src] = (c.index, off)
            cyclic_production[e.src] = (e.k, e.i)
    return SpecAnalysis(spec, pg, cycles, cycle_of_module, cyclic_production)


# --- spec file format ---------------------------------------------------


class SpecParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_spec_file(text: str) -> WorkflowSpec:
    """Parse the line-based spec format (see write_spec_file for the layout)."""
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            raw = lines[pos]
            pos += 1
            stripped = raw.strip()
            if stripped and not stripped.startswith("#"):
                return pos, stripped.split()
        return None

    first = next_line()
    if first is None or first[1][0] != "spec" or len(first[1]) != 2:
        raise SpecParseError(first[0] if first else 1, "missing spec header")
    name = first[1][1]
    second = next_line()
    if second is None or second[1][0] != "start" or len(second[1]) != 2:
        raise SpecParseError(second[0] if second else pos, "missing start line")
    start = second[1][1]

    productions = []
    while True:
        ln = next_line()
        if ln is None:
            break
        lineno, parts = ln
        if parts[0] != "prod" or len(parts) != 3:
            raise SpecParseError(lineno, f"expected 'prod <k> <Lhs>', got {' '.join(parts)!r}")
        try:
            k = int(parts[1])
        except ValueError:
            raise SpecParseError(lineno, f"bad production index {parts[1]!r}") from None
        lhs = parts[2]
        nodes: list[str] = []
        edges: list[tuple[int, int, str]] = []
        source = sink = None
        while True:
            ln = next_line()
            if ln is None:
                raise SpecParseError(lineno, f"production {k} missing 'end'")
            lineno2, parts2 = ln
            kw = parts2[0]
            if kw == "end":
                break
            if kw == "node" and len(parts2) == 3:
                p = _int_field(parts2[1], lineno2, "node position")
                if p != len(nodes) + 1:
                    raise SpecParseError(lineno2, f"node positions must be sequential; expected {len(nodes) + 1}, got {p}")
                nodes.append(parts2[2])
            elif kw == "edge" and len(parts2) == 4:
                edges.append((_int_field(parts2[1], lineno2, "edge source"),
                              _int_field(parts2[2], lineno2, "edge target"),
                              parts2[3]))
            elif kw == "source" and len(parts2) == 2:
                source = _int_field(parts2[1], lineno2, "source position")
            elif kw == "sink" and len(parts2) == 2:
                sink = _int_field(parts2[1], lineno2, "sink position")
            else:
                raise SpecParseError(lineno2, f"unexpected line in production body: {' '.join(parts2)!r}")
        if source is None or sink is None:
            raise SpecParseError(lineno, f"production {k} missing source/sink declaration")
        productions.append(Production(k, lhs, SimpleWorkflow(tuple(nodes), tuple(sorted(edges)), source, sink)))
    return make_spec(name, start, productions)


def _int_field(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise SpecParseError(lineno, f"bad {what} {text!r}") from None


def write_spec_file(spec: WorkflowSpec) -> str:
    out = [f"spec {spec.name}", f"start {spec.start}"]
    for p in spec.productions:
        out.append(f"prod {p.k} {p.lhs}")
        for i, name in enumerate(p.rhs.nodes, start=1):
            out.append(f"  node {i} {name}")
        for s, d, tag in p.rhs.edges:
            out.append(f"  edge {s} {d} {tag}")
        out.append(f"  source {p.rhs.source}")
        out.append(f"  sink {p.rhs.sink}")
        out.append("end")
    return "\n".join(out) + "\n"
