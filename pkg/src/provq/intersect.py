"""Query-rewritten fine-grained grammar and the tables behind O(1) decoding.

Intersecting a specification with a safe query DFA gives each module |Q|
input and |Q| output ports.  Atomic modules wire in[q] -> out[q]; composite
modules wire in[q] -> out[q'] exactly where their transfer matrix allows; a
rhs edge tagged g wires out(x, q) -> in(y, delta(q, g)).  Module ports are
identified with their rhs boundary: M.in[q] is the rhs source's in[q] and
M.out[q] the rhs sink's out[q].

Decoding never walks those port graphs at query time.  Instead we precompute,
per production k and positions i, j of its rhs:

    cross[(k,i,j)]  out-ports of node i  -> in-ports of node j
    up[(k,i)]       out-ports of node i  -> out-ports of the rhs sink
    down[(k,i)]     in-ports of the source -> in-ports of node i
    node_reach      position-level reachability (the 1-state specialization)

plus, per cycle, the per-unfolding step matrices (a ``down`` entering the
next cycle child, an ``up`` leaving it) wrapped in power oracles: boolean
matrices form a finite monoid, so products of m consecutive steps around a
cycle are eventually periodic in m and can be tabulated once, making any
recursion crossing a table lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .boolmat import BoolMat
from .grammar import SpecAnalysis, WorkflowSpec, analyze_spec
from .rpq import Dfa, RegexAst, Star, Wildcard, compile_minimal_dfa
from .safety import SafetyReport, check_safety, tag_matrix


class UnsafeQueryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PortGraph:
    """Explicit augmented rhs of one production; ports are dense ints."""

    positions: int
    n_states: int
    adj: tuple[tuple[int, ...], ...]

    def in_port(self, pos: int, q: int) -> int:
        return ((pos - 1) * 2) * self.n_states + q

    def out_port(self, pos: int, q: int) -> int:
        return ((pos - 1) * 2 + 1) * self.n_states + q

    def reachable_from(self, port: int) -> set[int]:
        seen = {port}
        stack = [port]
        while stack:
            p = stack.pop()
            for t in self.adj[p]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen


@dataclass(frozen=True, eq=False)
class FineGrainedSpec:
    spec: WorkflowSpec
    dfa: Dfa
    transfers: dict[str, BoolMat]
    port_graphs: dict[int, PortGraph]  # production k -> augmented rhs


def intersect(spec: WorkflowSpec, dfa: Dfa,
              report: SafetyReport | None = None) -> FineGrainedSpec:
    """Build the fine-grained grammar; refuses unsafe (spec, dfa) pairs."""
    if report is None:
        report = check_safety(spec, dfa)
    if report.verdict != "safe":
        raise UnsafeQueryError(f"query DFA is {report.verdict} for specification {spec.name}")
    transfers = report.transfers
    n = dfa.n
    graphs: dict[int, PortGraph] = {}
    for prod in spec.productions:
        rhs = prod.rhs
        adj: list[list[int]] = [[] for _ in range(rhs.size * 2 * n)]

        def in_port(pos, q):
            return ((pos - 1) * 2) * n + q

        def out_port(pos, q):
            return ((pos - 1) * 2 + 1) * n + q

        for pos in range(1, rhs.size + 1):
            name = rhs.node_at(pos)
            if spec.is_composite(name):
                t = transfers[name]
                for q in range(n):
                    for q2 in range(n):
                        if t.get(q, q2):
                            adj[in_port(pos, q)].append(out_port(pos, q2))
            else:
                for q in range(n):
                    adj[in_port(pos, q)].append(out_port(pos, q))
        for s, d, tag in rhs.edges:
            for q in range(n):
                adj[out_port(s, q)].append(in_port(d, dfa.step(q, tag)))
        graphs[prod.k] = PortGraph(rhs.size, n, tuple(tuple(x) for x in adj))
    return FineGrainedSpec(spec, dfa, transfers, graphs)


# --- power oracle --------------------------------------------------------


class CyclicPowerOracle:
    """Products of consecutive matrices from a cyclic sequence, O(1) per query.

    For each start offset the sequence of prefix products is eventually
    periodic (finite monoid x finite phase), so we record the orbit once and
    answer ``query(start, m)`` by index arithmetic.
    """

    def __init__(self, mats: list[BoolMat], n_states: int):
        self.mats = mats
        self.n = n_states
        self._orbits: dict[int, tuple[list[BoolMat], int, int]] = {}
        for start in range(len(mats)):
            self._orbits[start] = self._build(start)

    def _build(self, start: int):
        c = len(self.mats)
        seen: dict[tuple[BoolMat, int], int] = {}
        prefix: list[BoolMat] = []
        cur = BoolMat.identity(self.n)
        phase = start
        while (cur, phase) not in seen:
            seen[(cur, phase)] = len(prefix)
            prefix.append(cur)
            cur = cur.mul(self.mats[phase])
            phase = (phase + 1) % c
        mu = seen[(cur, phase)]
        lam = len(prefix) - mu
        return prefix, mu, lam

    def query(self, start_offset: int, m: int) -> BoolMat:
        """Product of m consecutive matrices beginning at start_offset."""
        if m < 0:
            raise ValueError("negative power")
        prefix, mu, lam = self._orbits[start_offset % len(self.mats)]
        if m < len(prefix):
            return prefix[m]
        return prefix[mu + (m - mu) % lam]

    def orbit_bound(self, start_offset: int) -> int:
        prefix, mu, lam = self._orbits[start_offset % len(self.mats)]
        return mu + lam


def power_query(oracle: CyclicPowerOracle, start_offset: int, m: int) -> BoolMat:
    return oracle.query(start_offset, m)


# --- decode tables --------------------------------------------------------


@dataclass(eq=False)
class DecodeTables:
    spec: WorkflowSpec
    dfa: Dfa
    analysis: SpecAnalysis
    transfers: dict[str, BoolMat]
    cross: dict[tuple[int, int, int], BoolMat] = field(default_factory=dict)
    up: dict[tuple[int, int], BoolMat] = field(default_factory=dict)
    down: dict[tuple[int, int], BoolMat] = field(default_factory=dict)
    node_reach: dict[int, tuple[int, ...]] = field(default_factory=dict)  # k -> row bitmasks
    step_in: dict[int, CyclicPowerOracle] = field(default_factory=dict)   # cycle s -> oracle
    step_out: dict[int, CyclicPowerOracle] = field(default_factory=dict)  # over reversed ups

    @property
    def n_states(self) -> int:
        return self.dfa.n

    @property
    def depth_bound(self) -> int:
        return 2 * len(self.spec.delta) + 1

    def reaches(self, k: int, i: int, j: int) -> bool:
        return bool(self.node_reach[k][i] >> j & 1)

    def cycle_position(self, k: int) -> int | None:
        """Position of the next cycle module inside production k, if cyclic."""
        prod = self.spec.production(k)
        cp = self.analysis.cyclic_production.get(prod.lhs)
        if cp is not None and cp[0] == k:
            return cp[1]
        return None

    # offset helpers: child m of an unfolding entered on edge t uses the
    # cycle edge at absolute 0-based offset (t-1 + m-1) mod c
    def power_in(self, s: int, t: int, first_child: int, count: int) -> BoolMat:
        c = len(self.analysis.cycle(s))
        return self.step_in[s].query((t - 1 + first_child - 1) % c, count)

    def power_out(self, s: int, t: int, top_child: int, count: int) -> BoolMat:
        c = len(self.analysis.cycle(s))
        a = (t - 1 + top_child - 1) % c
        return self.step_out[s].query((c - 1 - a) % c, count)


def compute_decode_tables(fg: FineGrainedSpec) -> DecodeTables:
    """Fill every table by per-production dynamic programming."""
    spec, dfa, transfers = fg.spec, fg.dfa, fg.transfers
    analysis = analyze_spec(spec)
    tables = DecodeTables(spec, dfa, analysis, transfers)
    n = dfa.n
    ident = BoolMat.identity(n)

    for prod in spec.productions:
        rhs = prod.rhs
        k = prod.k
        size = rhs.size
        tmods = [None] + [transfers[rhs.node_at(p)] for p in range(1, size + 1)]
        tmats = {tag: tag_matrix(dfa, tag) for tag in {t for _, _, t in rhs.edges}}
        out_edges: list[list[tuple[int, str]]] = [[] for _ in range(size + 1)]
        for s, d, tag in rhs.edges:
            out_edges[s].append((d, tag))

        # down: in(source) -> in(i), ascending positions
        down: dict[int, BoolMat] = {rhs.source: ident}
        for pos in range(1, size + 1):
            if pos not in down:
                down[pos] = BoolMat.zero(n)
                continue
            through = down[pos].mul(tmods[pos])
            for d, tag in out_edges[pos]:
                contrib = through.mul(tmats[tag])
                down[d] = contrib if d not in down else down[d].union(contrib)
        for pos in range(1, size + 1):
            tables.down[(k, pos)] = down.get(pos, BoolMat.zero(n))

        # up: out(i) -> out(sink), descending positions
        up: dict[int, BoolMat] = {rhs.sink: ident}
        for pos in range(size, 0, -1):
            acc = ident if pos == rhs.sink else BoolMat.zero(n)
            for d, tag in out_edges[pos]:
                acc = acc.union(tmats[tag].mul(tmods[d]).mul(up[d]))
            up[pos] = acc
        for pos in range(1, size + 1):
            tables.up[(k, pos)] = up[pos]

        # cross: out(i) -> in(j) for every ordered pair, one backward sweep per j
        for j in range(1, size + 1):
            xj: dict[int, BoolMat] = {}
            for pos in range(size, 0, -1):
                acc = BoolMat.zero(n)
                for d, tag in out_edges[pos]:
                    if d == j:
                        acc = acc.union(tmats[tag])
                    elif d in xj:
                        acc = acc.union(tmats[tag].mul(tmods[d]).mul(xj[d]))
                if acc.rows != (0,) * n:
                    xj[pos] = acc
            for i in range(1, size + 1):
                tables.cross[(k, i, j)] = xj.get(i, BoolMat.zero(n))

        # position-level reachability (paths of length >= 1)
        rows = [0] * (size + 1)
        for pos in range(size, 0, -1):
            mask = 0
            for d, _ in out_edges[pos]:
                mask |= (1 << d) | rows[d]
            rows[pos] = mask
        tables.node_reach[k] = tuple(rows)

    for cyc in analysis.cycles:
        ins = [tables.down[(e.k, e.i)] for e in cyc.edges]
        outs = [tables.up[(e.k, e.i)] for e in cyc.edges]
        tables.step_in[cyc.index] = CyclicPowerOracle(ins, n)
        tables.step_out[cyc.index] = CyclicPowerOracle(list(reversed(outs)), n)
    return tables


def universal_dfa(gamma) -> Dfa:
    """Minimal DFA of the match-anything query (single accepting state)."""
    return compile_minimal_dfa(Star(Wildcard()), gamma)


def build_tables(spec: WorkflowSpec, query: RegexAst | Dfa) -> DecodeTables:
    """Pipeline: minimal DFA, safety check, intersection, table computation."""
    dfa = query if isinstance(query, Dfa) else compile_minimal_dfa(query, spec.gamma)
    report = check_safety(spec, dfa)
    fg = intersect(spec, dfa, report)
    return compute_decode_tables(fg)


def reach_tables(spec: WorkflowSpec) -> DecodeTables:
    """Tables for plain reachability: the 1-state universal DFA."""
    return build_tables(spec, universal_dfa(spec.gamma))
