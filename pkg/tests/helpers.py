"""Shared oracles and instance generators for the test suite.

Everything here is deliberately independent of the decode path it checks:
reachability and query matching use product-graph search over the explicit
run, executions are enumerated by brute-force grammar expansion, and
transfer matrices come from DFS over materialized port graphs.
"""

from __future__ import annotations

import itertools
import random
import warnings

from provq.boolmat import BoolMat
from provq.derivation import Run, random_run
from provq.general import dfs_oracle
from provq.generators import gen_synthetic_spec, ifq_query, random_query
from provq.grammar import WorkflowSpec, analyze_spec
from provq.intersect import build_tables, reach_tables
from provq.rpq import (Alt, Concat, RegexAst, Star, Symbol, Wildcard,
                       compile_minimal_dfa)
from provq.safety import is_safe_query


def quiet_random_run(spec: WorkflowSpec, edges: int, seed: int, bias: float = 0.5) -> Run:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return random_run(spec, edges, seed, bias)


def pairwise_dfs(ast_or_dfa, run: Run, u, v) -> bool:
    """Ground truth for one pair via product search."""
    if hasattr(ast_or_dfa, "step"):
        return (u, v) in dfs_oracle(None, run, l1=[u], l2=[v], dfa=ast_or_dfa)
    return (u, v) in dfs_oracle(ast_or_dfa, run, l1=[u], l2=[v])


def reach_closure(run: Run) -> set[tuple[int, int]]:
    """All reachable pairs, zero-length paths included."""
    adj: dict[int, list[int]] = {}
    for s, d, _ in run.edges:
        adj.setdefault(s, []).append(d)
    out = set()
    for n in run.nodes:
        seen = {n.nid}
        stack = [n.nid]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        out.update((n.nid, m) for m in seen)
    return out


def safe_query_pool(spec: WorkflowSpec, rng: random.Random, max_states: int = 6,
                    want: int = 4) -> list[RegexAst]:
    """Assorted queries that are safe for this spec, smallest DFAs first."""
    gamma = sorted(spec.gamma)
    candidates: list[RegexAst] = [Star(Wildcard())]
    for _ in range(30):
        kind = rng.randrange(4)
        if kind == 0:
            candidates.append(ifq_query(rng.sample(gamma, min(rng.randint(1, 2), len(gamma)))))
        elif kind == 1:
            candidates.append(Star(Symbol(rng.choice(gamma))))
        elif kind == 2:
            tags = rng.sample(gamma, min(2, len(gamma)))
            alt: RegexAst = Symbol(tags[0])
            for t in tags[1:]:
                alt = Alt(alt, Symbol(t))
            candidates.append(Star(alt))
        else:
            candidates.append(random_query(rng, gamma, rng.randint(1, 4)))
    pool = []
    seen = set()
    for ast in candidates:
        key = repr(ast)
        if key in seen:
            continue
        seen.add(key)
        try:
            dfa = compile_minimal_dfa(ast, spec.gamma)
        except ValueError:
            continue
        if dfa.n > max_states:
            continue
        safe, _ = is_safe_query(spec, ast)
        if safe:
            pool.append(ast)
            if len(pool) >= want:
                break
    return pool


def random_instance(seed: int, run_edges: int = 400, max_modules: int = 40,
                    max_run_edges: int | None = None):
    """(spec, run, safe query) triple for the oracle-equivalence suites.

    With ``max_run_edges`` set, specs whose runs cannot stay inside that cap
    fall outside the instance family and are resampled deterministically.
    """
    spec_seed = seed
    while True:
        rng = random.Random(spec_seed)
        n_comp = rng.randint(3, min(10, max_modules // 2))
        spec = gen_synthetic_spec(size=rng.randint(30, 90), num_composite=n_comp,
                                  num_cycles=rng.randint(0, 3), max_degree=rng.randint(3, 5),
                                  seed=spec_seed)
        assert len(spec.sigma) <= max_modules
        run = None
        for attempt in range(8):
            candidate = quiet_random_run(spec, rng.randint(max(10, run_edges // 4), run_edges),
                                         seed + 7919 * attempt, bias=rng.random())
            if max_run_edges is None or candidate.edge_count <= max_run_edges:
                run = candidate
                break
        if run is not None:
            break
        spec_seed += 100003
    pool = safe_query_pool(spec, rng)
    query = pool[seed % len(pool)]
    return spec, run, query


# --- brute-force execution enumeration ------------------------------------

Exec = tuple  # (names tuple, edges tuple[(i, j, tag)], source, sink)


def single_node_exec(name: str) -> Exec:
    return ((name,), (), 0, 0)


def compose_exec(rhs, parts: list[Exec]) -> Exec:
    """Splice per-position executions into the rhs skeleton."""
    names: list[str] = []
    edges: list[tuple[int, int, str]] = []
    offsets: list[int] = []
    for part in parts:
        offsets.append(len(names))
        pn, pe, _, _ = part
        names.extend(pn)
        edges.extend((offsets[-1] + a, offsets[-1] + b, t) for a, b, t in pe)
    for s, d, tag in rhs.edges:
        ps, pd = parts[s - 1], parts[d - 1]
        edges.append((offsets[s - 1] + ps[3], offsets[d - 1] + pd[2], tag))
    src_part, sink_part = parts[rhs.source - 1], parts[rhs.sink - 1]
    return (tuple(names), tuple(edges),
            offsets[rhs.source - 1] + src_part[2],
            offsets[rhs.sink - 1] + sink_part[3])


class EnumerationOverflow(Exception):
    """Raised when the execution set exceeds the cap; results would be partial."""


def enumerate_executions(spec: WorkflowSpec, module: str, max_unroll: int = 3,
                         cap: int = 4000) -> list[Exec]:
    """All executions of a module with every cycle fired at most max_unroll times.

    Raises EnumerationOverflow instead of truncating: a truncated set could
    hide exactly the conflicting execution an oracle is looking for.
    """
    analysis = analyze_spec(spec)
    n_cycles = len(analysis.cycles)

    def expand(name: str, budgets: tuple[int, ...]) -> list[Exec]:
        if not spec.is_composite(name):
            return [single_node_exec(name)]
        out: list[Exec] = []
        cyc = analysis.cyclic_production.get(name)
        for prod in spec.productions_of(name):
            budgets2 = budgets
            if cyc is not None and prod.k == cyc[0]:
                s = analysis.cycle_of_module[name][0]
                if budgets[s - 1] == 0:
                    continue
                budgets2 = budgets[:s - 1] + (budgets[s - 1] - 1,) + budgets[s:]
            per_position = [expand(nm, budgets2) for nm in prod.rhs.nodes]
            for combo in itertools.product(*per_position):
                out.append(compose_exec(prod.rhs, list(combo)))
                if len(out) > cap:
                    raise EnumerationOverflow(name)
        return out

    return expand(module, (max_unroll,) * n_cycles)


def exec_transfer(ex: Exec, dfa) -> BoolMat:
    """lambda(M, ex) by product-graph DFS over the explicit execution."""
    names, edges, src, sink = ex
    adj: dict[int, list[tuple[int, str]]] = {}
    for a, b, t in edges:
        adj.setdefault(a, []).append((b, t))
    pairs = []
    for q0 in range(dfa.n):
        seen = {(src, q0)}
        stack = [(src, q0)]
        while stack:
            node, q = stack.pop()
            if node == sink:
                pairs.append((q0, q))
            for b, t in adj.get(node, ()):
                q2 = dfa.step(q, t)
                if (b, q2) not in seen:
                    seen.add((b, q2))
                    stack.append((b, q2))
    return BoolMat.from_pairs(dfa.n, pairs)


def build_both_tables(spec, query):
    return build_tables(spec, query), reach_tables(spec)
