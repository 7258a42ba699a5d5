"""Synthetic specifications, queries, and workload shapes for tests and benches.

Generated grammars arrange composite modules in a strict order so that only
the designated cycle groups create production-graph cycles; that keeps every
sample strictly linear-recursive by construction.  Edge tags follow the
source-module naming convention, with optional extra backbone tags threaded
through the start production so that indexed-filter queries over them are
safe by construction.
"""

from __future__ import annotations

import random

from .grammar import Production, WorkflowSpec, make_rhs, make_spec, validate_spec
from .rpq import (Alt, Concat, Epsilon, Plus, RegexAst, Star, Symbol, Wildcard)


def gen_synthetic_spec(size: int, num_composite: int, num_cycles: int,
                       max_degree: int, seed: int,
                       backbone_tags: list[str] | None = None) -> WorkflowSpec:
    """Random strictly-linear-recursive spec of roughly the requested size.

    ``size`` counts 1 + |rhs| per production.  Composites are C1..Cn with C1
    the start; cycle groups are disjoint runs of consecutive composites, each
    group's members chained by their recursive productions.  Base productions
    only reference strictly later composites, so no stray cycles can form.
    When ``backbone_tags`` is given, the start production threads a chain of
    fresh atomic modules connected by those tags before the rest of its body.
    """
    if num_composite < 1:
        raise ValueError("need at least one composite module")
    rng = random.Random(seed)
    composites = [f"C{i}" for i in range(1, num_composite + 1)]
    atoms = [f"z{i}" for i in range(1, max(3, num_composite // 2 + 2) + 1)]

    # disjoint cycle groups of length 1..3 over non-start composites
    in_cycle: dict[str, list[str]] = {}
    groups: list[list[str]] = []
    pool = composites[1:] if num_composite > 1 else []
    idx = 0
    for _ in range(num_cycles):
        if idx >= len(pool):
            break
        length = rng.randint(1, min(3, len(pool) - idx))
        group = pool[idx:idx + length]
        idx += length
        groups.append(group)
        for m in group:
            in_cycle[m] = group

    productions: list[Production] = []

    def later_choices(name: str) -> list[str]:
        pos = composites.index(name)
        group = in_cycle.get(name, [name])
        last_member = max(composites.index(g) for g in group)
        return composites[max(pos, last_member) + 1:]

    def random_rhs(name: str, must_include: list[str], lo: int, hi: int):
        """DAG body with one source and one sink containing must_include."""
        n_extra = rng.randint(max(lo - len(must_include), 0), max(hi - len(must_include), 0))
        body = list(must_include)
        choices = later_choices(name)
        for _ in range(n_extra):
            if choices and rng.random() < 0.4:
                body.append(rng.choice(choices))
            else:
                body.append(rng.choice(atoms))
        rng.shuffle(body)
        nodes = [rng.choice(atoms)] + body + [rng.choice(atoms)]
        n = len(nodes)
        edges = set()
        for pos in range(2, n + 1):  # every node is entered: DAG stays single-source
            src = rng.randint(1, pos - 1)
            edges.add((src, pos, nodes[src - 1]))
        for pos in range(1, n):  # every node exits: single sink
            if not any(s == pos for s, _, _ in edges):
                dst = rng.randint(pos + 1, n)
                edges.add((pos, dst, nodes[pos - 1]))
        return make_rhs(nodes, sorted(edges), source=1, sink=n)

    k = 0
    start = composites[0]
    for name in composites:
        group = in_cycle.get(name)
        if group is not None:
            nxt = group[(group.index(name) + 1) % len(group)]
            k += 1
            productions.append(Production(k, name, random_rhs(name, [nxt], 1, max_degree)))
        k += 1
        backbone = backbone_tags if (name == start and backbone_tags) else None
        # base productions cascade into the next composite so derivations
        # actually exercise the whole grammar
        later = later_choices(name)
        cascade = [later[0]] if later else []
        if backbone:
            productions.append(Production(k, name, _backbone_rhs(name, backbone, later, atoms, rng, max_degree)))
        else:
            productions.append(Production(k, name, random_rhs(name, cascade, 0, max_degree)))

    spec = make_spec(f"syn{seed}", start, productions)
    spec = _pad_to_size(spec, size, atoms, rng)
    report = validate_spec(spec)
    if not report.ok:
        raise AssertionError("generator produced invalid spec: " + "; ".join(report.violations))
    return spec


def _backbone_rhs(name, backbone_tags, choices, atoms, rng, max_degree):
    """Chain w1 -g1-> w2 -g2-> ... then a random tail, still one source/sink."""
    chain = [f"w{i}" for i in range(len(backbone_tags) + 1)]
    tail = [rng.choice(choices) if choices else rng.choice(atoms)]
    nodes = chain + tail + [rng.choice(atoms)]
    edges = []
    for i, tag in enumerate(backbone_tags):
        edges.append((i + 1, i + 2, tag))
    n = len(nodes)
    edges.append((len(chain), len(chain) + 1, nodes[len(chain) - 1]))
    for pos in range(len(chain) + 1, n):
        edges.append((pos, pos + 1, nodes[pos - 1]))
    return make_rhs(nodes, edges, source=1, sink=n)


def _pad_to_size(spec: WorkflowSpec, size: int, atoms, rng) -> WorkflowSpec:
    """Grow the last production's rhs with filler chain nodes to hit ``size``."""
    deficit = size - spec.size
    if deficit <= 0:
        return spec
    prods = list(spec.productions)
    last = prods[-1]
    rhs = last.rhs
    nodes = list(rhs.nodes)
    edges = list(rhs.edges)
    old_sink = rhs.sink
    prev = old_sink
    for _ in range(deficit):
        nodes.append(rng.choice(atoms))
        edges.append((prev, len(nodes), nodes[prev - 1]))
        prev = len(nodes)
    prods[-1] = Production(last.k, last.lhs, make_rhs(nodes, edges, source=rhs.source, sink=prev))
    return make_spec(spec.name, spec.start, prods)


def fork_spec(branch_length: int = 10) -> WorkflowSpec:
    """Forking recursion: a distributor chain spawning one branch per step.

    The distributor edges are all tagged ``a`` so the Kleene-star query a*
    follows the fork spine; branch internals use tag ``x`` and the join edges
    tag ``m``, keeping a* safe (no execution offers an all-``a`` source-sink
    path, in every module alike).
    """
    branch = [f"p{i}" for i in range(1, branch_length + 1)]
    branch_edges = [(i, i + 1, "x") for i in range(1, branch_length)]
    return make_spec("fork", "S", [
        Production(1, "S", make_rhs(["F"], [])),
        Production(2, "F", make_rhs(
            ["a", "F", "A", "b"],
            [(1, 2, "a"), (1, 3, "a"), (2, 4, "m"), (3, 4, "m")])),
        Production(3, "F", make_rhs(["A"], [])),
        Production(4, "A", make_rhs(branch, branch_edges)),
    ])


def gen_queries(kind: str, spec: WorkflowSpec, seed: int, count: int = 1,
                k: int = 3, tag: str | None = None, n_ops: int = 4) -> list[RegexAst]:
    """Query generator families: ifq(k), star(tag), random(n_ops)."""
    rng = random.Random(seed)
    gamma = sorted(spec.gamma)
    out: list[RegexAst] = []
    for _ in range(count):
        if kind == "ifq":
            out.append(ifq_query(rng.sample(gamma, min(k, len(gamma))) if k else []))
        elif kind == "star":
            out.append(Star(Symbol(tag if tag else rng.choice(gamma))))
        elif kind == "random":
            out.append(random_query(rng, gamma, n_ops))
        else:
            raise ValueError(f"unknown query kind {kind!r}")
    return out


def ifq_query(symbols: list[str]) -> RegexAst:
    ast: RegexAst = Star(Wildcard())
    for sym in symbols:
        ast = Concat(Concat(ast, Symbol(sym)), Star(Wildcard()))
    return ast


def random_query(rng: random.Random, gamma: list[str], n_ops: int) -> RegexAst:
    """Random expression built from symbols by concat/alt/star/plus."""
    if n_ops <= 0:
        return Symbol(rng.choice(gamma))
    ops = ["concat", "alt", "star", "plus", "wild", "eps"]
    weights = [4, 3, 2, 1, 2, 1]
    op = rng.choices(ops, weights)[0]
    if op == "concat":
        split = rng.randint(0, n_ops - 1)
        return Concat(random_query(rng, gamma, split), random_query(rng, gamma, n_ops - 1 - split))
    if op == "alt":
        split = rng.randint(0, n_ops - 1)
        return Alt(random_query(rng, gamma, split), random_query(rng, gamma, n_ops - 1 - split))
    if op == "star":
        return Star(random_query(rng, gamma, n_ops - 1))
    if op == "plus":
        return Plus(random_query(rng, gamma, n_ops - 1))
    if op == "wild":
        return Wildcard() if rng.random() < 0.5 else Star(Wildcard())
    return Epsilon()
