"""Benchmark harness: four experiment families at desk scale.

(a) safety-check overhead vs grammar size and vs query size;
(b) pairwise decode time vs run size and query size, against product DFS;
(c) all-pairs indexed-filter selectivity and Kleene-star fork workloads for
    strategies s1/s2/g1/g3;
(d) improvement of the hybrid over the join-tree baseline on unsafe queries.

Times are medians of monotonic-clock reps with a warmup excluded; every row
carries its seed and strategy so correctness columns (result sizes) replay
exactly.  Strategy g2 (rare-label multiway search) belongs to an external
system and always reports a not-implemented row.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
import time
from dataclasses import dataclass, field

from .allpairs import (answer_all_pairs_safe_query, build_label_tree,
                       nested_loop_all_pairs, sorted_by_label)
from .derivation import Run, random_run
from .general import build_tag_index, dfs_oracle, eval_general, eval_ifq, eval_join_tree
from .generators import fork_spec, gen_synthetic_spec, ifq_query, random_query
from .grammar import WorkflowSpec
from .intersect import build_tables, reach_tables
from .rpq import Star, Symbol, ast_size, compile_minimal_dfa
from .safety import check_safety, is_safe_query

CSV_COLUMNS = ["experiment", "seed", "specSize", "runEdges", "querySize",
               "strategy", "resultSize", "medianMicros", "reps"]


@dataclass
class BenchConfig:
    experiments: list[str] = field(default_factory=list)  # subset of a,b,c,d
    seed: int = 0
    reps: int = 5
    spec_sizes: list[int] = field(default_factory=lambda: [400, 600, 800, 1000, 1200])
    ifq_ks: list[int] = field(default_factory=lambda: list(range(0, 11)))
    run_sizes: list[int] = field(default_factory=lambda: [1000, 2000, 4000, 8000])
    fork_sizes: list[int] = field(default_factory=lambda: [1000, 2000, 4000, 8000, 16000])
    pairs_per_rep: int = 200
    list_size: int = 150
    n_general_queries: int = 40
    strategies: list[str] = field(default_factory=lambda: ["s1", "s2", "g1", "g3"])


def median_micros(fn, reps: int) -> float:
    fn()  # warmup
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e6)
    return statistics.median(times)


def bench_suite(config: BenchConfig) -> str:
    """Run the selected experiments and return the CSV report."""
    rows: list[dict] = []
    for exp in config.experiments:
        if exp == "a":
            rows.extend(_experiment_overhead(config))
        elif exp == "b":
            rows.extend(_experiment_pairwise(config))
        elif exp == "c":
            rows.extend(_experiment_allpairs(config))
        elif exp == "d":
            rows.extend(_experiment_general(config))
        else:
            raise ValueError(f"unknown experiment {exp!r}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _row(exp, seed, spec_size, run_edges, query_size, strategy, result_size, micros, reps):
    return {
        "experiment": exp, "seed": seed, "specSize": spec_size,
        "runEdges": run_edges, "querySize": query_size, "strategy": strategy,
        "resultSize": result_size, "medianMicros": micros, "reps": reps,
    }


def _bench_spec(size: int, seed: int, ks: int = 10) -> WorkflowSpec:
    backbone = [f"g{i}" for i in range(1, ks + 1)]
    return gen_synthetic_spec(size=size, num_composite=max(6, size // 60),
                              num_cycles=3, max_degree=5, seed=seed,
                              backbone_tags=backbone)


def _experiment_overhead(config: BenchConfig):
    rows = []
    for size in config.spec_sizes:
        spec = _bench_spec(size, config.seed)
        query = ifq_query(["g1", "g2", "g3"])
        dfa = compile_minimal_dfa(query, spec.gamma)
        micros = median_micros(lambda: check_safety(spec, dfa), config.reps)
        report = check_safety(spec, dfa)
        rows.append(_row("overhead-vs-spec", config.seed, spec.size, 0,
                         ast_size(query), "safety",
                         f"{report.verdict}:{dfa.n}", round(micros, 1), config.reps))
    spec = _bench_spec(config.spec_sizes[len(config.spec_sizes) // 2], config.seed)
    for k in config.ifq_ks:
        query = ifq_query([f"g{i}" for i in range(1, k + 1)])
        dfa = compile_minimal_dfa(query, spec.gamma)
        micros = median_micros(lambda: check_safety(spec, dfa), config.reps)
        report = check_safety(spec, dfa)
        rows.append(_row("overhead-vs-query", config.seed, spec.size, 0,
                         ast_size(query), "safety",
                         f"{report.verdict}:{dfa.n}", round(micros, 1), config.reps))
    return rows


def _sample_pairs(run: Run, count: int, rng: random.Random):
    nodes = run.nodes
    return [(rng.choice(nodes), rng.choice(nodes)) for _ in range(count)]


def _experiment_pairwise(config: BenchConfig):
    rows = []
    spec = _bench_spec(600, config.seed)
    query = ifq_query(["g1", "g2", "g3"])
    assert is_safe_query(spec, query)[0]
    tables = build_tables(spec, query)
    dfa = compile_minimal_dfa(query, spec.gamma)
    for run_size in config.run_sizes:
        run = random_run(spec, run_size, config.seed + run_size)
        rng = random.Random(config.seed)
        pairs = _sample_pairs(run, config.pairs_per_rep, rng)

        def decode_all():
            from .decode import answer_pairwise_safe_query
            for u, v in pairs:
                answer_pairwise_safe_query(u.label, v.label, tables)

        micros = median_micros(decode_all, config.reps) / len(pairs)
        rows.append(_row("pairwise-vs-run", config.seed, spec.size, run.edge_count,
                         ast_size(query), "rpl", len(pairs), round(micros, 2), config.reps))

        def dfs_all():
            for u, v in pairs:
                dfs_oracle(query, run, l1=[u.nid], l2=[v.nid], dfa=dfa)

        micros = median_micros(dfs_all, config.reps) / len(pairs)
        rows.append(_row("pairwise-vs-run", config.seed, spec.size, run.edge_count,
                         ast_size(query), "dfs", len(pairs), round(micros, 2), config.reps))
    run = random_run(spec, 2000, config.seed + 1)
    rng = random.Random(config.seed)
    pairs = _sample_pairs(run, config.pairs_per_rep, rng)
    for k in config.ifq_ks:
        query = ifq_query([f"g{i}" for i in range(1, k + 1)])
        if not is_safe_query(spec, query)[0]:
            continue
        ktables = build_tables(spec, query)

        def decode_all():
            from .decode import answer_pairwise_safe_query
            for u, v in pairs:
                answer_pairwise_safe_query(u.label, v.label, ktables)

        micros = median_micros(decode_all, config.reps) / len(pairs)
        rows.append(_row("pairwise-vs-query", config.seed, spec.size, run.edge_count,
                         ast_size(query), "rpl", len(pairs), round(micros, 2), config.reps))
    return rows


def _experiment_allpairs(config: BenchConfig):
    rows = []
    rng = random.Random(config.seed)
    # indexed-filter queries of mixed selectivity on a synthetic workflow
    spec = _bench_spec(400, config.seed, ks=3)
    run = random_run(spec, 2000, config.seed)
    index = build_tag_index(run)
    rtables = reach_tables(spec)
    tags = sorted(spec.gamma)
    queries = [ifq_query(["g1", "g2", "g3"])]
    for _ in range(7):
        queries.append(ifq_query(rng.sample(tags, min(3, len(tags)))))
    safe_queries = [q for q in queries if is_safe_query(spec, q)[0]]
    nodes = sorted_by_label(run.nodes)
    l1 = sorted_by_label(rng.sample(nodes, min(config.list_size, len(nodes))))
    l2 = sorted_by_label(rng.sample(nodes, min(config.list_size, len(nodes))))
    for qi, query in enumerate(safe_queries):
        rows.extend(_allpairs_strategies(config, f"allpairs-ifq{qi}", spec, run, index,
                                         rtables, query, l1, l2))
    # Kleene star on fork runs
    fspec = fork_spec()
    star = Star(Symbol("a"))
    assert is_safe_query(fspec, star)[0]
    for size in config.fork_sizes:
        frun = random_run(fspec, size, config.seed + size, recursion_bias=1.0)
        findex = build_tag_index(frun)
        frtables = reach_tables(fspec)
        fr = random.Random(config.seed)
        fnodes = sorted_by_label(frun.nodes)
        fl1 = sorted_by_label(fr.sample(fnodes, min(config.list_size, len(fnodes))))
        fl2 = sorted_by_label(fr.sample(fnodes, min(config.list_size, len(fnodes))))
        rows.extend(_allpairs_strategies(config, "allpairs-star", fspec, frun, findex,
                                         frtables, star, fl1, fl2))
    return rows


def _allpairs_strategies(config, exp, spec, run, index, rtables, query, l1, l2):
    rows = []
    qsize = ast_size(query)
    tables = build_tables(spec, query)
    t1 = build_label_tree(l1, tables)
    t2 = build_label_tree(l2, tables)
    l1_ids = {n.nid for n in l1}
    l2_ids = {n.nid for n in l2}
    for strategy in config.strategies:
        if strategy == "g2":
            rows.append(_row(exp, config.seed, spec.size, run.edge_count, qsize,
                             "g2", "NA", "NA", 0))
            continue
        if strategy == "s1":
            fn = lambda: nested_loop_all_pairs(l1, l2, tables)
        elif strategy == "s2":
            fn = lambda: answer_all_pairs_safe_query(t1, t2, tables)
        elif strategy == "g1":
            fn = lambda: {(u, v) for u, v in eval_join_tree(query, run, index)
                          if u in l1_ids and v in l2_ids}
        elif strategy == "g3":
            syms = _ifq_symbols(query)
            if syms is None:
                continue
            fn = lambda: {(u, v) for u, v in eval_ifq(syms, run, index, rtables)
                          if u in l1_ids and v in l2_ids}
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        result = fn()
        micros = median_micros(fn, config.reps)
        rows.append(_row(exp, config.seed, spec.size, run.edge_count, qsize,
                         strategy, len(result), round(micros, 1), config.reps))
    return rows


def _ifq_symbols(query):
    from .rpq import match_ifq
    return match_ifq(query)


def _experiment_general(config: BenchConfig):
    rows = []
    spec = _bench_spec(300, config.seed, ks=3)
    run = random_run(spec, 1000, config.seed)
    index = build_tag_index(run)
    rng = random.Random(config.seed)
    tags = sorted(spec.gamma)
    found = 0
    attempt = 0
    while found < config.n_general_queries and attempt < config.n_general_queries * 40:
        attempt += 1
        query = random_query(rng, tags, rng.randint(3, 7))
        try:
            safe, _ = is_safe_query(spec, query)
        except ValueError:
            continue
        if safe:
            continue
        found += 1
        qsize = ast_size(query)
        baseline = median_micros(lambda: eval_join_tree(query, run, index), config.reps)
        hybrid = median_micros(lambda: eval_general(query, run, spec, index), config.reps)
        size = len(eval_join_tree(query, run, index))
        rows.append(_row("general", config.seed + attempt, spec.size, run.edge_count,
                         qsize, "g1", size, round(baseline, 1), config.reps))
        rows.append(_row("general", config.seed + attempt, spec.size, run.edge_count,
                         qsize, "hybrid", size, round(hybrid, 1), config.reps))
    return rows
