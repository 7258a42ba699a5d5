"""provq command line: generate specs and runs, check safety, answer queries.

Subcommands:

    gen-spec   synthesize a strictly-linear-recursive specification
    gen-run    derive a labeled random run from a spec file
    index      build the inverted tag index of a run
    safety     verdict + transfer matrices for a query against a spec
    explain    dump decode tables for inspection
    query      pairwise | allpairs | general
    bench      experiment harness, CSV to stdout or file

Query results print as text by default; ``--format csv`` / ``--format jsonl``
switch to machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .allpairs import (answer_all_pairs_safe_query, build_label_tree,
                       nested_loop_all_pairs, sorted_by_label)
from .bench import BenchConfig, bench_suite
from .decode import answer_pairwise_safe_query
from .derivation import deserialize_run, random_run, serialize_run
from .general import (build_tag_index, dfs_oracle, eval_general, eval_ifq,
                      eval_join_tree, read_tag_index, write_tag_index)
from .generators import fork_spec, gen_synthetic_spec
from .grammar import parse_spec_file, validate_spec, write_spec_file
from .intersect import build_tables, reach_tables
from .rpq import compile_minimal_dfa, match_ifq, parse_regex
from .safety import check_safety


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="provq", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"provq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-spec", help="generate a synthetic specification")
    g.add_argument("--size", type=int, default=200)
    g.add_argument("--composites", type=int, default=8)
    g.add_argument("--cycles", type=int, default=2)
    g.add_argument("--max-degree", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fork", action="store_true", help="emit the fork workload spec instead")
    g.add_argument("--out", type=Path)
    g.set_defaults(func=cmd_gen_spec)

    r = sub.add_parser("gen-run", help="derive a labeled random run")
    r.add_argument("--spec", type=Path, required=True)
    r.add_argument("--edges", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--recursion-bias", type=float, default=0.5)
    r.add_argument("--out", type=Path)
    r.set_defaults(func=cmd_gen_run)

    i = sub.add_parser("index", help="build the inverted tag index of a run")
    i.add_argument("--run", type=Path, required=True)
    i.add_argument("--out", type=Path)
    i.set_defaults(func=cmd_index)

    s = sub.add_parser("safety", help="check query safety against a spec")
    s.add_argument("--spec", type=Path, required=True)
    s.add_argument("--query", required=True)
    s.set_defaults(func=cmd_safety)

    e = sub.add_parser("explain", help="dump transfer matrices and decode tables")
    e.add_argument("--spec", type=Path, required=True)
    e.add_argument("--query", required=True)
    e.set_defaults(func=cmd_explain)

    q = sub.add_parser("query", help="answer a query over a run")
    qsub = q.add_subparsers(dest="mode", required=True)

    qp = qsub.add_parser("pairwise")
    _query_common(qp)
    qp.add_argument("--u", required=True, metavar="NAME:OCC")
    qp.add_argument("--v", required=True, metavar="NAME:OCC")
    qp.set_defaults(func=cmd_query_pairwise)

    qa = qsub.add_parser("allpairs")
    _query_common(qa)
    qa.add_argument("--l1", type=Path, help="node list file, one NAME:OCC per line")
    qa.add_argument("--l2", type=Path)
    qa.add_argument("--strategy", choices=["s1", "s2"], default="s2")
    qa.set_defaults(func=cmd_query_allpairs)

    qg = qsub.add_parser("general")
    _query_common(qg)
    qg.add_argument("--strategy", choices=["g1", "g3", "hybrid", "oracle"], default="hybrid")
    qg.add_argument("--no-narrow", action="store_true",
                    help="disable input-list narrowing of safe units")
    qg.set_defaults(func=cmd_query_general)

    b = sub.add_parser("bench", help="run benchmark experiments")
    b.add_argument("--experiments", default="a,b,c,d")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--quick", action="store_true", help="smaller sizes for smoke runs")
    b.add_argument("--out", type=Path)
    b.set_defaults(func=cmd_bench)
    return p


def _query_common(sp) -> None:
    sp.add_argument("--spec", type=Path, required=True)
    sp.add_argument("--run", type=Path, required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--format", choices=["text", "csv", "jsonl"], default="text")


def _emit(args, text: str) -> None:
    print(text, end="" if text.endswith("\n") else "\n")


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_gen_spec(args) -> int:
    if args.fork:
        spec = fork_spec()
    else:
        spec = gen_synthetic_spec(args.size, args.composites, args.cycles,
                                  args.max_degree, args.seed)
    _write(args.out, write_spec_file(spec))
    return 0


def _load_spec(path: Path):
    spec = parse_spec_file(path.read_text())
    report = validate_spec(spec)
    if not report.ok:
        raise ValueError("invalid specification: " + "; ".join(report.violations))
    return spec


def cmd_gen_run(args) -> int:
    spec = _load_spec(args.spec)
    run = random_run(spec, args.edges, args.seed, args.recursion_bias)
    _write(args.out, serialize_run(run))
    return 0


def cmd_index(args) -> int:
    run = deserialize_run(args.run.read_text())
    _write(args.out, write_tag_index(build_tag_index(run), run))
    return 0


def cmd_safety(args) -> int:
    spec = _load_spec(args.spec)
    dfa = compile_minimal_dfa(parse_regex(args.query), spec.gamma)
    report = check_safety(spec, dfa)
    print(f"verdict: {report.verdict}")
    print(f"dfa states: {dfa.n} (dead: {dfa.dead if dfa.dead is not None else 'none'})")
    if report.verdict == "safe":
        for name in sorted(report.transfers):
            if spec.is_composite(name):
                print(f"transfer {name}:")
                print(report.transfers[name].grid())
    if report.witness:
        w = report.witness
        print(f"witness module: {w.module}")
        print(f"production {w.bound_production} gives:")
        print(w.bound_matrix.grid())
        print(f"production {w.conflict_production} gives:")
        print(w.conflict_matrix.grid())
    return 0


def cmd_explain(args) -> int:
    spec = _load_spec(args.spec)
    tables = build_tables(spec, parse_regex(args.query))
    print(f"states: {tables.n_states}, depth bound: {tables.depth_bound}")
    for name in sorted(tables.transfers):
        if spec.is_composite(name):
            print(f"transfer {name}:")
            print(tables.transfers[name].grid())
    for prod in spec.productions:
        size = prod.rhs.size
        print(f"production {prod.k} ({prod.lhs}):")
        for i in range(1, size + 1):
            print(f"  up[{i}]   {tables.up[(prod.k, i)].rows}")
            print(f"  down[{i}] {tables.down[(prod.k, i)].rows}")
        reach = [(i, j) for i in range(1, size + 1) for j in range(1, size + 1)
                 if tables.reaches(prod.k, i, j)]
        print(f"  reach pairs: {reach}")
    return 0


def _load_query_context(args):
    spec = _load_spec(args.spec)
    run = deserialize_run(args.run.read_text())
    if run.spec_name != spec.name:
        print(f"warning: run was derived from {run.spec_name!r}, spec is {spec.name!r}",
              file=sys.stderr)
    return spec, run, parse_regex(args.query)


def cmd_query_pairwise(args) -> int:
    spec, run, ast = _load_query_context(args)
    tables = build_tables(spec, ast)  # raises UnsafeQueryError for unsafe queries
    u = run.node(args.u)
    v = run.node(args.v)
    verdict = answer_pairwise_safe_query(u.label, v.label, tables)
    if args.format == "jsonl":
        print(json.dumps({"u": args.u, "v": args.v, "match": verdict}))
    elif args.format == "csv":
        print("u,v,match")
        print(f"{args.u},{args.v},{str(verdict).lower()}")
    else:
        print("true" if verdict else "false")
    return 0


def _load_list(run, path: Path | None):
    if path is None:
        return sorted_by_label(run.nodes)
    names = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    by_display = run.by_display()
    return sorted_by_label(by_display[n] for n in names)


def _print_pairs(args, run, pairs) -> None:
    names = {n.nid: n.display for n in run.nodes}
    ordered = sorted((names[u], names[v]) for u, v in pairs)
    if args.format == "jsonl":
        for u, v in ordered:
            print(json.dumps({"u": u, "v": v}))
    else:
        print("u,v")
        for u, v in ordered:
            print(f"{u},{v}")


def cmd_query_allpairs(args) -> int:
    spec, run, ast = _load_query_context(args)
    tables = build_tables(spec, ast)
    l1 = _load_list(run, args.l1)
    l2 = _load_list(run, args.l2)
    if args.strategy == "s1":
        pairs = nested_loop_all_pairs(l1, l2, tables)
    else:
        pairs = answer_all_pairs_safe_query(build_label_tree(l1, tables),
                                            build_label_tree(l2, tables), tables)
    _print_pairs(args, run, pairs)
    return 0


def cmd_query_general(args) -> int:
    spec, run, ast = _load_query_context(args)
    index = build_tag_index(run)
    if args.strategy == "g1":
        pairs = eval_join_tree(ast, run, index)
    elif args.strategy == "g3":
        symbols = match_ifq(ast)
        if symbols is None:
            print("error: strategy g3 needs a query of shape _*.a1._*...ak._*",
                  file=sys.stderr)
            return 1
        pairs = eval_ifq(symbols, run, index, reach_tables(spec))
    elif args.strategy == "oracle":
        pairs = dfs_oracle(ast, run)
    else:
        pairs = eval_general(ast, run, spec, index, narrow=not args.no_narrow)
    _print_pairs(args, run, pairs)
    return 0


def cmd_bench(args) -> int:
    config = BenchConfig(experiments=[e.strip() for e in args.experiments.split(",") if e.strip()],
                         seed=args.seed, reps=args.reps)
    if args.quick:
        config.spec_sizes = [400, 800]
        config.ifq_ks = [0, 3, 6]
        config.run_sizes = [1000, 2000]
        config.fork_sizes = [1000, 4000]
        config.pairs_per_rep = 50
        config.list_size = 60
        config.n_general_queries = 6
    _write(args.out, bench_suite(config))
    return 0


if __name__ == "__main__":
    sys.exit(main())
