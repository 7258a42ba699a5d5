from helpers import quiet_random_run
from provq.generators import (fork_spec, gen_queries, gen_synthetic_spec,
                              ifq_query, random_query)
from provq.grammar import analyze_spec, validate_spec
from provq.rpq import Star, Symbol, Wildcard, ast_symbols, match_ifq
from provq.safety import is_safe_query


def test_synthetic_specs_validate_and_hit_size():
    for seed in range(10):
        spec = gen_synthetic_spec(size=120, num_composite=7, num_cycles=2,
                                  max_degree=5, seed=seed)
        assert validate_spec(spec).ok
        assert spec.size >= 120
        assert spec.size <= 140  # padding only ever grows to the target


def test_synthetic_spec_cycle_count():
    spec = gen_synthetic_spec(size=80, num_composite=8, num_cycles=3,
                              max_degree=4, seed=1)
    assert len(analyze_spec(spec).cycles) == 3
    flat = gen_synthetic_spec(size=60, num_composite=5, num_cycles=0,
                              max_degree=4, seed=1)
    assert analyze_spec(flat).cycles == ()


def test_synthetic_spec_deterministic():
    a = gen_synthetic_spec(size=90, num_composite=6, num_cycles=2, max_degree=4, seed=7)
    b = gen_synthetic_spec(size=90, num_composite=6, num_cycles=2, max_degree=4, seed=7)
    assert a == b


def test_fork_spec_star_is_safe():
    spec = fork_spec()
    assert validate_spec(spec).ok
    assert len(analyze_spec(spec).cycles) == 1
    assert is_safe_query(spec, Star(Symbol("a")))[0]


def test_gen_queries_families(spec):
    ifqs = gen_queries("ifq", spec, seed=1, count=3, k=3)
    for q in ifqs:
        symbols = match_ifq(q)
        assert symbols is not None and len(symbols) == 3
    assert match_ifq(gen_queries("ifq", spec, seed=1, k=0)[0]) == []
    star = gen_queries("star", spec, seed=2, tag="a")[0]
    assert star == Star(Symbol("a"))
    zero_ops = gen_queries("random", spec, seed=3, n_ops=0)[0]
    assert isinstance(zero_ops, Symbol)
    randoms = gen_queries("random", spec, seed=4, count=10, n_ops=5)
    assert all(ast_symbols(q) <= spec.gamma for q in randoms)


def test_backbone_ifqs_safe_by_construction():
    tags = [f"g{i}" for i in range(1, 11)]
    spec = gen_synthetic_spec(size=150, num_composite=8, num_cycles=2,
                              max_degree=4, seed=5, backbone_tags=tags)
    for k in (0, 3, 10):
        assert is_safe_query(spec, ifq_query(tags[:k]))[0], k
