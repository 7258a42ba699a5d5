import random

import pytest

from helpers import quiet_random_run, random_instance
from provq.general import (SafeUnitRef, build_tag_index, dfs_oracle, eval_general,
                           eval_ifq, eval_join_tree, largest_safe_subtrees,
                           read_tag_index, write_tag_index)
from provq.generators import gen_synthetic_spec, random_query
from provq.intersect import reach_tables
from provq.rpq import (Alt, Concat, Star, Symbol, ast_symbols, dfa_accepts,
                       compile_minimal_dfa, interpret, match_ifq, parse_regex)
from provq.safety import is_safe_query


def displayed(run, pairs):
    names = {n.nid: n.display for n in run.nodes}
    return {(names[u], names[v]) for u, v in pairs}


def test_tag_index_fixture(run):
    index = build_tag_index(run)
    assert displayed(run, index["A"]) == {("e:2", "d:2"), ("d:2", "d:1"), ("d:1", "b:1")}
    assert "zz" not in index
    text = write_tag_index(index, run)
    assert read_tag_index(text, run) == index


def test_join_tree_examples(spec, run, by_display):
    index = build_tag_index(run)
    plus = eval_join_tree(parse_regex("A+"), run, index)
    assert displayed(run, plus) == {
        ("e:2", "d:2"), ("e:2", "d:1"), ("e:2", "b:1"),
        ("d:2", "d:1"), ("d:2", "b:1"), ("d:1", "b:1")}
    single = eval_join_tree(parse_regex("A"), run, index)
    l1 = {by_display[d].nid for d in ("d:1", "d:2", "e:2")}
    l2 = {by_display[d].nid for d in ("b:1", "b:2")}
    restricted = {(u, v) for u, v in single if u in l1 and v in l2}
    assert displayed(run, restricted) == {("d:1", "b:1")}
    eps = eval_join_tree(parse_regex("eps"), run, index)
    assert eps == {(n.nid, n.nid) for n in run.nodes}


def test_join_tree_iterations_bounded_by_longest_path(run):
    index = build_tag_index(run)
    log = []
    eval_join_tree(parse_regex("_+"), run, index, iteration_log=log)
    # the longest path in the sample run has 7 edges
    assert max(log) <= 7


def test_ifq_evaluation_matches_oracle(spec, run):
    index = build_tag_index(run)
    rt = reach_tables(spec)
    for text in ["_*.e._*.A._*", "_*.e._*", "_*"]:
        symbols = match_ifq(parse_regex(text))
        got = eval_ifq(symbols, run, index, rt)
        want = dfs_oracle(parse_regex(text), run)
        assert got == want, text
    assert eval_ifq(["c", "e"], run, index, rt) == dfs_oracle(parse_regex("_*.c._*.e._*"), run)


def test_ifq_absent_symbol_empty(spec, run):
    index = build_tag_index(run)
    rt = reach_tables(spec)
    assert eval_ifq(["A", "c"], run, index, rt) == set()  # no c-edge after an A-edge


def test_decomposition_shapes(spec):
    whole = largest_safe_subtrees(parse_regex("_*.e._*"), spec)
    assert whole.fully_safe
    assert len(whole.safe_units) == 1

    unsafe = largest_safe_subtrees(parse_regex("e"), spec)
    assert not unsafe.safe_units
    assert unsafe.skeleton == Symbol("e")

    # an alternation that is unsafe as a whole, with one safe branch: the
    # traversal stops at the safe subtree and leaves the symbol residual
    ast = parse_regex("(A+)|e")
    assert not is_safe_query(spec, ast)[0]
    mixed = largest_safe_subtrees(ast, spec)
    assert len(mixed.safe_units) == 1
    assert isinstance(mixed.skeleton, Alt)
    assert isinstance(mixed.skeleton.left, SafeUnitRef)
    assert mixed.skeleton.right == Symbol("e")

    # union of two safe branches can still be unsafe as a whole; both become units
    both = largest_safe_subtrees(parse_regex("(A+)|(c.e)"), spec)
    assert len(both.safe_units) == 2
    assert isinstance(both.skeleton, Alt)


def test_decomposition_preserves_language(spec):
    import itertools
    rng = random.Random(3)
    gamma = sorted(spec.gamma)
    for _ in range(20):
        ast = random_query(rng, gamma, rng.randint(2, 5))
        decomp = largest_safe_subtrees(ast, spec)

        def reassemble(node):
            if isinstance(node, SafeUnitRef):
                return decomp.safe_units[node.idx]
            if isinstance(node, Concat):
                return Concat(reassemble(node.left), reassemble(node.right))
            if isinstance(node, Alt):
                return Alt(reassemble(node.left), reassemble(node.right))
            if isinstance(node, Star):
                return Star(reassemble(node.inner))
            from provq.rpq import Plus
            if isinstance(node, Plus):
                return Plus(reassemble(node.inner))
            return node

        rebuilt = reassemble(decomp.skeleton)
        for n in range(4):
            for word in itertools.product(gamma[:2], repeat=n):
                assert interpret(ast, word) == interpret(rebuilt, word)


def test_eval_general_fixture_cases(spec, run):
    index = build_tag_index(run)
    # fully safe: identical to the filtered engine result
    got = eval_general(parse_regex("_*.e._*"), run, spec, index)
    assert got == dfs_oracle(parse_regex("_*.e._*"), run)
    # fully unsafe: identical to the join-tree baseline
    got = eval_general(parse_regex("e"), run, spec, index)
    assert got == eval_join_tree(parse_regex("e"), run, index)
    # mixed safe/unsafe trees
    for text in ["(A+)|e", "(_*.e._*).A", "e.(A+)"]:
        mixed = parse_regex(text)
        assert eval_general(mixed, run, spec, index) == dfs_oracle(mixed, run), text


@pytest.mark.parametrize("seed", range(8))
def test_general_agreement_random(seed):
    rng = random.Random(seed + 500)
    spec = gen_synthetic_spec(size=rng.randint(25, 60), num_composite=rng.randint(3, 6),
                              num_cycles=rng.randint(0, 2), max_degree=4, seed=seed)
    run = quiet_random_run(spec, rng.randint(60, 250), seed)
    index = build_tag_index(run)
    gamma = sorted(spec.gamma)
    for _ in range(4):
        query = random_query(rng, gamma, rng.randint(2, 5))
        truth = dfs_oracle(query, run)
        assert eval_join_tree(query, run, index) == truth
        assert eval_general(query, run, spec, index) == truth
        assert eval_general(query, run, spec, index, narrow=False) == truth
        symbols = match_ifq(query)
        if symbols is not None:
            assert eval_ifq(symbols, run, index, reach_tables(spec)) == truth


def test_dfs_oracle_on_empty_run_like_lists(spec, run):
    assert dfs_oracle(parse_regex("A+"), run, l1=[], l2=[]) == set()
