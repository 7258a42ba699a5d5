import random

import pytest

from helpers import enumerate_executions, exec_transfer
from provq.boolmat import BoolMat
from provq.generators import gen_synthetic_spec
from provq.grammar import Production, make_rhs, make_spec
from provq.rpq import compile_minimal_dfa, parse_regex
from provq.safety import check_safety, is_safe_query, lambda_of_production


def dfa_for(spec, text):
    return compile_minimal_dfa(parse_regex(text), spec.gamma)


def state_map(dfa, tag):
    """(q0, qf) for two-state filter DFAs like _*.e._*"""
    q0 = dfa.start
    return q0, dfa.step(q0, tag)


def test_production_transfer_examples(spec):
    dfa = dfa_for(spec, "_*.e._*")
    q0, qf = state_map(dfa, "e")
    ident = BoolMat.identity(2)
    transfers = {m: ident for m in spec.sigma if not spec.is_composite(m)}
    # the recursion-closing production drives q0 to qf and keeps qf at qf
    m3 = lambda_of_production(spec.production(3), dfa, transfers)
    assert m3 == BoolMat.from_pairs(2, [(q0, qf), (qf, qf)])
    # the parallel-branch production leaves states unchanged
    m4 = lambda_of_production(spec.production(4), dfa, transfers)
    assert m4 == ident


def test_one_state_dfa_transfer_is_all_ones(spec):
    dfa = dfa_for(spec, "_*")
    transfers = {m: BoolMat.identity(1) for m in spec.sigma}
    for prod in spec.productions:
        assert lambda_of_production(prod, dfa, transfers) == BoolMat.from_pairs(1, [(0, 0)])


def test_filter_query_safe_with_expected_transfers(spec):
    dfa = dfa_for(spec, "_*.e._*")
    q0, qf = state_map(dfa, "e")
    report = check_safety(spec, dfa)
    assert report.verdict == "safe"
    assert report.transfers["A"] == BoolMat.from_pairs(2, [(q0, qf), (qf, qf)])
    assert report.transfers["B"] == BoolMat.identity(2)
    # S additionally keeps q0 alive through the branch that avoids the e edge
    assert report.transfers["S"] == BoolMat.from_pairs(2, [(q0, q0), (q0, qf), (qf, qf)])


def test_single_symbol_query_unsafe_with_witness(spec):
    report = check_safety(spec, dfa_for(spec, "e"))
    assert report.verdict == "unsafe"
    w = report.witness
    assert w.module == "A"
    assert {w.bound_production, w.conflict_production} == {2, 3}
    assert w.bound_matrix != w.conflict_matrix


def test_unsafe_and_safe_query_examples(spec):
    assert is_safe_query(spec, parse_regex("_*.e._*"))[0]
    assert not is_safe_query(spec, parse_regex("e"))[0]
    assert not is_safe_query(spec, parse_regex("_*.a._*"))[0]
    assert is_safe_query(spec, parse_regex("_*"))[0]


def test_universal_query_safe_on_any_spec():
    for seed in range(5):
        spec = gen_synthetic_spec(size=40, num_composite=4, num_cycles=1,
                                  max_degree=4, seed=seed)
        assert is_safe_query(spec, parse_regex("_*"))[0]


def test_unproductive_verdict():
    spec = make_spec("u", "S", [
        Production(1, "S", make_rhs(["a", "X", "b"], [(1, 2, "a"), (2, 3, "x")])),
    ], extra_composites=["X"])
    dfa = compile_minimal_dfa(parse_regex("_*"), spec.gamma)
    assert check_safety(spec, dfa).verdict == "unproductive"


def small_spec_and_queries(seed):
    rng = random.Random(seed)
    spec = gen_synthetic_spec(size=rng.randint(18, 34), num_composite=rng.randint(2, 4),
                              num_cycles=rng.randint(0, 2), max_degree=3, seed=seed)
    gamma = sorted(spec.gamma)
    texts = ["_*", f"_*.{rng.choice(gamma)}._*", f"{rng.choice(gamma)}*",
             f"{rng.choice(gamma)}.{rng.choice(gamma)}",
             f"({rng.choice(gamma)}|{rng.choice(gamma)})*"]
    return spec, [parse_regex(rng.choice(texts)) for _ in range(2)]


@pytest.mark.parametrize("seed", range(12))
def test_checker_matches_enumeration_oracle(seed):
    """Verdict and matrices agree with brute-force execution enumeration."""
    from helpers import EnumerationOverflow
    spec, queries = small_spec_and_queries(seed)
    try:
        execs_by_module = {m: enumerate_executions(spec, m, max_unroll=3, cap=4000)
                           for m in sorted(spec.delta)}
    except EnumerationOverflow:
        pytest.skip("execution set too large to enumerate exhaustively")
    for ast in queries:
        dfa = compile_minimal_dfa(ast, spec.gamma)
        report = check_safety(spec, dfa)
        mats_by_module = {m: {exec_transfer(ex, dfa) for ex in execs}
                          for m, execs in execs_by_module.items()}
        for module, execs in execs_by_module.items():
            assert execs, f"no executions for {module}"
        if report.verdict == "safe":
            for module, mats in mats_by_module.items():
                assert mats == {report.transfers[module]}, module
        else:
            assert any(len(mats) > 1 for mats in mats_by_module.values())


def test_verdict_invariant_under_production_permutation(spec):
    perms = [[2, 1, 3, 4], [4, 3, 2, 1], [3, 4, 1, 2]]
    for order in perms:
        prods = [spec.production(k) for k in order]
        renum = [Production(i + 1, p.lhs, p.rhs) for i, p in enumerate(prods)]
        permuted = make_spec(spec.name, spec.start, renum)
        for text in ["_*.e._*", "e", "_*.a._*", "_*", "A+"]:
            want = is_safe_query(spec, parse_regex(text))[0]
            assert is_safe_query(permuted, parse_regex(text))[0] == want, (order, text)
