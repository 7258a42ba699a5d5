import random

from provq.boolmat import BoolMat, mul_chain, mul_count, reset_mul_count


def naive_mul(a, b):
    n = a.n
    return BoolMat.from_pairs(n, [(i, j) for i in range(n) for j in range(n)
                                  if any(a.get(i, k) and b.get(k, j) for k in range(n))])


def test_identity_and_get():
    ident = BoolMat.identity(3)
    assert ident.get(0, 0) and not ident.get(0, 1)
    assert ident.is_identity()
    assert BoolMat.from_pairs(2, [(0, 1)]).pairs() == [(0, 1)]


def test_mul_matches_naive_on_random_matrices():
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randint(1, 6)
        a = BoolMat.from_pairs(n, [(i, j) for i in range(n) for j in range(n) if rng.random() < 0.4])
        b = BoolMat.from_pairs(n, [(i, j) for i in range(n) for j in range(n) if rng.random() < 0.4])
        assert a.mul(b) == naive_mul(a, b)


def test_union_and_equality():
    a = BoolMat.from_pairs(2, [(0, 1)])
    b = BoolMat.from_pairs(2, [(1, 0)])
    assert a.union(b).pairs() == [(0, 1), (1, 0)]
    assert a != b
    assert hash(a) == hash(BoolMat.from_pairs(2, [(0, 1)]))


def test_mul_counter():
    reset_mul_count()
    a = BoolMat.identity(4)
    a.mul(a)
    a.mul(a)
    assert mul_count() == 2
    reset_mul_count()
    assert mul_count() == 0


def test_mul_chain_empty_is_identity():
    assert mul_chain([], 3) == BoolMat.identity(3)
    a = BoolMat.from_pairs(2, [(0, 1), (1, 1)])
    assert mul_chain([a, a], 2) == a.mul(a)
