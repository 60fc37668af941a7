import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from pfrbench.lattice import LatticeSet
from pfrbench.trees import (
    FiberTree,
    LeafSubset,
    branch_depth,
    brute_force_tree_stats,
    build_fiber_tree,
    constructive_decompose,
    dump_tree,
    epsilon_low_max,
    from_nested,
    induced_tree,
    low_subtree_profile,
    max_binary_subtree,
    max_low_subtree,
    quasicube_subset_certificate,
    random_tree,
    subset_branch_depth,
    subset_is_binary,
    tree_stats,
    verify_quasicube_certificate,
)
from pfrbench.exact import ceil_div_root

EPS = [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]


def star(m):
    return from_nested([[]] * m)


def path(n):
    shape = []
    for _ in range(n):
        shape = [shape]
    return from_nested(shape)


def complete(arity, h):
    shape = []
    for _ in range(h):
        shape = [shape] * arity
    return from_nested(shape)


def cube(d):
    pts = [()]
    for _ in range(d):
        pts = [p + (x,) for p in pts for x in (0, 1)]
    return LatticeSet.of(pts, d)


seeds = st.integers(0, 2**32)


def small_tree(seed, max_leaves=14):
    rng = random.Random(seed)
    return random_tree(rng, max_leaves, max_arity=rng.randint(2, 5), max_depth=rng.randint(1, 6))


def test_build_examples():
    T = build_fiber_tree(LatticeSet.of([(4, 4)]))
    assert len(T) == 1 and T.leaf_count == 1
    T = build_fiber_tree(LatticeSet.of([(0, 0), (0, 1), (1, 5)]))
    root_kids = T.children[0]
    assert [T.labels[c] for c in root_kids] == [(1, 0), (1, 1)]
    left = root_kids[0]
    assert [T.labels[c] for c in T.children[left]] == [(2, 0), (2, 1)]
    T = build_fiber_tree(cube(3))
    assert T.is_binary() and T.height == 3 and T.leaf_count == 8 and branch_depth(T) == 3
    assert dump_tree(build_fiber_tree(LatticeSet.of([(0, 0), (1, 0)]))).splitlines() == [
        "root", "  (j=1, v=0) leaf 0,0", "  (j=1, v=1) leaf 1,0"]


@settings(max_examples=60)
@given(st.integers(1, 4).flatmap(
    lambda d: st.lists(st.tuples(*[st.integers(0, 3)] * d), min_size=1, max_size=30).map(lambda p: LatticeSet.of(p, d))))
def test_leaves_biject_and_labels_reconstruct(A):
    T = build_fiber_tree(A)
    assert sorted(T.leaf_point(i) for i in range(T.leaf_count)) == list(A.points)
    for i in range(T.leaf_count):
        v = T.leaf_nodes[i]
        x = T.leaf_point(i)
        for u in T.path_to_root(v):
            if T.labels[u]:
                j, val = T.labels[u]
                assert x[j - 1] == val
    assert branch_depth(T) <= T.height
    b, _ = max_binary_subtree(T)
    assert (b == T.leaf_count) == T.is_binary()


def test_branch_depth_examples():
    assert branch_depth(path(5)) == 0
    assert branch_depth(star(4)) == 1
    for h in range(5):
        assert branch_depth(complete(2, h)) == h


def test_binary_examples():
    assert max_binary_subtree(star(5))[0] == 2
    for h in range(5):
        assert max_binary_subtree(complete(2, h))[0] == 2**h
    T = complete(3, 2)
    assert max_binary_subtree(T)[0] == 4 == brute_force_tree_stats(T).binary_max
    assert max_binary_subtree(path(4))[0] == 1
    assert brute_force_tree_stats(path(4)).binary_max == 1


def test_low_examples():
    assert max_low_subtree(star(6), 0)[0] == 1
    assert max_low_subtree(star(6), 1)[0] == 6
    for h in range(1, 5):
        T = complete(2, h)
        for q in range(h):
            assert max_low_subtree(T, q)[0] == 2**q
            if h <= 3:
                assert brute_force_tree_stats(T).low_max_at(q) == 2**q
    s = brute_force_tree_stats(star(3))
    assert s.binary_max == 2 and s.low_max_at(1) == 3
    assert low_subtree_profile(complete(3, 2)) == (1, 3, 9)


def test_decompose_examples():
    T = star(7)
    dec = constructive_decompose(T, Fraction(1))
    assert dec.size == 7 and dec.guarantee_holds()
    for h in range(5):
        T = complete(2, h)
        for eps in EPS:
            dec = constructive_decompose(T, eps)
            assert dec.binary_max == T.leaf_count and dec.size >= 1


@settings(max_examples=200)
@given(seeds)
def test_dp_matches_oracle(seed):
    T = small_tree(seed)
    fast, slow = tree_stats(T), brute_force_tree_stats(T)
    assert fast == slow


@settings(max_examples=100)
@given(seeds)
def test_witnesses_are_valid(seed):
    T = small_tree(seed, 40)
    b, w = max_binary_subtree(T)
    assert len(w) == b and subset_is_binary(T, w.leaves)
    for B in range(branch_depth(T) + 1):
        D, w = max_low_subtree(T, B)
        assert len(w) == D and subset_branch_depth(T, w.leaves) <= B
    sub = induced_tree(T, w.leaves)
    assert sub.leaf_count == len(w)


@settings(max_examples=100)
@given(seeds, st.sampled_from(EPS))
def test_alternative_and_constructive(seed, eps):
    rng = random.Random(seed)
    T = random_tree(rng, 600, max_arity=rng.randint(2, 6))
    N = T.leaf_count
    b, _ = max_binary_subtree(T)
    D, _ = epsilon_low_max(T, eps)
    p, q = eps.numerator, eps.denominator
    assert D**p * b**q >= N**p
    dec = constructive_decompose(T, eps)
    assert ceil_div_root(N, b, eps) <= dec.size <= D
    assert subset_branch_depth(T, dec.witness.leaves) <= dec.budget


def test_random_tree_deterministic():
    a = random_tree(random.Random(5), 100, max_arity=3)
    b = random_tree(random.Random(5), 100, max_arity=3)
    assert a == b and a.shape() == b.shape()
    assert isinstance(a, FiberTree)


def test_leaf_subset_points():
    T = build_fiber_tree(LatticeSet.of([(0, 0), (0, 1), (1, 5)]))
    assert LeafSubset((0, 2)).points(T) == [(0, 0), (1, 5)]


def test_quasicube_examples():
    U = LatticeSet.of([(0, 0, 1), (1, 0, 0), (1, 1, 1)])
    cert = quasicube_subset_certificate(U)
    assert cert is not None and cert.size == 3 and verify_quasicube_certificate(U, cert)
    assert quasicube_subset_certificate(LatticeSet.of([(0,), (1,), (2,)])) is None
    full = cube(4)
    assert quasicube_subset_certificate(full).size == 16


@settings(max_examples=80)
@given(st.integers(1, 4).flatmap(
    lambda d: st.lists(st.tuples(*[st.integers(0, 4)] * d), min_size=1, max_size=40).map(lambda p: LatticeSet.of(p, d))))
def test_binary_witness_is_quasicube(A):
    T = build_fiber_tree(A)
    b, w = max_binary_subtree(T)
    B = LatticeSet.of(w.points(T), A.dimension)
    cert = quasicube_subset_certificate(B)
    assert cert is not None and cert.size == b and verify_quasicube_certificate(B, cert)
