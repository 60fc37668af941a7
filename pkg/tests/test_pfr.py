import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pfrbench.exact import ResourceCapExceeded
from pfrbench.lattice import LatticeSet, sumset
from pfrbench.pfr import (
    BetaEstimate,
    beta_lower_from_tree,
    beta_upper_search,
    default_candidate_family,
    doubling_consistency_check,
    exact_query_complexity,
    extract_structured_subset,
    run_query_protocol,
)
from pfrbench.trees import branch_depth, build_fiber_tree


def cube(d):
    pts = [()]
    for _ in range(d):
        pts = [p + (x,) for p in pts for x in (0, 1)]
    return LatticeSet.of(pts, d)


def line(pts):
    return LatticeSet.of([(x,) for x in pts], 1)


def random_set(seed, d, width, size):
    rng = random.Random(seed)
    pts = set()
    while len(pts) < size:
        pts.add(tuple(rng.randrange(width) for _ in range(d)))
    return LatticeSet.of(pts, d)


def test_extract_ap_keeps_everything():
    A = line(range(0, 60, 3))
    for eps in ("1/2", "1"):
        res = extract_structured_subset(A, eps)
        assert res.binary_max == 2 and res.subset == A and res.passed


def test_extract_cube_degenerates():
    A = cube(5)
    res = extract_structured_subset(A, Fraction(1, 2))
    assert res.binary_max == 32 and len(res.subset) >= 1 and res.passed


def test_extract_random_z4():
    A = random_set(11, 4, 6, 256)
    res = extract_structured_subset(A, "1/2")
    assert len(res.subset) * res.binary_max**2 >= 256
    assert res.passed
    doc = res.to_json()
    assert doc["epsilon"] == "1/2" and all(c["pass"] for c in doc["checks"])


def test_extract_rejects_bad_input():
    with pytest.raises(ValueError):
        extract_structured_subset(line([3]), "1/2")
    with pytest.raises(ValueError):
        extract_structured_subset(line([1, 2]), "0.5")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(2, 5), st.sampled_from(["1/2", "1", "1/3"]))
def test_extraction_contract(seed, d, width, eps):
    size = random.Random(seed).randint(2, min(120, width**d))
    A = random_set(seed, d, width, size)
    res = extract_structured_subset(A, eps)
    assert res.passed
    for x in res.subset:
        tr = run_query_protocol(res, x)
        assert tr.element == x and len(tr) <= res.query_budget
    if len(res.subset) <= 20:
        assert exact_query_complexity(res.subset) <= branch_depth(res.tree) <= res.query_budget


def test_query_examples():
    single = extract_structured_subset(line([4, 9]), "1/2")
    assert len(single.subset) == 1
    assert len(run_query_protocol(single, single.subset.points[0])) == 0
    T = build_fiber_tree(LatticeSet.of([(0, 0), (0, 1), (1, 5)]))
    tr = run_query_protocol(T, (1, 5))
    assert tr.queries == ((1, 1),)
    assert run_query_protocol(T, (0, 1)).queries == ((1, 0), (2, 1))
    with pytest.raises(KeyError):
        run_query_protocol(T, (1, 4))


def test_exact_query_complexity_examples():
    for d in range(1, 5):
        assert exact_query_complexity(cube(d)) == d
    assert exact_query_complexity(LatticeSet.of([(i, i * i % 5) for i in range(9)])) == 1
    # the second coordinate is injective on this set, so one query suffices
    assert exact_query_complexity(LatticeSet.of([(0, 0), (0, 1), (1, 5)])) == 1
    assert exact_query_complexity(LatticeSet.of([(0, 0), (0, 1), (1, 0)])) == 2
    with pytest.raises(ResourceCapExceeded):
        exact_query_complexity(line(range(100)))


def test_beta_upper_examples():
    U = line([0, 1])
    B = line(range(10))
    res = beta_upper_search(U, [("B", B, "C", B)])
    assert res.squared_ratio == 4 and res.witness == ("B", "C")
    assert beta_upper_search(U).squared_ratio == 4
    # singletons: the origin pair gives 1, the exact infimum
    assert beta_upper_search(line([5])).squared_ratio == 1
    U = line(range(5))
    m = 40
    A = line(range(m))
    assert beta_upper_search(U, [("A", A, "A", A)]).squared_ratio == Fraction((2 * m + 3) ** 2, m * m)


def test_beta_lower_examples():
    low = beta_lower_from_tree(cube(3))
    assert low.value == 8 and low.certificate is not None
    assert beta_lower_from_tree(line(range(7))).value == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_beta_bracket_consistent(seed):
    U = random_set(seed, 3, 3, random.Random(seed).randint(1, 12))
    est = BetaEstimate(beta_lower_from_tree(U), beta_upper_search(U, seed=seed))
    assert est.consistent()


def test_candidate_family_deterministic():
    U = cube(2)
    names = lambda fam: [(a, b) for a, _, b, _ in fam]
    assert names(default_candidate_family(U, seed=3)) == names(default_candidate_family(U, seed=3))


def test_doubling_consistency_examples():
    for n in range(2, 40):
        c = doubling_consistency_check(line(range(n)))
        assert c.passed and c.lhs == 2 * n * n and c.rhs == (2 * n - 1) ** 2
    for d in range(1, 6):
        c = doubling_consistency_check(cube(d))
        assert c.lhs == 2**d * 4**d and c.rhs == 9**d and c.passed


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 5), st.integers(2, 6))
def test_doubling_consistency_random(seed, d, width):
    A = random_set(seed, d, width, random.Random(seed).randint(1, min(80, width**d)))
    assert doubling_consistency_check(A).passed
    assert len(sumset(A, A)) >= len(A)
