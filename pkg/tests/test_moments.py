from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pfrbench.lattice import IntSet, iterated_sumset
from pfrbench.moments import (
    WeightedSet,
    additive_energy,
    brute_force_energy,
    cauchy_schwarz_check,
    format_weighted,
    lambda_lower_estimate,
    parse_weighted_text,
    representation_function,
    weighted_moment,
)

small_sets = st.lists(st.integers(-15, 15), min_size=1, max_size=8, unique=True).map(IntSet.of)
weights = st.dictionaries(st.integers(-30, 30), st.fractions(min_value=Fraction(1, 9), max_value=9),
                          min_size=1, max_size=8)


def test_representation_examples():
    assert representation_function(IntSet.of([0, 1]), 2).counts == {0: 1, 1: 2, 2: 1}
    assert representation_function(IntSet.of([0, 1, 3]), 2).counts == {0: 1, 1: 2, 2: 1, 3: 2, 4: 2, 6: 1}
    assert representation_function(IntSet.of([4, 9]), 1).counts == {4: 1, 9: 1}


def test_energy_examples():
    assert additive_energy(IntSet.of([0, 1, 3]), 2) == 15
    assert additive_energy(IntSet.of([1, 2]), 2) == 6
    assert additive_energy(IntSet.of([5]), 3) == 1
    assert additive_energy(IntSet.of(range(8)), 2) == 344
    assert additive_energy(IntSet.of([1, 2, 4, 8]), 2) == 28


def test_weighted_moment_examples():
    assert weighted_moment(WeightedSet.uniform([1, 2]), 2).value == 6
    assert weighted_moment(WeightedSet({7: Fraction(1)}), 3).value == 1


@given(weights, st.fractions(min_value=Fraction(1, 5), max_value=5), st.integers(1, 3))
def test_moment_homogeneity(entries, t, k):
    W = WeightedSet(entries)
    assert weighted_moment(W.scaled(t), k).value == t ** (2 * k) * weighted_moment(W, k).value


@given(weights)
def test_parseval(entries):
    W = WeightedSet(entries)
    assert weighted_moment(W, 1).value == W.l2_squared()


def test_lambda_estimate_examples():
    est = lambda_lower_estimate(IntSet.of([1, 2]), 2)
    # uniform weights 1/sqrt|A| give lambda_2^2 >= E_2 / |A|^2
    assert est.kth_power_bound == Fraction(6, 4)
    assert est.at_most(6) and not est.at_most(1)
    assert lambda_lower_estimate(IntSet.of([3]), 2).kth_power_bound == 1
    assert lambda_lower_estimate(IntSet.of(range(8)), 2).kth_power_bound == Fraction(344, 64)


def test_lambda_estimate_matches_normalized_moment():
    A = IntSet.of([0, 1, 3, 7])
    for k in (1, 2, 3):
        W = WeightedSet.uniform(A)
        # ||f||_{2k}^{2k} with weights 1/sqrt|A| equals moment(unit) / |A|^k
        assert lambda_lower_estimate(A, k).kth_power_bound == weighted_moment(W, k).value / len(A) ** k


def test_cauchy_schwarz_examples():
    c = cauchy_schwarz_check(IntSet.of([0, 1]), 2)
    assert (c.lhs, c.rhs, c.passed) == (18, 16, True)
    for n in range(1, 33):
        assert cauchy_schwarz_check(IntSet.of(range(n)), 2).passed
    c = cauchy_schwarz_check(IntSet.of([9]), 2)
    assert (c.lhs, c.rhs) == (1, 1)


@settings(max_examples=40)
@given(small_sets, st.integers(1, 3))
def test_engines_agree_with_enumeration(A, k):
    assert weighted_moment(WeightedSet.uniform(A), k).value == additive_energy(A, k) == brute_force_energy(A, k)


@settings(max_examples=30)
@given(st.lists(st.integers(0, 300), min_size=1, max_size=64, unique=True), st.integers(1, 4))
def test_unit_moment_equals_energy_large(xs, k):
    A = IntSet.of(xs)
    assert weighted_moment(WeightedSet.uniform(A), k).value == additive_energy(A, k)


@given(small_sets, st.integers(1, 3), st.data())
def test_energy_monotone(A, k, data):
    sub = data.draw(st.lists(st.sampled_from(list(A)), min_size=1, unique=True))
    assert additive_energy(IntSet.of(sub), k) <= additive_energy(A, k)


@given(small_sets, st.integers(1, 3))
def test_representation_mass_and_support(A, k):
    r = representation_function(A, k)
    assert r.total() == len(A) ** k
    assert r.support() == iterated_sumset(A, k)


@given(weights)
def test_weighted_file_round_trip(entries):
    W = WeightedSet(entries)
    text = format_weighted(W)
    assert parse_weighted_text(text) == W
    assert format_weighted(parse_weighted_text(text)) == text


def test_weighted_validation():
    with pytest.raises(ValueError):
        WeightedSet({1: Fraction(0)})
    with pytest.raises(ValueError):
        parse_weighted_text("1,1/2\n1,1/3\n")
    with pytest.raises(ValueError):
        parse_weighted_text("1,0.5\n")
    with pytest.raises(ValueError):
        WeightedSet({1: 1}).union(WeightedSet({1: 2}))
