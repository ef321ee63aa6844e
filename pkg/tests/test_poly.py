from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import toy_algs
from oracles import brute_coeffs
from ampclab.ampc import run
from ampclab.boolfn import PromiseFunction, promise_majority
from ampclab.errors import InvalidArgument, InvariantViolation
from ampclab.poly import (
    MultilinearPolynomial,
    extract_polynomial,
    from_dense,
    interpolate,
    mixture_check,
    mobius,
    multilinear_product,
    sweep,
    table_degree,
    to_dense,
    zeta,
)

X = MultilinearPolynomial.variable


tables = st.integers(0, 5).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(-5, 5), min_size=1 << n, max_size=1 << n))
)


@given(tables)
def test_mobius_zeta_inverse(nt):
    n, t = nt
    a = np.array(t, dtype=np.int64)
    c = mobius(a, n)
    assert np.array_equal(zeta(c, n), a)
    assert {int(m): int(c[m]) for m in np.flatnonzero(c)} == brute_coeffs(t, n)


@given(tables)
def test_interpolate_agrees_on_cube(nt):
    n, t = nt
    p = interpolate(t, n)
    assert [p.evaluate(x) for x in range(1 << n)] == t
    assert p.table(n) == t
    assert np.array_equal(to_dense(p, n), mobius(np.array(t, dtype=np.int64), n))
    assert from_dense(to_dense(p, n)) == p
    assert table_degree(np.array(t), n) == p.degree()


@given(tables, st.data())
def test_product_is_pointwise(nt, data):
    n, t = nt
    u = data.draw(st.lists(st.integers(-3, 3), min_size=1 << n, max_size=1 << n))
    p, q = interpolate(t, n), interpolate(u, n)
    pq = multilinear_product(p, q)
    assert pq == p * q
    assert pq.table(n) == [a * b for a, b in zip(t, u)]
    assert (p + q).table(n) == [a + b for a, b in zip(t, u)]
    assert (p - q).table(n) == [a - b for a, b in zip(t, u)]


def test_polynomial_basics():
    p = X(0) * X(1) + Fraction(1, 2) * X(2) - 3
    assert p.degree() == 2
    assert p.n_vars() == 3
    assert p.evaluate(0b011) == -2
    assert X(0) * X(0) == X(0)
    assert MultilinearPolynomial.from_json(p.to_json()) == p
    assert (X(0) - X(0)).is_zero()
    assert 1 - X(0) == MultilinearPolynomial({0: 1, 1: -1})
    with pytest.raises(InvalidArgument):
        to_dense(p, 3)
    with pytest.raises(InvalidArgument):
        interpolate([0, 1, 1], 2)


def test_parity_and_and_coefficients():
    par = interpolate([0, 1, 1, 0], 2)
    assert par == X(0) + X(1) - 2 * X(0) * X(1)
    assert interpolate([0, 0, 0, 1], 2) == X(0) * X(1)


# --- extraction -----------------------------------------------------------


@pytest.mark.parametrize(
    "alg,expected",
    [
        (toy_algs.identity(), X(0)),
        (toy_algs.and2(), X(0) * X(1)),
        (toy_algs.index3(), (1 - X(0)) * X(1) + X(0) * X(2)),
    ],
)
def test_extraction_small(alg, expected):
    ex = extract_polynomial(alg, audit=True)
    assert ex.audit.ok, ex.audit.failures
    assert ex.p == expected
    assert ex.degree <= ex.bound


@pytest.mark.parametrize("alg", [toy_algs.or_flags(3), toy_algs.or_flags(4), toy_algs.majority_relay(3)])
def test_extraction_multiround(alg):
    ex = extract_polynomial(alg, audit=True, keep=True)
    assert ex.audit.ok, ex.audit.failures
    N = alg.n_bits
    for x in range(1 << N):
        assert ex.table[x] == run(alg, x).answer
    assert ex.degree <= ex.bound
    assert ex.report()["boolean_on_cube"]


def test_extraction_or_is_or():
    ex = extract_polynomial(toy_algs.or_flags(3))
    assert ex.p == 1 - (1 - X(0)) * (1 - X(1)) * (1 - X(2))


def test_kept_indicators_are_indicators():
    alg = toy_algs.or_flags(3)
    ex = extract_polynomial(alg, keep=True)
    for (r, k, W), t in ex.q_tables.items():
        assert set(np.unique(t)) <= {0, 1}
    sw = sweep(alg)
    assert sw.R == 2 and sw.lenient_inputs == 0


def test_double_writer_breaks_the_construction():
    # A single machine writing two values under one key is outside the layout
    # rule; the multiset indicator the construction builds is then wrong.
    ex = extract_polynomial(toy_algs.double_writer(), audit=True, keep=True)
    assert not ex.audit.ok
    # the single-value indicator goes negative where both values were written
    assert ex.q_tables[(1, ("w", ()), ((5,),))][0b01] == -1


def test_extraction_size_guard():
    with pytest.raises(InvalidArgument):
        extract_polynomial(toy_algs.or_flags(13))


def decision_trees(n, depth):
    if depth == 0:
        return st.tuples(st.just("leaf"), st.integers(0, 1))
    sub = decision_trees(n, depth - 1)
    return st.one_of(
        st.tuples(st.just("leaf"), st.integers(0, 1)),
        st.tuples(st.just("query"), st.integers(0, n - 1), sub, sub),
    )


def tree_eval(tree, x):
    while tree[0] == "query":
        tree = tree[3] if (x >> tree[1]) & 1 else tree[2]
    return tree[1]


@settings(max_examples=40, deadline=None)
@given(decision_trees(4, 3))
def test_extracted_p_matches_tree(tree):
    alg = toy_algs.tree_algorithm(tree, 4, 3)
    ex = extract_polynomial(alg, audit=True)
    assert ex.audit.ok
    assert list(ex.table) == [tree_eval(tree, x) for x in range(16)]
    # a depth-d tree computes a degree <= d polynomial
    assert ex.degree <= 3 <= ex.bound


def test_extraction_on_promise_only_algorithm():
    # majority over a promise: off-promise inputs run leniently
    f = promise_majority(3)
    alg = toy_algs.majority_relay(3)
    ex = extract_polynomial(alg, valid=f, audit=True)
    assert ex.audit.ok
    assert all(ex.table[x] == f.value(x) for x in f.domain)


# --- mixtures ---------------------------------------------------------------


def test_mixture_exact_values():
    f = PromiseFunction(2, (0b11,), (0b00,))
    and_p = interpolate([0, 0, 0, 1], 2)
    or_p = interpolate([0, 1, 1, 1], 2)
    rep = mixture_check([and_p, or_p], [Fraction(1, 2), Fraction(1, 2)], f)
    assert rep.max_deviation == 0
    assert rep.off_promise_deviation == Fraction(1, 2)
    assert rep.within_third
    assert rep.degree == 1


def test_mixture_deviation_and_require():
    f = PromiseFunction(1, (1,), (0,))
    good, bad = X(0), 1 - X(0)
    rep = mixture_check([good, bad], [Fraction(2, 3), Fraction(1, 3)], f)
    assert rep.max_deviation == Fraction(1, 3) and rep.within_third
    rep = mixture_check([good, bad], [Fraction(1, 2), Fraction(1, 2)], f)
    assert rep.max_deviation == Fraction(1, 2) and not rep.within_third
    with pytest.raises(InvariantViolation):
        mixture_check([good, bad], [Fraction(1, 2), Fraction(1, 2)], f, require_third=True)
    with pytest.raises(InvalidArgument):
        mixture_check([good, bad], [Fraction(1, 2), Fraction(1, 3)], f)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=8, max_size=8), min_size=1, max_size=4), st.data())
def test_mixture_matches_pointwise_average(tabs, data):
    raw = data.draw(st.lists(st.integers(1, 6), min_size=len(tabs), max_size=len(tabs)))
    weights = [Fraction(r, sum(raw)) for r in raw]
    f = PromiseFunction(3, (0b111, 0b011), (0b000,))
    rep = mixture_check([interpolate(t, 3) for t in tabs], weights, f)
    avg = [sum(w * t[x] for w, t in zip(weights, tabs)) for x in range(8)]
    dev = max(abs(avg[x] - f.value(x)) for x in f.domain)
    assert rep.max_deviation == dev
    off = [x for x in range(8) if x not in f]
    assert rep.off_promise_deviation == max(min(abs(avg[x]), abs(avg[x] - 1)) for x in off)
