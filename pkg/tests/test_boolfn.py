import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ampclab.boolfn import (
    GraphInstance,
    PromiseFunction,
    bits_to_edges,
    bits_to_hex,
    canonical_distribution,
    classify,
    cycle_lengths,
    cycle_order,
    edge_index,
    edge_pair,
    edges_to_array,
    edges_to_bits,
    enumerate_ockc,
    hex_to_bits,
    n_slots,
    octc,
    promise_majority,
    random_ockc_edges,
    sample,
    total_function,
)
from ampclab.errors import InvalidArgument


def test_slot_order_matches_upper_triangle():
    for n in (2, 3, 6, 9):
        rows, cols = np.triu_indices(n, k=1)
        assert n_slots(n) == len(rows)
        for i, (u, v) in enumerate(zip(rows, cols)):
            assert edge_index(int(u), int(v), n) == i
            assert edge_index(int(v), int(u), n) == i
            assert edge_pair(i, n) == (u, v)


def test_edge_index_rejects_loops_and_range():
    with pytest.raises(InvalidArgument):
        edge_index(2, 2, 5)
    with pytest.raises(InvalidArgument):
        edge_index(0, 5, 5)


@given(st.integers(3, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << n_slots(n)) - 1))))
def test_bits_edges_roundtrip(nx):
    n, x = nx
    assert edges_to_bits(bits_to_edges(x, n), n) == x
    assert hex_to_bits(bits_to_hex(x, n_slots(n)), n_slots(n)) == x
    a = edges_to_array(bits_to_edges(x, n), n)
    assert a.shape == (n_slots(n),)
    assert int(a.sum()) == bin(x).count("1")
    assert all(a[i] == (x >> i) & 1 for i in range(n_slots(n)))


def test_graph_instance_json_roundtrip():
    g = GraphInstance.from_edges(5, [(0, 1), (3, 2), (4, 0)])
    back = GraphInstance.from_json(g.to_json())
    assert back == g
    assert json.loads(g.to_json())["n"] == 5
    assert g.degree(0) == 2


@pytest.mark.parametrize("n", [6, 8])
def test_octc_counts(n):
    f = octc(n)
    assert len(f.ones) == math.factorial(n - 1) // 2
    half = n // 2
    # choose the half containing vertex 0, then a cycle on each half
    assert len(f.zeros) == math.comb(n - 1, half - 1) * (math.factorial(half - 1) // 2) ** 2


def test_ockc_k3_count():
    f = enumerate_ockc(9, 3)
    # partitions of 9 labelled vertices into three triples, one triangle each
    assert len(f.zeros) == math.factorial(9) // (math.factorial(3) ** 3 * math.factorial(3))
    assert len(f.ones) == math.factorial(8) // 2


def test_ockc_instances_have_right_cycles():
    f = enumerate_ockc(9, 3)
    assert all(cycle_lengths(x, 9) == [9] for x in f.ones[:50])
    assert all(sorted(cycle_lengths(x, 9)) == [3, 3, 3] for x in f.zeros[:50])


@pytest.mark.parametrize("n,k", [(6, 3), (7, 2), (6, 1), (14, 2)])
def test_ockc_preconditions(n, k):
    with pytest.raises(InvalidArgument):
        enumerate_ockc(n, k)


def test_promise_majority():
    f = promise_majority(3)
    assert f.value(0b011) == 1
    assert f.value(0b001) == 0
    assert f.value(0b111) is None
    assert classify(f, 0b111) == "invalid"
    assert classify(f, 0b110) == "one"
    assert len(f.ones) == len(f.zeros) == 3
    with pytest.raises(InvalidArgument):
        promise_majority(4)


def test_promise_function_validation():
    with pytest.raises(InvalidArgument):
        PromiseFunction(2, (1,), (1,))
    with pytest.raises(InvalidArgument):
        PromiseFunction(2, (4,), (0,))
    with pytest.raises(InvalidArgument):
        PromiseFunction(2, (), (0,))


def test_flipped_can_become_constant():
    f = promise_majority(3)
    g = f.flipped(f.ones)
    assert not g.ones and len(g.zeros) == 6
    h = f.flipped([f.ones[0]])
    assert h.value(f.ones[0]) == 0


def test_total_function():
    t = total_function([0, 1, 1, 0], 2)
    assert t.ones == (1, 2)
    with pytest.raises(InvalidArgument):
        total_function([0, 1, 1], 2)


def test_canonical_distribution_mass():
    f = octc(6)
    d = canonical_distribution(f)
    assert d.mass(f.ones) == Fraction(1, 2)
    assert d.mass(f.zeros) == Fraction(1, 2)
    assert sum(d.weights().values()) == 1
    assert d.probability(0) == 0


def test_sampling_is_seeded():
    d = canonical_distribution(octc(6))
    assert sample(d, 7) == sample(d, 7)
    draws = {sample(d, s) for s in range(200)}
    assert draws <= set(d.f.domain)
    assert any(d.f.value(x) for x in draws) and any(not d.f.value(x) for x in draws)


@given(st.sampled_from([(12, 2), (12, 3), (12, 4), (30, 5)]), st.integers(0, 1), st.integers(0, 2**32))
def test_random_instances_are_in_promise(nk, value, seed):
    n, k = nk
    edges = random_ockc_edges(n, k, value, np.random.default_rng(seed))
    x = edges_to_bits(edges, n)
    lengths = sorted(cycle_lengths(x, n))
    assert lengths == ([n] if value else [n // k] * k)
    if value:
        order = cycle_order(x, n)
        assert sorted(order) == list(range(n))


def test_cycle_order_rejects_two_cycles():
    x = octc(6).zeros[0]
    with pytest.raises(InvalidArgument):
        cycle_order(x, 6)
