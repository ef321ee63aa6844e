import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ampclab.adversary import (
    NO,
    YES,
    answer_after,
    consistency_check,
    count_cross_edges,
    cover_with_cycles,
    cycle_edges,
    edge_count_lemma_check,
    new_adversary,
    play,
    query_everything,
    row_by_row,
    tree_strategy,
)
from ampclab.boolfn import edge_pair, edges_to_bits, enumerate_ockc, n_slots, octc
from ampclab.errors import InvalidArgument, MalformedStrategy
from ampclab.qc import det_query_complexity


def test_fresh_state():
    s = new_adversary(16, 2)
    assert s.m_edges() == 120 and s.y_edges() == 0
    assert s.gate_open() and s.phase == 1
    assert not s.claims_apply
    assert s.process_query(0, 1) == NO and s.last_step == "step3"
    assert s.process_query(1, 0) == NO and s.last_step == "memory"
    with pytest.raises(InvalidArgument):
        s.process_query(2, 2)
    with pytest.raises(InvalidArgument):
        new_adversary(6, 3)


def test_step_order():
    n, k = 64, 2
    s = new_adversary(n, k)
    # a vertex collects n/(4k) = 8 NOs before its first YES
    assert [s.process_query(0, v) for v in range(1, 9)] == [NO] * 8
    assert s.process_query(0, 9) == YES and s.last_step == "step4"
    assert [s.process_query(9, v) for v in range(10, 18)] == [NO] * 8
    assert s.process_query(9, 18) == YES
    assert s.process_query(0, 18) == NO and s.last_step == "step2"
    assert s.process_query(9, 30) == NO and s.last_step == "step1"
    assert s.y_vertices() == 3 and s.y_edges() == 2
    assert s.check_invariants() == []


def test_gate_closes_early_for_small_n():
    # at n = 16, k = 2 the gate allows |V(Y)| <= 1, so the first YES ends Phase 1
    s = new_adversary(16, 2)
    for v in (1, 2):
        s.process_query(0, v)
    assert s.process_query(0, 3) == YES
    s.process_query(3, 4)
    assert s.phase == 2 and s.last_step == "committed"


def brute_cover(M, Y, length, n):
    """Membership test against the enumerated promise classes."""
    f = octc(n) if length == n else enumerate_ockc(n, n // length)
    pool = f.ones if length == n else f.zeros
    m = edges_to_bits([(u, v) for u in range(n) for v in range(u + 1, n) if M[u, v]], n)
    y = edges_to_bits([(u, v) for u in range(n) for v in range(u + 1, n) if Y[u, v]], n)
    return any(x & y == y and x & ~m == 0 for x in pool)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(6, 6), (6, 3), (8, 8), (8, 4)]), st.data())
def test_cover_search_matches_enumeration(nl, data):
    n, length = nl
    slots = n_slots(n)
    drop = data.draw(st.lists(st.integers(0, slots - 1), max_size=slots // 2, unique=True))
    keep = data.draw(st.lists(st.integers(0, slots - 1), max_size=3, unique=True))
    M = ~np.eye(n, dtype=bool)
    Y = np.zeros((n, n), dtype=bool)
    for i in drop:
        u, v = edge_pair(i, n)
        M[u, v] = M[v, u] = False
    for i in keep:
        u, v = edge_pair(i, n)
        if M[u, v]:
            Y[u, v] = Y[v, u] = True
    found = cover_with_cycles(M, Y, length, 10 ** 6)
    assert (found is not None) == brute_cover(M, Y, length, n)
    if found is not None:
        edges = {e for c in found for e in cycle_edges(c)}
        assert all(M[u, v] for u, v in edges)
        assert {(int(u), int(v)) for u, v in zip(*np.nonzero(np.triu(Y)))} <= edges
        assert sorted(len(c) for c in found) == [length] * (n // length)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([(16, 2), (24, 2), (24, 3)]), st.sampled_from(["hamiltonian", "k-cycles"]))
def test_random_games_keep_invariants(seed, nk, commit):
    n, k = nk
    s = new_adversary(n, k, commit=commit)
    rep = play(s, query_everything(n, seed), check_consistency=True, answerable_check=False)
    assert rep.reached_phase2
    assert rep.accounting_ok
    assert rep.queries == rep.distinct == n_slots(n)
    # the committed configuration agrees with every answer
    for (u, v), yes in s.answers.items():
        assert ((u, v) in s.committed) == yes
    assert rep.committed_value == (1 if commit == "hamiltonian" else 0)
    assert rep.output == rep.committed_value


def test_phase_boundary_claims_at_64():
    s = new_adversary(64, 2)
    rep = play(s, query_everything(64, 0), answerable_check=False)
    assert rep.reached_phase2 and rep.no_bound_holds
    assert rep.phase1_consistency.both
    assert 128 * 4 * rep.phase1_no_count >= 64 ** 2


def test_greedy_reaches_phase2():
    s = new_adversary(64, 2)
    rep = play(s, row_by_row(64), answerable_check=False)
    assert rep.reached_phase2 and rep.no_bound_holds
    assert rep.phase1_consistency.both


def test_early_answer_is_unjustified():
    s = new_adversary(64, 2)
    rep = play(s, answer_after(1, 64), check_consistency=False)
    assert rep.queries == 1
    assert rep.final_answerable is False


def test_tree_strategy_against_adversary():
    f = octc(6)
    tree = det_query_complexity(f).witness
    s = new_adversary(6, 2)
    rep = play(s, tree_strategy(tree, 6), check_consistency=False)
    assert rep.queries <= 5
    assert rep.output in (0, 1)


def test_trace_and_report():
    s = new_adversary(16, 2)
    rep = play(s, answer_after(5, 16, seed=2), check_consistency=False, answerable_check=False)
    lines = [json.loads(l) for l in rep.trace_jsonl().splitlines()]
    assert len(lines) == 5 and {l["a"] for l in lines} <= {YES, NO}
    assert rep.report()["queries"] == 5


def test_malformed_strategy():
    with pytest.raises(MalformedStrategy):
        play(new_adversary(16, 2), lambda h: "edge")


def test_consistency_check_fresh():
    rep = consistency_check(new_adversary(12, 2))
    assert rep.both
    assert sorted(rep.hamiltonian) == list(range(12))
    assert rep.informational


def test_force_phase2_commits():
    s = new_adversary(12, 3, commit="k-cycles")
    s.force_phase2()
    assert s.phase == 2 and len(s.committed) == 12
    assert s.phase1_no_count == 0


# --- counting lemma ----------------------------------------------------------------


@given(st.integers(3, 14).flatmap(lambda n: st.tuples(st.just(n), st.permutations(range(n)), st.data())))
def test_edge_count_lemma(args):
    n, H, data = args
    m = data.draw(st.integers((n + 1) // 2, n))
    A = data.draw(st.sets(st.integers(0, n - 1), min_size=m))
    B = data.draw(st.sets(st.integers(0, n - 1), min_size=m))
    assert edge_count_lemma_check(list(H), A, B, m)
    assert count_cross_edges(list(H), A, B) >= 2 * m - n


def test_edge_count_lemma_examples():
    H = list(range(10))
    assert count_cross_edges(H, H, H) == 10
    assert edge_count_lemma_check(H, H, H, 10)
    assert edge_count_lemma_check(H, range(5), range(5, 10), 5)
    with pytest.raises(InvalidArgument):
        edge_count_lemma_check(H, range(3), range(10), 5)
    with pytest.raises(InvalidArgument):
        edge_count_lemma_check(H, H, H, 4)
