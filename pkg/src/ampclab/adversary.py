"""Adversary game for the one-cycle versus k-cycles problem.

The adversary keeps Y (edges answered YES) and M (edges not yet answered
NO, initially the clique). While Y covers few vertices it answers so that
both a Hamiltonian cycle and k disjoint (n/k)-cycles stay consistent with
its answers; afterwards it commits to one configuration and answers from it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .boolfn import cycle_lengths, edge_pair, edges_to_bits, n_slots
from .errors import (
    ConsistencyBreach,
    InvalidArgument,
    InvariantViolation,
    MalformedStrategy,
    ResourceLimit,
)

YES, NO = "YES", "NO"
DEFAULT_NODE_BUDGET = 2_000_000


def _norm(u, v):
    return (u, v) if u < v else (v, u)


class AdversaryState:
    def __init__(self, n: int, k: int, commit: str = "hamiltonian", node_budget: int = DEFAULT_NODE_BUDGET):
        if k < 1 or n % k or n // k < 3:
            raise InvalidArgument(f"need k | n and n/k >= 3 (n={n}, k={k})")
        if commit not in ("hamiltonian", "k-cycles"):
            raise InvalidArgument("commit must be 'hamiltonian' or 'k-cycles'")
        self.n, self.k = n, k
        self.commit_kind = commit
        self.node_budget = node_budget
        self.M = ~np.eye(n, dtype=bool)
        self.Y = np.zeros((n, n), dtype=bool)
        self.no_count = np.zeros(n, dtype=np.int64)
        self.total_no = 0
        self.granted = 0
        self.phase = 1
        self.committed: frozenset | None = None
        self.phase1_no_count: int | None = None
        self.answers: dict = {}
        self.last_step: str | None = None

    # -- derived quantities --

    @property
    def claims_apply(self) -> bool:
        """The Phase-1 estimates are only guaranteed for n >= 28k."""
        return self.n >= 28 * self.k

    def y_degree(self) -> np.ndarray:
        return self.Y.sum(axis=1)

    def y_vertices(self) -> int:
        return int((self.y_degree() > 0).sum())

    def y_edges(self) -> int:
        return int(self.Y.sum() // 2)

    def m_edges(self) -> int:
        return int(self.M.sum() // 2)

    def y_components(self) -> int:
        """Number of connected components of Y (ignoring isolated vertices)."""
        deg = self.y_degree()
        seen = np.zeros(self.n, dtype=bool)
        c = 0
        for s in np.flatnonzero(deg):
            if seen[s]:
                continue
            c += 1
            stack = [s]
            seen[s] = True
            while stack:
                v = stack.pop()
                for w in np.flatnonzero(self.Y[v]):
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
        return c

    def gate_open(self) -> bool:
        """|V(Y)| <= n/(4k) - 1, in integers."""
        return 4 * self.k * (self.y_vertices() + 1) <= self.n

    # -- the procedure --

    def _no(self, u, v, step):
        self.M[u, v] = self.M[v, u] = False
        self.no_count[u] += 1
        self.no_count[v] += 1
        self.total_no += 1
        self.answers[_norm(u, v)] = False
        self.last_step = step
        return NO

    def _yes(self, u, v, step):
        self.Y[u, v] = self.Y[v, u] = True
        self.granted += 1
        self.answers[_norm(u, v)] = True
        self.last_step = step
        return YES

    def process_query(self, u: int, v: int) -> str:
        if u == v or not (0 <= u < self.n and 0 <= v < self.n):
            raise InvalidArgument(f"bad edge query ({u}, {v})")
        e = _norm(u, v)
        if e in self.answers:
            self.last_step = "memory"
            return YES if self.answers[e] else NO
        if self.phase == 1 and not self.gate_open():
            self.phase1_no_count = self.total_no
            self.committed = self.commit_phase2()
            self.phase = 2
        if self.phase == 2:
            return self._yes(u, v, "committed") if e in self.committed else self._no(u, v, "committed")
        deg = self.y_degree()
        n4k = 4 * self.k
        if deg[u] == 2 or deg[v] == 2:
            return self._no(u, v, "step1")
        if deg[u] > 0 and deg[v] > 0:
            return self._no(u, v, "step2")
        if n4k * self.no_count[u] < self.n and n4k * self.no_count[v] < self.n:
            return self._no(u, v, "step3")
        return self._yes(u, v, "step4")

    def force_phase2(self):
        if self.phase == 1:
            self.phase1_no_count = self.total_no
            self.committed = self.commit_phase2()
            self.phase = 2

    def commit_phase2(self) -> frozenset:
        """First configuration found by :func:`cover_with_cycles`, as an edge set."""
        L = self.n if self.commit_kind == "hamiltonian" else self.n // self.k
        try:
            cycles = cover_with_cycles(self.M, self.Y, L, self.node_budget)
        except ResourceLimit as err:
            raise ConsistencyBreach(f"search budget exhausted while committing: {err}") from err
        if cycles is None:
            raise ConsistencyBreach(f"no {self.commit_kind} configuration is consistent with the answers")
        return frozenset(e for cyc in cycles for e in cycle_edges(cyc))

    # -- invariants --

    def check_invariants(self) -> list[str]:
        """Structural checks; returns informational notes, raises on hard failures."""
        notes = []
        if (self.Y & ~self.M).any():
            raise InvariantViolation("Y is not a subgraph of M")
        if self.phase == 2:
            return notes
        deg = self.y_degree()
        if (deg > 2).any():
            raise InvariantViolation("a vertex has Y-degree above 2")
        VY, EY, c = self.y_vertices(), self.y_edges(), self.y_components()
        if VY != EY + c:
            raise InvariantViolation("Y contains a cycle")
        if 4 * self.k * (VY - 1) > self.n:
            raise InvariantViolation("|V(Y)| exceeds n/(4k) + 1 in Phase 1")
        bad = self.degree_claim_failures()
        if bad:
            msg = f"{len(bad)} vertices below the M'-degree estimate (first: {bad[0]})"
            if self.claims_apply:
                raise InvariantViolation(msg)
            notes.append(msg)
        return notes

    def degree_claim_failures(self) -> list[int]:
        """Path endpoints and M' vertices with fewer than (4k-1)n/(4k) - |V(Y)| - 1 M-neighbors in M'."""
        deg = self.y_degree()
        outside = deg == 0
        counts = self.M[:, outside].sum(axis=1)
        watch = outside | (deg == 1)
        # counts < (4k-1)n/(4k) - VY - 1  <=>  4k*counts < (4k-1)n - 4k(VY+1)
        k4 = 4 * self.k
        limit = (k4 - 1) * self.n - k4 * (self.y_vertices() + 1)
        return np.flatnonzero(watch & (k4 * counts < limit)).tolist()

    def no_count_bound_holds(self) -> bool:
        """totalNo >= n^2/(128 k^2) at the Phase-1 boundary."""
        if self.phase1_no_count is None:
            return False
        return 128 * self.k ** 2 * self.phase1_no_count >= self.n ** 2


def new_adversary(n: int, k: int, **kw) -> AdversaryState:
    return AdversaryState(n, k, **kw)


# --- cycle cover search --------------------------------------------------------------


def cycle_edges(cycle):
    return [_norm(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]


def cover_with_cycles(M: np.ndarray, Y: np.ndarray, length: int, node_budget: int = DEFAULT_NODE_BUDGET):
    """Vertex-disjoint cycles of the given length covering all vertices, inside M and containing Y.

    Backtracking: each cycle starts at the smallest free vertex outside Y
    (or the smallest free vertex), edges of Y are forced moves, and free
    candidates are tried fewest-onward-options first, ties by label. Returns a list of vertex lists, or
    None when no cover exists; raises ResourceLimit past ``node_budget``.
    """
    n = M.shape[0]
    if n % length or length < 3:
        raise InvalidArgument("cycle length must divide n and be >= 3")
    adj = [sum(1 << int(w) for w in np.flatnonzero(M[v])) for v in range(n)]
    ynb = [np.flatnonzero(Y[v]).tolist() for v in range(n)]
    if any(len(y) > 2 for y in ynb):
        return None
    full = (1 << n) - 1
    nodes = 0
    cycles: list = []

    def ok_close(path):
        start, last = path[0], path[-1]
        if not (adj[last] >> start) & 1:
            return False
        allowed_last = {path[-2], start} if len(path) > 1 else {start}
        allowed_start = {path[1], last}
        return set(ynb[last]) <= allowed_last and set(ynb[start]) <= allowed_start

    def starved(free, ends, start):
        pool = free | ends
        if free and not adj[start] & (free | ends & ~(1 << start)):
            return True  # nothing left can close the cycle
        m = free
        while m:
            low = m & -m
            w = low.bit_length() - 1
            m ^= low
            if bin(adj[w] & pool).count("1") < 2:
                return True
        return False

    def extend(path, free):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise ResourceLimit(f"cycle search exceeded {node_budget} nodes")
        v = path[-1]
        if len(path) == length:
            if not ok_close(path):
                return False
            cycles.append(list(path))
            if not free:
                return True
            if new_cycle(free):
                return True
            cycles.pop()
            return False
        prev = path[-2] if len(path) > 1 else None
        if len(path) == 1:
            must = ynb[v][:1]
        else:
            must = [y for y in ynb[v] if y != prev and y != path[0]]
            if len(must) > 1:
                return False
            if not must and path[0] in ynb[v] and prev not in ynb[v]:
                return False  # v's Y-edge to the start would have to close the cycle now
        if must:
            cands = [must[0]] if (free >> must[0]) & 1 else []
        else:
            cands = []
            m = adj[v] & free
            while m:
                low = m & -m
                w = low.bit_length() - 1
                m ^= low
                if len(ynb[w]) == 2 and v not in ynb[w]:
                    continue
                cands.append(w)
            # fewest onward options first, then label
            cands.sort(key=lambda w: (bin(adj[w] & free).count("1"), w))
        for w in cands:
            nfree = free & ~(1 << w)
            path.append(w)
            if not starved(nfree, (1 << w) | (1 << path[0]), path[0]):
                if extend(path, nfree):
                    return True
            path.pop()
        return False

    def new_cycle(free):
        # start from a vertex outside Y when possible, so closing is unconstrained
        m, s = free, None
        while m:
            low = m & -m
            w = low.bit_length() - 1
            m ^= low
            if not ynb[w]:
                s = w
                break
        if s is None:
            s = (free & -free).bit_length() - 1
        return extend([s], free & ~(1 << s))

    found = new_cycle(full)
    return cycles if found else None


@dataclass
class ConsistencyReport:
    hamiltonian: list | None
    k_cycles: list | None
    informational: bool

    @property
    def both(self) -> bool:
        return self.hamiltonian is not None and self.k_cycles is not None


def consistency_check(st: AdversaryState, node_budget: int | None = None) -> ConsistencyReport:
    """Search for a Hamiltonian cycle and for k disjoint (n/k)-cycles, both inside M and containing Y."""
    budget = node_budget or st.node_budget
    ham = cover_with_cycles(st.M, st.Y, st.n, budget)
    kc = cover_with_cycles(st.M, st.Y, st.n // st.k, budget)
    return ConsistencyReport(ham[0] if ham else None, kc, not st.claims_apply)


# --- strategies ---------------------------------------------------------------------------
#
# A strategy is a callable taking the history [(u, v, answer), ...] and
# returning either an edge (u, v) to query or an int 0/1 as its final output.


def _decide_from_history(history, n):
    yes = [(u, v) for u, v, a in history if a == YES]
    lens = cycle_lengths(edges_to_bits(yes, n), n)
    return int(len(lens) == 1 and lens[0] == n)


def query_everything(n: int, seed: int = 0) -> Callable:
    """Query all edge slots in a seeded random order, then answer."""
    order = np.random.default_rng(seed).permutation(n_slots(n)).tolist()

    def strategy(history):
        i = len(history)
        if i < len(order):
            return edge_pair(order[i], n)
        return _decide_from_history(history, n)

    return strategy


def row_by_row(n: int, seed: int | None = None) -> Callable:
    """Greedy: find each vertex's two neighbors in turn, skipping decided pairs.

    Vertices are visited in label order, or in a seeded random order.
    """
    order = list(range(n)) if seed is None else np.random.default_rng(seed).permutation(n).tolist()
    state = {"known": {}, "i": 0}

    def strategy(history):
        known = state["known"]
        for u, v, a in history[state["i"]:]:
            known[_norm(u, v)] = a == YES
        state["i"] = len(history)
        degree = [0] * n
        for (u, v), b in known.items():
            if b:
                degree[u] += 1
                degree[v] += 1
        for u in order:
            if degree[u] >= 2:
                continue
            for w in order:
                if w != u and _norm(u, w) not in known and degree[w] < 2:
                    return (u, w)
        return _decide_from_history(history, n)

    return strategy


def answer_after(m: int, n: int, output: int = 1, seed: int = 0) -> Callable:
    """Make m random distinct queries, then output a constant."""
    order = np.random.default_rng(seed).permutation(n_slots(n))[:m].tolist()

    def strategy(history):
        if len(history) < len(order):
            return edge_pair(order[len(history)], n)
        return output

    return strategy


def tree_strategy(tree, n: int) -> Callable:
    """Follow a decision tree over edge slots (nodes as produced by the query-complexity oracle)."""

    def strategy(history):
        node = tree
        for _, _, a in history:
            node = node[3] if a == YES else node[2]
        if node[0] == "leaf":
            return int(node[1])
        return edge_pair(node[1], n)

    return strategy


# --- the game ----------------------------------------------------------------------------------


@dataclass
class GameReport:
    n: int
    k: int
    queries: int
    yes: int
    no: int
    distinct: int
    phase1_no_count: int | None
    reached_phase2: bool
    no_bound_holds: bool | None
    phase1_consistency: ConsistencyReport | None
    output: int | None
    committed_value: int | None
    final_answerable: bool | None
    notes: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def accounting_ok(self) -> bool:
        return self.no + self.yes == self.distinct

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(t) + "\n" for t in self.trace)

    def report(self) -> dict:
        c = self.phase1_consistency
        return {
            "n": self.n,
            "k": self.k,
            "queries": self.queries,
            "yes": self.yes,
            "no": self.no,
            "distinct": self.distinct,
            "phase1_no_count": self.phase1_no_count,
            "no_count_bound": f"{self.n}^2/(128*{self.k}^2)",
            "no_bound_holds": self.no_bound_holds,
            "reached_phase2": self.reached_phase2,
            "phase1_consistent": None if c is None else c.both,
            "output": self.output,
            "committed_value": self.committed_value,
            "final_answerable": self.final_answerable,
            "notes": self.notes[:20],
        }


def play(
    st: AdversaryState,
    strategy: Callable,
    check_consistency: bool = True,
    check_every: bool = True,
    answerable_check: bool = True,
) -> GameReport:
    """Run a strategy against the adversary until it outputs a bit."""
    n = st.n
    limit = n_slots(n)
    history: list = []
    notes: list = []
    trace: list = []
    phase1_report = None
    output = None
    while True:
        move = strategy(history)
        if isinstance(move, (int, np.integer)) and not isinstance(move, bool) and move in (0, 1):
            output = int(move)
            break
        if not (isinstance(move, tuple) and len(move) == 2):
            raise MalformedStrategy(f"strategy returned {move!r}")
        if len(history) >= limit:
            raise MalformedStrategy(f"strategy made more than {limit} queries without answering")
        u, v = int(move[0]), int(move[1])
        if st.phase == 1 and check_consistency and not st.gate_open() and _norm(u, v) not in st.answers:
            # this query ends Phase 1: check both configurations before committing
            phase1_report = consistency_check(st)
            if not phase1_report.both:
                msg = "a configuration became inconsistent during Phase 1"
                if st.claims_apply:
                    raise InvariantViolation(msg)
                notes.append(msg)
        a = st.process_query(u, v)
        history.append((u, v, a))
        trace.append({"q": [u, v], "a": a, "phase": st.phase, "totalNo": st.total_no})
        if check_every:
            notes.extend(st.check_invariants())
    committed_value = None
    if st.committed is not None:
        committed_value = int(len(cycle_lengths(edges_to_bits(st.committed, n), n)) == 1)
    answerable = None
    if answerable_check:
        try:
            rep = consistency_check(st)
            answerable = not rep.both
        except ResourceLimit:
            notes.append("final consistency search ran out of budget")
    distinct = len(st.answers)
    return GameReport(
        n, st.k, len(history), st.granted, st.total_no, distinct, st.phase1_no_count,
        st.phase == 2, st.no_count_bound_holds() if st.phase1_no_count is not None else None,
        phase1_report, output, committed_value, answerable, notes, trace,
    )


# --- counting lemma -----------------------------------------------------------------------------


def edge_count_lemma_check(H, A, B, m: int) -> bool:
    """Edges of the cycle H (vertex order) with one end in A and the other in B number at least 2m - n."""
    n = len(H)
    A, B = set(A), set(B)
    if not (2 * m >= n and m <= n):
        raise InvalidArgument("need n/2 <= m <= n")
    if len(A) < m or len(B) < m:
        raise InvalidArgument("A and B need at least m vertices each")
    if len(set(H)) != n or n < 3:
        raise InvalidArgument("H must list the vertices of one cycle")
    count = 0
    for i in range(n):
        u, v = H[i], H[(i + 1) % n]
        if (u in A and v in B) or (u in B and v in A):
            count += 1
    return count >= 2 * m - n


def count_cross_edges(H, A, B) -> int:
    A, B = set(A), set(B)
    n = len(H)
    return sum(
        1
        for i in range(n)
        if (H[i] in A and H[(i + 1) % n] in B) or (H[i] in B and H[(i + 1) % n] in A)
    )
