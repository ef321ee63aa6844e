"""Concrete AMPC algorithms built on the simulator.

Layout rule used throughout: a machine writes at most one value per key,
and the values stored under one key are pairwise distinct. Keys that need
several values (neighbor lists, link pairs) get them from several
machines, one slot each. The indicator-polynomial extraction relies on this.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .ampc import (
    ANSWER,
    Algorithm,
    BulkResult,
    BulkRound,
    DataStore,
    InputStore,
    Machine,
    Query,
    RandomizedAlgorithm,
    holder,
    input_key,
    key,
)
from .boolfn import edge_index, edge_pair, n_slots
from .errors import InvalidArgument

MASK32 = (1 << 32) - 1
SLOTS = 3  # neighbor slots kept per vertex: two for the promise degree, one to flag excess


def nbr_key(u):
    return ("nbr", (u,))


def err_key(u):
    return ("err", (u,))


def inc_key(u, level, g):
    return ("inc", (u, level, g))


def lnk_key(level, v):
    return ("lnk", (level, v))


def integer_root_floor(a: int, q: int) -> int:
    """Largest s with s**q <= a."""
    if a < 0 or q < 1:
        raise InvalidArgument("need a >= 0 and q >= 1")
    s = int(round(a ** (1.0 / q)))
    while s ** q > a:
        s -= 1
    while (s + 1) ** q <= a:
        s += 1
    return s


def capacity_for(n: int, eps) -> int:
    """S = floor(n^eps), exact for rational eps."""
    eps = Fraction(eps).limit_denominator(10 ** 6) if isinstance(eps, float) else Fraction(eps)
    if not 0 < eps <= 1:
        raise InvalidArgument("eps must lie in (0, 1]")
    return integer_root_floor(n ** eps.numerator, eps.denominator)


# --- adjacency lists ----------------------------------------------------------------


class AdjacencyLayout:
    """Block and merge-tree geometry for turning the matrix into neighbor lists.

    Vertex u's n-1 incidence slots are cut into blocks of S (ordered by the
    other endpoint). Leaf machine (u, b, j) scans block b and keeps the j-th
    neighbor it finds; merge machines combine up to floor(S/3) children, each
    child key holding at most three values. The top level writes ("nbr", u),
    plus ("err", u) when a third neighbor exists.
    """

    def __init__(self, n: int, S: int):
        if S < 6:
            raise InvalidArgument("adjacency building needs S >= 6 (merge fan-in floor(S/3) >= 2)")
        if n < 3:
            raise InvalidArgument("need n >= 3")
        self.n, self.S = n, S
        self.fan = S // 3
        self.blocks = math.ceil((n - 1) / S)
        counts = [self.blocks]
        while counts[-1] > 1:
            counts.append(math.ceil(counts[-1] / self.fan))
        self.counts = counts  # nodes per level; level 0 = leaves
        self.top = len(counts) - 1

    @property
    def rounds(self) -> int:
        return self.top + 1

    def block(self, u, b):
        others = [w for w in range(self.n) if w != u]
        return others[b * self.S:(b + 1) * self.S]

    def children(self, level, g):
        return range(g * self.fan, min((g + 1) * self.fan, self.counts[level - 1]))

    def out_key(self, u, level, g):
        return nbr_key(u) if level == self.top else inc_key(u, level, g)


def _emit(layout, u, level, g, j, found):
    if j >= len(found):
        return []
    writes = [(layout.out_key(u, level, g), (found[j],))]
    if level == layout.top and j == SLOTS - 1:
        writes.append((err_key(u), (1,)))
    return writes


def _leaf_program(layout, u, b, j):
    n = layout.n
    block = layout.block(u, b)

    def program():
        found = []
        for w in block:
            r = yield Query(input_key(edge_index(u, w, n)))
            if r and r[0][0] == 1 and len(found) < SLOTS:
                found.append(w)
        return _emit(layout, u, 0, b, j, found)

    return program


def _merge_program(layout, u, level, g, j):
    kids = list(layout.children(level, g))

    def program():
        found = []
        for c in kids:
            vals = yield Query(inc_key(u, level - 1, c))
            found.extend(v[0] for v in vals)
        found = sorted(set(found))[:SLOTS]
        return _emit(layout, u, level, g, j, found)

    return program


def _leaf_roster(layout):
    return [
        Machine(("leaf", u, b, j), _leaf_program(layout, u, b, j))
        for u in range(layout.n)
        for b in range(layout.blocks)
        for j in range(SLOTS)
    ]


def _merge_roster(layout, level):
    return [
        Machine(("merge", level, u, g, j), _merge_program(layout, u, level, g, j))
        for u in range(layout.n)
        for g in range(layout.counts[level])
        for j in range(SLOTS)
    ]


class LeafRound(BulkRound):
    """Vectorised leaf round: identical writes to the per-machine roster."""

    def __init__(self, layout):
        self.layout = layout

    def machines(self):
        return _leaf_roster(self.layout)

    def execute(self, prev, S, strict):
        L = self.layout
        n = L.n
        if not isinstance(prev, InputStore):
            raise InvalidArgument("leaf round reads the input store")
        iu, iv = np.triu_indices(n, 1)  # same order as edge_index
        hit = np.flatnonzero(prev.bits)
        u = np.concatenate([iu[hit], iv[hit]])
        w = np.concatenate([iv[hit], iu[hit]])
        b = (w - (w > u)) // L.S
        order = np.lexsort((w, b, u))
        u, w, b = u[order], w[order], b[order]
        # rank of each neighbor inside its (u, block) group
        new = np.ones(len(u), dtype=bool)
        new[1:] = (u[1:] != u[:-1]) | (b[1:] != b[:-1])
        starts = np.flatnonzero(new)
        rank = np.arange(len(u)) - np.repeat(starts, np.diff(np.append(starts, len(u))))
        keep = rank < SLOTS
        writes = []
        for uu, bb, ww, j in zip(u[keep].tolist(), b[keep].tolist(), w[keep].tolist(), rank[keep].tolist()):
            found = [None] * j + [ww]
            for k, v in _emit(L, uu, 0, bb, j, found):
                writes.append((k, v, ("leaf", uu, bb, j)))
        writes.sort(key=lambda t: t[2])
        used = min(L.S, n - 1)
        return BulkResult(writes, n * L.blocks * SLOTS, used)


class MergeRound(BulkRound):
    """Merge level computed from the keys actually present in the store.

    An absent child key still costs its machine one unit, which the budget
    bookkeeping accounts for without visiting it.
    """

    def __init__(self, layout, level):
        self.layout, self.level = layout, level

    def machines(self):
        return _merge_roster(self.layout, self.level)

    def execute(self, prev, S, strict):
        L, lv = self.layout, self.level
        groups: dict = {}
        for k, vals in prev.present():
            if k[0] != "inc" or k[1][1] != lv - 1:
                continue
            u, _, c = k[1]
            slot = groups.setdefault((u, c // L.fan), [[], 0, 0])
            slot[0].extend(v[0] for v in vals)
            slot[1] += len(vals)
            slot[2] += 1
        n_kids = lambda g: len(L.children(lv, g))
        max_used = n_kids(0)
        writes = []
        for (u, g), (found, n_vals, n_present) in sorted(groups.items()):
            max_used = max(max_used, n_kids(g) - n_present + n_vals)
            found = sorted(set(found))[:SLOTS]
            for j in range(len(found)):
                for k, v in _emit(L, u, lv, g, j, found):
                    writes.append((k, v, ("merge", lv, u, g, j)))
        writes.sort(key=lambda t: t[2])
        return BulkResult(writes, L.n * L.counts[lv] * SLOTS, max_used)


def adjacency_rounds(n: int, S: int, bulk: bool = False) -> list:
    layout = AdjacencyLayout(n, S)
    if bulk:
        return [LeafRound(layout)] + [MergeRound(layout, lv) for lv in range(1, layout.top + 1)]
    return [_leaf_roster(layout)] + [_merge_roster(layout, lv) for lv in range(1, layout.top + 1)]


def build_adjacency_lists(n: int, S: int, bulk: bool = False) -> Algorithm:
    """Sub-algorithm leaving each vertex's neighbors under ("nbr", u)."""
    layout = AdjacencyLayout(n, S)
    return Algorithm("adjacency", n_slots(n), S, adjacency_rounds(n, S, bulk), {"layout": layout})


# --- cycle solver ----------------------------------------------------------------------


def _step(level, t, came_from, d, marked):
    """One hop from t at the given link level; returns a segment or None.

    Level 0 hops along single edges read from ("nbr", t). A segment is
    (target, distance, first visit offset to ``marked`` or 0, first, last).
    Direction: with no predecessor take the d-th smallest neighbor, else
    leave by the side that does not lead back to ``came_from``.
    """
    if level == 0:
        vals = yield Query(nbr_key(t))
        if len(vals) != 2:
            return None
        a, b = vals[0][0], vals[1][0]
        if came_from is None:
            nxt = (a, b)[d]
        elif a == came_from:
            nxt = b
        elif b == came_from:
            nxt = a
        else:
            return None
        return (nxt, 1, int(nxt == marked), nxt, t)
    vals = yield Query(lnk_key(level, t))
    if len(vals) != 2:
        return None
    if came_from is None:
        seg = sorted(vals, key=lambda v: v[2])[d]
    else:
        ahead = [v for v in vals if v[2] != came_from]
        if len(ahead) != 1:
            return None
        seg = ahead[0]
    target, packed, first, last = seg
    return (target, packed >> 32, packed & MASK32, first, last)


def _walk(level, start, d, hops, marked):
    """Follow ``hops`` segments; returns (target, dist, zoff, first, last) or None."""
    t, dist, zoff, first, last = start, 0, 0, None, None
    for _ in range(hops):
        seg = yield from _step(level, t, last, d, marked)
        if seg is None:
            return None
        nt, sd, sz, sf, sl = seg
        if first is None:
            first = sf
        if zoff == 0 and sz:
            zoff = dist + sz
        dist += sd
        last, t = sl, nt
    return (t, dist, zoff, first, last)


def _link_program(level, v, d, hops, marked):
    def program():
        seg = yield from _walk(level - 1, v, d, hops, marked)
        if seg is None:
            return []
        t, dist, zoff, first, last = seg
        return [(lnk_key(level, v), (t, (dist << 32) | zoff, first, last))]

    return program


def _walker_program(level, start, hops, n):
    def program():
        t, dist, last = start, 0, None
        for _ in range(hops):
            seg = yield from _step(level, t, last, 0, start)
            if seg is None:
                return []
            nt, sd, sz, sf, sl = seg
            if sz:
                return [(ANSWER, (int(dist + sz == n),))]
            dist += sd
            last, t = sl, nt
        return []

    return program


def solver_schedule(n: int, S: int) -> dict:
    """Round plan: adjacency rounds, link levels J, final walk."""
    layout = AdjacencyLayout(n, S)
    h, w = S // 3, S // 2
    J, reach = 0, w
    while reach < n:
        J += 1
        reach *= h
    return {
        "adjacency_rounds": layout.rounds,
        "link_levels": J,
        "stride": h,
        "walker_hops": w,
        "rounds": layout.rounds + J + 1,
        "round_bound": 6 + math.ceil(math.log(n) / math.log(h) - 1e-12),
    }


def solve_ockc(n: int, k: int, S: int, seed: int | None = None, bulk: bool = False) -> Algorithm:
    """Decides whether the 2-regular input is one Hamiltonian cycle (1) or k cycles (0).

    With ``seed`` the walk starts at a seed-chosen vertex instead of 0.
    """
    if k < 1 or n % k or n // k < 3:
        raise InvalidArgument("need k | n and n/k >= 3")
    if S < 8:
        raise InvalidArgument("solver needs S >= 8")
    plan = solver_schedule(n, S)
    start = 0 if seed is None else int(np.random.default_rng(seed).integers(n))
    h, J = plan["stride"], plan["link_levels"]
    rounds = adjacency_rounds(n, S, bulk)
    for level in range(1, J + 1):
        rounds.append([
            Machine(("link", level, v, d), _link_program(level, v, d, h, start))
            for v in range(n)
            for d in (0, 1)
        ])
    rounds.append([Machine(("walk",), _walker_program(J, start, plan["walker_hops"], n))])
    meta = dict(plan, n=n, k=k, start=start, seed=seed)
    return Algorithm(f"ockc(n={n},k={k})", n_slots(n), S, rounds, meta)


def randomized_solver(n: int, k: int, S: int, seeds) -> RandomizedAlgorithm:
    """Uniform mixture of seeded solvers (random start vertex)."""
    return RandomizedAlgorithm.uniform(lambda s: solve_ockc(n, k, S, seed=s), seeds)


# --- prefix sums -------------------------------------------------------------------------


def _sum_program(keys, out):
    def program():
        total = 0
        for k in keys:
            vals = yield Query(k)
            total += sum(v[0] for v in vals)
        return [(out, (total,))]

    return program


def _down_program(off, children, outs):
    """Reads the offset before this node, then writes running sums over its children."""

    def program():
        base = 0
        if off is not None:
            vals = yield Query(off)
            base = vals[0][0] if vals else 0
        writes = []
        for c, o in zip(children, outs):
            vals = yield Query(c)
            base += sum(v[0] for v in vals)
            writes.append((o, (base,)))
        return writes

    return program


def prefix_sum_rounds(P: int, S: int, src=lambda i: input_key(i), keep=(), start: int = 0) -> list:
    """Rosters computing ("psum", i) = a_1 + ... + a_i for i = 1..P.

    ``src(i)`` is the key of a_{i+1} in the store preceding the first round;
    every key in ``keep`` is carried forward by holders to the last round.
    Up-tree fan-in S-1 until at most S nodes remain, one root round, then
    the same levels downward.
    """
    if P < 1 or S < 3:
        raise InvalidArgument("need P >= 1 and S >= 3")
    f = S - 1
    up = lambda lv, g: ("up", (lv, g)) if lv else src(g)
    off = lambda lv, g: ("off", (lv, g))
    psum = lambda i: ("psum", (i + 1,))
    counts = [P]
    while counts[-1] > S:
        counts.append(math.ceil(counts[-1] / f))
    L = len(counts) - 1
    kids = lambda lv, g: range(g * f, min((g + 1) * f, counts[lv - 1]))
    keep = list(keep)
    rounds = []

    def holders(keys):
        keys = dict.fromkeys(keys)  # one holder per key, else values would double
        return [Machine(("hold", k[0]) + k[1], holder(k)) for k in keys]

    # up rounds: level lv sums groups of level lv-1
    for lv in range(1, L + 1):
        roster = [
            Machine(("up", lv, g), _sum_program([up(lv - 1, c) for c in kids(lv, g)], up(lv, g)))
            for g in range(counts[lv])
        ]
        roster += holders([up(m, g) for m in range(lv) for g in range(counts[m])] + keep)
        rounds.append(roster)
    # root: prefix over the top level
    top = [up(L, g) for g in range(counts[L])]
    outs = [off(L, g) for g in range(counts[L])] if L else [psum(g) for g in range(P)]
    roster = [Machine(("root",), _down_program(None, top, outs))]
    if L:
        roster += holders([up(m, g) for m in range(L) for g in range(counts[m])] + keep)
    else:
        roster += holders(keep)
    rounds.append(roster)
    # down rounds: off(lv, g) is the inclusive prefix through node g, so node g
    # starts from its left sibling's value
    for lv in range(L, 0, -1):
        roster = []
        for g in range(counts[lv]):
            cs = list(kids(lv, g))
            outs = [off(lv - 1, c) if lv > 1 else psum(c) for c in cs]
            roster.append(Machine(("down", lv, g), _down_program(off(lv, g - 1) if g else None, [up(lv - 1, c) for c in cs], outs)))
        roster += holders([up(m, g) for m in range(lv - 1) for g in range(counts[m])] + keep)
        rounds.append(roster)
    return rounds


def prefix_sum(P: int, S: int) -> Algorithm:
    """Prefix sums of P words stored under ("in", i), i = 0..P-1."""
    return Algorithm("prefix-sum", P, S, prefix_sum_rounds(P, S))


# --- edge list ------------------------------------------------------------------------------


def matrix_to_edge_list(n: int, S: int) -> Algorithm:
    """Labels the present edges 1..m, writing ("edge", j) -> (u, v).

    Groups of S-2 slots record their edges under ("E", (g, i)) and their count
    under ("cnt", g); a prefix sum over the counts (with holders keeping the
    group lists alive) gives each group its first label.
    """
    if S < 4:
        raise InvalidArgument("need S >= 4")
    N = n_slots(n)
    width = S - 2
    G = math.ceil(N / width)
    cnt = lambda g: ("cnt", (g,))
    lists = [("E", (g, i)) for g in range(G) for i in range(min(width, N - g * width))]

    def group_program(g):
        slots = range(g * width, min((g + 1) * width, N))

        def program():
            found = []
            for s in slots:
                r = yield Query(input_key(s))
                if r and r[0][0] == 1:
                    found.append(s)
            return [(("E", (g, i)), (s,)) for i, s in enumerate(found)] + [(cnt(g), (len(found),))]

        return program

    def label_program(g):
        def program():
            c = yield Query(("psum", (g + 1,)))
            m = yield Query(cnt(g))
            if not c or not m:
                return []
            first = c[0][0] - m[0][0] + 1
            writes = []
            for i in range(m[0][0]):
                e = yield Query(("E", (g, i)))
                if not e:
                    return writes
                writes.append((("edge", (first + i,)), edge_pair(e[0][0], n)))
            return writes

        return program

    rounds = [[Machine(("group", g), group_program(g)) for g in range(G)]]
    rounds += prefix_sum_rounds(G, S, src=cnt, keep=lists + [cnt(g) for g in range(G)])
    rounds.append([Machine(("label", g), label_program(g)) for g in range(G)])
    return Algorithm("edge-list", N, S, rounds, {"groups": G})


def read_edge_list(store: DataStore) -> dict:
    out = {}
    for k in store.keys():
        if k[0] == "edge":
            vals = store.get(k)
            out[k[1][0]] = tuple(vals[0]) if len(vals) == 1 else vals
    return out
