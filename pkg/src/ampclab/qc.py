"""Exact complexity oracles for partial Boolean functions.

* ``det_query_complexity``: least depth of a decision tree correct on the
  domain (memoised minimax with iterative deepening).
* ``certificate_complexity`` / ``approx_certificate_complexity``.
* ``check_framework``: the sensitive-block lower bound on the approximate
  certificate complexity, checked hypothesis by hypothesis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .boolfn import (
    LabeledDomain,
    PromiseFunction,
    cycle_order,
    edge_index,
    popcount,
    total_function,
)
from .errors import InvalidArgument, ResourceLimit

DEFAULT_NODE_BUDGET = 20_000_000
DEFAULT_MEMO_CAP = 5_000_000
DEFAULT_ERROR_SET_CAP = 2_000_000


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# --- deterministic query complexity ----------------------------------------


@dataclass
class QueryResult:
    value: int
    witness: tuple  # ("leaf", b) | ("query", slot, subtree_if_0, subtree_if_1)
    nodes: int = 0

    def report(self):
        return {"measure": "D", "value": self.value, "witness": self.witness, "violations": []}


class _Minimax:
    """Decision-tree depth over a labelled domain.

    A node of the search is the set of domain points consistent with the
    answers so far, held as a bitmask over domain indices. Two restrictions
    with the same consistent set have the same value, so that set is the
    memo key.
    """

    def __init__(self, points, labels, n_bits, node_budget, memo_cap):
        self.n_bits = n_bits
        self.ones_mask = sum(1 << j for j, b in enumerate(labels) if b)
        self.full = (1 << len(points)) - 1
        # col[i]: domain members with coordinate i set
        self.col = [0] * n_bits
        for j, x in enumerate(points):
            for i in _bits(x):
                self.col[i] |= 1 << j
        self.node_budget = node_budget
        self.memo_cap = memo_cap
        self.nodes = 0
        self.fail: dict[int, int] = {}  # set -> largest depth shown insufficient
        self.succ: dict[int, int] = {}  # set -> smallest depth shown sufficient

    def pure(self, s):
        t = s & self.ones_mask
        return t == 0 or t == s

    def splits(self, s):
        out = []
        for i in range(self.n_bits):
            s1 = s & self.col[i]
            if s1 and s1 != s:
                out.append((i, s ^ s1, s1))
        # balanced splits first: they tend to reach pure leaves sooner
        out.sort(key=lambda t: abs(popcount(t[1]) - popcount(t[2])))
        return out

    def solvable(self, s, d):
        if self.pure(s):
            return True
        if d == 0:
            return False
        if self.fail.get(s, -1) >= d:
            return False
        if self.succ.get(s, 1 << 30) <= d:
            return True
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise _Budget()
        ok = False
        for _, s0, s1 in self.splits(s):
            if self.solvable(s0, d - 1) and self.solvable(s1, d - 1):
                ok = True
                break
        store = len(self.fail) + len(self.succ) < self.memo_cap
        if ok:
            if store or s in self.succ:
                self.succ[s] = min(d, self.succ.get(s, d))
        elif store or s in self.fail:
            self.fail[s] = max(d, self.fail.get(s, d))
        return ok

    def tree(self, s, d):
        if self.pure(s):
            return ("leaf", 1 if s & self.ones_mask else 0)
        for i, s0, s1 in self.splits(s):
            if self.solvable(s0, d - 1) and self.solvable(s1, d - 1):
                return ("query", i, self.tree(s0, d - 1), self.tree(s1, d - 1))
        raise AssertionError("depth claimed solvable but no split works")


class _Budget(Exception):
    pass


def _dqc(points, labels, n_bits, node_budget, memo_cap) -> QueryResult:
    mm = _Minimax(points, labels, n_bits, node_budget, memo_cap)
    d = 0
    try:
        while not mm.solvable(mm.full, d):
            d += 1
    except _Budget:
        raise ResourceLimit(
            f"minimax budget of {node_budget} nodes exhausted", lower=d, upper=n_bits
        ) from None
    return QueryResult(d, mm.tree(mm.full, d), mm.nodes)


def det_query_complexity(f, node_budget=DEFAULT_NODE_BUDGET, memo_cap=DEFAULT_MEMO_CAP):
    """D(f) with a witness decision tree of that depth."""
    points = list(f.ones) + list(f.zeros)
    labels = [1] * len(f.ones) + [0] * len(f.zeros)
    return _dqc(points, labels, f.n_bits, node_budget, memo_cap)


def det_query_complexity_total(table, n_bits, **kw) -> QueryResult:
    return det_query_complexity(total_function(table, n_bits), **kw)


def eval_tree(tree, x: int) -> tuple[int, int]:
    """(output, number of queries) of a witness tree on input ``x``."""
    depth = 0
    while tree[0] == "query":
        _, i, t0, t1 = tree
        tree = t1 if (x >> i) & 1 else t0
        depth += 1
    return tree[1], depth


# --- certificates -----------------------------------------------------------


def _can_hit(sets, k, allowed):
    """Is there a set of <= k coordinates, all inside ``allowed``, meeting every mask?"""
    if not sets:
        return True
    if k == 0:
        return False
    best = None
    for s in sets:
        t = s & allowed
        if not t:
            return False
        if best is None or popcount(t) < popcount(best):
            best = t
            if popcount(t) == 1:
                break
    for i in _bits(best):
        bit = 1 << i
        rest = [s for s in sets if not s & bit]
        if _can_hit(rest, k - 1, allowed):
            return True
    return False


def _dedupe_minimal(sets):
    """Drop duplicates and supersets; hitting every minimal set suffices."""
    uniq = sorted(set(sets), key=popcount)
    kept = []
    for s in uniq:
        if not any(t & s == t for t in kept):
            kept.append(s)
    return kept


def min_certificate(x: int, opposite: Iterable[int], n_bits: int, limit: int | None = None):
    """Smallest certificate of ``x`` against the opposite class.

    A coordinate set C certifies x iff every opposite instance y differs from
    x somewhere in C, so this is a minimum hitting set of the difference
    masks. Returns ``(size, lexicographically least witness)``, or
    ``(None, None)`` if no certificate of size <= ``limit`` exists.
    """
    sets = _dedupe_minimal(x ^ y for y in opposite)
    full = (1 << n_bits) - 1
    top = n_bits if limit is None else min(limit, n_bits)
    size = None
    for k in range(top + 1):
        if _can_hit(sets, k, full):
            size = k
            break
    if size is None:
        return None, None
    witness, lo, k = [], 0, size
    while sets:
        for e in range(lo, n_bits):
            bit = 1 << e
            if not any(s & bit for s in sets):
                continue
            rest = [s for s in sets if not s & bit]
            above = full & ~((1 << (e + 1)) - 1)
            if _can_hit(rest, k - 1, above):
                witness.append(e)
                sets, lo, k = rest, e + 1, k - 1
                break
        else:
            raise AssertionError("lexicographic reconstruction failed")
    return size, tuple(witness)


def brute_min_certificate(x, opposite, n_bits):
    """Subset scan in order of size; the reference the hitting-set search is tested against."""
    opposite = list(opposite)
    for k in range(n_bits + 1):
        for c in combinations(range(n_bits), k):
            m = sum(1 << i for i in c)
            if all((x ^ y) & m for y in opposite):
                return k, c
    raise AssertionError("the full coordinate set always certifies")


@dataclass
class CertResult:
    value: int
    per_instance: dict = field(default_factory=dict)  # x -> (size, witness)
    used_symmetry: bool = False

    def report(self):
        worst = max(self.per_instance.items(), key=lambda kv: (kv[1][0], -kv[0]))
        return {
            "measure": "C",
            "value": self.value,
            "witness": {"instance": hex(worst[0]), "certificate": list(worst[1][1])},
            "violations": [],
        }


def _is_vertex_symmetric(f):
    return getattr(f, "family", None) == "ockc"


def certificate_complexity(f, use_symmetry=True, max_bits=None) -> CertResult:
    """C(f) plus per-instance minimum certificates.

    For OC_kC every 1-instance is a relabelling of every other (likewise for
    0-instances) and relabelling preserves certificate size, so with
    ``use_symmetry`` one representative per class is searched.
    """
    ones, zeros = list(f.ones), list(f.zeros)
    if not ones or not zeros:
        return CertResult(0, {x: (0, ()) for x in ones + zeros})
    if max_bits is not None and f.n_bits > max_bits and not (use_symmetry and _is_vertex_symmetric(f)):
        raise ResourceLimit(f"N={f.n_bits} over the scan limit {max_bits} with no shortcut")
    sym = use_symmetry and _is_vertex_symmetric(f)
    reps_one = ones[:1] if sym else ones
    reps_zero = zeros[:1] if sym else zeros
    per = {}
    for x in reps_one:
        per[x] = min_certificate(x, zeros, f.n_bits)
    for y in reps_zero:
        per[y] = min_certificate(y, ones, f.n_bits)
    return CertResult(max(v[0] for v in per.values()), per, sym)


def _cert_at_least(ones, zeros, n_bits, bound):
    """True iff C(f) >= bound, exiting at the first instance that proves it."""
    if not ones or not zeros:
        return bound <= 0
    for pool, opp in ((ones, zeros), (zeros, ones)):
        for x in pool:
            size, _ = min_certificate(x, opp, n_bits, limit=bound - 1)
            if size is None:
                return True
    return False


def _certificate_value(ones, zeros, n_bits, ceiling):
    """C of the labelled domain if it is below ``ceiling``, else None."""
    if not ones or not zeros:
        return 0
    worst = 0
    for pool, opp in ((ones, zeros), (zeros, ones)):
        for x in pool:
            size, _ = min_certificate(x, opp, n_bits, limit=ceiling - 1)
            if size is None:
                return None
            worst = max(worst, size)
    return worst


@dataclass
class ApproxCertResult:
    value: int
    delta: Fraction
    candidates: int
    error_set: tuple  # an optimal error set E

    def report(self):
        return {
            "measure": "Cdelta",
            "value": self.value,
            "witness": {"delta": str(self.delta), "error_set": [hex(x) for x in self.error_set]},
            "violations": [],
        }


def error_set_sizes(f, delta):
    """Admissible (|E n V1|, |E n V0|) pairs: canonical-measure mass <= delta."""
    delta = Fraction(delta)
    n1, n0 = len(f.ones), len(f.zeros)
    out = []
    for a in range(n1 + 1):
        for b in range(n0 + 1):
            if Fraction(a, 2 * n1) + Fraction(b, 2 * n0) <= delta:
                out.append((a, b))
    return out


def count_error_sets(f, delta) -> int:
    n1, n0 = len(f.ones), len(f.zeros)
    return sum(math.comb(n1, a) * math.comb(n0, b) for a, b in error_set_sizes(f, delta))


def approx_certificate_complexity(f, delta, cap=DEFAULT_ERROR_SET_CAP) -> ApproxCertResult:
    """C_delta(f): minimum C(f') over every f' that disagrees with f on mass <= delta."""
    delta = Fraction(delta)
    if not 0 <= delta < 1:
        raise InvalidArgument("delta must lie in [0, 1)")
    base = certificate_complexity(f, use_symmetry=False)
    best, best_e = base.value, ()
    if delta == 0 or best == 0:
        return ApproxCertResult(best, delta, 1, ())
    ones, zeros = list(f.ones), list(f.zeros)
    seen = 1
    for a, b in error_set_sizes(f, delta):
        if a == b == 0:
            continue
        for e1 in combinations(ones, a):
            s1 = set(e1)
            for e0 in combinations(zeros, b):
                seen += 1
                if seen > cap:
                    raise ResourceLimit(
                        f"more than {cap} admissible error sets", lower=0, upper=best
                    )
                s0 = set(e0)
                new_ones = [x for x in ones if x not in s1] + list(e0)
                new_zeros = [x for x in zeros if x not in s0] + list(e1)
                val = _certificate_value(new_ones, new_zeros, f.n_bits, best)
                if val is not None and val < best:
                    best, best_e = val, e1 + e0
                    if best == 0:
                        return ApproxCertResult(0, delta, seen, best_e)
    return ApproxCertResult(best, delta, seen, best_e)


# --- sensitive-block framework ---------------------------------------------


@dataclass
class SensitiveBlockFamily:
    blocks: dict  # 1-instance -> list of coordinate masks
    K: Fraction
    delta: Fraction

    def degree_bound(self, f) -> Fraction:
        """d = (1/(2 delta) - 1) K |V1| / |V0|."""
        return (1 / (2 * Fraction(self.delta)) - 1) * Fraction(self.K) * Fraction(
            len(f.ones), len(f.zeros)
        )


@dataclass
class FrameworkReport:
    holds: bool
    K: Fraction
    certified: int  # ceil(K) when the hypotheses hold, else 0
    d: Fraction
    min_blocks: int
    max_zero_degree: int
    zero_degrees: dict
    violations: list

    def report(self):
        return {
            "measure": "framework",
            "value": self.certified,
            "witness": {
                "K": str(self.K),
                "d": str(self.d),
                "min_blocks": self.min_blocks,
                "max_zero_degree": self.max_zero_degree,
            },
            "violations": self.violations,
        }


def check_framework(fam: SensitiveBlockFamily, f: PromiseFunction) -> FrameworkReport:
    delta = Fraction(fam.delta)
    if not 0 < delta < Fraction(1, 2):
        raise InvalidArgument("delta must lie in (0, 1/2)")
    K = Fraction(fam.K)
    d = fam.degree_bound(f)
    violations = []
    zero_deg = {y: 0 for y in f.zeros}
    min_blocks = None
    for x in f.ones:
        blocks = fam.blocks.get(x, [])
        min_blocks = len(blocks) if min_blocks is None else min(min_blocks, len(blocks))
        for j, b in enumerate(blocks):
            y = x ^ b
            if f.value(y) != 0:
                violations.append({"hypothesis": 1, "instance": hex(x), "block": j})
            else:
                zero_deg[y] += 1
        union = 0
        disjoint = True
        for b in blocks:
            if union & b:
                disjoint = False
            union |= b
        if not disjoint:
            violations.append({"hypothesis": 2, "instance": hex(x), "reason": "blocks overlap"})
        if len(blocks) < 2 * K:
            violations.append({"hypothesis": 2, "instance": hex(x), "reason": f"{len(blocks)} < 2K"})
    for y, deg in zero_deg.items():
        if deg > d:
            violations.append({"hypothesis": 3, "instance": hex(y), "degree": deg})
    holds = not violations
    return FrameworkReport(
        holds,
        K,
        math.ceil(K) if holds else 0,
        d,
        min_blocks or 0,
        max(zero_deg.values(), default=0),
        zero_deg,
        violations,
    )


def opposite_edge_blocks(f: PromiseFunction, delta=Fraction(1, 6)) -> SensitiveBlockFamily:
    """Per Hamiltonian cycle, one 4-slot block per pair of opposite edges.

    Removing edges (c_i, c_{i+1}) and (c_j, c_{j+1}) with j = i + n/2 and
    adding the chords (c_{i+1}, c_j), (c_{j+1}, c_i) splits the cycle into
    two (n/2)-cycles.
    """
    if f.family != "ockc" or f.params[1] != 2:
        raise InvalidArgument("opposite-edge blocks are defined for OCTC only")
    n = f.params[0]
    if n % 2:
        raise InvalidArgument("n must be even")
    half = n // 2
    blocks = {}
    for x in f.ones:
        c = cycle_order(x, n)
        mine = []
        for i in range(half):
            j = i + half
            a, a1 = c[i], c[(i + 1) % n]
            b, b1 = c[j], c[(j + 1) % n]
            mine.append(
                (1 << edge_index(a, a1, n))
                | (1 << edge_index(b, b1, n))
                | (1 << edge_index(a1, b, n))
                | (1 << edge_index(b1, a, n))
            )
        blocks[x] = mine
    return SensitiveBlockFamily(blocks, Fraction(n, 4), Fraction(delta))


def singleton_blocks(f: PromiseFunction, delta=Fraction(1, 6)) -> SensitiveBlockFamily:
    """For promise-Majority: every 1-bit of a 1-instance is its own block."""
    if f.family != "pmaj":
        raise InvalidArgument("singleton blocks are defined for promise-Majority")
    N = f.params[0]
    blocks = {x: [1 << i for i in _bits(x)] for x in f.ones}
    return SensitiveBlockFamily(blocks, Fraction(N // 2 + 1, 2), Fraction(delta))


# --- Midrijanis ----------------------------------------------------------------


@dataclass
class MidrijanisResult:
    holds: bool
    D: int
    degree: int


def midrijanis_check(table, n_bits) -> MidrijanisResult:
    """D(g) <= 2 deg(g)^3 for a total function given by its truth table."""
    from .poly import interpolate

    D = det_query_complexity_total(table, n_bits).value
    deg = interpolate(table, n_bits).degree()
    return MidrijanisResult(D <= 2 * deg ** 3, D, deg)
