"""Bit-vector encodings of graphs, the OC_kC and promise-Majority families,
and the canonical distribution of a partial Boolean function.

Bit vectors are Python ints: bit ``i`` of the int is coordinate ``x_i``.
Edge slot ``i`` of an ``n``-vertex graph is the pair returned by
``edge_pair(i, n)`` (row-major upper triangle of the adjacency matrix).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument

OCKC_MAX_N = 12
MAJORITY_MAX_N = 25


def n_slots(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(u: int, v: int, n: int) -> int:
    if not (0 <= u < n and 0 <= v < n) or u == v:
        raise InvalidArgument(f"bad edge ({u}, {v}) for n={n}")
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def edge_pair(idx: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`edge_index`."""
    N = n_slots(n)
    if not 0 <= idx < N:
        raise InvalidArgument(f"slot {idx} out of range for n={n}")
    # row u starts at u*n - u(u+1)/2; solve the quadratic, then fix rounding
    u = int((2 * n - 1 - math.sqrt((2 * n - 1) ** 2 - 8 * idx)) // 2)
    while u > 0 and u * n - u * (u + 1) // 2 > idx:
        u -= 1
    while (u + 1) * n - (u + 1) * (u + 2) // 2 <= idx:
        u += 1
    v = idx - (u * n - u * (u + 1) // 2) + u + 1
    return u, v


def edges_to_bits(edges: Iterable[tuple[int, int]], n: int) -> int:
    x = 0
    for u, v in edges:
        x |= 1 << edge_index(u, v, n)
    return x


def bits_to_edges(x: int, n: int) -> list[tuple[int, int]]:
    out = []
    i = 0
    while x:
        if x & 1:
            out.append(edge_pair(i, n))
        x >>= 1
        i += 1
    return out


def edges_to_array(edges: Iterable[tuple[int, int]], n: int) -> np.ndarray:
    """Dense uint8 bit vector, for graphs too large to handle as an int."""
    arr = np.zeros(n_slots(n), dtype=np.uint8)
    for u, v in edges:
        arr[edge_index(u, v, n)] = 1
    return arr


def bits_to_hex(x: int, n_bits: int) -> str:
    """LSB-first byte encoding: bit i lives in byte i//8 at position i%8."""
    return x.to_bytes((n_bits + 7) // 8, "little").hex()


def hex_to_bits(s: str, n_bits: int) -> int:
    raw = bytes.fromhex(s)
    if len(raw) != (n_bits + 7) // 8:
        raise InvalidArgument(f"expected {(n_bits + 7) // 8} bytes, got {len(raw)}")
    x = int.from_bytes(raw, "little")
    if x >> n_bits:
        raise InvalidArgument("padding bits set beyond n_bits")
    return x


def popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class GraphInstance:
    n: int
    bits: int

    @property
    def n_bits(self) -> int:
        return n_slots(self.n)

    @classmethod
    def from_edges(cls, n, edges):
        return cls(n, edges_to_bits(edges, n))

    def edges(self):
        return bits_to_edges(self.bits, self.n)

    def degree(self, v):
        return sum(1 for e in self.edges() if v in e)

    def to_hex(self) -> str:
        return bits_to_hex(self.bits, self.n_bits)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges()]})

    @classmethod
    def from_json(cls, text: str) -> "GraphInstance":
        obj = json.loads(text)
        return cls.from_edges(int(obj["n"]), [tuple(e) for e in obj["edges"]])


# --- promise functions -----------------------------------------------------


@dataclass(frozen=True)
class PromiseFunction:
    """A partial Boolean function given by its 1-instances and 0-instances.

    ``family`` records where the function came from; graph families
    (``"ockc"``) are invariant under vertex relabelling, which the
    certificate oracle may exploit.
    """

    n_bits: int
    ones: tuple[int, ...]
    zeros: tuple[int, ...]
    family: str = "explicit"
    params: tuple = ()
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        ones = tuple(sorted(set(self.ones)))
        zeros = tuple(sorted(set(self.zeros)))
        if not ones or not zeros:
            raise InvalidArgument("both instance classes must be nonempty")
        limit = 1 << self.n_bits
        for x in ones + zeros:
            if not 0 <= x < limit:
                raise InvalidArgument(f"instance {x:#x} wider than {self.n_bits} bits")
        index = {x: 1 for x in ones}
        for x in zeros:
            if x in index:
                raise InvalidArgument(f"instance {x:#x} is both a 1- and a 0-instance")
            index[x] = 0
        object.__setattr__(self, "ones", ones)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "_index", index)

    @property
    def domain(self) -> tuple[int, ...]:
        return self.ones + self.zeros

    def value(self, x: int):
        """g(x) for x in the domain, else None."""
        return self._index.get(x)

    def __contains__(self, x):
        return x in self._index

    def flipped(self, errors: Iterable[int]) -> "PromiseFunction":
        """Same domain with the value negated on ``errors``.

        May leave a class empty; such results are returned as
        :class:`LabeledDomain` instead.
        """
        err = set(errors)
        ones = [x for x in self.ones if x not in err] + [x for x in self.zeros if x in err]
        zeros = [x for x in self.zeros if x not in err] + [x for x in self.ones if x in err]
        if ones and zeros:
            return PromiseFunction(self.n_bits, tuple(ones), tuple(zeros), "explicit")
        return LabeledDomain(self.n_bits, tuple(ones), tuple(zeros))


@dataclass(frozen=True)
class LabeledDomain:
    """Domain with labels where one class may be empty (constant functions)."""

    n_bits: int
    ones: tuple[int, ...]
    zeros: tuple[int, ...]
    family: str = "explicit"
    params: tuple = ()

    @property
    def domain(self):
        return self.ones + self.zeros


def total_function(table: Sequence[int], n_bits: int) -> LabeledDomain:
    """Total function from its truth table (entry ``x`` is g(x))."""
    if len(table) != 1 << n_bits:
        raise InvalidArgument("truth table length must be 2^n_bits")
    ones = tuple(x for x, b in enumerate(table) if b)
    zeros = tuple(x for x, b in enumerate(table) if not b)
    return LabeledDomain(n_bits, ones, zeros, "total")


def classify(f: PromiseFunction, x: int, n_bits: int | None = None) -> str:
    if n_bits is not None and n_bits != f.n_bits:
        raise InvalidArgument(f"length {n_bits} does not match N={f.n_bits}")
    if x >> f.n_bits:
        raise InvalidArgument("vector longer than N")
    v = f.value(x)
    return "invalid" if v is None else ("one" if v else "zero")


def _cycles_on(vertices: Sequence[int]):
    """Every labelled cycle through all of ``vertices`` (len >= 3), as edge lists."""
    first, rest = vertices[0], vertices[1:]
    for perm in permutations(rest):
        if perm[0] > perm[-1]:
            continue  # each cycle once: fix the orientation
        order = (first,) + perm
        yield [(order[i], order[(i + 1) % len(order)]) for i in range(len(order))]


def _cycle_masks(vertices, n):
    return [edges_to_bits(c, n) for c in _cycles_on(vertices)]


def _k_cycle_masks(vertices: tuple[int, ...], size: int, n: int):
    if not vertices:
        yield 0
        return
    head, rest = vertices[0], vertices[1:]
    for others in combinations(rest, size - 1):
        block = (head,) + others
        remaining = tuple(v for v in rest if v not in others)
        tails = list(_k_cycle_masks(remaining, size, n))
        for c in _cycle_masks(block, n):
            for t in tails:
                yield c | t


def enumerate_ockc(n: int, k: int) -> PromiseFunction:
    """One n-cycle (value 1) versus k disjoint (n/k)-cycles (value 0)."""
    if k < 2 or n % k or n // k < 3:
        raise InvalidArgument(f"need k >= 2, k | n and n/k >= 3 (n={n}, k={k})")
    if n > OCKC_MAX_N:
        raise InvalidArgument(f"n={n} exceeds the enumeration guard {OCKC_MAX_N}")
    verts = tuple(range(n))
    ones = tuple(_cycle_masks(verts, n))
    zeros = tuple(_k_cycle_masks(verts, n // k, n))
    return PromiseFunction(n_slots(n), ones, zeros, "ockc", (n, k))


def octc(n: int) -> PromiseFunction:
    return enumerate_ockc(n, 2)


def promise_majority(N: int) -> PromiseFunction:
    if N < 1 or N % 2 == 0 or N > MAJORITY_MAX_N:
        raise InvalidArgument(f"N must be odd and <= {MAJORITY_MAX_N}, got {N}")
    half = N // 2
    ones = tuple(sum(1 << i for i in c) for c in combinations(range(N), half + 1))
    zeros = tuple(sum(1 << i for i in c) for c in combinations(range(N), half))
    return PromiseFunction(N, ones, zeros, "pmaj", (N,))


# --- large-n generators (no materialised domain) ---------------------------


def random_ockc_edges(n: int, k: int, value: int, rng: np.random.Generator):
    """Edges of a uniformly random 1-instance (value=1) or 0-instance of OC_kC."""
    if k < 2 or n % k or n // k < 3:
        raise InvalidArgument(f"need k | n and n/k >= 3 (n={n}, k={k})")
    perm = [int(v) for v in rng.permutation(n)]
    m = n if value else n // k
    edges = []
    for start in range(0, n, m):
        block = perm[start:start + m]
        edges.extend((block[i], block[(i + 1) % m]) for i in range(m))
    return edges


def cycle_order(x: int, n: int) -> list[int]:
    """Vertex order of the Hamiltonian cycle encoded by ``x``, starting at 0."""
    adj = {v: [] for v in range(n)}
    for u, v in bits_to_edges(x, n):
        adj[u].append(v)
        adj[v].append(u)
    order, prev, cur = [0], None, 0
    while True:
        nxt = [w for w in adj[cur] if w != prev]
        if len(adj[cur]) != 2:
            raise InvalidArgument("not a 2-regular graph")
        prev, cur = cur, min(nxt) if prev is None else nxt[0]
        if cur == 0:
            break
        order.append(cur)
    if len(order) != n:
        raise InvalidArgument("graph is not a single Hamiltonian cycle")
    return order


def cycle_lengths(x: int, n: int) -> list[int]:
    adj = {v: [] for v in range(n)}
    for u, v in bits_to_edges(x, n):
        adj[u].append(v)
        adj[v].append(u)
    seen, lengths = set(), []
    for s in range(n):
        if s in seen:
            continue
        stack, size = [s], 0
        seen.add(s)
        while stack:
            v = stack.pop()
            size += 1
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        lengths.append(size)
    return lengths


# --- canonical distribution ------------------------------------------------


@dataclass(frozen=True)
class CanonicalDistribution:
    f: PromiseFunction

    @property
    def one_weight(self) -> Fraction:
        return Fraction(1, 2 * len(self.f.ones))

    @property
    def zero_weight(self) -> Fraction:
        return Fraction(1, 2 * len(self.f.zeros))

    def probability(self, x: int) -> Fraction:
        v = self.f.value(x)
        if v is None:
            return Fraction(0)
        return self.one_weight if v else self.zero_weight

    def weights(self) -> dict[int, Fraction]:
        return {x: self.probability(x) for x in self.f.domain}

    def mass(self, xs: Iterable[int]) -> Fraction:
        return sum((self.probability(x) for x in xs), Fraction(0))


def canonical_distribution(f: PromiseFunction) -> CanonicalDistribution:
    return CanonicalDistribution(f)


def sample(d: CanonicalDistribution, seed: int) -> int:
    rng = np.random.default_rng(seed)
    return sample_with(d, rng)


def sample_with(d: CanonicalDistribution, rng: np.random.Generator) -> int:
    pool = d.f.ones if rng.integers(2) else d.f.zeros
    return pool[int(rng.integers(len(pool)))]
