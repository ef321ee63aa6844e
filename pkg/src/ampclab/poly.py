"""Exact multilinear polynomials over the Boolean cube.

A polynomial is a map from variable subsets (int bitmasks) to exact
rationals. On the cube a multilinear polynomial and its table of values
determine each other through the subset zeta transform (coefficients ->
values) and the Moebius transform (values -> coefficients).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .boolfn import popcount
from .errors import InvalidArgument

MAX_DENSE_BITS = 24


def _bits(mask):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def zeta(coeffs: np.ndarray, n_bits: int) -> np.ndarray:
    """Values on the cube from a dense coefficient array (index = subset mask)."""
    a = np.array(coeffs, copy=True)
    for i in range(n_bits):
        a = a.reshape(-1, 2, 1 << i)
        a[:, 1, :] += a[:, 0, :]
    return a.reshape(-1)


def mobius(values: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of :func:`zeta`."""
    a = np.array(values, copy=True)
    for i in range(n_bits):
        a = a.reshape(-1, 2, 1 << i)
        a[:, 1, :] -= a[:, 0, :]
    return a.reshape(-1)


def _popcounts(idx: np.ndarray) -> np.ndarray:
    x = idx.astype(np.int64)
    counts = np.zeros_like(x)
    while np.any(x):
        counts += x & 1
        x >>= 1
    return counts


def dense_degree(coeffs: np.ndarray) -> int:
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return 0
    return int(_popcounts(nz).max())


def table_degree(values: np.ndarray, n_bits: int) -> int:
    """Multilinear degree of the function with the given value table."""
    return dense_degree(mobius(np.asarray(values, dtype=np.int64), n_bits))


class MultilinearPolynomial:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        clean = {}
        for m, c in (coeffs or {}).items():
            c = Fraction(c)
            if m < 0:
                raise InvalidArgument("variable sets are nonnegative masks")
            if c:
                clean[int(m)] = c
        self.coeffs = clean

    @classmethod
    def constant(cls, c):
        return cls({0: c})

    @classmethod
    def variable(cls, i):
        return cls({1 << i: 1})

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[Iterable[int], object]]):
        out = {}
        for vars_, c in terms:
            m = 0
            for i in vars_:
                m |= 1 << i
            out[m] = out.get(m, Fraction(0)) + Fraction(c)
        return cls(out)

    def degree(self) -> int:
        return max((popcount(m) for m in self.coeffs), default=0)

    def is_zero(self):
        return not self.coeffs

    def n_vars(self) -> int:
        top = 0
        for m in self.coeffs:
            top |= m
        return top.bit_length()

    def evaluate(self, x: int) -> Fraction:
        return sum((c for m, c in self.coeffs.items() if m & x == m), Fraction(0))

    def table(self, n_bits: int):
        """Values on all 2^n_bits points, as a list of Fractions."""
        if n_bits > MAX_DENSE_BITS:
            raise InvalidArgument("cube too large to tabulate")
        den = 1
        for c in self.coeffs.values():
            den = den * c.denominator // math.gcd(den, c.denominator)
        arr = np.zeros(1 << n_bits, dtype=object)
        for m, c in self.coeffs.items():
            if m >> n_bits:
                raise InvalidArgument("polynomial uses variables beyond n_bits")
            arr[m] = int(c * den)
        vals = zeta(arr, n_bits)
        return [Fraction(int(v), den) for v in vals]

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultilinearPolynomial.constant(other)
        return isinstance(other, MultilinearPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, Fraction(0)) + c
        return MultilinearPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return MultilinearPolynomial({m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return MultilinearPolynomial({m: c * other for m, c in self.coeffs.items()})
        return multilinear_product(self, other)

    __rmul__ = __mul__

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for m in sorted(self.coeffs, key=lambda m: (popcount(m), m)):
            mono = "*".join(f"x{i}" for i in _bits(m)) or "1"
            parts.append(f"{self.coeffs[m]}*{mono}")
        return " + ".join(parts)

    def to_json(self) -> str:
        rows = []
        for m in sorted(self.coeffs, key=lambda m: (popcount(m), list(_bits(m)))):
            c = self.coeffs[m]
            rows.append({"vars": list(_bits(m)), "coef": f"{c.numerator}/{c.denominator}"})
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_terms((row["vars"], Fraction(row["coef"])) for row in json.loads(text))


def _lift(p):
    if isinstance(p, MultilinearPolynomial):
        return p
    if isinstance(p, (int, Fraction)):
        return MultilinearPolynomial.constant(p)
    raise TypeError(f"cannot combine polynomial with {type(p).__name__}")


def multilinear_product(p: MultilinearPolynomial, q: MultilinearPolynomial) -> MultilinearPolynomial:
    """p*q with every x_i^2 replaced by x_i; exact on the cube."""
    out = {}
    for a, ca in p.coeffs.items():
        for b, cb in q.coeffs.items():
            m = a | b
            out[m] = out.get(m, Fraction(0)) + ca * cb
    return MultilinearPolynomial(out)


def interpolate(table: Sequence[int], n_bits: int) -> MultilinearPolynomial:
    """The unique multilinear polynomial agreeing with ``table`` on the cube."""
    if n_bits > 20:
        raise InvalidArgument("interpolation limited to 20 variables")
    if len(table) != 1 << n_bits:
        raise InvalidArgument("table length must be 2^n_bits")
    coeffs = mobius(np.asarray(table, dtype=np.int64), n_bits)
    return from_dense(coeffs)


def from_dense(coeffs: np.ndarray) -> MultilinearPolynomial:
    nz = np.flatnonzero(coeffs)
    return MultilinearPolynomial({int(m): int(coeffs[m]) for m in nz})


def to_dense(p: MultilinearPolynomial, n_bits: int) -> np.ndarray:
    """Integer coefficient array; raises on non-integral coefficients."""
    arr = np.zeros(1 << n_bits, dtype=np.int64)
    for m, c in p.coeffs.items():
        if c.denominator != 1:
            raise InvalidArgument("dense form needs integral coefficients")
        arr[m] = c.numerator
    return arr


# --- extraction from AMPC runs ----------------------------------------------------

MAX_EXTRACT_BITS = 12
MAX_EXTENDED_BITS = 16


def _msub(big: tuple, small: tuple):
    """big minus small as sorted multisets, or None if small is not contained."""
    out = list(big)
    for v in small:
        try:
            out.remove(v)
        except ValueError:
            return None
    return tuple(out)


@dataclass
class Sweep:
    """Everything the construction needs from the 2^N runs.

    ``seq_ids[(r, v)]`` interns query sequences z, ``seq_of[(r, v)][x]`` is the
    id realized on input x, ``writes[(r, v)][id]`` what z makes v write, and
    ``stored[(r, k)][x]`` the multiset under k in D_r on input x.
    """

    n_bits: int
    R: int
    seq_ids: dict
    seq_of: dict
    writes: dict
    stored: dict
    gamma: dict  # (r, k) -> set of nonempty multisets
    lenient_inputs: int


def sweep(alg, valid=None) -> Sweep:
    """Run ``alg`` on every point of the cube and index the transcripts.

    Inputs accepted by ``valid`` (a PromiseFunction or predicate; default all)
    run in strict mode, the rest in lenient mode.
    """
    from .ampc import BulkRound, run

    N = alg.n_bits
    size = 1 << N
    rounds = [r.machines() if isinstance(r, BulkRound) else r for r in alg.rounds]
    alg_view = type(alg)(alg.name, N, alg.S, rounds, dict(alg.meta))
    if valid is None:
        is_valid = lambda x: True
    elif callable(valid) and not hasattr(valid, "value"):
        is_valid = valid
    else:
        is_valid = valid.__contains__
    seq_ids, seq_of, writes, stored = {}, {}, {}, {}
    gamma: dict = {}
    lenient = 0
    for x in range(size):
        strict = is_valid(x)
        lenient += not strict
        res = run(alg_view, x, strict=strict, record=True)
        per_key: dict = {}
        for rec in res.transcript:
            mk = (rec.round, rec.machine)
            z = tuple(rec.queries)
            ids = seq_ids.get(mk)
            if ids is None:
                ids = seq_ids[mk] = {}
                seq_of[mk] = np.full(size, -1, dtype=np.int32)
                writes[mk] = []
            zid = ids.get(z)
            if zid is None:
                zid = ids[z] = len(ids)
                writes[mk].append(tuple(rec.writes))
            seq_of[mk][x] = zid
            for k, val in rec.writes:
                per_key.setdefault((rec.round, k), []).append(val)
        for rk, vals in per_key.items():
            U = tuple(sorted(vals))
            stored.setdefault(rk, {})[x] = U
            gamma.setdefault(rk, set()).add(U)
    for mk, arr in seq_of.items():
        if (arr < 0).any():
            raise InvalidArgument(f"machine {mk} is missing from some runs")
    return Sweep(N, alg.R, seq_ids, seq_of, writes, stored, gamma, lenient)


@dataclass
class Audit:
    checked: int
    failures: list

    @property
    def ok(self):
        return not self.failures


@dataclass
class Extraction:
    p: MultilinearPolynomial
    degree: int
    table: np.ndarray
    n_bits: int
    S: int
    R: int
    stats: dict
    audit: Audit | None = None
    p_tables: dict | None = None  # (r, v, z) -> values on the cube
    q_tables: dict | None = None  # (r, k, W) -> values on the cube

    @property
    def bound(self) -> int:
        return self.S ** (2 * self.R)

    def p_poly(self, r, v, z) -> MultilinearPolynomial:
        return interpolate(self.p_tables[(r, v, z)], self.n_bits)

    def q_poly(self, r, k, W) -> MultilinearPolynomial:
        return interpolate(self.q_tables[(r, k, W)], self.n_bits)

    def report(self) -> dict:
        out = {
            "n_bits": self.n_bits,
            "S": self.S,
            "R": self.R,
            "degree": self.degree,
            "degree_bound": str(self.bound),
            "within_bound": self.degree <= self.bound,
            "boolean_on_cube": bool(np.isin(self.table, (0, 1)).all()),
            "stats": self.stats,
            "polynomial": json.loads(self.p.to_json()),
        }
        if self.audit is not None:
            out["audit"] = {"checked": self.audit.checked, "failures": self.audit.failures[:20]}
        return out


def _assignments(W: tuple, options: list):
    """Realized assignments of the multiset W to writers.

    ``options`` lists (machine, {multiset: table}) for every machine that ever
    writes the key. Yields lists of tables, one per machine in the image.
    """

    def rec(i, rest, chosen):
        if not rest:
            yield chosen
            return
        if i == len(options):
            return
        _, by_set = options[i]
        yield from rec(i + 1, rest, chosen)
        for part, table in by_set.items():
            left = _msub(rest, part)
            if left is not None:
                yield from rec(i + 1, left, chosen + [table])

    yield from rec(0, W, [])


def extract_polynomial(
    alg,
    valid=None,
    extended: bool = False,
    audit: bool = False,
    keep: bool = False,
    data: Sweep | None = None,
) -> Extraction:
    """Build q_{R,ANSWER,{1}} by the round-by-round indicator construction.

    Every polynomial is carried as its value table on the cube; products and
    sums of tables are exactly the multilinear products and sums, and the
    coefficients are recovered at the end by Moebius inversion.
    """
    from .ampc import ANSWER, input_key

    N = alg.n_bits
    cap = MAX_EXTENDED_BITS if extended else MAX_EXTRACT_BITS
    if N > cap:
        raise InvalidArgument(f"extraction needs N <= {cap} (got {N}); use extended mode up to {MAX_EXTENDED_BITS}")
    sw = data if data is not None else sweep(alg, valid)
    size = 1 << N
    idx = np.arange(size, dtype=np.int64)
    one = np.ones(size, dtype=np.int64)
    failures: list = []
    checked = 0
    p_keep, q_keep = ({}, {}) if keep else (None, None)

    q_prev: dict = {}
    for i in range(N):
        xi = (idx >> i) & 1
        q_prev[input_key(i)] = {((0,),): 1 - xi, ((1,),): xi}
    stats = {"sequences": 0, "multisets": 0, "assignments": 0, "lenient_inputs": sw.lenient_inputs}

    for r in range(1, sw.R + 1):
        empty_factor: dict = {}

        def factor(k, vals):
            if vals:
                tables = q_prev.get(k)
                if tables is None or vals not in tables:
                    raise InvalidArgument(f"round {r}: response {vals} under {k} was never written")
                return tables[vals]
            f = empty_factor.get(k)
            if f is None:
                f = one.copy()
                for t in q_prev.get(k, {}).values():
                    f = f - t
                empty_factor[k] = f
            return f

        # sums[k][v][W] = sum of p_{r,v,z} over z that make v write exactly W under k
        sums: dict = {}
        machines = sorted(v for (rr, v) in sw.seq_ids if rr == r)
        for v in machines:
            ids = sw.seq_ids[(r, v)]
            for z, zid in ids.items():
                t = one
                for k, vals in z:
                    t = t * factor(k, vals)
                stats["sequences"] += 1
                if keep:
                    p_keep[(r, v, z)] = t
                if audit:
                    checked += 1
                    truth = (sw.seq_of[(r, v)] == zid).astype(np.int64)
                    if not np.array_equal(t, truth):
                        failures.append(f"p[{r},{v}] differs from its sequence indicator")
                by_key: dict = {}
                for k, val in sw.writes[(r, v)][zid]:
                    by_key.setdefault(k, []).append(val)
                for k, vals in by_key.items():
                    W = tuple(sorted(vals))
                    slot = sums.setdefault(k, {}).setdefault(v, {})
                    slot[W] = slot[W] + t if W in slot else t

        q_cur: dict = {}
        for k in sorted(sums):
            options = sorted(sums[k].items())
            G = sorted(sw.gamma.get((r, k), ()), key=len, reverse=True)
            tilde = {}
            for W in G:
                acc = np.zeros(size, dtype=np.int64)
                for chosen in _assignments(W, options):
                    prod = one
                    for t in chosen:
                        prod = prod * t
                    acc = acc + prod
                    stats["assignments"] += 1
                tilde[W] = acc
            exact: dict = {}
            for W in G:  # downward in |W|
                t = tilde[W]
                for W2, t2 in exact.items():
                    if len(W2) > len(W) and _msub(W2, W) is not None:
                        t = t - t2
                exact[W] = t
            stats["multisets"] += len(G)
            q_cur[k] = exact
            if keep:
                for W, t in exact.items():
                    q_keep[(r, k, W)] = t
            if audit:
                held = sw.stored.get((r, k), {})
                U = [held.get(x, ()) for x in range(size)]
                for W in G:
                    checked += 2
                    sup = np.array([_msub(u, W) is not None for u in U], dtype=np.int64)
                    eq = np.array([u == W for u in U], dtype=np.int64)
                    if not np.array_equal(tilde[W], sup):
                        failures.append(f"q~[{r},{k},{W}] is not the superset indicator")
                    if not np.array_equal(exact[W], eq):
                        failures.append(f"q[{r},{k},{W}] is not the exact-multiset indicator")
        q_prev = q_cur

    table = q_prev.get(ANSWER, {}).get(((1,),))
    if table is None:
        table = np.zeros(size, dtype=np.int64)
    coeffs = mobius(table, N)
    p = from_dense(coeffs)
    degree = dense_degree(coeffs)
    return Extraction(
        p, degree, table, N, alg.S, sw.R, stats,
        Audit(checked, failures) if audit else None, p_keep, q_keep,
    )


# --- mixtures ----------------------------------------------------------------------


@dataclass
class MixtureReport:
    degree: int
    max_deviation: Fraction
    off_promise_deviation: Fraction
    within_third: bool
    weights: list

    def report(self) -> dict:
        return {
            "degree": self.degree,
            "max_deviation_on_promise": str(self.max_deviation),
            "max_distance_from_boolean_off_promise": str(self.off_promise_deviation),
            "within_one_third": self.within_third,
            "weights": [str(w) for w in self.weights],
        }


def mixture_check(polys: Sequence, weights: Sequence, f, require_third: bool = False) -> MixtureReport:
    """Form sum_i w_i p_i and measure how well it represents ``f``.

    ``polys`` may be MultilinearPolynomials with integral coefficients or
    Extraction results.
    """
    weights = [Fraction(w) for w in weights]
    if len(weights) != len(polys) or not polys:
        raise InvalidArgument("need one weight per polynomial")
    if any(w < 0 for w in weights) or sum(weights) != 1:
        raise InvalidArgument("weights must be nonnegative and sum to exactly 1")
    N = f.n_bits
    den = 1
    for w in weights:
        den = den * w.denominator // math.gcd(den, w.denominator)
    coeffs = np.zeros(1 << N, dtype=np.int64)
    for p, w in zip(polys, weights):
        poly = p.p if isinstance(p, Extraction) else p
        coeffs += int(w * den) * to_dense(poly, N)
    degree = dense_degree(coeffs)
    vals = zeta(coeffs, N)  # den * p(x)
    in_promise = np.zeros(1 << N, dtype=bool)
    target = np.zeros(1 << N, dtype=np.int64)
    for x in f.ones:
        in_promise[x] = True
        target[x] = den
    for x in f.zeros:
        in_promise[x] = True
    dev = np.abs(vals[in_promise] - target[in_promise])
    max_dev = Fraction(int(dev.max()), den) if dev.size else Fraction(0)
    off = vals[~in_promise]
    off_dev = np.minimum(np.abs(off), np.abs(off - den))
    off_max = Fraction(int(off_dev.max()), den) if off_dev.size else Fraction(0)
    rep = MixtureReport(degree, max_dev, off_max, max_dev <= Fraction(1, 3), weights)
    if require_third and not rep.within_third:
        from .errors import InvariantViolation

        raise InvariantViolation(f"mixture deviates by {max_dev} > 1/3 on the promise")
    return rep
