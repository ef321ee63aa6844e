"""Round lower bounds implied by query and approximate certificate complexity.

Both bounds have the form R >= (1/6) log_S(a). For the cycle problem:

    deterministic: a = D/2 with D >= n^2/512, so R >= (1/3) log_S n - (5/3) log_S 2
    randomized:    a = C/2 with C_{1/6} >= n/4, so R >= (1/6) log_S n - (1/2) log_S 2

Values are exact rationals whenever the logarithm is rational (n, S and a
powers of a common base); otherwise a float is reported. Negative bounds
are clamped to 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgument


def _perfect_power_root(m: int) -> tuple[int, int]:
    """(b, e) with m = b**e and e maximal."""
    if m < 2:
        raise InvalidArgument("base must be an integer >= 2")
    for e in range(m.bit_length(), 1, -1):
        b = round(m ** (1.0 / e))
        for c in (b - 1, b, b + 1):
            if c >= 2 and c ** e == m:
                return c, e
    return m, 1


def _power_of(a: int, b: int) -> int | None:
    """t with b**t == a (a >= 1), else None."""
    t = 0
    while a > 1 and a % b == 0:
        a //= b
        t += 1
    return t if a == 1 else None


def exact_log(a, base: int) -> Fraction | None:
    """log_base(a) as a Fraction when it is rational, else None."""
    a = Fraction(a)
    if a <= 0:
        raise InvalidArgument("logarithm of a nonpositive number")
    b, e = _perfect_power_root(int(base))
    tn = _power_of(a.numerator, b)
    td = _power_of(a.denominator, b)
    if tn is None or td is None:
        return None
    return Fraction(tn - td, e)


def _float_log(a, base) -> float:
    a = Fraction(a)
    return (math.log(a.numerator) - math.log(a.denominator)) / math.log(base)


@dataclass
class BoundReport:
    kind: str
    n: int | None
    S: int | None
    eps: Fraction | None
    measure: str
    measure_value: Fraction
    argument: Fraction  # R >= (1/6) log_S(argument)
    coef_n: Fraction | None  # R >= coef_n log_S n + coef_2 log_S 2 (cycle bounds only)
    coef_2: Fraction | None
    exact: Fraction | None  # unclamped, when rational
    value: float  # unclamped
    tag: str

    @property
    def bound(self):
        """The clamped bound (exact when available)."""
        if self.exact is not None:
            return max(self.exact, Fraction(0))
        return max(self.value, 0.0)

    @property
    def rounds(self) -> int:
        """Smallest integer round count allowed by the bound."""
        if self.exact is not None:
            return max(0, math.ceil(self.exact))
        return max(0, math.ceil(self.value - 1e-12))

    def report(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "S": self.S,
            "eps": None if self.eps is None else str(self.eps),
            "measure": self.measure,
            "measure_value": str(self.measure_value),
            "argument": str(self.argument),
            "coef_log_n": None if self.coef_n is None else str(self.coef_n),
            "coef_log_2": None if self.coef_2 is None else str(self.coef_2),
            "exact": None if self.exact is None else str(self.exact),
            "value": self.value,
            "bound": str(self.bound) if self.exact is not None else self.bound,
            "min_rounds": self.rounds,
            "tag": self.tag,
        }


def _log_S(a, n, S, eps):
    """log_S(a) exactly if possible, plus a float; S given directly or as n^eps."""
    if eps is not None:
        ex = exact_log(a, n)
        return (ex / eps if ex is not None else None), _float_log(a, n) / float(eps)
    return exact_log(a, S), _float_log(a, S)


def _resolve(n, S, eps):
    if (S is None) == (eps is None):
        raise InvalidArgument("give exactly one of S and eps")
    if eps is not None:
        eps = Fraction(eps)
        if not 0 < eps <= 1:
            raise InvalidArgument("eps must lie in (0, 1]")
    elif S < 2:
        raise InvalidArgument("S must be >= 2")
    return S, eps


def rounds_from_query_complexity(D, S: int | None = None, eps=None, n: int | None = None) -> BoundReport:
    """R >= (1/6) log_S(D/2) for any deterministic algorithm."""
    S, eps = _resolve(n, S, eps)
    arg = Fraction(D) / 2
    ex, fl = _log_S(arg, n, S, eps)
    return BoundReport(
        "deterministic", n, S, eps, "D", Fraction(D), arg, None, None,
        None if ex is None else ex / 6, fl / 6, "R >= (1/6) log_S(D/2)",
    )


def rounds_from_approx_certificate(C, S: int | None = None, eps=None, n: int | None = None) -> BoundReport:
    """R >= (1/6) log_S(C/2) from C_{1/6} <= 2 S^{6R}, for randomized algorithms."""
    S, eps = _resolve(n, S, eps)
    arg = Fraction(C) / 2
    ex, fl = _log_S(arg, n, S, eps)
    return BoundReport(
        "randomized", n, S, eps, "C_1/6", Fraction(C), arg, None, None,
        None if ex is None else ex / 6, fl / 6, "R >= (1/6) log_S(C_1/6 / 2)",
    )


def det_round_lower_bound(n: int, S: int | None = None, eps=None) -> BoundReport:
    """Deterministic bound for the cycle problem using D >= n^2/512."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    rep = rounds_from_query_complexity(Fraction(n * n, 512), S, eps, n)
    rep.measure = "D(OCTC) >= n^2/512"
    rep.coef_n, rep.coef_2 = Fraction(1, 3), Fraction(-5, 3)
    rep.tag = "R >= (1/6) log_S(n^2/1024) = (1/3) log_S n - (1/3) log_S 32"
    return rep


def rand_round_lower_bound(n: int, S: int | None = None, eps=None) -> BoundReport:
    """Randomized bound for the cycle problem using C_{1/6} >= n/4."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    rep = rounds_from_approx_certificate(Fraction(n, 4), S, eps, n)
    rep.measure = "C_1/6(OCTC) >= n/4"
    rep.coef_n, rep.coef_2 = Fraction(1, 6), Fraction(-1, 2)
    rep.tag = "R >= (1/6) log_S(n/8) = (1/6) log_S n - (1/2) log_S 2"
    return rep
