import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ampclab.bounds import (
    det_round_lower_bound,
    exact_log,
    rand_round_lower_bound,
    rounds_from_approx_certificate,
    rounds_from_query_complexity,
)
from ampclab.errors import InvalidArgument

F = Fraction


# hand-computed: log_32 1024 = 2, log_32 2 = 1/5, log_16 4096 = 3, log_16 2 = 1/4,
# log_8 4096 = 4, log_8 2 = 1/3, log_1024 2^20 = 2, log_1024 2 = 1/10
SPOTS = [
    (1024, 32, None, F(1, 3), F(7, 30)),
    (4096, 16, None, F(7, 12), F(3, 8)),
    (4096, None, F(1, 4), F(4, 3) - F(5, 9), F(1, 2)),
    (1 << 20, None, F(1, 2), F(1, 2), F(17, 60)),
    (1 << 12, 1 << 12, None, F(1, 3) - F(5, 36), F(1, 6) - F(1, 24)),
]


@pytest.mark.parametrize("n,S,eps,det,rand", SPOTS)
def test_spot_values(n, S, eps, det, rand):
    d = det_round_lower_bound(n, S=S, eps=eps)
    r = rand_round_lower_bound(n, S=S, eps=eps)
    assert d.exact == det
    assert r.exact == rand
    assert d.coef_n == F(1, 3) and d.coef_2 == F(-5, 3)
    assert r.coef_n == F(1, 6) and r.coef_2 == F(-1, 2)


def test_clamped_at_zero():
    d = det_round_lower_bound(2, S=5)
    assert d.value < 0 and d.bound == 0 and d.rounds == 0


def test_irrational_falls_back_to_float():
    d = det_round_lower_bound(1000, S=10)
    assert d.exact is None
    assert math.isclose(d.value, math.log(1000 ** 2 / 1024, 10) / 6)
    assert d.report()["exact"] is None


@given(st.integers(2, 10 ** 6), st.integers(2, 10 ** 4))
def test_identity_of_the_two_forms(n, S):
    # (1/6) log_S(n^2/1024) = (1/3) log_S n - (1/3) log_S 32 = (1/3) log_S n - (5/3) log_S 2
    d = det_round_lower_bound(n, S=S)
    lhs = math.log(n * n / 1024) / math.log(S) / 6
    mid = (math.log(n) - math.log(32)) / math.log(S) / 3
    rhs = float(d.coef_n) * math.log(n, S) + float(d.coef_2) * math.log(2, S)
    assert math.isclose(d.value, lhs, rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(lhs, mid, rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(mid, rhs, rel_tol=1e-9, abs_tol=1e-12)


@given(st.integers(1, 40), st.integers(1, 40))
def test_identity_exact_on_powers_of_two(a, b):
    n, S = 2 ** a, 2 ** b
    d = det_round_lower_bound(n, S=S)
    r = rand_round_lower_bound(n, S=S)
    # log_S 2^t = t/b
    assert d.exact == F(1, 6) * F(2 * a - 10, b)
    assert d.exact == F(1, 3) * F(a, b) - F(1, 3) * F(5, b)
    assert r.exact == F(1, 6) * F(a, b) - F(1, 2) * F(1, b)


def test_generic_calculators():
    S = 4
    assert rounds_from_query_complexity(2 * S ** 6, S=S).exact == 1
    assert rounds_from_approx_certificate(2 * S ** 12, S=S).exact == 2
    assert rounds_from_query_complexity(2 * S ** 6, S=S).rounds == 1
    assert rounds_from_query_complexity(2 * S ** 6 + 2, S=S).rounds == 2


def test_exact_log():
    assert exact_log(8, 4) == F(3, 2)
    assert exact_log(F(1, 32), 2) == -5
    assert exact_log(3, 2) is None
    with pytest.raises(InvalidArgument):
        exact_log(0, 2)


def test_argument_checks():
    with pytest.raises(InvalidArgument):
        det_round_lower_bound(16)
    with pytest.raises(InvalidArgument):
        det_round_lower_bound(16, S=4, eps=F(1, 2))
    with pytest.raises(InvalidArgument):
        rand_round_lower_bound(16, eps=F(3, 2))
    with pytest.raises(InvalidArgument):
        det_round_lower_bound(16, S=1)
