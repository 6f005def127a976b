import cmath
import math

import mpmath
import numpy as np
import pytest

from modunits.elliptic import WeierstrassCurve
from modunits.lseries import (
    BSGS_THRESHOLD,
    InsufficientTerms,
    an_table,
    ap,
    eval_F,
    eval_f,
    eval_f_many,
    tail_bound,
    terms_needed,
)
from oracles import an_oracle, count_points_naive

E11a1 = WeierstrassCurve(0, -1, 1, -10, -20, 11, "11a1")
E37a1 = WeierstrassCurve(0, 0, 1, -1, 0, 37, "37a1")


def test_first_coefficients_11a():
    t = an_table(E11a1, 12)
    assert [t[n] for n in range(1, 13)] == [1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1, -2]


def test_against_naive_oracle_two_curves():
    for E in (E11a1, E37a1):
        t = an_table(E, 300)
        assert list(t.a[1:]) == an_oracle(E.ainvs, E.discriminant, 300)[1:]


def test_bad_prime_values():
    # split multiplicative at 11 for 11a1, additive at 2 for 20a1
    assert ap(E11a1, 11) == 1
    E20 = WeierstrassCurve(0, 1, 0, 4, 4, 20, "20a1")
    assert ap(E20, 2) == 0
    assert ap(E20, 5) == 5 + 1 - count_points_naive(E20.ainvs, 5)


@pytest.mark.parametrize("p", [BSGS_THRESHOLD + 7, 10009])
def test_bsgs_matches_direct_count(p):
    assert ap(E11a1, p) == p + 1 - count_points_naive(E11a1.ainvs, p)
    assert ap(E37a1, p) == p + 1 - count_points_naive(E37a1.ainvs, p)


def test_hasse_bound_large_primes():
    for p in (100003, 1000003):
        assert abs(ap(E37a1, p)) <= 2 * math.isqrt(p) + 2


def test_terms_needed_respects_tail():
    for y in (0.01, 0.1, 1.0):
        for eps in (1e-8, 1e-13, 1e-30):
            M = terms_needed(y, eps)
            assert tail_bound(y, M) < eps
            assert M == 1 or tail_bound(y, M // 2) >= eps or M < 20


def test_insufficient_terms():
    t = an_table(E11a1, 50)
    with pytest.raises(InsufficientTerms):
        eval_f(t, complex(0, 0.001))
    with pytest.raises(ValueError):
        eval_f(t, complex(0.1, -0.1))


def test_truncation_error_within_bound():
    t = an_table(E11a1, 20000)
    z = complex(0.3, 0.05)
    coarse = eval_f(t, z, eps=1e-6)
    fine = eval_f(t, z, eps=1e-14)
    assert abs(coarse.value - fine.value) <= coarse.truncation_bound + 1e-14


def test_derivative_of_F_is_2_pi_i_f():
    t = an_table(E37a1, 5000)
    z, h = complex(0.17, 0.2), 1e-5
    dF = (eval_F(t, z + h) - eval_F(t, z - h)) / (2 * h)
    assert abs(dF - 2j * math.pi * eval_f(t, z).value) < 1e-6


def _gamma0_elements(N):
    for c in (N, 2 * N, 3 * N):
        for d in (1, 2, 3, 5, 7, -1, -4):
            if math.gcd(c, d) == 1:
                a = pow(d, -1, c)
                b = (a * d - 1) // c
                yield a, b, c, d


@pytest.mark.parametrize("E,N", [(E11a1, 11), (E37a1, 37)])
def test_weight_two_modularity(E, N):
    """f(gamma z) = (cz+d)^2 f(z) for gamma in Gamma_0(N): checks coefficients and evaluation together."""
    t = an_table(E, 40000)
    for a, b, c, d in _gamma0_elements(N):
        assert a * d - b * c == 1
        z = complex(-d / c + 0.01, 1 / c)
        gz = (a * z + b) / (c * z + d)
        lhs = eval_f(t, gz).value
        rhs = (c * z + d) ** 2 * eval_f(t, z).value
        assert abs(lhs - rhs) < 1e-8 * max(1, abs(rhs))


def test_high_precision_agrees_with_double():
    t = an_table(E37a1, 5000)
    zs = [complex(0.31, 0.05), complex(-0.4, 0.02)]
    lo = eval_f_many(t, zs, 1e-13, 12)
    with mpmath.workdps(45):
        hi = eval_f_many(t, [mpmath.mpc(z) for z in zs], 1e-30, 30)
    for a, b in zip(lo, hi):
        assert abs(complex(b) - a) < 1e-11
    with mpmath.workdps(45):
        hi2 = eval_f_many(t, [mpmath.mpc(z) for z in zs], 1e-32, 32)
        assert all(abs(x - y) < mpmath.mpf(10) ** -28 for x, y in zip(hi, hi2))
