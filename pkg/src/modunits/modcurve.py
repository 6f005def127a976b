"""Cusp combinatorics of X_0(N) and X_1(N), diamond operators, and the
degree bound phi(N) nu(N) / 12 behind the finiteness screen.

Levels N <= 4 are rejected: no elliptic curve over Q has such a conductor
and the cusp formulas used here need -1 to act freely.
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd
from typing import Optional

from .arith import dedekind_nu, divisors, euler_phi


def _check_level(N):
    if N < 5:
        raise ValueError(f"level {N} < 5 is not supported")


@dataclass(frozen=True)
class CuspStratum:
    """Cusps of denominator d, i.e. a/b with gcd(b, N) = d."""

    N: int
    d: int
    count_X0: int
    count_X1: int
    width: int
    e_phi0: Optional[int] = None

    @property
    def g(self):
        return gcd(self.d, self.N // self.d)

    @property
    def e_phi1(self):
        # ramification of X_1(N) -> X_0(N) at 1/d is gcd(d, N/d)
        return None if self.e_phi0 is None else self.g * self.e_phi0

    def with_e_phi0(self, e):
        return replace(self, e_phi0=e)


def cusp_strata(N):
    _check_level(N)
    phiN = euler_phi(N)
    strata = []
    for d in divisors(N):
        g = gcd(d, N // d)
        c0 = euler_phi(g)
        num = c0 * phiN
        if num % (2 * g):
            raise ArithmeticError(f"non-integral X_1 cusp count at N={N}, d={d}")
        strata.append(CuspStratum(N, d, c0, num // (2 * g), N // gcd(d * d, N)))
    return strata


def num_cusps_X1(N):
    return sum(s.count_X1 for s in cusp_strata(N))


def num_cusps_X0(N):
    return sum(s.count_X0 for s in cusp_strata(N))


def index_gamma1(N):
    """[SL_2(Z) : Gamma_1(N)] = phi(N) nu(N)."""
    return euler_phi(N) * dedekind_nu(N)


def genus_x1(N):
    """Genus from #C_1(N) + 2g - 2 = phi(N) nu(N) / 12 (no elliptic points for N >= 5)."""
    _check_level(N)
    twice = Fraction(index_gamma1(N), 12) - num_cusps_X1(N) + 2
    if twice.denominator != 1 or twice.numerator % 2:
        raise ArithmeticError(f"non-integral genus at N={N}")
    g = twice.numerator // 2
    if g < 0:
        raise ArithmeticError(f"negative genus at N={N}")
    return g


@dataclass(frozen=True)
class DiamondMatrix:
    a: int
    b: int
    c: int
    d: int

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def act(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))


def diamond_matrix(N, alpha):
    """A matrix in Gamma_0(N) realising <alpha>: (a, b; N, d') with d' = alpha mod N."""
    dd = alpha % N
    if gcd(dd, N) != 1:
        raise ValueError(f"{alpha} is not a unit mod {N}")
    if dd == 1:
        return DiamondMatrix(1, 0, 0, 1)
    a = pow(dd, -1, N)
    b, r = divmod(a * dd - 1, N)
    assert r == 0
    return DiamondMatrix(a, b, N, dd)


def unit_degree_bound(N):
    """phi(N) nu(N) / 12: an upper bound for the degree of X_1(N) -> E_1 when a
    non-constant function on E_1 pulls back to a modular unit."""
    _check_level(N)
    return Fraction(index_gamma1(N), 12)


@dataclass(frozen=True)
class ScreenResult:
    N: int
    deg_phi0: int
    screened: bool
    lhs_min: Fraction
    rhs: Fraction


def finiteness_screen(N, deg_phi0, torsion_cap=16):
    """Lower bound deg(phi_1) >= (phi(N)/2) deg(phi_0) / torsion_cap against the
    upper bound phi(N) nu(N) / 12.  ``screened`` means the class cannot be
    parametrized by modular units at level N."""
    if deg_phi0 < 1 or torsion_cap < 1:
        raise ValueError("inputs must be positive")
    lhs = Fraction(euler_phi(N), 2) * deg_phi0 / torsion_cap
    rhs = unit_degree_bound(N)
    return ScreenResult(N, deg_phi0, lhs > rhs, lhs, rhs)
