"""Elliptic curves over Q: exact group law, rational torsion, and the
complex-analytic side (Neron period lattice, Weierstrass functions,
elliptic logarithms, identification of lattice points as torsion points).

Points are exact (``fractions.Fraction`` coordinates).  Complex quantities
are mpmath numbers computed with a guard of extra digits; callers that work
in double precision can pass Python complex values in, mpmath coerces them.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Optional

import mpmath
import numpy as np

from .arith import divisors, factor, is_prime, prime_divisors


class PrecisionError(ArithmeticError):
    """A numerical decision could not be made at the working precision."""


@dataclass(frozen=True)
class WeierstrassCurve:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int = 0
    label: str = ""

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError(f"singular Weierstrass model {self.ainvs}")

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b2(self):
        return self.a1**2 + 4 * self.a2

    @property
    def b4(self):
        return self.a1 * self.a3 + 2 * self.a4

    @property
    def b6(self):
        return self.a3**2 + 4 * self.a6

    @property
    def b8(self):
        a1, a2, a3, a4, a6 = self.ainvs
        return a1**2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3**2 - a4**2

    @property
    def c4(self):
        return self.b2**2 - 24 * self.b4

    @property
    def c6(self):
        return -self.b2**3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2**2 * b8 - 8 * b4**3 - 27 * b6**2 + 9 * b2 * b4 * b6

    def __str__(self):
        return self.label or str(list(self.ainvs))


@dataclass(frozen=True)
class CurvePoint:
    """A rational point; ``x is None`` encodes the point at infinity."""

    x: Optional[Fraction] = None
    y: Optional[Fraction] = None

    @classmethod
    def affine(cls, x, y):
        return cls(Fraction(x), Fraction(y))

    @property
    def is_infinity(self):
        return self.x is None

    def __str__(self):
        if self.is_infinity:
            return "oo"
        return f"({self.x},{self.y})"

    def sort_key(self):
        if self.is_infinity:
            return (0,)
        return (1, self.x, self.y)


INFINITY = CurvePoint()


def parse_point(text):
    """Inverse of ``str(point)``: accepts "oo", "0" or "(x,y)"."""
    text = text.strip().replace(" ", "")
    if text in ("oo", "0", "inf"):
        return INFINITY
    if not (text.startswith("(") and text.endswith(")")):
        raise ValueError(f"bad point {text!r}")
    xs, ys = text[1:-1].split(",")
    return CurvePoint.affine(Fraction(xs), Fraction(ys))


def on_curve(E, P):
    if P.is_infinity:
        return True
    x, y = P.x, P.y
    return y * y + E.a1 * x * y + E.a3 * y == x**3 + E.a2 * x * x + E.a4 * x + E.a6


def neg(E, P):
    if P.is_infinity:
        return P
    return CurvePoint(P.x, -P.y - E.a1 * P.x - E.a3)


def _add(E, P, Q):
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    a1, a2, a3, a4, a6 = E.ainvs
    if P.x == Q.x:
        if P.y + Q.y + a1 * Q.x + a3 == 0:
            return INFINITY
        lam = (3 * P.x**2 + 2 * a2 * P.x + a4 - a1 * P.y) / (2 * P.y + a1 * P.x + a3)
    else:
        lam = (Q.y - P.y) / (Q.x - P.x)
    nu = P.y - lam * P.x
    x3 = lam * lam + a1 * lam - a2 - P.x - Q.x
    y3 = -(lam + a1) * x3 - nu - a3
    return CurvePoint(x3, y3)


def add(E, P, Q):
    """Chord-and-tangent addition; raises if either point is off the curve."""
    for R in (P, Q):
        if not on_curve(E, R):
            raise ValueError(f"{R} is not on {E}")
    return _add(E, P, Q)


def sub(E, P, Q):
    return add(E, P, neg(E, Q))


def mul(E, n, P):
    if not on_curve(E, P):
        raise ValueError(f"{P} is not on {E}")
    if n < 0:
        return mul(E, -n, neg(E, P))
    result, base = INFINITY, P
    while n:
        if n & 1:
            result = _add(E, result, base)
        base = _add(E, base, base)
        n >>= 1
    return result


def point_order(E, P, bound=12):
    """Order of P if it is at most ``bound``, else 0 (treated as infinite)."""
    Q = P
    for n in range(1, bound + 1):
        if Q.is_infinity:
            return n
        Q = _add(E, Q, P)
    return 0


# ---------------------------------------------------------------------------
# Rational torsion


MAZUR_STRUCTURES = [(n,) for n in list(range(1, 11)) + [12]] + [(2, 2 * n) for n in range(1, 5)]


@dataclass(frozen=True)
class TorsionGroup:
    structure: tuple
    generators: tuple
    elements: tuple

    @property
    def order(self):
        return len(self.elements)

    def structure_str(self):
        if len(self.structure) == 1:
            return f"Z/{self.structure[0]}"
        return f"Z/{self.structure[1]} x Z/{self.structure[0]}"


def count_points_mod_p(E, p):
    """#E(F_p) including infinity, for p of good reduction (naive, numpy)."""
    if p == 2:
        a1, a2, a3, a4, a6 = (a % 2 for a in E.ainvs)
        count = 1
        for x in range(2):
            for y in range(2):
                if (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % 2 == 0:
                    count += 1
        return count
    xs = np.arange(p, dtype=np.int64)
    # (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    b2, b4, b6 = E.b2 % p, E.b4 % p, E.b6 % p
    val = (((4 * xs + b2) % p * xs + 2 * b4) % p * xs + b6) % p
    squares = np.zeros(p, dtype=np.int8)
    squares[(xs * xs) % p] = 1
    chi = np.where(val == 0, 0, np.where(squares[val] == 1, 1, -1))
    return int(p + 1 + chi.sum())


def _short_model_points(E):
    """Integral points on Y^2 = X^3 - 27c4 X - 54c6 that pass Lutz-Nagell."""
    A, B = -27 * E.c4, -54 * E.c6
    D = abs(4 * A**3 + 27 * B**2)
    primes = set(prime_divisors(abs(E.discriminant))) | {2, 3}
    fac = []
    rest = D
    for p in sorted(primes):
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        if e:
            fac.append((p, e))
    if rest != 1:
        fac += factor(rest)
    ys = [1]
    for p, e in fac:
        ys = [y * p**k for y in ys for k in range(e // 2 + 1)]
    ys = [0] + ys
    points = []
    for y in ys:
        # integer roots of X^3 + A X + B - y^2
        c = B - y * y
        roots = np.roots([1.0, 0.0, float(A), float(c)])
        seen = set()
        for r in roots:
            if abs(r.imag) > 1e-6 * max(1.0, abs(r.real)):
                continue
            x0 = int(round(r.real))
            for X in range(x0 - 2, x0 + 3):
                if X in seen:
                    continue
                if X**3 + A * X + c == 0:
                    seen.add(X)
                    points.append((X, y))
                    if y:
                        points.append((X, -y))
    return points


def torsion_subgroup(E, expected_order=None):
    """The rational torsion subgroup E(Q)_tors.

    Candidates come from Lutz-Nagell on the integral short model; the group
    order is cross-checked against #E(F_p) at three odd good primes and,
    when given, against ``expected_order`` (a database column).
    """
    b2 = E.b2
    elements = [INFINITY]
    for X, Y in _short_model_points(E):
        x = Fraction(X - 3 * b2, 36)
        y = (Fraction(Y, 108) - E.a1 * x - E.a3) / 2
        P = CurvePoint(x, y)
        if not on_curve(E, P):
            raise ArithmeticError(f"short-model transform failed on {E}")
        if point_order(E, P) and P not in elements:
            elements.append(P)
    n = len(elements)

    bound, count = 0, 0
    disc = E.discriminant
    p = 3
    while count < 3:
        if is_prime(p) and disc % p:
            bound = gcd(bound, count_points_mod_p(E, p))
            count += 1
        p += 2
    if bound % n:
        raise ArithmeticError(f"torsion order {n} of {E} does not divide #E(F_p) gcd {bound}")
    if expected_order is not None and expected_order != n:
        raise ArithmeticError(f"computed torsion order {n} for {E}, database says {expected_order}")

    orders = {P: point_order(E, P) for P in elements}
    top = max(orders, key=lambda P: (orders[P], P.sort_key()))
    if orders[top] == n:
        structure, gens = (n,), (top,) if n > 1 else ()
    else:
        cyc = {INFINITY}
        Q = top
        while not Q.is_infinity:
            cyc.add(Q)
            Q = _add(E, Q, top)
        two = sorted((P for P in elements if orders[P] == 2 and P not in cyc), key=CurvePoint.sort_key)
        structure, gens = (2, n // 2), (top, two[0])
    if structure not in MAZUR_STRUCTURES:
        raise ArithmeticError(f"structure {structure} is not in Mazur's list")
    return TorsionGroup(structure, gens, tuple(sorted(elements, key=CurvePoint.sort_key)))


def subgroup_generated(E, gens):
    """Elements of the subgroup generated by ``gens`` (all torsion)."""
    elements = {INFINITY}
    frontier = [INFINITY]
    while frontier:
        P = frontier.pop()
        for g in gens:
            Q = _add(E, P, g)
            if Q not in elements:
                elements.add(Q)
                frontier.append(Q)
    return sorted(elements, key=CurvePoint.sort_key)


# ---------------------------------------------------------------------------
# Complex side


def _dps(digits):
    return max(30, int(digits) + 15)


@dataclass(frozen=True)
class PeriodLattice:
    """Neron lattice Z*omega1 + Z*omega2 of dx/(2y + a1 x + a3).

    omega1 is the positive real period; Im(omega2/omega1) > 0.
    """

    omega1: object
    omega2: object
    digits: int = 15
    g2: object = field(default=None, repr=False)
    g3: object = field(default=None, repr=False)
    b2: int = field(default=0, repr=False)

    @property
    def covolume(self):
        with mpmath.workdps(_dps(self.digits)):
            return abs(mpmath.im(mpmath.conj(self.omega1) * self.omega2))

    @property
    def tau(self):
        with mpmath.workdps(_dps(self.digits)):
            return self.omega2 / self.omega1

    def coordinates(self, z):
        """Real (s, t) with z = s*omega1 + t*omega2."""
        with mpmath.workdps(_dps(self.digits)):
            z = mpmath.mpc(z)
            w1, w2 = self.omega1, self.omega2
            det = mpmath.im(mpmath.conj(w1) * w2)
            s = mpmath.im(z * mpmath.conj(w2)) / -det
            t = mpmath.im(mpmath.conj(w1) * z) / det
            return s, t

    def reduce(self, z):
        """Representative of z mod the lattice in the fundamental parallelogram."""
        with mpmath.workdps(_dps(self.digits)):
            s, t = self.coordinates(z)
            return (s - mpmath.floor(s)) * self.omega1 + (t - mpmath.floor(t)) * self.omega2

    def distance(self, z1, z2):
        """Distance of z1 - z2 to the lattice in normalized coordinates (max norm)."""
        with mpmath.workdps(_dps(self.digits)):
            s, t = self.coordinates(mpmath.mpc(z1) - mpmath.mpc(z2))
            return float(max(abs(s - mpmath.nint(s)), abs(t - mpmath.nint(t))))

    def reduced_tau(self):
        """omega2/omega1 moved into the standard SL2(Z) fundamental domain."""
        with mpmath.workdps(_dps(self.digits)):
            tau = self.tau
            for _ in range(1000):
                tau -= mpmath.nint(mpmath.re(tau))
                if abs(tau) < 1 - mpmath.mpf(10) ** (-_dps(self.digits) + 5):
                    tau = -1 / tau
                else:
                    break
            return tau


def period_lattice(E, digits=15):
    """AGM computation of the Neron lattice, split by the sign of the discriminant."""
    with mpmath.workdps(_dps(digits)):
        g2 = mpmath.mpf(E.c4) / 12
        g3 = mpmath.mpf(E.c6) / 216
        roots = mpmath.polyroots([4, 0, -g2, -g3], maxsteps=200, extraprec=200)
        pi = mpmath.pi
        if E.discriminant > 0:
            e1, e2, e3 = sorted((mpmath.re(r) for r in roots), reverse=True)
            w1 = pi / mpmath.agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2))
            w2 = mpmath.mpc(0, 1) * pi / mpmath.agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e2 - e3))
        else:
            e1 = mpmath.re(min(roots, key=lambda r: abs(mpmath.im(r))))
            beta = mpmath.sqrt(3 * e1**2 - g2 / 4)
            w1 = 2 * pi / mpmath.agm(2 * mpmath.sqrt(beta), mpmath.sqrt(2 * beta + 3 * e1))
            w2 = -w1 / 2 + mpmath.mpc(0, 1) * pi / mpmath.agm(
                2 * mpmath.sqrt(beta), mpmath.sqrt(2 * beta - 3 * e1)
            )
        return PeriodLattice(mpmath.mpf(w1), mpmath.mpc(w2), digits, g2, g3, E.b2)


def eisenstein_c4_c6(L):
    """(c4, c6) reconstructed from the lattice via E4, E6 q-expansions."""
    with mpmath.workdps(_dps(L.digits)):
        tau = L.tau
        q = mpmath.exp(2j * mpmath.pi * tau)
        e4, e6 = mpmath.mpf(1), mpmath.mpf(1)
        qn = mpmath.mpc(1)
        for n in range(1, 400):
            qn *= q
            if abs(qn) < mpmath.mpf(10) ** (-_dps(L.digits) - 5):
                break
            s3 = sum(d**3 for d in divisors(n))
            s5 = sum(d**5 for d in divisors(n))
            e4 += 240 * s3 * qn
            e6 -= 504 * s5 * qn
        scale = 2 * mpmath.pi / L.omega1
        return scale**4 * e4, scale**6 * e6


def weierstrass_p(L, z):
    """(wp(z), wp'(z)) for the lattice, via the q-expansion in u = e^{2 pi i z/omega1}."""
    with mpmath.workdps(_dps(L.digits)):
        w1 = L.omega1
        tau = L.tau
        s, t = L.coordinates(z)
        # shift so the imaginary part of z/omega1 is in [-Im(tau)/2, Im(tau)/2]
        t0 = mpmath.nint(t)
        s0 = mpmath.nint(s)
        zz = (mpmath.mpc(z) - s0 * w1 - t0 * L.omega2) / w1
        tpi = 2j * mpmath.pi
        q = mpmath.exp(tpi * tau)
        u = mpmath.exp(tpi * zz)
        p = mpmath.mpf(1) / 12 + u / (1 - u) ** 2
        dp = u * (1 + u) / (1 - u) ** 3
        qn = mpmath.mpc(1)
        eps = mpmath.mpf(10) ** (-_dps(L.digits) - 5)
        for n in range(1, 2000):
            qn *= q
            a, b = qn * u, qn / u
            p += a / (1 - a) ** 2 + b / (1 - b) ** 2 - 2 * qn / (1 - qn) ** 2
            dp += a * (1 + a) / (1 - a) ** 3 - b * (1 + b) / (1 - b) ** 3
            if abs(qn) * (1 + abs(u) + abs(1 / u)) < eps:
                break
        return p * tpi**2 / w1**2, dp * tpi**3 / w1**3


def point_from_z(E, L, z):
    """Complex point (x, y) of the model at elliptic parameter z (None near 0)."""
    with mpmath.workdps(_dps(L.digits)):
        s, t = L.coordinates(z)
        if max(abs(s - mpmath.nint(s)), abs(t - mpmath.nint(t))) < mpmath.mpf(10) ** (-L.digits):
            return None
        p, dp = weierstrass_p(L, z)
        x = p - mpmath.mpf(E.b2) / 12
        y = (dp - E.a1 * x - E.a3) / 2
        return x, y


def elliptic_log(E, L, P):
    """Elliptic logarithm of a rational point, reduced into the fundamental cell.

    A Carlson R_F evaluation gives +-log(P); Newton on wp(z) = xi polishes it
    and the sign is fixed by matching wp'(z) = 2y + a1 x + a3.
    """
    if P.is_infinity:
        return mpmath.mpc(0)
    if not on_curve(E, P):
        raise ValueError(f"{P} is not on {E}")
    with mpmath.workdps(_dps(L.digits)):
        xi = mpmath.mpf(P.x.numerator) / P.x.denominator + mpmath.mpf(E.b2) / 12
        Y = P.y * 2 + E.a1 * P.x + E.a3
        Yv = mpmath.mpf(Y.numerator) / Y.denominator
        roots = mpmath.polyroots([4, 0, -L.g2, -L.g3], maxsteps=200, extraprec=200)
        w1, w2 = L.omega1, L.omega2
        if Y == 0:
            halves = [w1 / 2, w2 / 2, (w1 + w2) / 2]
            return L.reduce(min(halves, key=lambda h: abs(weierstrass_p(L, h)[0] - xi)))
        candidates = []
        try:
            candidates.append(mpmath.elliprf(*(xi - r for r in roots)))
        except (ValueError, ZeroDivisionError):
            pass
        # coarse grid as a fallback for points on the bounded real component
        for i in range(1, 8):
            for j in range(8):
                candidates.append(i * w1 / 8 + j * w2 / 8)
        tol = mpmath.mpf(10) ** (-_dps(L.digits) + 8)
        best = None
        for z in candidates:
            for _ in range(60):
                p, dp = weierstrass_p(L, z)
                if dp == 0:
                    break
                step = (p - xi) / dp
                z -= step
                if abs(step) < tol * (1 + abs(z)):
                    break
            p, dp = weierstrass_p(L, z)
            if abs(p - xi) > 1e-8 * (1 + abs(xi)):
                continue
            if abs(dp + Yv) < abs(dp - Yv):
                z = -z
                dp = -dp
            err = abs(dp - Yv) / (1 + abs(Yv))
            if best is None or err < best[0]:
                best = (err, z)
            if err < 1e-8:
                break
        if best is None or best[0] > 1e-6:
            raise PrecisionError(f"elliptic log of {P} on {E} did not converge")
        return L.reduce(best[1])


def torsion_logs(E, L, T):
    """Elliptic logarithms of all elements of a torsion group (cached by caller)."""
    return [(P, elliptic_log(E, L, P)) for P in T.elements]


def identify_torsion_point(E, L, T, z, tol=1e-6, logs=None):
    """The torsion point whose logarithm is within ``tol`` of z mod the lattice.

    Distances are measured in lattice coordinates.  Returns None if nothing
    matches; two matches mean the tolerance is too coarse for the precision.
    """
    if logs is None:
        logs = torsion_logs(E, L, T)
    hits = [(L.distance(z, w), P) for P, w in logs]
    close = [h for h in hits if h[0] < tol]
    if len(close) > 1:
        raise PrecisionError(f"ambiguous torsion identification on {E}: {close}")
    return close[0][1] if close else None


def torsion_order_of_z(L, z, m_max, tol=1e-6):
    """Smallest m <= m_max with m*z in the lattice (within tol), else 0."""
    s, t = L.coordinates(z)
    for m in range(1, m_max + 1):
        ms, mt = m * s, m * t
        if max(abs(ms - mpmath.nint(ms)), abs(mt - mpmath.nint(mt))) < tol:
            return m
    return 0
