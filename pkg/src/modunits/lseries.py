"""Fourier coefficients of the newform attached to E and evaluation of

    f(z) = sum a_n q^n    and    F(z) = sum a_n/n q^n,   q = exp(2 pi i z),

with explicit truncation bounds.  F is the primitive of 2 pi i f(z) dz that
vanishes at i*infinity, so the integral of omega_f from z1 to z2 is
F(z2) - F(z1).
"""

import math
import random
from dataclasses import dataclass, field

import gmpy2
import mpmath
import numpy as np

from .arith import is_prime, primes_up_to
from .elliptic import count_points_mod_p

# above this, a_p comes from baby-step giant-step instead of a full count
BSGS_THRESHOLD = 10_000

# above this many decimal digits the series are summed with gmpy2 Horner
DOUBLE_DIGITS = 15


class InsufficientTerms(ValueError):
    """The coefficient table is too short for the requested accuracy."""


def ap(E, p):
    """Trace of Frobenius a_p = p + 1 - #E~(F_p).

    For p dividing the discriminant the count includes the singular point
    exactly once, so this equals p - #E~_ns(F_p) in {-1, 0, 1}.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p >= BSGS_THRESHOLD and E.discriminant % p:
        return p + 1 - _order_bsgs(E, p)
    return p + 1 - count_points_mod_p(E, p)


def ap_naive(E, p):
    """O(p^2) double loop over F_p x F_p; an independent oracle for tests."""
    a1, a2, a3, a4, a6 = (a % p for a in E.ainvs)
    count = 1
    for x in range(p):
        rhs = (x**3 + a2 * x * x + a4 * x + a6) % p
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - rhs) % p == 0:
                count += 1
    return p + 1 - count


# --- baby-step giant-step on y^2 = x^3 + A x + B over F_p, p > 3 -------------


def _sqrt_mod(a, p):
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _ec_add(P, Q, A, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def _ec_mul(n, P, A, p):
    R = None
    if n < 0:
        n, P = -n, (P[0], -P[1] % p)
    while n:
        if n & 1:
            R = _ec_add(R, P, A, p)
        P = _ec_add(P, P, A, p)
        n >>= 1
    return R


def _point_order_multiples(P, A, p, lo, hi):
    """All m in [lo, hi] with m*P = 0."""
    width = hi - lo
    s = math.isqrt(width) + 1
    baby = {}
    R = None
    for j in range(s):
        key = R
        baby.setdefault(key, []).append(j)
        R = _ec_add(R, P, A, p)
    # giant steps: lo*P + i*s*P ... want (lo + i*s + j) P = 0  <=>  -(lo + i s) P = j P
    step = _ec_mul(s, P, A, p)
    neg_step = None if step is None else (step[0], -step[1] % p)
    G = _ec_mul(lo, P, A, p)
    G = None if G is None else (G[0], -G[1] % p)
    found = []
    for i in range(s + 1):
        for j in baby.get(G, ()):
            m = lo + i * s + j
            if lo <= m <= hi:
                found.append(m)
        G = _ec_add(G, neg_step, A, p)
    return sorted(set(found))


def _order_bsgs(E, p):
    """#E(F_p) for p > 3 of good reduction via point orders in the Hasse interval."""
    A = (-27 * E.c4) % p
    B = (-54 * E.c6) % p
    lo = p + 1 - 2 * math.isqrt(p) - 2
    hi = p + 1 + 2 * math.isqrt(p) + 2
    rng = random.Random(p)
    for twist in (1, None):
        if twist is None:
            # quadratic twist by a non-residue u: y^2 = x^3 + A u^2 x + B u^3
            u = 2
            while pow(u, (p - 1) // 2, p) != p - 1:
                u += 1
            At, Bt = A * u * u % p, B * u * u * u % p
        else:
            At, Bt = A, B
        cands = None
        for _ in range(12):
            x = rng.randrange(p)
            rhs = (x * x * x + At * x + Bt) % p
            if pow(rhs, (p - 1) // 2, p) != 1:
                continue
            P = (x, _sqrt_mod(rhs, p))
            ms = _point_order_multiples(P, At, p, lo, hi)
            cands = set(ms) if cands is None else cands & set(ms)
            if cands is not None and len(cands) == 1:
                n = cands.pop()
                return n if twist else 2 * (p + 1) - n
    raise ArithmeticError(f"BSGS point count failed at p={p}")


# --- coefficient tables -----------------------------------------------------


@dataclass
class CoefficientTable:
    label: str
    n_max: int
    a: np.ndarray  # a[0] unused, a[n] for 1 <= n <= n_max
    _hp: dict = field(default_factory=dict, repr=False, compare=False)

    def __eq__(self, other):
        return (
            isinstance(other, CoefficientTable)
            and self.label == other.label
            and self.n_max == other.n_max
            and np.array_equal(self.a, other.a)
        )

    def __getitem__(self, n):
        return int(self.a[n])


def an_table(E, n_max, label=None, bad_primes=None):
    """a_n for n <= n_max from a_p by Hecke multiplicativity."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    disc = E.discriminant
    a = np.zeros(n_max + 1, dtype=np.int64)
    a[1] = 1
    spf = np.zeros(n_max + 1, dtype=np.int64)  # smallest prime factor
    for p in primes_up_to(n_max):
        sl = spf[p :: p]
        sl[sl == 0] = p
        ap_ = ap(E, p)
        bad = disc % p == 0 if bad_primes is None else p in bad_primes
        a[p] = ap_
        prev2, prev, q = 1, ap_, p
        while q * p <= n_max:
            q *= p
            cur = ap_ * prev if bad else ap_ * prev - p * prev2
            a[q] = cur
            prev2, prev = prev, cur
    for n in range(2, n_max + 1):
        p = int(spf[n])
        if p == n:
            continue
        m, q = n, 1
        while m % p == 0:
            m //= p
            q *= p
        if m > 1:
            a[n] = a[q] * a[m]
    return CoefficientTable(label if label is not None else E.label, n_max, a)


def extend_table(E, table, n_max):
    if n_max <= table.n_max:
        return table
    return an_table(E, n_max, label=table.label)


# --- evaluation ----------------------------------------------------------------


@dataclass(frozen=True)
class ModularFormValue:
    z: complex
    value: complex
    truncation_bound: float
    terms: int = 0


def terms_needed(y, eps, weight_n=True):
    """Smallest M with sum_{n>M} n r^n < eps (or sum r^n if not weight_n), r = e^{-2 pi y}."""
    if y <= 0:
        raise ValueError("need Im z > 0")
    r = math.exp(-2 * math.pi * y)
    lr = -2 * math.pi * y
    M = max(1, int(math.log(eps) / lr) if eps < 1 else 1)
    while True:
        # log of the tail bound, computed in logs to avoid underflow
        if weight_n:
            tail = (M + 1) * lr + math.log(max((M + 1) - M * r, 1e-300)) - 2 * math.log1p(-r)
        else:
            tail = (M + 1) * lr - math.log1p(-r)
        if tail < math.log(eps):
            return M
        M = int(M * 1.1) + 1


def tail_bound(y, M, weight_n=True):
    r = math.exp(-2 * math.pi * y)
    if weight_n:
        return r ** (M + 1) * ((M + 1) - M * r) / (1 - r) ** 2
    return r ** (M + 1) / (1 - r)


def _imag(z):
    return float(mpmath.im(z)) if isinstance(z, mpmath.mpc) else float(np.imag(z))


def _hp_coeffs(table, kind, bits, M):
    key = (kind, bits)
    cached = table._hp.get(key)
    if cached is None or len(cached) < M:
        ctx = gmpy2.context(precision=bits)
        with ctx:
            if kind == "f":
                cached = [gmpy2.mpfr(int(table.a[n])) for n in range(1, table.n_max + 1)]
            else:
                cached = [gmpy2.mpfr(int(table.a[n])) / n for n in range(1, table.n_max + 1)]
        table._hp[key] = cached
    return cached


def _mpf_to_gmpy(x):
    sign, man, exp, _ = x._mpf_
    if not man:
        return gmpy2.mpfr(0)
    v = gmpy2.mpfr(man) * gmpy2.mpfr(2) ** exp
    return -v if sign else v


def _to_gmpy(z, bits):
    z = mpmath.mpc(z)
    with gmpy2.context(precision=bits):
        return gmpy2.mpc(_mpf_to_gmpy(z.real), _mpf_to_gmpy(z.imag))


def _from_gmpy(w):
    def conv(x):
        if x == 0:
            return mpmath.mpf(0)
        m, e = x.as_mantissa_exp()
        return mpmath.mpf((int(m), int(e)))

    return mpmath.mpc(conv(w.real), conv(w.imag))


def _series(table, kind, zs, M, digits):
    """sum_{n<=M} c_n e^{2 pi i n z} for each z, c_n = a_n (kind f) or a_n/n (kind F)."""
    if digits <= DOUBLE_DIGITS:
        zs = np.asarray([complex(z) for z in zs])
        n = np.arange(1, M + 1)
        c = table.a[1 : M + 1].astype(float)
        if kind == "F":
            c = c / n
        # reduce Re z mod 1 first to keep the phases small
        zr = zs - np.round(zs.real)
        out = np.empty(len(zs), dtype=complex)
        chunk = max(1, 4_000_000 // max(M, 1))
        for i in range(0, len(zs), chunk):
            block = zr[i : i + chunk]
            out[i : i + chunk] = np.exp(2j * np.pi * np.outer(block, n)) @ c
        return list(out)
    bits = int(digits * 3.33) + 24
    coeffs = _hp_coeffs(table, kind, bits, M)[:M]
    results = []
    with mpmath.workdps(digits + 10):
        for z in zs:
            z = mpmath.mpc(z)
            z -= mpmath.nint(z.real)
            q = _to_gmpy(mpmath.exp(2j * mpmath.pi * z), bits)
            with gmpy2.context(precision=bits):
                s = gmpy2.mpc(0)
                for cn in reversed(coeffs):
                    s = (s + cn) * q
            results.append(_from_gmpy(s))
    return results


def _eval(table, kind, zs, eps, digits):
    ys = [_imag(z) for z in zs]
    if min(ys) <= 0:
        raise ValueError("evaluation point must lie in the upper half plane")
    weight_n = kind == "f"
    M = max(terms_needed(y, eps, weight_n) for y in ys)
    if M > table.n_max:
        raise InsufficientTerms(
            f"{table.label}: need {M} coefficients at Im z = {min(ys):.3g}, table has {table.n_max}"
        )
    vals = _series(table, kind, zs, M, digits)
    return [ModularFormValue(z, v, tail_bound(y, M, weight_n), M) for z, v, y in zip(zs, vals, ys)]


def eval_f(table, z, eps=1e-12, digits=DOUBLE_DIGITS):
    """f(z) truncated where sum_{n>M} n|q|^n < eps (uses |a_n| <= n)."""
    return _eval(table, "f", [z], eps, digits)[0]


def eval_F(table, z, eps=1e-12, digits=DOUBLE_DIGITS):
    """F(z) = sum a_n/n q^n truncated where sum_{n>M} |q|^n < eps."""
    return _eval(table, "F", [z], eps, digits)[0].value


def eval_f_many(table, zs, eps=1e-12, digits=DOUBLE_DIGITS):
    return [v.value for v in _eval(table, "f", list(zs), eps, digits)]


def eval_F_many(table, zs, eps=1e-12, digits=DOUBLE_DIGITS):
    return [v.value for v in _eval(table, "F", list(zs), eps, digits)]
