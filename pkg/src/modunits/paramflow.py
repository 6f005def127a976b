"""Cusp images under the modular parametrization X_1(N) -> E and the set S_E.

The parametrization is taken to be

    phi_E(tau) = integral_0^tau omega_f   mod  Lambda_E,   omega_f = 2 pi i f(z) dz,

i.e. the Manin-type constant c_E is assumed to be 1 (known for N <= 200).
All integrals are computed as genuine path integrals in the upper half plane,
so nothing is reduced modulo a lattice before the final identification.

Class-level numerics (Fricke sign, diamond periods, cusp integrals z_d,
vanishing orders) depend only on the newform and are shared by every curve
of an isogeny class through :class:`ClassPeriods`.
"""

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, wraps
from math import gcd, isqrt
from typing import Optional

import mpmath
import numpy as np

from .arith import divisors, euler_phi, unit_group_generators
from .elliptic import (
    INFINITY,
    PrecisionError,
    _add,
    _dps,
    neg,
    identify_torsion_point,
    period_lattice,
    point_order,
    subgroup_generated,
    torsion_logs,
    torsion_order_of_z,
    torsion_subgroup,
)
from .lseries import DOUBLE_DIGITS, an_table, eval_F_many, eval_f_many, terms_needed
from .modcurve import cusp_strata, diamond_matrix, finiteness_screen, unit_degree_bound


@dataclass(frozen=True)
class Config:
    digits: int = 12
    tol_identify: float = 1e-6
    max_series_terms: int = 2_000_000
    m_max_factor: int = 4
    torsion_cap: int = 16
    stevens_bound: int = 200
    use_fricke: bool = True

    @property
    def eps(self):
        return 10.0 ** -(self.digits + 1)

    @property
    def high_precision(self):
        return self.digits > DOUBLE_DIGITS

    def doubled(self):
        """Twice the digits (hence roughly twice the series length), half the tolerance."""
        return Config(
            self.digits * 2,
            self.tol_identify / 2,
            self.max_series_terms * 2,
            self.m_max_factor,
            self.torsion_cap,
            self.stevens_bound,
            self.use_fricke,
        )


class AnalysisError(RuntimeError):
    """A curve could not be analysed; carries the label for batch reports."""


# --- small numeric helpers shared by both precisions -----------------------------


def _precise(method):
    """Run a method of an object with a ``config`` at that config's working precision."""

    @wraps(method)
    def inner(self, *args, **kwargs):
        with mpmath.workdps(_dps(self.config.digits)):
            return method(self, *args, **kwargs)

    return inner


def _num(x, hp):
    if hp:
        return mpmath.mpc(x)
    return complex(x)


def _conj(z, hp):
    return mpmath.conj(z) if hp else z.conjugate()


def _to_complex(z):
    return complex(z)


def gamma0_reduce(tau, N, search=3):
    """(c, d, a, b) of gamma in Gamma_0(N) with Im(gamma tau) close to maximal.

    Minimises |c tau + d| over the lattice {(c, d) : N | c} by Lagrange
    reduction of the basis (N tau, 1) followed by a small search for a
    primitive vector.
    """
    t = complex(tau)
    v1, k1 = complex(N * t), (N, 0)
    v2, k2 = complex(1.0), (0, 1)
    if abs(v1) < abs(v2):
        v1, v2, k1, k2 = v2, v1, k2, k1
    for _ in range(200):
        mu = round((v1 * v2.conjugate()).real / abs(v2) ** 2)
        if mu == 0:
            break
        v1 = v1 - mu * v2
        k1 = (k1[0] - mu * k2[0], k1[1] - mu * k2[1])
        if abs(v1) < abs(v2):
            v1, v2, k1, k2 = v2, v1, k2, k1
        else:
            break
    best = None
    for i in range(-search, search + 1):
        for j in range(-search, search + 1):
            c = i * k1[0] + j * k2[0]
            d = i * k1[1] + j * k2[1]
            if (c, d) == (0, 0) or gcd(c, d) != 1:
                continue
            size = abs(c * t + d)
            if best is None or size < best[0] - 1e-15:
                best = (size, c, d)
    _, c, d = best
    if c < 0 or (c == 0 and d < 0):
        c, d = -c, -d
    # a d - b c = 1
    if c == 0:
        return 0, 1, 1, 0
    g, x, y = _ext_gcd(d, c)
    a, b = x, -y
    assert a * d - b * c == 1
    return c, d, a, b


def _ext_gcd(a, b):
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


# --- class-level numerics ----------------------------------------------------------


class ClassPeriods:
    """Numerical data of the newform f attached to one isogeny class."""

    def __init__(self, E0, config=None, table=None, table_provider=None, rank=None):
        self.E0 = E0
        self.N = E0.conductor
        self.config = config or Config()
        self.rank = rank
        self._table = table
        self._provider = table_provider
        self._diamond = {}
        self._cusp = {}
        self._order = {}
        self._fourier = {}

    # coefficient table management

    def table_for(self, min_im):
        """A coefficient table long enough for evaluations at Im z >= min_im."""
        M = terms_needed(min_im, self.config.eps)
        if M > self.config.max_series_terms:
            raise PrecisionError(
                f"{self.E0.label}: {M} terms needed at Im z = {min_im:.3g} exceeds "
                f"--max-series-terms {self.config.max_series_terms}"
            )
        if self._table is None or self._table.n_max < M:
            n = max(M, 2 * self._table.n_max if self._table is not None else 2000)
            n = min(n, self.config.max_series_terms)
            if self._provider is not None:
                self._table = self._provider(self.E0, n)
            else:
                self._table = an_table(self.E0, n, label=self.E0.label)
        return self._table

    def F(self, zs):
        zs = list(zs)
        ys = [float(mpmath.im(z)) for z in zs]
        table = self.table_for(min(ys))
        return eval_F_many(table, zs, self.config.eps, self.config.digits)

    def f(self, zs):
        zs = list(zs)
        ys = [float(mpmath.im(z)) for z in zs]
        table = self.table_for(min(ys))
        return eval_f_many(table, zs, self.config.eps, self.config.digits)

    def f_reduced(self, zs):
        """f at arbitrary points, moving each into a good Gamma_0(N) representative first."""
        hp = self.config.high_precision
        moved, factors = [], []
        for z in zs:
            z = _num(z, hp)
            c, d, a, b = gamma0_reduce(z, self.N)
            j = c * z + d
            moved.append((a * z + b) / j)
            factors.append(j ** -2)
        return [v * fac for v, fac in zip(self.f(moved), factors)]

    # Fricke involution

    @cached_property
    @_precise
    def fricke_eigenvalue(self):
        """lambda_N with f(-1/(N z)) = lambda_N N z^2 f(z)."""
        hp = self.config.high_precision
        s = math.sqrt(self.N)
        pts = [_num(complex(0, 1.2) / s, hp), _num(complex(0.31, 0.93) / s, hp)]
        images = [-1 / (self.N * z) for z in pts]
        lhs = self.f(images)
        rhs = self.f(pts)
        ratios = []
        for z, l, r in zip(pts, lhs, rhs):
            denom = self.N * z * z * r
            if abs(denom) < 1e-30:
                raise PrecisionError(f"{self.E0.label}: f vanishes at Fricke test point")
            ratios.append(complex(l / denom))
        lam = 1 if ratios[0].real > 0 else -1
        for ratio in ratios:
            if abs(ratio - lam) > 1e-3:
                raise PrecisionError(f"{self.E0.label}: Fricke eigenvalue residual {abs(ratio - lam):.2e}")
            if abs(ratio - lam) > 1e-6:
                raise PrecisionError(f"{self.E0.label}: Fricke relation holds only to {abs(ratio - lam):.2e}")
        if self.rank is not None and lam != -((-1) ** self.rank):
            raise PrecisionError(f"{self.E0.label}: Fricke sign {lam} contradicts rank parity {self.rank}")
        return lam

    @cached_property
    @_precise
    def omega_0_inf(self):
        """integral_0^{i infinity} omega_f = (lambda_N - 1) F(i / sqrt N)."""
        hp = self.config.high_precision
        z = _num(complex(0, 1 / math.sqrt(self.N)), hp)
        return (self.fricke_eigenvalue - 1) * self.F([z])[0]

    # diamond operators

    @_precise
    def diamond_period(self, alpha):
        """integral_{z0}^{gamma z0} omega_f with gamma = <alpha>, z0 = (-d' + i)/N."""
        alpha %= self.N
        if alpha in self._diamond:
            return self._diamond[alpha]
        hp = self.config.high_precision
        g = diamond_matrix(self.N, alpha)
        if (g.a, g.b, g.c, g.d) == (1, 0, 0, 1):
            value = _num(0, hp)
        else:
            z0 = _num(complex(-g.d, 1) / self.N, hp)
            z1 = (g.a * z0 + g.b) / (g.c * z0 + g.d)
            F0, F1 = self.F([z0, z1])
            value = F1 - F0
        self._diamond[alpha] = value
        return value

    # expansions at the cusp 1/d

    def _width(self, d):
        return self.N // gcd(d * d, self.N)

    @_precise
    def slash_fourier(self, d, height=None):
        """DFT of (f|sigma_d)(x + iY) over one period x in [0, w), sigma_d = (1,0;d,1).

        Returns (Y, w, c) with c[n] ~ b_n exp(-2 pi n Y / w), where b_n are the
        Fourier coefficients of f|sigma_d in q_w = exp(2 pi i tau / w).
        """
        key = (d, height)
        if key in self._fourier:
            return self._fourier[key]
        hp = self.config.high_precision
        w = self._width(d)
        # at local height ~w/4 the whole horocycle stays at Im >~ 1/(d^2 w),
        # and the q_w-expansion converges like exp(-pi n / 2)
        Y = height if height is not None else w / 4.0
        digits = self.config.digits + 2
        K = int(math.ceil(digits * math.log(10) * w / (2 * math.pi * Y))) + 8
        K = 1 << max(4, (K - 1).bit_length())
        if hp:
            Yh = mpmath.mpf(Y)
            xs = [mpmath.mpf(k) * w / K for k in range(K)]
            taus = [mpmath.mpc(x, Yh) for x in xs]
        else:
            taus = [complex(k * w / K, Y) for k in range(K)]
        images = [t / (d * t + 1) for t in taus]
        vals = self.f_reduced(images)
        g = [v / (d * t + 1) ** 2 for v, t in zip(vals, taus)]
        if hp:
            coeffs = []
            with mpmath.workdps(self.config.digits + 10):
                roots = [mpmath.exp(-2j * mpmath.pi * k / K) for k in range(K)]
                for n in range(K):
                    coeffs.append(sum(g[k] * roots[(n * k) % K] for k in range(K)) / K)
        else:
            coeffs = list(np.fft.fft(np.array(g, dtype=complex)) / K)
        result = (Y, w, coeffs)
        self._fourier[key] = result
        return result

    @_precise
    def vanishing_order(self, d):
        """Leading exponent m of f|sigma_d in q_w, i.e. e_{phi_0}(1/d)."""
        d = self._canonical(d)
        if d in self._order:
            return self._order[d]
        if d == self.N or d == 1:
            # leading term q^1 at infinity (a_1 = 1) and at 0 (via the Fricke relation)
            self._order[d] = 1
            return 1
        if self.config.use_fricke and d * d > self.N:
            m = self.vanishing_order(self.N // d)
            self._order[d] = m
            return m
        m = self._leading_index(d)
        self._order[d] = m
        return m

    def _leading_index(self, d):
        Y1, w, c1 = self.slash_fourier(d)
        Y2, _, c2 = self.slash_fourier(d, 1.25 * Y1)
        K = len(c1)
        scale = max(abs(complex(x)) for x in c1) or 1.0
        noise = 10.0 ** -(min(self.config.digits, DOUBLE_DIGITS) - 1) * scale * K
        for n in range(1, K // 2):
            b1 = complex(c1[n]) * math.exp(2 * math.pi * n * Y1 / w)
            b2 = complex(c2[n]) * math.exp(2 * math.pi * n * Y2 / w)
            n1 = noise * math.exp(2 * math.pi * n * Y1 / w)
            n2 = noise * math.exp(2 * math.pi * n * Y2 / w)
            if abs(b1) < 100 * n1 and abs(b2) < 100 * n2:
                continue
            if abs(b1) > 1e4 * n1 and abs(b2) > 1e4 * n2:
                rel = abs(b1 - b2) / max(abs(b1), abs(b2))
                if rel < 1e-3:
                    return n
            raise PrecisionError(
                f"{self.E0.label}: cannot decide coefficient {n} at cusp 1/{d} "
                f"(|b| = {abs(b1):.3g}, {abs(b2):.3g}; noise {n1:.3g})"
            )
        raise PrecisionError(f"{self.E0.label}: no leading coefficient found at cusp 1/{d}")

    def _canonical(self, d):
        if self.N % d:
            raise ValueError(f"{d} does not divide {self.N}")
        return d

    # cusp integrals

    @_precise
    def cusp_integral(self, d, route=None):
        """z_d = integral_0^{1/d} omega_f as a complex number (no lattice reduction).

        route: "direct", "fricke", or None for the configured default.
        """
        d = self._canonical(d)
        if route is None:
            route = "fricke" if self.config.use_fricke and d * d > self.N else "direct"
        key = (d, route)
        if key in self._cusp:
            return self._cusp[key]
        hp = self.config.high_precision
        if d == 1:
            # the cusp 1 is a translate of 0
            value = _num(0, hp)
        elif route == "fricke":
            other = self.cusp_integral(self.N // d)
            value = self.fricke_eigenvalue * (_conj(other, hp) - self.omega_0_inf)
        else:
            Y, w, coeffs = self.slash_fourier(d)
            tau1 = _num(complex(0, Y), hp)
            tau1 = tau1 / (d * tau1 + 1)
            head = self.F([tau1])[0]
            tail = -w * sum(coeffs[n] / n for n in range(1, len(coeffs)))
            value = self.omega_0_inf + head + tail
        self._cusp[key] = value
        return value


# --- per-curve analysis -------------------------------------------------------------


@dataclass(frozen=True)
class ParamContext:
    E: object
    E0: object
    periods: ClassPeriods
    lattice: object
    lattice0: object
    torsion: object
    deg_phi0: int
    config: Config

    @property
    def N(self):
        return self.E.conductor

    @property
    def fricke(self):
        return self.periods.fricke_eigenvalue

    @cached_property
    def logs(self):
        return torsion_logs(self.E, self.lattice, self.torsion)


def make_context(E, E0, deg_phi0, periods=None, config=None, torsion_order=None, rank=None):
    config = config or (periods.config if periods is not None else Config())
    if periods is None:
        periods = ClassPeriods(E0, config, rank=rank)
    if E.conductor != E0.conductor:
        raise ValueError(f"{E.label} and {E0.label} have different conductors")
    T = torsion_subgroup(E, torsion_order)
    if periods.config != config:
        raise ValueError("class periods were computed with a different configuration")
    return ParamContext(
        E, E0, periods, period_lattice(E, config.digits), period_lattice(E0, config.digits), T, deg_phi0, config
    )


def fricke_eigenvalue(ctx):
    return ctx.periods.fricke_eigenvalue


def diamond_period(ctx, alpha):
    return ctx.periods.diamond_period(alpha)


def _identify(ctx, z, what):
    return identify_torsion_point(ctx.E, ctx.lattice, ctx.torsion, z, ctx.config.tol_identify, ctx.logs)


def A_map(ctx, alpha):
    """A(alpha): the rational torsion point by which <alpha> translates phi_E."""
    P = _identify(ctx, ctx.periods.diamond_period(alpha), f"A({alpha})")
    if P is None:
        raise PrecisionError(f"{ctx.E.label}: diamond period for alpha={alpha} is not rational torsion")
    return P


@dataclass(frozen=True)
class ASubgroup:
    generators: tuple  # (alpha, A(alpha)) pairs
    elements: tuple

    @property
    def order(self):
        return len(self.elements)


def compute_A_subgroup(ctx):
    gens = [(alpha, A_map(ctx, alpha)) for alpha in unit_group_generators(ctx.N)]
    elements = subgroup_generated(ctx.E, [P for _, P in gens])
    return ASubgroup(tuple(gens), tuple(elements))


@dataclass(frozen=True)
class CuspImage:
    d: int
    z: complex
    point: Optional[object]
    certificate: int  # smallest m with m z in Lambda_E, 0 if none up to m_max

    @property
    def rational(self):
        return self.point is not None


def cusp_image(ctx, d):
    if ctx.N % d:
        raise ValueError(f"{d} does not divide {ctx.N}")
    z = ctx.periods.cusp_integral(d)
    m_max = ctx.config.m_max_factor * ctx.N
    cert = torsion_order_of_z(ctx.lattice, z, m_max, ctx.config.tol_identify)
    if not cert:
        raise PrecisionError(f"{ctx.E.label}: image of 1/{d} is not torsion of order <= {m_max}")
    P = _identify(ctx, z, f"Q_{d}")
    return CuspImage(d, z, P, cert)


def vanishing_order(ctx, d):
    return ctx.periods.vanishing_order(d)


def _round_checked(x, what, label, tol=1e-3):
    r = round(x)
    if abs(x - r) >= tol:
        raise PrecisionError(f"{label}: {what} = {x!r} is not integral")
    return r


def covolume_ratio(ctx):
    """covol(Lambda_E0) / covol(Lambda_E) as a rational with denominator <= 64."""
    x = float(ctx.lattice0.covolume / ctx.lattice.covolume)
    r = Fraction(x).limit_denominator(64)
    if abs(float(r) - x) > 1e-6 * max(1.0, x):
        raise PrecisionError(f"{ctx.E.label}: covolume ratio {x!r} is not a small rational")
    return r


@dataclass(frozen=True)
class EPResult:
    raw: dict  # P -> sum over strata of e_phi0(1/d) phi(gcd(d, N/d))
    e: dict  # P -> e_P
    deg_phiE: int
    covol_ratio: Fraction


def compute_e_P(ctx, A, images, orders):
    """Accumulate e_P over the strata whose cusp image is rational.

    ``images`` maps d -> CuspImage and ``orders`` maps d -> e_{phi_0}(1/d).
    """
    N = ctx.N
    phiN = euler_phi(N)
    raw = {P: 0 for P in ctx.torsion.elements}
    for d in sorted(images):
        img = images[d]
        if not img.rational:
            continue
        weight = orders[d] * euler_phi(gcd(d, N // d))
        for B in A.elements:
            raw[_add(ctx.E, img.point, B)] += weight
    ratio = covolume_ratio(ctx)
    deg = Fraction(phiN, 2) * ratio * ctx.deg_phi0
    if deg.denominator != 1:
        raise PrecisionError(f"{ctx.E.label}: deg phi_E = {deg} is not an integer")
    e = {}
    for P, s in raw.items():
        v = Fraction(phiN * s, 2 * A.order)
        if v.denominator != 1:
            raise PrecisionError(f"{ctx.E.label}: e_P = {v} is not an integer at {P}")
        if v > deg:
            raise PrecisionError(f"{ctx.E.label}: e_P = {v} exceeds deg phi_E = {deg} at {P}")
        e[P] = int(v)
    return EPResult(raw, e, int(deg), ratio)


def compute_S_E(ctx, A, ep):
    """{P : e_P = deg phi_E}, checked against the equivalent raw-sum test."""
    by_degree = {P for P, v in ep.e.items() if v == ep.deg_phiE}
    threshold = A.order * ep.covol_ratio * ctx.deg_phi0
    by_raw = {P for P, s in ep.raw.items() if s == threshold}
    if by_degree != by_raw:
        raise AnalysisError(f"{ctx.E.label}: the two S_E criteria disagree")
    return sorted(by_degree, key=lambda P: P.sort_key())


def condition_c(E, S):
    """#S >= 3 and some difference of two elements of S has order >= 3."""
    S = list(S)
    if len(S) < 3:
        return False
    for i, P in enumerate(S):
        for Q in S[i + 1 :]:
            n = point_order(E, _add(E, P, neg(E, Q)), 16)
            if n == 0 or n >= 3:
                return True
    return False


@dataclass
class StratumReport:
    d: int
    g: int
    count_X0: int
    count_X1: int
    width: int
    e_phi0: int
    e_phi1: int
    z: complex
    image: Optional[object]
    certificate: int


@dataclass
class CurveAnalysis:
    label: str
    conductor: int
    torsion: object
    A: ASubgroup
    e_P: dict
    deg_phiE: int
    covol_ratio: Fraction
    S_E: list
    condition_c: bool
    verdict: bool
    deg_phi0: int
    fricke: int
    unit_bound: Fraction
    screen: object
    strata: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def S_is_full(self):
        return len(self.S_E) == self.torsion.order


def analyze_curve(E, E0, deg_phi0, periods=None, config=None, torsion_order=None, rank=None):
    """Run the whole pipeline for one curve."""
    ctx = make_context(E, E0, deg_phi0, periods, config, torsion_order, rank)
    return analyze_context(ctx)


def analyze_context(ctx):
    with mpmath.workdps(_dps(ctx.config.digits)):
        return _analyze(ctx)


def _analyze(ctx):
    A = compute_A_subgroup(ctx)
    N = ctx.N
    images, orders, strata = {}, {}, []
    for s in cusp_strata(N):
        img = cusp_image(ctx, s.d)
        images[s.d] = img
        # e_{phi_0} is only needed where the image is rational, but the
        # diagnostics report it for every stratum
        orders[s.d] = ctx.periods.vanishing_order(s.d)
        s = s.with_e_phi0(orders[s.d])
        strata.append(
            StratumReport(
                s.d, s.g, s.count_X0, s.count_X1, s.width, s.e_phi0, s.e_phi1, img.z, img.point, img.certificate
            )
        )
    ep = compute_e_P(ctx, A, images, orders)
    S = compute_S_E(ctx, A, ep)
    cc = condition_c(ctx.E, S)
    notes = []
    if N > ctx.config.stevens_bound:
        notes.append("assumes c_E=1 (N>200)")
    # the certificate bound m_max = m_max_factor * N is heuristic; record when it was needed
    big = [r.d for r in strata if r.certificate > ctx.torsion.order]
    if big:
        notes.append("torsion certificate m>#tors at d=" + ",".join(map(str, big)))
    return CurveAnalysis(
        label=ctx.E.label,
        conductor=N,
        torsion=ctx.torsion,
        A=A,
        e_P=ep.e,
        deg_phiE=ep.deg_phiE,
        covol_ratio=ep.covol_ratio,
        S_E=S,
        condition_c=cc,
        verdict=cc,
        deg_phi0=ctx.deg_phi0,
        fricke=ctx.fricke,
        unit_bound=unit_degree_bound(N),
        screen=finiteness_screen(N, ctx.deg_phi0, ctx.config.torsion_cap),
        strata=strata,
        notes=notes,
    )
