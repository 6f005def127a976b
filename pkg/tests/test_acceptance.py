"""Acceptance criteria, one test per criterion.

Each test records PASS/FAIL in the terminal summary ("acceptance criteria"
section) and prints its own line when run with -s.  Criterion 2 scans
120 < N <= 300 and is marked ``extended``; run it with ``pytest -m extended``.
Running this file directly executes every criterion, extended included.
"""

import functools
import random
import time
from math import gcd

import pytest

from conftest import ACCEPTANCE
from modunits.arith import euler_phi
from modunits.dataio import run_table
from modunits.elliptic import _add, parse_point, period_lattice
from modunits.lseries import an_table
from modunits.modcurve import cusp_strata, finiteness_screen, genus_x1, unit_degree_bound
from modunits.paramflow import Config
from oracles import an_oracle, gamma0_cusps_by_denominator, gamma1_cusps_by_denominator, gamma1_genus

FULL = "E(Q)_tors"

# label -> (torsion structure, S_E), transcribed from the published table
TABLE_1 = {
    "11a3": ("Z/5", FULL),
    "14a1": ("Z/6", ["0", "(9,23)", "(1,-1)", "(2,-5)"]),
    "14a4": ("Z/6", FULL),
    "14a6": ("Z/6", ["0", "(2,-2)", "(2,-1)"]),
    "15a1": ("Z/4 x Z/2", ["0", "(-2,3)", "(-1,0)", "(8,18)"]),
    "15a3": ("Z/4 x Z/2", ["0", "(0,1)", "(1,-1)", "(0,-2)"]),
    "15a8": ("Z/4", FULL),
    "17a4": ("Z/4", FULL),
    "19a3": ("Z/3", FULL),
    "20a1": ("Z/6", FULL),
    "20a2": ("Z/6", FULL),
    "21a1": ("Z/4 x Z/2", ["0", "(-1,-1)", "(-2,1)", "(5,8)"]),
    "24a1": ("Z/4 x Z/2", FULL),
    "24a3": ("Z/4", FULL),
    "24a4": ("Z/4", FULL),
    "26a3": ("Z/3", FULL),
    "27a3": ("Z/3", FULL),
    "27a4": ("Z/3", FULL),
    "30a1": ("Z/6", ["0", "(3,4)", "(-1,0)", "(0,-2)"]),
    "32a1": ("Z/4", FULL),
    "32a4": ("Z/4", FULL),
    "35a3": ("Z/3", FULL),
    "36a1": ("Z/6", FULL),
    "36a2": ("Z/6", FULL),
    "40a3": ("Z/4", FULL),
    "44a1": ("Z/3", FULL),
    "54a3": ("Z/3", FULL),
    "56a1": ("Z/4", FULL),
    "92a1": ("Z/3", FULL),
    "108a1": ("Z/3", FULL),
}

DOUBLED = Config(digits=24, tol_identify=5e-7, max_series_terms=4_000_000)


def record(k, desc):
    """Decorator: run the body, log PASS/FAIL for criterion k, re-raise failures."""

    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            ok = False
            try:
                fn(*args, **kwargs)
                ok = True
            finally:
                ACCEPTANCE[k] = (ok, desc)
                print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {desc}")

        return inner

    return wrap


@record(1, "run_table(max_conductor=120) reproduces the 30 published rows point for point")
def test_criterion_1_table(db):
    t0 = time.perf_counter()
    report = run_table(db, 120)
    elapsed = time.perf_counter() - t0
    assert report.errors == [], report.errors
    got = {r.label: r for r in report.rows}
    assert sorted(got, key=lambda l: db.get(l).sort_key) == list(TABLE_1)
    for label, (structure, S) in TABLE_1.items():
        row = got[label]
        assert row.torsion == structure, label
        if S == FULL:
            assert row.S_E == FULL, label
            assert len(row.points) == db.get(label).torsion_order
        else:
            assert {parse_point(p) for p in row.points} == {parse_point(p) for p in S}, label
    assert elapsed < 30 * 60


@pytest.mark.extended
@record(2, "no verdict-true curve with 120 < N <= 300")
def test_criterion_2_negative_sample(db):
    report = run_table(db, 300, min_conductor=121)
    assert report.errors == [], report.errors
    assert report.rows == [], [r.label for r in report.rows]


@record(3, "49a1: Q_49 = (2,-1) and verdict false")
def test_criterion_3_example_49(analyser):
    a = analyser.analyse("49a1")
    strata = {s.d: s for s in a.strata}
    assert strata[49].image == parse_point("(2,-1)")
    assert not a.verdict


@record(4, "a_n, n <= 1000, on 20 random curves with N <= 1000 equal the naive oracle")
def test_criterion_4_coefficients(db):
    labels = random.Random(20240501).sample(sorted(db.curves), 20)
    for label in labels:
        E = db.get(label).curve()
        table = an_table(E, 1000)
        oracle = an_oracle(E.ainvs, E.discriminant, 1000)
        assert list(table.a[1:]) == oracle[1:], label
        for p in (q for q in range(2, 1001) if E.conductor % q == 0 and all(q % r for r in range(2, q))):
            assert table[p] == oracle[p] and table[p] in (-1, 0, 1), (label, p)


@record(5, "cusp counts and genus of X_1(N) agree with orbit/Riemann-Hurwitz oracles for 5 <= N <= 120")
def test_criterion_5_modular_curves():
    assert (genus_x1(11), genus_x1(13), genus_x1(20)) == (1, 2, 3)
    for N in range(5, 121):
        strata = cusp_strata(N)
        assert {s.d: s.count_X1 for s in strata} == gamma1_cusps_by_denominator(N), N
        assert {s.d: s.count_X0 for s in strata} == gamma0_cusps_by_denominator(N), N
        g, cusps, _ = gamma1_genus(N)
        assert genus_x1(N) == g, N
        assert sum(s.count_X1 for s in strata) == cusps, N


def _check_integrality(db, a):
    E = db.get(a.label).curve()
    N = a.conductor
    # deg phi_E from the floating covolume ratio, before any rounding
    rec0 = db.optimal_curve(db.get(a.label).class_label)
    ratio = float(period_lattice(rec0.curve()).covolume / period_lattice(E).covolume)
    raw = euler_phi(N) / 2 * ratio * a.deg_phi0
    assert abs(raw - a.deg_phiE) < 1e-3, (a.label, raw)
    assert a.covol_ratio.denominator <= 64
    for P, v in a.e_P.items():
        assert 0 <= v <= a.deg_phiE
        for B in a.A.elements:
            assert a.e_P[_add(E, P, B)] == v, (a.label, P, B)
    by_d = {s.d: s for s in a.strata}
    assert by_d[N].e_phi0 == 1
    for s in a.strata:
        assert s.e_phi1 == gcd(s.d, N // s.d) * s.e_phi0


@record(6, "integrality battery on every curve with N <= 120")
def test_criterion_6_integrality(db, analyser):
    results = analyser.upto(120)
    assert len(results) == len(db.labels(120))
    errors = [(label, err) for label, _, err in results if err]
    assert errors == []
    for _, a, _ in results:
        _check_integrality(db, a)


@record(7, "Curves of the published table satisfy deg phi_E <= phi(N) nu(N)/12 and are never screened")
def test_criterion_7_necessary_condition(db, analyser):
    for label in TABLE_1:
        a = analyser.analyse(label)
        N = a.conductor
        assert a.deg_phiE <= unit_degree_bound(N), label
        assert not finiteness_screen(N, db.deg_phi0(db.get(label).class_label)).screened, label


def _discrete(a):
    return (
        frozenset(a.A.elements),
        tuple((s.d, s.image, s.e_phi0) for s in a.strata),
        frozenset(a.S_E),
    )


@record(8, "doubling precision and series length leaves every discrete output unchanged for N <= 120")
def test_criterion_8_precision(db, analyser):
    base = {label: a for label, a, _ in analyser.upto(120)}
    doubled = analyser.upto(120, DOUBLED)
    errors = [(label, err) for label, _, err in doubled if err]
    assert errors == []
    for label, a, _ in doubled:
        assert _discrete(a) == _discrete(base[label]), label


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s", "-m", ""]))
