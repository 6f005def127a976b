import random
import shutil

import numpy as np
import pytest

from modunits.dataio import (
    CoefficientCache,
    DatabaseError,
    PACKAGE_DATA,
    UnknownLabel,
    load_database,
    load_table,
    parse_alldegphi,
    parse_allcurves,
    run_table,
    save_table,
)
from modunits.lseries import an_table


def test_parse_allcurves_example():
    r = parse_allcurves("11 a 1 [0,-1,1,-10,-20] 0 5")
    assert (r.conductor, r.iso, r.number, r.ainvs, r.rank, r.torsion_order) == (11, "a", 1, (0, -1, 1, -10, -20), 0, 5)
    assert r.label == "11a1" and r.class_label == "11a"


def test_parse_torsion_field_matches_computation():
    from modunits.elliptic import torsion_subgroup

    r = parse_allcurves("11 a 3 [0,-1,1,0,0] 0 5")
    assert torsion_subgroup(r.curve()).order == r.torsion_order


@pytest.mark.parametrize(
    "line",
    [
        "11 a x [0,-1,1,0,0] 0 5",
        "11 a 1 [0,-1,1,0] 0 5",
        "11 a 1 [0,-1,1,0,0 0 5",
        "11 a 1 [0,0,0,0,0] 0 1",
        "11 A 1 [0,-1,1,0,0] 0 5",
        "11 a 1 [0,-1,1,0,0] 0",
        "11 a 1 [0,-1,1,0,0] 0 0",
    ],
)
def test_parse_allcurves_errors(line):
    with pytest.raises(DatabaseError):
        parse_allcurves(line, 7)


def test_parse_error_mentions_line_number():
    with pytest.raises(DatabaseError, match="line 42"):
        parse_allcurves("11 a x [0,-1,1,0,0] 0 5", 42)


def test_parse_alldegphi():
    assert parse_alldegphi("11 a 1 [0,-1,1,-10,-20] 1").deg_phi0 == 1
    with pytest.raises(DatabaseError):
        parse_alldegphi("11 a 1 [0,-1,1,-10,-20] 0")


def test_roundtrip_on_whole_fixture():
    for name, parser in [("allcurves.00001-01000", parse_allcurves), ("alldegphi.00001-01000", parse_alldegphi)]:
        for lineno, line in enumerate((PACKAGE_DATA / name).read_text().splitlines(), 1):
            rec = parser(line, lineno)
            assert rec.to_line() == line
            assert parser(rec.to_line()) == rec


def test_lookup(db):
    assert db.get("14a4").torsion_order == 6
    assert len(db.classes["11a"]) == 3
    assert db.optimal_curve("990h").label == "990h3"
    assert db.deg_phi0("11a") == 1
    with pytest.raises(UnknownLabel):
        db.get("nosuch1")


def _copy_db(tmp_path):
    d = tmp_path / "data"
    shutil.copytree(PACKAGE_DATA, d, ignore=shutil.ignore_patterns("cache"))
    return d


def test_label_mismatch_is_load_error(tmp_path):
    d = _copy_db(tmp_path)
    p = d / "alldegphi.00001-01000"
    lines = p.read_text().splitlines()
    lines[0] = "11 a 1 [0,-1,1,-10,-21] 1"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatabaseError):
        load_database(d)


def test_duplicate_label_is_load_error(tmp_path):
    d = _copy_db(tmp_path)
    p = d / "allcurves.00001-01000"
    p.write_text(p.read_text() + "11 a 1 [0,-1,1,-10,-20] 0 5\n")
    with pytest.raises(DatabaseError, match="duplicate"):
        load_database(d)


def test_missing_files(tmp_path):
    with pytest.raises(DatabaseError):
        load_database(tmp_path)


def test_comments_and_env_override(tmp_path, monkeypatch):
    d = _copy_db(tmp_path)
    p = d / "allcurves.00001-01000"
    p.write_text("# comment line\n" + p.read_text())
    monkeypatch.setenv("MODUNITS_DATA", str(d))
    db2 = load_database("/nonexistent")
    assert db2.source == d and "11a1" in db2.curves


def test_optimal_exception_file(tmp_path):
    exc = tmp_path / "exc"
    exc.write_text("990h 3\n")
    assert load_database(None, exc).optimal["990h"] == 3
    exc.write_text("990h 1\n")
    with pytest.raises(DatabaseError):
        load_database(None, exc)


def test_cache_roundtrip_random_labels(db, tmp_path):
    cache = CoefficientCache(tmp_path)
    labels = random.Random(11).sample(sorted(db.degphi), 10)
    for c in labels:
        E0 = db.optimal_curve(c).curve()
        fresh = an_table(E0, 3000, label=E0.label)
        cache.get(E0, 3000)
        reloaded = load_table(tmp_path / f"{E0.label}.an")
        assert reloaded == fresh
        # served from disk on the next request, also for shorter lengths
        assert cache.get(E0, 1000).n_max == 3000


def test_cache_rejects_garbage(tmp_path):
    p = tmp_path / "x.an"
    p.write_bytes(b"nonsense\n1234")
    with pytest.raises(DatabaseError):
        load_table(p)
    t = an_table(load_database().get("11a1").curve(), 50)
    save_table(t, p)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(DatabaseError):
        load_table(p)


def test_run_table_at_11(db):
    report = run_table(db, 11)
    assert [r.label for r in report.rows] == ["11a3"]
    assert report.errors == []


def test_run_table_small_conductor_rejected(db):
    with pytest.raises(ValueError):
        run_table(db, 10)


def test_run_table_deterministic_across_jobs(db):
    a = run_table(db, 30, jobs=1)
    b = run_table(db, 30, jobs=2)
    c = run_table(db, 30, jobs=1)
    assert a.to_tsv() == b.to_tsv() == c.to_tsv()
    assert a.to_json() == b.to_json()
