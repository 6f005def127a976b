import json

import pytest

from modunits.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_json(capsys):
    code, out, _ = run(capsys, "analyze", "14a1", "--json", "--no-cache")
    assert code == 0
    doc = json.loads(out)
    assert set(doc["S_E"]) == {"oo", "(9,23)", "(1,-1)", "(2,-5)"}
    assert doc["verdict"] is True


def test_analyze_text(capsys):
    code, out, _ = run(capsys, "analyze", "49a1", "--no-cache")
    assert code == 0
    assert "(2,-1)" in out and "verdict          no" in out


def test_bound(capsys):
    assert run(capsys, "bound", "--level", "11")[:2] == (0, "10\n")


def test_cusps(capsys):
    code, out, _ = run(capsys, "cusps", "--level", "20")
    assert code == 0 and "genus X_1(N) = 3" in out


def test_unknown_label(capsys):
    code, _, err = run(capsys, "analyze", "nosuch1", "--no-cache")
    assert code != 0 and "usage" in err


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["table", "--bogus"])
    assert exc.value.code != 0


def test_table_to_file(tmp_path, capsys):
    out = tmp_path / "t.tsv"
    code, _, _ = run(capsys, "table", "--max-conductor", "15", "--out", str(out), "--no-cache")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("label\ttorsion")
    assert [l.split("\t")[0] for l in lines[1:]] == ["11a3", "14a1", "14a4", "14a6", "15a1", "15a3", "15a8"]


def test_screen(capsys):
    code, out, _ = run(capsys, "screen", "--max-conductor", "120")
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines()[1:]]
    assert rows[0][0] == "11a"
    assert all(r[-1] in ("0", "1") for r in rows)


def test_cache_build(tmp_path, capsys, monkeypatch):
    import shutil

    from modunits.dataio import PACKAGE_DATA

    d = tmp_path / "data"
    shutil.copytree(PACKAGE_DATA, d, ignore=shutil.ignore_patterns("cache"))
    code, out, _ = run(capsys, "cache", "--build", "--max-n", "500", "--data-dir", str(d), "11a3", "37a1")
    assert code == 0
    assert out.split() == ["11a1", "500", "37a1", "500"]
    assert (d / "cache" / "11a1.an").exists()
