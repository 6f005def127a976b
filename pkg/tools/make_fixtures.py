"""Regenerate the bundled Cremona-format data files.

allcurves rows are copied from the SQLite export of Cremona's
allcurves.00000-09999 that ships in the ``sage_data_elliptic_curves`` wheel.
Cremona's alldegphi file is not in that export, so the modular degree of
each Gamma_0-optimal curve is recomputed with PARI's ``ellmoddegree``.

Needs cypari2 (e.g. from the passagemath-pari wheel); not a runtime
dependency of the package.

    python tools/make_fixtures.py path/to/cremona_mini.db src/modunits/data 1000
"""

import re
import sqlite3
import sys
from pathlib import Path

import cypari2

OPTIMAL_EXCEPTIONS = {"990h": 3}


def class_key(label):
    m = re.fullmatch(r"(\d+)([a-z]+)(\d*)", label)
    n, cls, num = m.groups()
    # Cremona class letters: a..z, ba..bz, ... (base-26 with 'a' = 0)
    code = 0
    for ch in cls:
        code = 26 * code + (ord(ch) - 97)
    return int(n), len(cls), code, int(num or 0)


def main(db, outdir, max_n):
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9)
    con = sqlite3.connect(db)
    rows = con.execute(
        "select c.curve, c.class, c.tors, c.eqn, k.rank, k.conductor "
        "from t_curve c join t_class k on c.class = k.class where k.conductor <= ?",
        (max_n,),
    ).fetchall()
    rows.sort(key=lambda r: class_key(r[0]))
    outdir = Path(outdir)
    suffix = f"00001-{max_n:05d}"
    with open(outdir / f"allcurves.{suffix}", "w") as fc, open(outdir / f"alldegphi.{suffix}", "w") as fd:
        for curve, cls, tors, eqn, rank, N in rows:
            num = int(curve[len(cls):])
            letters = cls[len(str(N)):]
            fc.write(f"{N} {letters} {num} {eqn} {rank} {tors}\n")
            if num == OPTIMAL_EXCEPTIONS.get(cls, 1):
                deg = pari(f"ellmoddegree(ellinit({eqn}))")
                fd.write(f"{N} {letters} {num} {eqn} {deg}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2], int(sys.argv[3]))
