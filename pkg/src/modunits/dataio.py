"""Cremona-format tables, the coefficient cache, and batch reports.

Two text files are read: ``allcurves.*`` with rows

    N class number [a1,a2,a3,a4,a6] rank torsion_order

and ``alldegphi.*`` with one row per isogeny class,

    N class number [a1,a2,a3,a4,a6] deg_phi0

where ``number`` is the Gamma_0-optimal curve of the class.
"""

import json
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .elliptic import WeierstrassCurve
from .lseries import CoefficientTable, an_table
from .paramflow import ClassPeriods, Config, analyze_curve

log = logging.getLogger(__name__)

ENV_DATA_DIR = "MODUNITS_DATA"
PACKAGE_DATA = Path(__file__).resolve().parent / "data"
CACHE_FORMAT = 1

_AINVS = re.compile(r"^\[(-?\d+),(-?\d+),(-?\d+),(-?\d+),(-?\d+)\]$")
_CLASS = re.compile(r"^[a-z]+$")


class DatabaseError(ValueError):
    pass


class UnknownLabel(KeyError):
    pass


def _class_sort_key(iso):
    # Cremona class codes: a..z, ba..bz, ... (base-26 with a = 0)
    v = 0
    for ch in iso:
        v = 26 * v + ord(ch) - 97
    return (len(iso), v)


def split_label(label):
    m = re.fullmatch(r"(\d+)([a-z]+)(\d*)", label)
    if not m:
        raise UnknownLabel(label)
    N, iso, num = m.groups()
    return int(N), iso, int(num) if num else None


@dataclass(frozen=True)
class CurveRecord:
    conductor: int
    iso: str
    number: int
    ainvs: tuple
    rank: int
    torsion_order: int

    @property
    def label(self):
        return f"{self.conductor}{self.iso}{self.number}"

    @property
    def class_label(self):
        return f"{self.conductor}{self.iso}"

    @property
    def sort_key(self):
        return (self.conductor, _class_sort_key(self.iso), self.number)

    def curve(self):
        return WeierstrassCurve(*self.ainvs, conductor=self.conductor, label=self.label)

    def to_line(self):
        a = ",".join(str(x) for x in self.ainvs)
        return f"{self.conductor} {self.iso} {self.number} [{a}] {self.rank} {self.torsion_order}"


@dataclass(frozen=True)
class DegPhiRecord:
    conductor: int
    iso: str
    number: int
    ainvs: tuple
    deg_phi0: int

    @property
    def label(self):
        return f"{self.conductor}{self.iso}{self.number}"

    @property
    def class_label(self):
        return f"{self.conductor}{self.iso}"

    def to_line(self):
        a = ",".join(str(x) for x in self.ainvs)
        return f"{self.conductor} {self.iso} {self.number} [{a}] {self.deg_phi0}"


def _int(text, what, lineno):
    if not re.fullmatch(r"-?\d+", text):
        raise DatabaseError(f"line {lineno}: {what} {text!r} is not an integer")
    return int(text)


def _common(fields, lineno, ncols):
    where = f"line {lineno}" if lineno is not None else "record"
    if len(fields) != ncols:
        raise DatabaseError(f"{where}: expected {ncols} fields, got {len(fields)}")
    N = _int(fields[0], "conductor", lineno)
    iso = fields[1]
    if not _CLASS.match(iso):
        raise DatabaseError(f"{where}: bad isogeny class {iso!r}")
    num = _int(fields[2], "curve number", lineno)
    m = _AINVS.match(fields[3])
    if not m:
        raise DatabaseError(f"{where}: malformed a-invariants {fields[3]!r}")
    ainvs = tuple(int(x) for x in m.groups())
    if N < 1 or num < 1:
        raise DatabaseError(f"{where}: conductor and curve number must be positive")
    try:
        WeierstrassCurve(*ainvs)
    except ValueError as exc:
        raise DatabaseError(f"{where}: {exc}") from None
    return N, iso, num, ainvs


def parse_allcurves(line, lineno=None):
    fields = line.split()
    N, iso, num, ainvs = _common(fields, lineno, 6)
    rank = _int(fields[4], "rank", lineno)
    tors = _int(fields[5], "torsion order", lineno)
    if rank < 0 or tors < 1:
        raise DatabaseError(f"line {lineno}: invalid rank or torsion order")
    return CurveRecord(N, iso, num, ainvs, rank, tors)


def parse_alldegphi(line, lineno=None):
    fields = line.split()
    N, iso, num, ainvs = _common(fields, lineno, 5)
    deg = _int(fields[4], "degree", lineno)
    if deg < 1:
        raise DatabaseError(f"line {lineno}: modular degree must be positive, got {deg}")
    return DegPhiRecord(N, iso, num, ainvs, deg)


def _records(path, parser):
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield parser(line, lineno)


def read_optimal_exceptions(path):
    """Lines "<class> <number>", e.g. "990h 3"."""
    out = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise DatabaseError(f"{path}:{lineno}: expected '<class> <number>'")
            out[parts[0]] = int(parts[1])
    return out


@dataclass
class Database:
    curves: dict  # label -> CurveRecord
    classes: dict  # class label -> [CurveRecord] in curve-number order
    degphi: dict  # class label -> DegPhiRecord
    optimal: dict  # class label -> curve number of the Gamma_0-optimal curve
    source: Optional[Path] = None

    def get(self, label):
        try:
            return self.curves[label]
        except KeyError:
            raise UnknownLabel(label) from None

    def optimal_curve(self, class_label):
        if class_label not in self.classes:
            raise UnknownLabel(class_label)
        return self.curves[f"{class_label}{self.optimal[class_label]}"]

    def deg_phi0(self, class_label):
        if class_label not in self.degphi:
            raise DatabaseError(f"no modular degree for class {class_label}")
        return self.degphi[class_label].deg_phi0

    def labels(self, max_conductor=None, min_conductor=1):
        recs = [r for r in self.curves.values() if r.conductor >= min_conductor]
        if max_conductor is not None:
            recs = [r for r in recs if r.conductor <= max_conductor]
        return [r.label for r in sorted(recs, key=lambda r: r.sort_key)]

    def class_labels(self, max_conductor=None):
        out = [c for c, members in self.classes.items() if max_conductor is None or members[0].conductor <= max_conductor]
        return sorted(out, key=lambda c: self.classes[c][0].sort_key)


def resolve_data_dir(data_dir=None):
    env = os.environ.get(ENV_DATA_DIR)
    if env:
        return Path(env)
    if data_dir:
        return Path(data_dir)
    return PACKAGE_DATA


def load_database(data_dir=None, exceptions=None):
    """Read every allcurves.* and alldegphi.* file in the data directory.

    ``exceptions`` is a mapping or a path to an exceptions file; by default the
    ``optimal_exceptions`` file of the data directory is used when present.
    """
    root = resolve_data_dir(data_dir)
    curve_files = sorted(root.glob("allcurves.*"))
    degphi_files = sorted(root.glob("alldegphi.*"))
    if not curve_files:
        raise DatabaseError(f"no allcurves.* file in {root}")
    if not degphi_files:
        raise DatabaseError(f"no alldegphi.* file in {root}")
    if exceptions is None and (root / "optimal_exceptions").exists():
        exceptions = root / "optimal_exceptions"
    if isinstance(exceptions, (str, Path)):
        exceptions = read_optimal_exceptions(exceptions)
    exceptions = dict(exceptions or {})

    curves, classes = {}, {}
    for path in curve_files:
        for rec in _records(path, parse_allcurves):
            if rec.label in curves:
                raise DatabaseError(f"{path.name}: duplicate label {rec.label}")
            curves[rec.label] = rec
            classes.setdefault(rec.class_label, []).append(rec)
    for members in classes.values():
        members.sort(key=lambda r: r.number)

    optimal = {c: exceptions.get(c, 1) for c in classes}
    degphi = {}
    for path in degphi_files:
        for rec in _records(path, parse_alldegphi):
            other = curves.get(rec.label)
            if other is None:
                raise DatabaseError(f"{path.name}: {rec.label} is not in allcurves")
            if other.ainvs != rec.ainvs:
                raise DatabaseError(f"{path.name}: a-invariants of {rec.label} disagree with allcurves")
            if rec.class_label in degphi:
                raise DatabaseError(f"{path.name}: duplicate class {rec.class_label}")
            if rec.number != optimal[rec.class_label]:
                raise DatabaseError(
                    f"{path.name}: degree given for {rec.label} but the optimal curve of "
                    f"{rec.class_label} is number {optimal[rec.class_label]}"
                )
            degphi[rec.class_label] = rec
    return Database(curves, classes, degphi, optimal, root)


# --- coefficient cache ---------------------------------------------------------------


def cache_path(cache_dir, label):
    return Path(cache_dir) / f"{label}.an"


def save_table(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"modunits-an v{CACHE_FORMAT} label={table.label} n_max={table.n_max} dtype=<i8\n"
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.asarray(table.a, dtype="<i8").tobytes())
    os.replace(tmp, path)


def load_table(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        body = fh.read()
    if len(header) != 5 or header[0] != "modunits-an" or header[1] != f"v{CACHE_FORMAT}":
        raise DatabaseError(f"{path}: not a coefficient cache file (format v{CACHE_FORMAT})")
    meta = dict(kv.split("=", 1) for kv in header[2:])
    n_max = int(meta["n_max"])
    a = np.frombuffer(body, dtype=meta["dtype"]).astype(np.int64)
    if len(a) != n_max + 1:
        raise DatabaseError(f"{path}: expected {n_max + 1} coefficients, found {len(a)}")
    return CoefficientTable(meta["label"], n_max, a)


class CoefficientCache:
    """Disk-backed a_n tables, one file per Gamma_0-optimal curve label."""

    def __init__(self, cache_dir, write=True):
        self.dir = Path(cache_dir)
        self.write = write

    def __call__(self, E, n_max):
        return self.get(E, n_max)

    def get(self, E, n_max):
        path = cache_path(self.dir, E.label)
        if path.exists():
            try:
                table = load_table(path)
                if table.n_max >= n_max and table.label == E.label:
                    return table
            except (DatabaseError, OSError, ValueError) as exc:
                log.warning("ignoring unreadable cache file %s: %s", path, exc)
        table = an_table(E, n_max, label=E.label)
        if self.write:
            try:
                save_table(table, path)
            except OSError as exc:
                log.warning("could not write %s: %s", path, exc)
        return table


# --- batch reports ---------------------------------------------------------------


def format_point_set(points, torsion):
    if len(points) == torsion.order:
        return "E(Q)_tors"
    return "{" + ", ".join("0" if p.is_infinity else str(p).replace(",", ", ") for p in points) + "}"


def analysis_to_dict(a):
    return {
        "label": a.label,
        "conductor": a.conductor,
        "torsion": a.torsion.structure_str(),
        "torsion_points": [str(P) for P in sorted(a.torsion.elements, key=lambda P: P.sort_key())],
        "A_E": [str(P) for P in sorted(a.A.elements, key=lambda P: P.sort_key())],
        "A_generators": {str(alpha): str(P) for alpha, P in a.A.generators},
        "fricke_eigenvalue": a.fricke,
        "deg_phi0": a.deg_phi0,
        "covolume_ratio": str(a.covol_ratio),
        "deg_phiE": a.deg_phiE,
        "e_P": {str(P): v for P, v in sorted(a.e_P.items(), key=lambda kv: kv[0].sort_key())},
        "S_E": [str(P) for P in a.S_E],
        "S_E_is_full_torsion": a.S_is_full,
        "condition_c": a.condition_c,
        "verdict": a.verdict,
        "unit_degree_bound": str(a.unit_bound),
        "screened": a.screen.screened,
        "strata": [
            {
                "d": s.d,
                "gcd": s.g,
                "cusps_X0": s.count_X0,
                "cusps_X1": s.count_X1,
                "width": s.width,
                "e_phi0": s.e_phi0,
                "e_phi1": s.e_phi1,
                "z_d": [float(complex(s.z).real), float(complex(s.z).imag)],
                "Q_d": None if s.image is None else str(s.image),
                "rational": s.image is not None,
                "torsion_certificate": s.certificate,
            }
            for s in a.strata
        ],
        "notes": list(a.notes),
    }


@dataclass
class TableRow:
    label: str
    torsion: str
    S_E: str
    A_order: int
    deg_phiE: int
    notes: str
    verdict: bool = True
    points: list = field(default_factory=list)

    def tsv(self):
        return "\t".join([self.label, self.torsion, self.S_E, str(self.A_order), str(self.deg_phiE), self.notes])


TSV_HEADER = "label\ttorsion\tS_E\t#A_E\tdeg_phiE\tnotes"


@dataclass
class TableReport:
    rows: list
    errors: list  # (label, message)
    analysed: int

    def to_tsv(self):
        return "\n".join([TSV_HEADER] + [r.tsv() for r in self.rows]) + "\n"

    def errors_tsv(self):
        return "".join(f"{label}\t{msg}\n" for label, msg in self.errors)

    def to_json(self):
        doc = {
            "version": __version__,
            "analysed": self.analysed,
            "rows": [
                {
                    "label": r.label,
                    "torsion": r.torsion,
                    "S_E": r.points,
                    "S_E_display": r.S_E,
                    "A_E_order": r.A_order,
                    "deg_phiE": r.deg_phiE,
                    "notes": r.notes,
                }
                for r in self.rows
            ],
            "errors": [{"label": label, "error": msg} for label, msg in self.errors],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _row(a):
    return TableRow(
        a.label,
        a.torsion.structure_str(),
        format_point_set(a.S_E, a.torsion),
        a.A.order,
        a.deg_phiE,
        "; ".join(a.notes),
        a.verdict,
        [str(P) for P in a.S_E],
    )


def analyse_class(db, class_label, config, cache=None, labels=None):
    """Analyse the curves of one class, sharing the class-level numerics.

    Returns a list of (label, CurveAnalysis or None, error message or None).
    """
    rec0 = db.optimal_curve(class_label)
    E0 = rec0.curve()
    out = []
    try:
        periods = ClassPeriods(E0, config, table_provider=cache, rank=rec0.rank)
        deg0 = db.deg_phi0(class_label)
    except Exception as exc:  # reported per curve below
        return [(r.label, None, f"{type(exc).__name__}: {exc}") for r in db.classes[class_label]]
    for rec in db.classes[class_label]:
        if labels is not None and rec.label not in labels:
            continue
        try:
            a = analyze_curve(rec.curve(), E0, deg0, periods, config, rec.torsion_order)
            out.append((rec.label, a, None))
        except Exception as exc:
            out.append((rec.label, None, f"{type(exc).__name__}: {exc}"))
    return out


def _worker(args):
    data_dir, exceptions, class_label, config, cache_dir = args
    db = load_database(data_dir, exceptions)
    cache = CoefficientCache(cache_dir) if cache_dir else None
    return [(label, None if a is None else _row(a), err) for label, a, err in analyse_class(db, class_label, config, cache)]


def run_table(db, max_conductor, jobs=1, config=None, cache_dir=None, min_conductor=1, progress=None):
    """Rows for the curves with verdict true, sorted by (N, class, number)."""
    if max_conductor < 11:
        raise ValueError("max_conductor must be at least 11")
    config = config or Config()
    classes = [
        c for c in db.class_labels(max_conductor) if db.classes[c][0].conductor >= min_conductor
    ]
    results = []
    if jobs <= 1:
        cache = CoefficientCache(cache_dir) if cache_dir else None
        for c in classes:
            results.extend((label, None if a is None else _row(a), err) for label, a, err in analyse_class(db, c, config, cache))
            if progress:
                progress(c)
    else:
        exceptions = dict(db.optimal)
        tasks = [(db.source, exceptions, c, config, cache_dir) for c in classes]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for c, part in zip(classes, pool.map(_worker, tasks)):
                results.extend(part)
                if progress:
                    progress(c)
    order = {label: db.get(label).sort_key for label, _, _ in results}
    results.sort(key=lambda t: order[t[0]])
    rows = [row for _, row, _ in results if row is not None and row.verdict]
    errors = [(label, err) for label, _, err in results if err is not None]
    return TableReport(rows, errors, len(results))

