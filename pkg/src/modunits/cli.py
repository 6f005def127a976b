"""Command-line interface: ``modunits <command> ...``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataio import (
    CoefficientCache,
    DatabaseError,
    UnknownLabel,
    analyse_class,
    analysis_to_dict,
    format_point_set,
    load_database,
    resolve_data_dir,
    run_table,
)
from .elliptic import PrecisionError
from .modcurve import cusp_strata, genus_x1, unit_degree_bound, finiteness_screen
from .paramflow import Config

log = logging.getLogger("modunits")


def _config(args):
    return Config(
        digits=args.precision_digits,
        tol_identify=args.tol_identify,
        max_series_terms=int(args.max_series_terms),
    )


def _db(args):
    return load_database(args.data_dir, args.optimal_exceptions)


def _cache(args):
    if args.no_cache:
        return None
    return CoefficientCache(resolve_data_dir(args.data_dir) / "cache")


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _describe(a):
    lines = [
        f"{a.label}  (conductor {a.conductor})",
        f"  torsion          {a.torsion.structure_str()}: " + " ".join(str(P) for P in sorted(a.torsion.elements, key=lambda P: P.sort_key())),
        f"  Fricke sign      {a.fricke:+d}",
        f"  A_E              order {a.A.order}: " + " ".join(str(P) for P in sorted(a.A.elements, key=lambda P: P.sort_key())),
        f"  deg phi_0        {a.deg_phi0}",
        f"  covol ratio      {a.covol_ratio}",
        f"  deg phi_E        {a.deg_phiE}   (unit bound {a.unit_bound})",
        "  strata:",
        "      d   gcd  #X0  #X1  width  e0  e1  Q_d",
    ]
    for s in a.strata:
        q = str(s.image) if s.image is not None else f"not rational (order {s.certificate})"
        lines.append(f"    {s.d:4d} {s.g:4d} {s.count_X0:4d} {s.count_X1:4d} {s.width:6d} {s.e_phi0:3d} {s.e_phi1:3d}  {q}")
    lines.append("  e_P:")
    for P, v in sorted(a.e_P.items(), key=lambda kv: kv[0].sort_key()):
        lines.append(f"    {str(P):>14}  {v}")
    lines.append(f"  S_E              {format_point_set(a.S_E, a.torsion)}")
    lines.append(f"  condition (c)    {a.condition_c}")
    lines.append(f"  verdict          {'parametrized by modular units' if a.verdict else 'no'}")
    for note in a.notes:
        lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args):
    db = _db(args)
    rec = db.get(args.label)
    results = analyse_class(db, rec.class_label, _config(args), _cache(args), labels={rec.label})
    label, a, err = results[0]
    if err is not None:
        print(f"error: {label}: {err}", file=sys.stderr)
        return 2
    if args.json:
        _write(json.dumps(analysis_to_dict(a), indent=2) + "\n", args.out)
    else:
        _write(_describe(a), args.out)
    return 0


def cmd_table(args):
    db = _db(args)
    cache_dir = None if args.no_cache else str(resolve_data_dir(args.data_dir) / "cache")
    progress = (lambda c: log.info("done %s", c)) if args.verbose else None
    report = run_table(
        db, args.max_conductor, args.jobs, _config(args), cache_dir, args.min_conductor, progress
    )
    text = report.to_json() if args.format == "json" else report.to_tsv()
    _write(text, args.out)
    if report.errors:
        target = Path(args.out).with_suffix(".errors.tsv") if args.out and args.out != "-" else None
        if target is not None:
            target.write_text(report.errors_tsv())
        else:
            sys.stderr.write(report.errors_tsv())
        print(f"{len(report.errors)} curve(s) failed; see error listing", file=sys.stderr)
        return 1
    return 0


def cmd_screen(args):
    db = _db(args)
    lines = ["class\tN\tdeg_phi0\tlhs_min\tunit_bound\tscreened"]
    for c in db.class_labels(args.max_conductor):
        if c not in db.degphi:
            continue
        N = db.classes[c][0].conductor
        r = finiteness_screen(N, db.deg_phi0(c), args.torsion_cap)
        lines.append(f"{c}\t{N}\t{r.deg_phi0}\t{r.lhs_min}\t{r.rhs}\t{int(r.screened)}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_cusps(args):
    N = args.level
    lines = [f"# level {N}: genus X_1(N) = {genus_x1(N)}", "d\tgcd\tcusps_X0\tcusps_X1\twidth"]
    for s in cusp_strata(N):
        lines.append(f"{s.d}\t{s.g}\t{s.count_X0}\t{s.count_X1}\t{s.width}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_bound(args):
    _write(f"{unit_degree_bound(args.level)}\n", args.out)
    return 0


def cmd_cache(args):
    if not args.build:
        print("nothing to do (use --build)", file=sys.stderr)
        return 2
    db = _db(args)
    cache = CoefficientCache(resolve_data_dir(args.data_dir) / "cache")
    for label in args.labels:
        rec = db.get(label)
        E0 = db.optimal_curve(rec.class_label).curve()
        table = cache.get(E0, args.max_n)
        print(f"{E0.label}\t{table.n_max}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-dir", help="directory with allcurves.* and alldegphi.* (env MODUNITS_DATA wins)")
    common.add_argument("--optimal-exceptions", help="file of '<class> <number>' lines naming non-first optimal curves")
    common.add_argument("--precision-digits", type=int, default=12)
    common.add_argument("--tol-identify", type=float, default=1e-6)
    common.add_argument("--max-series-terms", type=float, default=2e6)
    common.add_argument("--no-cache", action="store_true", help="do not read or write the coefficient cache")
    common.add_argument("--out", "-o", help="output file (default stdout)")
    common.add_argument("--verbose", "-v", action="store_true")

    p = argparse.ArgumentParser(prog="modunits", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("analyze", parents=[common], help="full analysis of one curve")
    s.add_argument("label")
    s.add_argument("--json", action="store_true", help="machine-readable output")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("table", parents=[common], help="all curves with verdict true")
    s.add_argument("--max-conductor", type=int, required=True)
    s.add_argument("--min-conductor", type=int, default=1)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--format", choices=["tsv", "json"], default="tsv")
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("screen", parents=[common], help="finiteness screen over all classes")
    s.add_argument("--max-conductor", type=int, required=True)
    s.add_argument("--torsion-cap", type=int, default=16)
    s.set_defaults(func=cmd_screen)

    s = sub.add_parser("cusps", parents=[common], help="cusp strata of X_0(N) and X_1(N)")
    s.add_argument("--level", type=int, required=True)
    s.set_defaults(func=cmd_cusps)

    s = sub.add_parser("bound", parents=[common], help="phi(N) nu(N) / 12")
    s.add_argument("--level", type=int, required=True)
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("cache", parents=[common], help="precompute coefficient tables")
    s.add_argument("--build", action="store_true")
    s.add_argument("--max-n", type=int, required=True)
    s.add_argument("labels", nargs="+")
    s.set_defaults(func=cmd_cache)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UnknownLabel as exc:
        parser.print_usage(sys.stderr)
        print(f"error: unknown label {exc.args[0]}", file=sys.stderr)
        return 2
    except (DatabaseError, ValueError, PrecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
