import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modunits.dataio import analyse_class, load_database  # noqa: E402
from modunits.paramflow import ClassPeriods, Config  # noqa: E402

# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def db():
    return load_database()


class Analyser:
    """Session-wide memo of class numerics and curve analyses per configuration."""

    def __init__(self, db):
        self.db = db
        self._periods = {}
        self._results = {}

    def periods(self, class_label, config=Config()):
        key = (class_label, config)
        if key not in self._periods:
            rec0 = self.db.optimal_curve(class_label)
            self._periods[key] = ClassPeriods(rec0.curve(), config, rank=rec0.rank)
        return self._periods[key]

    def context_parts(self, label, config=Config()):
        rec = self.db.get(label)
        E0 = self.db.optimal_curve(rec.class_label).curve()
        return rec.curve(), E0, self.db.deg_phi0(rec.class_label), self.periods(rec.class_label, config), rec

    def analyse_class(self, class_label, config=Config()):
        key = (class_label, config)
        if key not in self._results:
            self._results[key] = analyse_class(self.db, class_label, config)
        return self._results[key]

    def analyse(self, label, config=Config()):
        rec = self.db.get(label)
        for lab, a, err in self.analyse_class(rec.class_label, config):
            if lab == label:
                if err:
                    raise AssertionError(f"{label}: {err}")
                return a
        raise KeyError(label)

    def upto(self, max_conductor, config=Config(), min_conductor=1):
        out = []
        for c in self.db.class_labels(max_conductor):
            if self.db.classes[c][0].conductor >= min_conductor:
                out.extend(self.analyse_class(c, config))
        return out


@pytest.fixture(scope="session")
def analyser(db):
    return Analyser(db)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, desc = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {desc}")
