import csv
import json
import os

import mpmath as mp
import pytest

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "data")


def load_derived():
    with open(os.path.join(DATA, "derived_values.json")) as fh:
        return json.load(fh)


def load_bessel_grid():
    """Rows (nu, x, J, Y, Jp, Yp) with the reference values as mpf."""
    rows = []
    with open(os.path.join(DATA, "bessel_oracle_grid.csv")) as fh:
        for r in csv.DictReader(fh):
            rows.append((float(r["nu"]), float(r["x"]), mp.mpf(r["J"]), mp.mpf(r["Y"]), mp.mpf(r["Jp"]),
                         mp.mpf(r["Yp"])))
    return rows


@pytest.fixture(scope="session")
def derived():
    return load_derived()


@pytest.fixture(scope="session")
def bessel_grid():
    return load_bessel_grid()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=str):
        terminalreporter.write_line(results[key])
