import sys
from pathlib import Path

import pytest

from localexpert.ingest import load_dataset
from localexpert.model import Dataset, Place, Review, User

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
MALLS = FIXTURES / "malls"
MALLS_SVM = FIXTURES / "malls_svm"


def make_dataset(users, places=(), reviews=(), symmetrize=True) -> Dataset:
    """Shorthand builder.

    users: ``(id, city, contacts)``; places: ``(id, city, category)`` or with a
    name in front; reviews: ``(user, place, label)``.
    """
    us = [User(u, f"user {u}", city, frozenset(contacts)) for u, city, contacts in users]
    ps = []
    for p in places:
        if len(p) == 3:
            pid, city, cat = p
            ps.append(Place(pid, pid, city, cat))
        else:
            pid, name, city, cat = p
            ps.append(Place(pid, name, city, cat))
    rs = [Review(u, p, "", label) for u, p, label in reviews]
    return Dataset.from_records(us, ps, rs, symmetrize=symmetrize)


@pytest.fixture(scope="session")
def malls():
    return load_dataset(MALLS)


@pytest.fixture(scope="session")
def malls_svm():
    return load_dataset(MALLS_SVM)


@pytest.fixture(scope="session")
def full_scale_dir(tmp_path_factory):
    from localexpert.synth import SynthParams, generate

    return generate(SynthParams(seed=7), tmp_path_factory.mktemp("full_scale"))


@pytest.fixture(scope="session")
def full_scale(full_scale_dir):
    return load_dataset(full_scale_dir)


def pytest_collection_modifyitems(items):
    for item in items:
        if {"full_scale", "full_scale_dir"} & set(getattr(item, "fixturenames", ())):
            item.add_marker(pytest.mark.slow)


# -- acceptance summary -----------------------------------------------------

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.failed and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], "error"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
