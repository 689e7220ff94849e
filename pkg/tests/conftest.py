import numpy as np
import pytest

from seabeam import ChannelSet, UncertaintyModel


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def small_instance(seed, k1=2, k2=2, m1=3, m2=3, rel_radius=0.1):
    """Random unit-noise instance with channel-ball radii ``rel_radius * ||h||``."""
    rng = np.random.default_rng(seed)
    h1 = crandn(rng, k1, m1) * 3.0
    h2 = crandn(rng, k2, m2) * 3.0
    f1 = crandn(rng, k1, m2) * 0.3
    ch = ChannelSet(h1, h2, f1, 1.0, 1.0)
    unc = UncertaintyModel.from_radii(rel_radius * np.linalg.norm(h1, axis=1),
                                      rel_radius * np.linalg.norm(h2, axis=1))
    return ch, unc


@pytest.fixture
def instance():
    return small_instance(0)


# --- acceptance summary -----------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    rep = outcome.get_result()
    if rep.when == "call" or rep.failed:
        number, title = mark.args
        entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "ran": False})
        entry["ran"] = True
        entry["passed"] &= rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        c = _CRITERIA[number]
        status = "PASS" if c["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {c['title']}")
