import numpy as np
import pytest

from cqdyn.model import OscillatorConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    # cheap config: everything runs in well under a second
    return OscillatorConfig(lam=0.05, zeta1=2.0, zeta2=1.0, n_max=14)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (a + a.conj().T)


def random_state(rng, d1, d2):
    z = rng.normal(size=(d1, d2)) + 1j * rng.normal(size=(d1, d2))
    return z / np.linalg.norm(z)


# ---------------------------------------------------------------- acceptance report
# Tests marked criterion(n) record a one-line verdict with record_property;
# the verdicts are printed together at the end of the run.

_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    n = props.get("criterion")
    if n is None or (report.when != "call" and not report.failed and not report.skipped):
        return
    line = props.get("acceptance")
    if line is None:
        if report.skipped:
            line = f"SKIP criterion {n}: not run"
        else:
            line = f"FAIL criterion {n}: {report.longrepr.reprcrash.message}"
    elif report.failed and line.startswith("PASS"):
        line = f"FAIL criterion {n}: {report.longrepr.reprcrash.message}"
    _verdicts[n] = line


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        terminalreporter.write_line(_verdicts[n])
