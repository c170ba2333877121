import numpy as np
import pytest

from jfsdsp.params import SystemConfig, validate


@pytest.fixture
def config():
    return SystemConfig()


@pytest.fixture
def consts(config):
    return validate(config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def qam16(rng, n, n_pol=None):
    """Random unit-power 16QAM symbols."""
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    shape = (n,) if n_pol is None else (n, n_pol)
    return (rng.choice(levels, shape) + 1j * rng.choice(levels, shape)) / np.sqrt(10)


def rel_l2(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_log(request):
    """Record one verdict line per acceptance criterion for the terminal summary."""
    log = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(number, passed, detail):
        log[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(log[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
