import numpy as np
import pytest

from wavetwin.spectral import Grid

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture
def grid():
    return Grid()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


SMALL_CASE = """
[grid]
L = 64
[jonswap]
kp = 4
[enkf]
n_members = 10
[run]
t_max_tp = 2
kernel_snapshots_tp = 0, 1, 2
"""


@pytest.fixture
def small_cfg():
    from wavetwin.config import load_config
    return load_config(text=SMALL_CASE)


@pytest.fixture
def small_cfg_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CASE, encoding="utf-8")
    return path
