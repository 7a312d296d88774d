import numpy as np
import pytest

from comatch import synth
from comatch.geometry import RelativePose

# acceptance outcomes collected by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def shift_scene():
    return synth.make_shift_scene(3)


@pytest.fixture(scope="session")
def identity_scene():
    return synth.make_planar_scene(
        0, H=64, W=64, pose=RelativePose(np.eye(3), np.zeros(3)), plane=([0.0, 0.0, 1.0], 5.0)
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
