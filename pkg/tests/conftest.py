import numpy as np
import pytest

from mmlab.agents import ActionGrid
from mmlab.env import EpisodeNoise, ModelParams

_ACCEPTANCE = []


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def grid():
    return ActionGrid()


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(criterion: str, passed: bool, detail: str):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")


def fixed_noise(uniforms, shocks):
    """Noise block with hand-chosen fill uniforms and price shocks."""
    return EpisodeNoise(np.asarray(uniforms, dtype=float).reshape(-1, 2), np.asarray(shocks, dtype=float))
