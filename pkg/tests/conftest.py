from __future__ import annotations

import numpy as np
import pytest

from whitham.curve import build_curve
from whitham.numerics import Polynomial


@pytest.fixture
def square_curve():
    """``y^2 = 4 x^3 - 4 x`` (square lattice)."""
    return build_curve(Polynomial([0, -4, 0, 4]))


@pytest.fixture
def genus2_curve():
    """``y^2 = x^5 - 1``."""
    return build_curve(Polynomial([-1, 0, 0, 0, 0, 1]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report_criterion():
    """Record and print a ``[PASS]``/``[FAIL]`` line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
