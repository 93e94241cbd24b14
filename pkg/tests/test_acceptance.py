"""Acceptance criteria A1-A11, one test each; every run prints a PASS/FAIL line."""

import pytest

from qshuffle.acceptance import CHECKS, run_check

pytestmark = pytest.mark.acceptance


@pytest.mark.parametrize("criterion", list(CHECKS))
def test_criterion(criterion, capsys):
    result = run_check(criterion)
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, result.measured
