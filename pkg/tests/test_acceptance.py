"""Acceptance criteria 1-10, each printed as one PASS/FAIL line.

Criteria 1-8 run once in a module fixture; criterion 10 runs them a second
time and compares the canonical outputs byte for byte.  The full suite takes
about 1.5 hours on one core (the 100-seed batch dominates); set
BNBLAB_WORKERS to parallelise the batch.
"""

import pytest

from bnblab import checks


@pytest.fixture(scope="module")
def first_pass():
    return checks.deterministic_checks()


def _report(capsys, result):
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail


@pytest.mark.parametrize("number", range(1, 9))
def test_criterion(number, first_pass, capsys):
    results, _ = first_pass
    result = results[number - 1]
    assert result.number == number
    _report(capsys, result)


def test_criterion_9_harness_arithmetic(first_pass, capsys):
    _, outcome = first_pass
    _report(capsys, checks.check_harness_arithmetic(outcome.csv))


def test_criterion_10_determinism(first_pass, capsys):
    first, _ = first_pass
    second, _ = checks.deterministic_checks()
    _report(capsys, checks.check_determinism(first, second))
