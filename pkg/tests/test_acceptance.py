"""The acceptance gate: one test per headline criterion, exact verdicts.

Every criterion prints its own pass/fail line; the shared context reuses
the expensive builds (operads, complexes, the derivatives report).
"""

import pytest

from opbar.verify import CRITERIA, VerifyContext, run_criterion

MAX_ARITY = 5


@pytest.fixture(scope="module")
def ctx():
    return VerifyContext(MAX_ARITY)


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(ctx, number):
    result = run_criterion(number, ctx)
    print(result.line())
    assert result.passed, result.line()
