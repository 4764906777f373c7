"""Acceptance gate: every headline claim, at its pinned tolerance.

Each test runs one criterion from the acceptance module and prints a
PASS/FAIL line with the measured detail, so ``pytest -v -s`` doubles as the
reproduction report.  The command line ``searchgame repro`` runs the same
rows.
"""

import pytest

from searchgame import acceptance


@pytest.mark.parametrize(
    "key,fn", acceptance.CRITERIA, ids=[key for key, _ in acceptance.CRITERIA]
)
def test_criterion(key, fn):
    row = fn()
    status = "PASS" if row.passed else "FAIL"
    print(f"{status}  {row.key}  [{row.elapsed:.1f}s]  {row.detail}")
    assert row.passed, f"{row.key}: {row.detail}"
