"""Acceptance suite: one pass/fail line per criterion.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly
(``python tests/test_acceptance.py [--quick]``). A failing criterion is a
real failure; tolerances live in pitlab.acceptance and are not relaxed here.
"""
import sys

import pytest

from pitlab.acceptance import CRITERIA, crg_regression, run_suite


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1), ids=lambda k: f"criterion_{k:02d}")
def test_criterion(number, capsys):
    res = CRITERIA[number - 1](False)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()


def test_crg_regression_bound(capsys):
    reg = crg_regression(False)
    with capsys.disabled():
        print(f"\n[{'PASS' if reg['passed'] else 'FAIL'}] regression bad-fraction trend: {reg}")
    assert reg["passed"]


if __name__ == "__main__":
    results = run_suite(quick="--quick" in sys.argv)
    for r in results:
        print(r.line(), flush=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
