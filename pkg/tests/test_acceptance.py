"""The twelve acceptance criteria, one test each, at their stated tolerances.

Each outcome line is printed as it finishes and repeated in the terminal summary.
"""
import pytest

from spectraforge.acceptance import REGISTRY, run_criteria

OUTCOMES = []

IDS = sorted(c.cid for c in REGISTRY)


def test_registry_is_complete():
    assert IDS == list(range(1, 13))


@pytest.mark.parametrize("cid", IDS)
def test_criterion(cid, capsys):
    (outcome,) = run_criteria(ids={cid})
    OUTCOMES.append(outcome)
    with capsys.disabled():
        print("\n" + outcome.line())
    assert outcome.passed, outcome.line()
