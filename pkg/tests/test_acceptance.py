"""The acceptance suite: one test per criterion, each printing its verdict.

Uses the shipped quadratic-example config.  Criteria 1, 2 and 7 share one
set of Lyapunov-Perron solves through the session-scoped context.

Criterion 3 is asserted exactly as stated: the log-log slope of the measured
graph distance against the quoted exponents.  The measured distance decays
strictly faster than those upper-bound exponents for this example (the
dominant bound term carries L_g, and the example has g = 0), so this
criterion fails; the structural bound-term slopes, which do track the quoted
rates, are printed alongside.  See the decisions ledger for the analysis.
"""

from pathlib import Path

import pytest

from slowmanifold import acceptance
from slowmanifold.config import load_config

CONFIG = Path(__file__).resolve().parent.parent / "src/slowmanifold/configs/example.toml"


@pytest.fixture(scope="session")
def ctx():
    return acceptance.AcceptanceContext(load_config(CONFIG))


def _check(result):
    print()
    print(result.line)
    assert result.passed, result.line


def test_criterion_1_manifold_oracle(ctx):
    _check(acceptance.criterion_1(ctx))


def test_criterion_2_tail_oracle(ctx):
    _check(acceptance.criterion_2(ctx))


def test_criterion_3_scaling_exponents(ctx):
    _check(acceptance.criterion_3(ctx))


def test_criterion_4_resonance_set(ctx):
    _check(acceptance.criterion_4(ctx))


def test_criterion_5_invariance(ctx):
    _check(acceptance.criterion_5(ctx))


def test_criterion_6_attraction(ctx):
    _check(acceptance.criterion_6(ctx))


def test_criterion_7_contraction_bookkeeping(ctx):
    _check(acceptance.criterion_7(ctx))


def test_criterion_8_critical_solver(ctx):
    _check(acceptance.criterion_8(ctx))


def test_criterion_9_numerics_hygiene(ctx):
    _check(acceptance.criterion_9(ctx))
