"""One test per acceptance criterion, each printing its PASS/FAIL line.

Run with -s (or read the captured output of a failure) to see the
measured values and runtimes.  The shared context caches the two large
ensembles, so the file costs little more than a single ``verify`` run.
"""

import pytest

from hyptimes.acceptance import AcceptanceContext, run_single


@pytest.fixture(scope="module")
def ctx():
    return AcceptanceContext()


def _check(cid, ctx):
    result = run_single(cid, ctx)
    print(result.line)
    assert result.passed, result.summary
    return result


def test_criterion_transfer_identity(ctx):
    _check("transfer-identity", ctx)


def test_criterion_birkhoff_mean(ctx):
    _check("birkhoff-mean", ctx)


def test_criterion_oracle_equivalence(ctx):
    _check("oracle-equivalence", ctx)


def test_criterion_sigma_exact_doubling(ctx):
    _check("sigma-exact-doubling", ctx)


def test_criterion_tail_nonintegrable(ctx):
    _check("tail-nonintegrable", ctx)


def test_criterion_first_time_necessary(ctx):
    _check("first-time-necessary", ctx)


def test_criterion_recurrence_bounds(ctx):
    _check("recurrence-bounds", ctx)


def test_criterion_quadrature(ctx):
    _check("quadrature", ctx)


def test_criterion_backward_contraction(ctx):
    _check("backward-contraction", ctx)


def test_criterion_invariance_probe(ctx):
    _check("invariance-probe", ctx)
