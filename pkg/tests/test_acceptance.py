"""Acceptance suite: one test per shipped verification check.

Each test runs the library-level check at full strength, prints its one-line
verdict, and enforces the runtime budget where one applies.  The monotonicity
check is a documented expected failure: the geometric normaliser's median
drifts away from 1 with k on the single-server chain, so the suite keeps it
red on purpose and the runner treats it as non-blocking.
"""

import pytest

from cyclemax.verification import run_criterion


def check(tag, budget=None):
    res = run_criterion(tag, suite="full")
    status = "PASS" if res.passed else ("XFAIL" if res.expected_failure else "FAIL")
    print(f"{status} {res.name}: {res.detail} ({res.seconds:.2f}s)")
    assert res.passed, f"{res.name}: {res.detail}"
    if budget is not None:
        assert res.seconds < budget, f"{res.name} took {res.seconds:.1f}s, budget {budget}s"
    return res


def test_exact_cdf_monte_carlo_agreement():
    check("1", budget=30.0)


def test_duality_identity():
    check("2", budget=1.0)


def test_multi_server_limit_and_recursion():
    check("3")


def test_critical_tail_limit():
    check("4")


def test_transient_escape_constant():
    check("5")


def test_gumbel_envelope_bands():
    check("6", budget=60.0)


def test_compactness_dichotomy():
    check("7")


def test_normaliser_median_bands():
    check("8a")


@pytest.mark.xfail(strict=True, reason="geometric normaliser median drifts with k on the single-server chain")
def test_normaliser_median_monotonicity():
    check("8b")


def test_network_constant_cross_checks():
    check("9")


def test_reduction_stationary_and_simulation():
    check("10", budget=120.0)


def test_aggregate_slope_asymptotics():
    check("11")
