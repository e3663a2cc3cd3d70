import math

import numpy as np
import pytest

from cyclemax import (
    CycleMaxDistribution,
    TailRegime,
    mm1,
    mminf,
    mms,
    tail_asymptotics,
)
from cyclemax.errors import NotApplicableError, NotTransientError


def single_server_cdf(rho, n):
    # plain-float reference: P(Y <= n) = 1 - 1/S(n), S(n) = sum_{i<=n} rho^-i
    s = sum((1.0 / rho) ** i for i in range(n + 1))
    return 1.0 - 1.0 / s


def multi_server_cdf(s, rho, n):
    psi = [1.0]
    for i in range(1, n + 1):
        psi.append(psi[-1] / min(i, s))
    total = sum(1.0 / (psi[i] * rho**i) for i in range(n + 1))
    return 1.0 - 1.0 / total


def test_single_server_cdf_closed_form():
    dist = CycleMaxDistribution(mm1(0.5, 1.0))
    assert dist.cdf(1) == pytest.approx(2.0 / 3.0, rel=1e-14)
    for n in range(1, 21):
        assert dist.cdf(n) == pytest.approx(single_server_cdf(0.5, n), rel=1e-13)


def test_critical_chain_cdf_is_harmonic():
    dist = CycleMaxDistribution(mm1(1.0, 1.0))
    for n in (1, 2, 10, 100, 1000):
        assert dist.cdf(n) == pytest.approx(n / (n + 1.0), rel=1e-13)


def test_multi_server_cdf_against_direct_sum():
    dist = CycleMaxDistribution(mms(2, 1.4, 1.0))
    for n in range(1, 30):
        assert dist.cdf(n) == pytest.approx(multi_server_cdf(2, 1.4, n), rel=1e-12)


def test_survival_complements_cdf():
    dist = CycleMaxDistribution(mms(3, 2.1, 1.0))
    for n in range(1, 40):
        assert dist.survival(n) + dist.cdf(n) == pytest.approx(1.0, abs=1e-14)
    assert dist.cdf(0) == 0.0


def test_failure_rate_matches_finite_differences():
    dist = CycleMaxDistribution(mm1(0.5, 1.0))
    assert dist.failure_rate(1) == pytest.approx(2.0 / 3.0, rel=1e-13)
    prev = 0.0
    for n in range(1, 15):
        cur = dist.cdf(n)
        assert dist.failure_rate(n) == pytest.approx((cur - prev) / (1 - prev), rel=1e-11)
        prev = cur
    with pytest.raises(ValueError):
        dist.failure_rate(0)


def test_blocking_prob_single_server():
    # P0(X = n | X <= n) = rho^n (1 - rho) / (1 - rho^{n+1})
    rho = 0.5
    dist = CycleMaxDistribution(mm1(rho, 1.0))
    for n in range(1, 12):
        expect = rho**n * (1 - rho) / (1 - rho ** (n + 1))
        assert dist.blocking_prob(n) == pytest.approx(expect, rel=1e-12)
    assert dist.blocking_prob(3) == pytest.approx(1.0 / 15.0, rel=1e-12)


def test_capped_chain_cdf_saturates():
    dist = CycleMaxDistribution(mm1(0.5, 1.0, cap=6))
    assert dist.cdf(6) == pytest.approx(1.0, abs=1e-14)
    assert dist.survival(6) == 0.0
    assert dist.failure_rate(6) == pytest.approx(1.0, abs=1e-14)
    # below the cap the climb dynamics are untouched
    free = CycleMaxDistribution(mm1(0.5, 1.0))
    for n in range(1, 6):
        assert dist.cdf(n) == pytest.approx(free.cdf(n), rel=1e-13)
        assert dist.failure_rate(n) == pytest.approx(free.failure_rate(n), rel=1e-13)


def test_transient_escape_probability():
    dist = CycleMaxDistribution(mm1(2.0, 1.0))
    # S(inf) = sum 2^-i = 2, so half the cycles never return
    assert dist.p_finite == pytest.approx(0.5, rel=1e-13)
    for n in range(1, 20):
        assert dist.conditional_cdf(n) == pytest.approx(dist.cdf(n) / 0.5, rel=1e-12)
    assert dist.conditional_cdf(60) == pytest.approx(1.0, abs=1e-12)


def test_tail_sum_guards():
    recurrent = CycleMaxDistribution(mm1(0.9, 1.0))
    with pytest.raises(NotTransientError):
        recurrent.log_tail_sum(5)
    transient = CycleMaxDistribution(mm1(2.0, 1.0))
    # log sum_{i>n} 2^-i = log 2^-n
    for n in (5, 40, 200):
        assert transient.log_tail_sum(n) == pytest.approx(-n * math.log(2.0), rel=1e-12)


def test_tail_asymptotics_subcritical():
    ta = tail_asymptotics(mm1(0.4, 1.0))
    assert ta.regime is TailRegime.SUBCRITICAL
    assert ta.limit_constant == pytest.approx(0.6, rel=1e-12)
    assert ta.empirical_value == pytest.approx(0.6, rel=1e-12)

    inf = tail_asymptotics(mminf(1.0, 1.0))
    assert inf.regime is TailRegime.SUBCRITICAL
    assert inf.limit_constant == pytest.approx(1.0)
    assert abs(inf.empirical_value - 1.0) < 0.01


def test_tail_asymptotics_critical():
    ta = tail_asymptotics(mm1(1.0, 1.0), n_probe=400)
    assert ta.regime is TailRegime.CRITICAL
    assert ta.limit_constant == pytest.approx(1.0)
    assert ta.alpha == pytest.approx(1.0)
    # n (1 - F(n)) = n/(n+1) exactly at the probe depth
    assert ta.empirical_value == pytest.approx(400.0 / 401.0, rel=1e-12)


def test_tail_asymptotics_supercritical():
    ta = tail_asymptotics(mm1(2.0, 1.0))
    assert ta.regime is TailRegime.SUPERCRITICAL
    assert ta.limit_constant == pytest.approx(-4.0, rel=1e-9)
    assert ta.fixed_point_constant == pytest.approx(0.5, rel=1e-9)
    assert ta.empirical_value == pytest.approx(0.5, rel=1e-9)


def test_tail_asymptotics_probe_floor():
    with pytest.raises(ValueError):
        tail_asymptotics(mm1(0.5, 1.0), n_probe=50)


def test_transient_only_fields_absent_when_recurrent():
    dist = CycleMaxDistribution(mm1(0.5, 1.0))
    assert dist.p_finite == pytest.approx(1.0, abs=1e-14)
    deep = CycleMaxDistribution(mm1(0.99, 1.0))
    with pytest.raises(NotTransientError):
        deep.log_tail_sum(10)
