import math

import numpy as np
import pytest

from cyclemax import (
    BirthDeathSpec,
    NormingKind,
    TableSequence,
    as_limit_constant,
    build_tail_function,
    compactness_diagnostic,
    default_norming_kind,
    gumbel_bounds,
    invert_tail,
    lambert_w,
    mm1,
    mminf,
    mms,
    norming_constants,
    partial_limit_envelope,
    stirling_tail,
)
from cyclemax.errors import NotApplicableError


def poly_geometric_spec():
    # psi(n) ~ n * 0.5^n beyond the table, run at rho = 0.9
    seq = TableSequence((1.0, 0.5), tail_ratio=0.5, poly_degree=1)
    return BirthDeathSpec(psi=seq, phi=seq, lam=0.9, mu=1.0)


def test_default_norming_kind_dispatch():
    assert default_norming_kind(mm1(0.5, 1.0)) is NormingKind.GEOMETRIC
    assert default_norming_kind(mminf(1.0, 1.0)) is NormingKind.STIRLING_FACTORIAL
    assert default_norming_kind(poly_geometric_spec()) is NormingKind.LAMBERT_W
    # geometric envelope needs beta * rho < 1
    assert default_norming_kind(mm1(1.0, 1.0)) is NormingKind.NUMERIC


def test_geometric_norming_closed_form():
    # beta rho = 0.5: a_k = 1/log 2 and b_k = log k / log 2
    nc = norming_constants(mm1(0.5, 1.0), NormingKind.GEOMETRIC, [1000, 10**5, 10**7])
    rows = list(nc.rows())
    assert [k for k, _, _ in rows] == [1000, 10**5, 10**7]
    for k, a, b in rows:
        assert a == pytest.approx(1.0 / math.log(2.0), rel=1e-12)
        assert b == pytest.approx(math.log(k) / math.log(2.0), rel=1e-12)


def test_stirling_norming_inverts_the_tail():
    ks = [10**3, 10**4, 10**6]
    nc = norming_constants(mminf(1.0, 1.0), NormingKind.STIRLING_FACTORIAL, ks)
    rows = list(nc.rows())
    bs = [b for _, _, b in rows]
    assert bs == sorted(bs)
    for k, a, b in rows:
        assert a > 0
        assert stirling_tail(b, 1.0) * k == pytest.approx(1.0, rel=1e-6)


def test_lambert_norming_grows_with_k():
    nc = norming_constants(poly_geometric_spec(), NormingKind.LAMBERT_W, [10**3, 10**5])
    rows = list(nc.rows())
    assert rows[0][2] < rows[1][2]
    assert all(a > 0 for _, a, _ in rows)


def test_lambert_w_identities():
    for z in (0.1, 1.0, 2.0):
        assert lambert_w(z * math.exp(z)) == pytest.approx(z, rel=1e-10)
    assert lambert_w(-1.0 / math.e, branch=-1) == pytest.approx(-1.0, abs=1e-6)
    for z in (-2.0, -5.0):
        assert lambert_w(z * math.exp(z), branch=-1) == pytest.approx(z, rel=1e-10)


def test_stirling_tail_formula():
    for x in (8.0, 12.0, 20.0):
        for rho in (1.0, 2.0):
            direct = math.exp(
                -0.5 * math.log(2 * math.pi)
                + x * math.log(rho * math.e)
                - (x + 0.5) * math.log(x)
            )
            assert stirling_tail(x, rho) == pytest.approx(direct, rel=1e-12)
    assert stirling_tail(30.0, 1.0) < stirling_tail(20.0, 1.0)


def test_invert_tail_round_trip():
    f = build_tail_function(mm1(0.5, 1.0))
    for v in (1e-2, 1e-4, 1e-8):
        y = invert_tail(f, v)
        assert f(y) == pytest.approx(v, rel=1e-6)


def test_gumbel_bounds_at_origin():
    gb = gumbel_bounds(mm1(0.5, 1.0), 0.0, 10**4)
    assert gb.lower == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert gb.upper == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert gb.y_upper == pytest.approx(12.3616, abs=1e-3)
    assert gb.lower < gb.upper


def test_partial_limit_envelope_closed_form():
    # lower exp(-e^-x), upper exp(-beta rho e^-x) with beta rho = 0.5
    for x in (-1.0, 0.0, 2.0):
        lo, hi = partial_limit_envelope(mm1(0.5, 1.0), x)
        assert lo == pytest.approx(math.exp(-math.exp(-x)), rel=1e-12)
        assert hi == pytest.approx(math.exp(-0.5 * math.exp(-x)), rel=1e-12)
        assert lo < hi


def test_threshold_law_sits_inside_envelope():
    # exact k-max law at the integer threshold stays within the widened band;
    # flooring costs at most the beta*rho factor built into the envelope
    k = 10**4
    spec = mm1(0.5, 1.0)
    values = []
    for x in (-2.0, 0.0, 1.0, 3.0):
        gb = gumbel_bounds(spec, x, k)
        n = math.floor(gb.y_upper)
        s = float(2 ** (n + 1) - 1)
        law = (1.0 - 1.0 / s) ** k
        values.append(law)
        assert gb.lower - 0.04 <= law <= gb.upper + 0.04
    assert values == sorted(values)


def test_compactness_verdicts():
    pooled = compactness_diagnostic(mms(2, 1.4, 1.0))
    assert pooled.verdict == "Compact"
    assert 0.0 < pooled.r_min <= pooled.r_max < 1.0

    spread = compactness_diagnostic(mminf(1.0, 1.0))
    assert spread.verdict == "NotCompact"
    ratios = dict(zip(spread.grid, spread.hazard_ratios))
    assert any(n <= 30 and r > 10 for n, r in ratios.items())


def test_compactness_report_dict():
    d = compactness_diagnostic(mms(3, 2.1, 1.0)).to_dict()
    assert set(d) == {"verdict", "delta", "grid", "R_min", "R_max", "conditional", "epsilon_range"}
    assert d["verdict"] == "Compact"


def test_as_limit_constant_values():
    assert as_limit_constant(mm1(0.5, 1.0)) == pytest.approx(1.0 / math.log(2.0), rel=1e-12)
    b = as_limit_constant(mminf(1.0, 1.0), k=10**4)
    assert stirling_tail(b, 1.0) * 10**4 == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(NotApplicableError):
        as_limit_constant(mm1(1.0, 1.0))
