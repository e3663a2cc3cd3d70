"""Extremes of repeated cycle maxima.

The sample maximum over k cycles concentrates where the tail weight
psi(n) rho^n crosses 1/k.  A continuous decreasing interpolation f of that
weight gives thresholds and norming constants; the Gumbel law exp(-e^-x)
brackets the limit from above, with a matching lower envelope whenever the
weight ratio has a positive lower limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bdp import (
    BirthDeathSpec,
    Classification,
    FactorialInverseSequence,
    TableSequence,
    classify,
)
from .distribution import CycleMaxDistribution
from .errors import (
    KindMismatchError,
    NoMonotoneTailError,
    NotApplicableError,
    NotSubcriticalError,
    OutOfRangeError,
)

__all__ = [
    "TailFunction",
    "build_tail_function",
    "invert_tail",
    "GumbelBounds",
    "gumbel_bounds",
    "NormingKind",
    "NormingConstants",
    "norming_constants",
    "default_norming_kind",
    "as_limit_constant",
    "stirling_tail",
    "lambert_w",
    "CompactnessReport",
    "compactness_diagnostic",
    "partial_limit_envelope",
]


@dataclass(frozen=True, eq=False)
class TailFunction:
    """Continuous decreasing version of n -> psi(n) rho^n.

    Knots are the weights at integers (scaled so the 0th is 1), joined by
    straight lines from y0 on; y0 is the first index after which the knots
    strictly decrease.  Before y0 the function is the slope -1 line
    f(y) = y0 - y + g(y0), which keeps f strictly decreasing on [0, inf).
    Knots are held in log form so factorially small tails stay usable.
    """

    log_knots: np.ndarray
    y0: int

    @property
    def n_max(self) -> int:
        return len(self.log_knots) - 1

    @property
    def prefix_slope(self) -> float:
        return -1.0

    def value(self, y: float) -> float:
        """f(y); defined for 0 <= y <= n_max."""
        if not 0.0 <= y <= self.n_max:
            raise OutOfRangeError(f"y={y} outside [0, {self.n_max}]")
        if y <= self.y0:
            return self.y0 - y + math.exp(self.log_knots[self.y0])
        n = min(int(math.floor(y)), self.n_max - 1)
        t = y - n
        return (1.0 - t) * math.exp(self.log_knots[n]) + t * math.exp(self.log_knots[n + 1])

    __call__ = value

    def log_knot(self, n: int) -> float:
        return float(self.log_knots[n])


def build_tail_function(spec: BirthDeathSpec, n_max: int = 400) -> TailFunction:
    """Interpolate psi(n) rho^n into a strictly decreasing f.

    Requires a subcritical upper ratio so that a decreasing tail exists at
    all; the start y0 of the monotone regime is located by scanning the
    knots, and the scan must confirm monotonicity strictly inside n_max.
    """
    cls = classify(spec)
    if not cls.beta_upper * spec.rho < 1.0:
        raise NotSubcriticalError(
            f"upper tail ratio {cls.beta_upper} * rho {spec.rho} is not below 1"
        )
    log_g = np.asarray(spec.log_psi_rho(np.arange(n_max + 1)), dtype=float)
    rising = np.nonzero(np.diff(log_g) >= 0.0)[0]
    y0 = int(rising[-1]) + 1 if len(rising) else 0
    if y0 >= n_max:
        raise NoMonotoneTailError(f"no strictly decreasing tail within {n_max} knots")
    return TailFunction(log_knots=log_g, y0=y0)


def invert_tail(f: TailFunction, v: float, tol: float = 1e-10) -> float:
    """The unique y with f(y) = v, bisected to absolute tolerance on y.

    The knot bracket is found in log space and the bisection runs on
    exponent-shifted values, so targets far below double-precision underflow
    of the raw weights still invert cleanly.
    """
    if not (v > 0.0 and math.isfinite(v)):
        raise OutOfRangeError(f"target {v} must be a positive real")
    log_v = math.log(v)
    log_g0 = float(f.log_knots[f.y0])
    if v >= math.exp(log_g0):
        y = f.y0 + math.exp(log_g0) - v
        if y < 0.0:
            raise OutOfRangeError(f"target {v} exceeds f(0)")
        return y
    if log_v < float(f.log_knots[-1]):
        raise OutOfRangeError(
            f"target {v} is below the last knot; rebuild with a larger n_max"
        )
    # log knots decrease strictly from y0; searchsorted over the negated tail
    tail = -f.log_knots[f.y0:]
    n = f.y0 + int(np.searchsorted(tail, -log_v, side="right")) - 1
    n = min(max(n, f.y0), f.n_max - 1)
    shift = float(f.log_knots[n])
    r = math.exp(float(f.log_knots[n + 1]) - shift)  # in (0, 1)
    target = math.exp(log_v - shift)

    def chord(t: float) -> float:
        return (1.0 - t) + t * r - target

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if chord(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return n + 0.5 * (lo + hi)


@dataclass(frozen=True)
class GumbelBounds:
    """Asymptotic envelope for P(sample max <= threshold) at a given x.

    ``upper`` = exp(-e^-x) holds at threshold ``y_upper``; ``lower`` holds
    at ``y_lower``.  With a positive lower ratio the lower bound is the
    sharp exp(-e^-x / (beta_lower rho)) at the unshifted threshold;
    otherwise it falls back to exp(-e^-x) at the threshold shifted by +1.
    When the ratio limit exists the thresholds coincide and the pair is the
    plain envelope [exp(-(beta rho)^-1 e^-x), exp(-e^-x)].
    """

    x: float
    k: int
    lower: float
    upper: float
    y_lower: float
    y_upper: float


def gumbel_bounds(
    spec: BirthDeathSpec,
    x: float,
    k: int,
    n_max: int = 400,
    classification: Classification | None = None,
    tail: TailFunction | None = None,
) -> GumbelBounds:
    """Envelope thresholds and values for P(Y^(k) <= y) at Gumbel coordinate x."""
    cls = classification if classification is not None else classify(spec)
    if not cls.beta_upper * spec.rho < 1.0:
        raise NotSubcriticalError("needs beta_upper * rho < 1")
    f = tail if tail is not None else build_tail_function(spec, n_max)
    q_lo = cls.beta_lower * spec.rho
    q_hi = cls.beta_upper * spec.rho
    ex = math.exp(-x)
    y_upper = invert_tail(f, ex / ((1.0 - q_hi) * k))
    upper = math.exp(-ex)
    if q_lo > 0.0:
        y_lower = invert_tail(f, ex / ((1.0 - q_lo) * k))
        lower = math.exp(-ex / q_lo)
    else:
        y_lower = invert_tail(f, ex / k) + 1.0
        lower = math.exp(-ex)
    return GumbelBounds(x=x, k=int(k), lower=lower, upper=upper, y_lower=y_lower, y_upper=y_upper)


# ---------------------------------------------------------------------------
# norming constants


class NormingKind(str, Enum):
    GEOMETRIC = "Geometric"
    STIRLING_FACTORIAL = "StirlingFactorial"
    LAMBERT_W = "LambertW"
    NUMERIC = "Numeric"


@dataclass(frozen=True)
class NormingConstants:
    kind: NormingKind
    k: tuple[int, ...]
    a: tuple[float, ...]
    b: tuple[float, ...]

    def rows(self):
        """(k, a_k, b_k) triples in input order."""
        return list(zip(self.k, self.a, self.b))


def stirling_tail(x: float, rho: float) -> float:
    """(2 pi)^-1/2 (rho e)^x x^(-x-1/2), the factorial-family tail shape."""
    if x <= 0.0:
        raise OutOfRangeError("x must be positive")
    return math.exp(_log_stirling_tail(x, rho))


def _log_stirling_tail(x: float, rho: float) -> float:
    return x * (1.0 + math.log(rho)) - (x + 0.5) * math.log(x) - 0.5 * math.log(2.0 * math.pi)


def _invert_stirling(v: float, rho: float) -> float:
    """Solve stirling_tail(x) = v on the decreasing branch x >= rho."""
    log_v = math.log(v)
    lo = max(rho, 1.0)
    if _log_stirling_tail(lo, rho) < log_v:
        raise OutOfRangeError(f"target {v} above the decreasing branch at x={lo}")
    hi = 2.0 * lo
    while _log_stirling_tail(hi, rho) > log_v:
        hi *= 2.0
    while hi - lo > 1e-10 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _log_stirling_tail(mid, rho) >= log_v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w(z: float, branch: int = 0, tol: float = 1e-12) -> float:
    """Real Lambert W via Halley iteration: w e^w = z.

    branch 0 is the principal solution for z >= -1/e; branch -1 is the
    lower solution for -1/e <= z < 0 (the one that diverges as z -> 0-).
    """
    if branch not in (0, -1):
        raise ValueError("only the real branches 0 and -1 are supported")
    if z < -1.0 / math.e - 1e-300:
        raise OutOfRangeError(f"no real W for z={z}")
    if branch == -1 and z >= 0.0:
        raise OutOfRangeError("branch -1 requires z in [-1/e, 0)")
    if z == 0.0:
        return 0.0
    if branch == 0:
        w = math.log1p(z) if z > -0.3 else -0.5
    else:
        lz = math.log(-z)
        w = lz - math.log(-lz) if z > -0.25 else -2.0
    for _ in range(200):
        ew = math.exp(w)
        g = w * ew - z
        step = g / (ew * (w + 1.0) - (w + 2.0) * g / (2.0 * w + 2.0))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            return w
    raise ArithmeticError(f"Halley iteration stalled at w={w} for z={z}")


def _poly_geometric_params(spec: BirthDeathSpec) -> tuple[float, int, float]:
    """(q, m, log_amp) with psi(n) rho^n ~ amp * n^m * q^n, from a table tail."""
    seq = spec.psi
    if not isinstance(seq, TableSequence) or seq.poly_degree < 1:
        raise KindMismatchError("needs a table weight with a polynomial tail factor")
    q = seq.tail_ratio * spec.rho
    if not 0.0 < q < 1.0:
        raise KindMismatchError(f"tail slope {q} must lie in (0, 1)")
    m = seq.poly_degree
    last = len(seq.values) - 1
    log_amp = (
        math.log(seq.values[last])
        - math.log(seq.values[0])
        - m * math.log(last)
        - last * math.log(seq.tail_ratio)
    )
    return q, m, log_amp


def norming_constants(
    spec: BirthDeathSpec,
    kind: NormingKind | str,
    k_list,
    n_max: int = 400,
) -> NormingConstants:
    """Sequences a_k, b_k matching the tail function of the given spec.

    Geometric needs an existing ratio limit with beta rho in (0, 1);
    StirlingFactorial needs beta = 0 (factorial family) and inverts the
    closed-form Stirling tail; Numeric inverts the interpolated tail
    function directly and fits a_k by least squares; LambertW handles
    weights with a polynomial-times-geometric tail, inverting
    y^m q^y = v on the lower real branch which is the root that grows
    with k.
    """
    kind = NormingKind(kind)
    ks = [int(k) for k in k_list]
    if any(k < 2 for k in ks):
        raise ValueError("k values must be at least 2")
    cls = classify(spec)
    rho = spec.rho
    a: list[float] = []
    b: list[float] = []

    if kind is NormingKind.GEOMETRIC:
        q = None if cls.beta is None else cls.beta * rho
        if q is None or not 0.0 < q < 1.0:
            raise KindMismatchError(f"Geometric norming needs beta*rho in (0,1), got {q}")
        a_const = 1.0 / math.log(1.0 / q)
        for k in ks:
            a.append(a_const)
            b.append(math.log(k) / math.log(1.0 / q))

    elif kind is NormingKind.STIRLING_FACTORIAL:
        if cls.beta != 0.0:
            raise KindMismatchError("StirlingFactorial norming needs beta = 0")
        for k in ks:
            bk = _invert_stirling(1.0 / k, rho)
            b.append(bk)
            a.append(1.0 / (math.log(bk) + 1.0 / (2.0 * bk) - math.log(rho)))

    elif kind is NormingKind.NUMERIC:
        f = build_tail_function(spec, n_max)
        grid = np.linspace(-2.0, 5.0, 29)
        design = np.column_stack([grid, np.ones_like(grid)])
        for k in ks:
            ys = np.array([invert_tail(f, math.exp(-y) / k) for y in grid])
            coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
            a.append(float(coef[0]))
            b.append(invert_tail(f, 1.0 / k))

    else:  # LambertW
        q, m, log_amp = _poly_geometric_params(spec)
        log_q = math.log(q)
        for k in ks:
            # solve y^m q^y = exp(-log_amp)/k for its large root
            c = log_q / m
            w_arg = c * math.exp(-(log_amp + math.log(k)) / m)
            bk = lambert_w(w_arg, branch=-1) / c
            b.append(bk)
            a.append(1.0 / (math.log(1.0 / q) - m / bk))

    return NormingConstants(kind=kind, k=tuple(ks), a=tuple(a), b=tuple(b))


def default_norming_kind(
    spec: BirthDeathSpec, classification: Classification | None = None
) -> NormingKind:
    """Pick the norming recipe the spec's tail geometry supports.

    Polynomially corrected geometric tables invert through Lambert W, clean
    geometric tails take the closed form, factorial tails the Stirling
    inversion; anything else falls back to the interpolated numeric fit.
    """
    cls = classification if classification is not None else classify(spec)
    psi = spec.psi
    if isinstance(psi, TableSequence) and psi.poly_degree >= 1:
        if 0.0 < psi.tail_ratio * spec.rho < 1.0:
            return NormingKind.LAMBERT_W
    if cls.beta == 0.0:
        if isinstance(psi, FactorialInverseSequence):
            return NormingKind.STIRLING_FACTORIAL
        return NormingKind.NUMERIC
    if cls.beta is not None and cls.beta * spec.rho < 1.0:
        return NormingKind.GEOMETRIC
    return NormingKind.NUMERIC


def as_limit_constant(spec: BirthDeathSpec, k: float | None = None):
    """Normaliser for the strong law Y^(k) / b_k -> 1.

    With an existing ratio limit and beta rho in (0, 1): returns the slope
    1/log(1/(beta rho)) (so b_k = slope * log k), or b_k itself when k is
    given.  For beta = 0 (factorial family) the Stirling tail is inverted,
    which requires k.  When only distinct lower/upper ratio bounds exist the
    bracket pair is returned instead of a single value.
    """
    cls = classify(spec)
    rho = spec.rho
    if cls.beta is not None and 0.0 < cls.beta * rho < 1.0:
        slope = 1.0 / math.log(1.0 / (cls.beta * rho))
        return slope if k is None else slope * math.log(k)
    if cls.beta == 0.0:
        if k is None:
            raise ValueError("factorial-family normaliser needs an explicit k")
        return _invert_stirling(1.0 / k, rho)
    if 0.0 < cls.beta_lower < cls.beta_upper and cls.beta_upper * rho < 1.0:
        lo = 1.0 / math.log(1.0 / (cls.beta_lower * rho))
        hi = 1.0 / math.log(1.0 / (cls.beta_upper * rho))
        if k is None:
            return (lo, hi)
        return (lo * math.log(k), hi * math.log(k))
    raise NotApplicableError("no almost-sure normaliser for this tail geometry")


# ---------------------------------------------------------------------------
# stochastic compactness


@dataclass(frozen=True)
class CompactnessReport:
    """Grid evaluation of the compactness ratio R(x) or its failure mode.

    R(x) compares the delta-power integral of the survival function with its
    (delta-1)-power integral; staying inside (0, 1) along the grid is the
    numerical counterpart of the sufficient conditions for compactness.
    For factorial tails (beta = 0) the hazard ratio diverges instead and the
    law is not compact; transient chains are diagnosed on the distribution
    conditioned on a finite maximum.
    """

    delta: float
    grid: tuple[float, ...]
    r_values: tuple[float, ...] | None
    r_min: float | None
    r_max: float | None
    hazard_ratios: tuple[float, ...] | None
    verdict: str
    conditional: bool
    epsilon_range: tuple[float, float] | None

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "grid": list(self.grid),
            "R_min": self.r_min,
            "R_max": self.r_max,
            "verdict": self.verdict,
            "conditional": self.conditional,
            "epsilon_range": list(self.epsilon_range) if self.epsilon_range else None,
        }


def _step_integrals(surv: np.ndarray, x: float, delta: float, tail_q: float) -> float:
    """integral_x^inf of the step survival to the power delta.

    surv[m] is the survival on [m, m+1); beyond the table the tail is closed
    with a geometric bound at ratio tail_q (valid for subcritical tails).
    """
    m0 = int(math.floor(x))
    first = (m0 + 1 - x) * surv[m0] ** delta
    body = float(np.sum(surv[m0 + 1 :] ** delta))
    qd = tail_q**delta
    tail = (surv[-1] ** delta) * qd / (1.0 - qd) if 0.0 < qd < 1.0 else 0.0
    return first + body + tail


def compactness_diagnostic(
    spec: BirthDeathSpec,
    delta: float = 2.0,
    x_grid=None,
    n_max: int | None = None,
) -> CompactnessReport:
    """Evaluate the compactness conditions on a grid of tail positions."""
    if not delta > 1.0:
        raise ValueError("delta must exceed 1")
    if x_grid is None:
        x_grid = [float(x) for x in range(10, 41, 5)]
    grid = tuple(float(x) for x in x_grid)
    cls = classify(spec)
    rho = spec.rho
    dist = CycleMaxDistribution(spec, cls)
    top = int(max(grid))
    m_hi = n_max if n_max is not None else top + 600

    if cls.beta == 0.0:
        # factorial tail: hazard ratio diverges, law is not compact
        pts = np.arange(max(int(min(grid)), 2), top + 1)
        ratios = dist.survival(pts - 1) / dist.survival(pts)
        return CompactnessReport(
            delta=delta,
            grid=tuple(float(p) for p in pts),
            r_values=None,
            r_min=None,
            r_max=None,
            hazard_ratios=tuple(float(r) for r in ratios),
            verdict="NotCompact",
            conditional=False,
            epsilon_range=None,
        )

    conditional = cls.beta is not None and cls.beta * rho > 1.0
    if conditional:
        log_surv = _conditional_log_survival(dist, m_hi)
        surv = np.exp(log_surv)
        tail_q = 1.0 / (cls.beta * rho)
        eps = (-math.log(cls.beta * rho), 0.0)
    else:
        surv = np.asarray(dist.survival(np.arange(m_hi + 1)), dtype=float)
        tail_q = cls.beta_upper * rho
        eps = (math.log(cls.beta * rho), 0.0) if cls.beta is not None else None

    if not tail_q < 1.0:
        return CompactnessReport(
            delta=delta,
            grid=grid,
            r_values=None,
            r_min=None,
            r_max=None,
            hazard_ratios=None,
            verdict="Undetermined",
            conditional=conditional,
            epsilon_range=None,
        )

    r_vals = []
    for x in grid:
        num = _step_integrals(surv, x, delta, tail_q)
        den = surv[int(math.floor(x))] * _step_integrals(surv, x, delta - 1.0, tail_q)
        r_vals.append(num / den)
    r_min, r_max = min(r_vals), max(r_vals)
    verdict = "Compact" if 0.0 < r_min and r_max < 1.0 else "Undetermined"
    return CompactnessReport(
        delta=delta,
        grid=grid,
        r_values=tuple(r_vals),
        r_min=r_min,
        r_max=r_max,
        hazard_ratios=None,
        verdict=verdict,
        conditional=conditional,
        epsilon_range=eps,
    )


def _conditional_log_survival(dist: CycleMaxDistribution, m_hi: int) -> np.ndarray:
    """log P(Y > m | Y < inf) for m = 0..m_hi, via exact tail margins."""
    spec = dist.spec
    cls = dist.classification
    q = 1.0 / (cls.beta_lower * spec.rho)
    span = max(int(60.0 / -math.log(q)), 8)
    lt = -np.asarray(spec.log_psi_rho(np.arange(m_hi + 1 + span)), dtype=float)
    rev = np.logaddexp.accumulate(lt[::-1])[::-1]
    bound = lt[-1] + math.log(q) - math.log1p(-q)
    # rev[m+1] = log sum_{i=m+1..end}; append the geometric closure of the end
    log_tail = np.logaddexp(rev[1 : m_hi + 2], bound)
    log_s = np.asarray(dist.log_cumulative(np.arange(m_hi + 1)), dtype=float)
    return log_tail - log_s - dist.log_s_limit() - dist.log_p_finite


def partial_limit_envelope(spec: BirthDeathSpec, x: float) -> tuple[float, float]:
    """Range of the shifted-Gumbel partial limits at coordinate x.

    Recurrent subcritical: G values at shifts log(beta rho) and 0; transient
    (conditioned on a finite maximum): shifts -log(beta rho) and 0.  Returned
    ordered as (lower, upper).
    """
    cls = classify(spec)
    if cls.beta is None or cls.beta == 0.0:
        raise NotApplicableError("needs an existing positive ratio limit")
    q = cls.beta * spec.rho
    if q == 1.0:
        raise NotApplicableError("critical tail: envelope degenerates")
    ex = math.exp(-x)
    if q < 1.0:
        pair = (math.exp(-ex), math.exp(-q * ex))
    else:
        pair = (math.exp(-ex), math.exp(-ex / q))
    return (min(pair), max(pair))
