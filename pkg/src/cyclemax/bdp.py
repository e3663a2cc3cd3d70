"""Birth-death chains parametrised by a pair of positive weight sequences.

A chain is described by weights (psi, phi) and intensities (lam, mu):

    birth rate at n:  lam * psi(n) / phi(n)
    death rate at n:  mu * psi(n-1) / phi(n)

with rho = lam / mu.  All weight evaluation happens in log space so that
factorially growing or decaying sequences stay usable far into the tail.
A finite state space {0..cap} is encoded by the ``cap`` field; the weight
sequences themselves stay positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .errors import (
    CapExceededError,
    NotPositiveRecurrentError,
    PalmUndefinedError,
    SpecFormatError,
)

__all__ = [
    "WeightSequence",
    "OnesSequence",
    "FactorialInverseSequence",
    "MultiServerSequence",
    "TableSequence",
    "CallableSequence",
    "ReciprocalSequence",
    "BirthDeathSpec",
    "Verdict",
    "Classification",
    "classify",
    "stationary_distribution",
    "palm_distribution",
    "birth_rate",
    "death_rate",
    "mm1",
    "mms",
    "mminf",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
    "save_spec",
]


def logsumexp(a: np.ndarray) -> float:
    """Stable log(sum(exp(a))) for a 1-d array; tolerates -inf entries."""
    a = np.asarray(a, dtype=float)
    m = float(np.max(a)) if a.size else -math.inf
    if not math.isfinite(m):
        return m  # all -inf (empty sum) or an infinite term
    return m + math.log(float(np.sum(np.exp(a - m))))


# ---------------------------------------------------------------------------
# weight sequences


class WeightSequence:
    """Positive sequence w(0), w(1), ... evaluated in log space.

    ``tail_ratio`` is the exact limit of w(n+1)/w(n) when the representation
    pins it down (0.0 and inf are legal limits); ``tail_bounds`` gives
    (liminf, limsup) when only bounds are known.  Either may be None.
    """

    tail_ratio: float | None = None
    tail_bounds: tuple[float, float] | None = None

    def log_value(self, n):
        raise NotImplementedError

    def value(self, n):
        return np.exp(self.log_value(n))

    def log_ratio(self, n):
        """log(w(n+1) / w(n))."""
        n = np.asarray(n)
        return self.log_value(n + 1) - self.log_value(n)

    def reciprocal(self) -> "WeightSequence":
        return ReciprocalSequence(self)

    def to_json(self) -> dict:
        raise SpecFormatError(f"{type(self).__name__} has no file representation")


class OnesSequence(WeightSequence):
    """w(n) = 1 for all n (single-server pattern)."""

    tail_ratio = 1.0

    def log_value(self, n):
        return np.zeros_like(np.asarray(n), dtype=float)

    def reciprocal(self):
        return OnesSequence()

    def to_json(self):
        return {"kind": "preset", "name": "mm1"}

    def __eq__(self, other):
        return isinstance(other, OnesSequence)

    def __repr__(self):
        return "OnesSequence()"


class FactorialInverseSequence(WeightSequence):
    """w(n) = 1/n! (infinite-server pattern); ratio w(n+1)/w(n) -> 0."""

    tail_ratio = 0.0

    def log_value(self, n):
        return -gammaln(np.asarray(n, dtype=float) + 1.0)

    def to_json(self):
        return {"kind": "preset", "name": "mminf"}

    def __eq__(self, other):
        return isinstance(other, FactorialInverseSequence)

    def __repr__(self):
        return "FactorialInverseSequence()"


class MultiServerSequence(WeightSequence):
    """w(n) = 1/n! for n <= s and s^(s-n)/s! beyond; ratio -> 1/s."""

    def __init__(self, s: int):
        if not (isinstance(s, (int, np.integer)) and s >= 1):
            raise SpecFormatError(f"server count must be a positive integer, got {s!r}")
        self.s = int(s)
        self.tail_ratio = 1.0 / self.s

    def log_value(self, n):
        n = np.asarray(n, dtype=float)
        head = -gammaln(n + 1.0)
        tail = (self.s - n) * math.log(self.s) - gammaln(self.s + 1.0)
        return np.where(n <= self.s, head, tail)

    def to_json(self):
        return {"kind": "preset", "name": "mms", "s": self.s}

    def __eq__(self, other):
        return isinstance(other, MultiServerSequence) and other.s == self.s

    def __repr__(self):
        return f"MultiServerSequence(s={self.s})"


class TableSequence(WeightSequence):
    """Explicit head values with constant-ratio extrapolation beyond the table.

    For n past the table end N: w(n) = w(N) * tail_ratio^(n-N) * (n/N)^poly_degree.
    The polynomial factor serves reduced network chains whose aggregate weight
    grows like n^m * beta^n; plain tables use poly_degree = 0.
    """

    def __init__(self, values, tail_ratio: float, poly_degree: int = 0):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise SpecFormatError("table needs at least one value")
        if any(not math.isfinite(v) or v <= 0.0 for v in vals):
            raise SpecFormatError("table values must be finite and positive")
        if not (math.isfinite(tail_ratio) and tail_ratio > 0.0):
            raise SpecFormatError("tail_ratio must be finite and positive")
        if poly_degree != 0 and len(vals) < 2:
            raise SpecFormatError("polynomial tail needs a table of length >= 2")
        self.values = vals
        self.tail_ratio = float(tail_ratio)
        self.poly_degree = int(poly_degree)
        self._log_values = np.log(np.asarray(vals))

    @classmethod
    def from_log(cls, log_values, tail_ratio: float, poly_degree: int = 0) -> "TableSequence":
        """Build from log-scale values; sidesteps linear underflow for long tables."""
        logs = np.asarray(log_values, dtype=float)
        if logs.ndim != 1 or logs.size == 0:
            raise SpecFormatError("table needs at least one value")
        if not np.all(np.isfinite(logs)):
            raise SpecFormatError("log table values must be finite")
        if not (math.isfinite(tail_ratio) and tail_ratio > 0.0):
            raise SpecFormatError("tail_ratio must be finite and positive")
        if poly_degree != 0 and logs.size < 2:
            raise SpecFormatError("polynomial tail needs a table of length >= 2")
        seq = cls.__new__(cls)
        seq.values = tuple(float(v) for v in np.exp(logs))
        seq.tail_ratio = float(tail_ratio)
        seq.poly_degree = int(poly_degree)
        seq._log_values = logs
        return seq

    def log_value(self, n):
        scalar = np.ndim(n) == 0
        n = np.atleast_1d(np.asarray(n))
        last = len(self.values) - 1
        inside = np.clip(n, 0, last)
        out = self._log_values[inside].astype(float)
        over = n > last
        if np.any(over):
            k = n[over].astype(float)
            extra = (k - last) * math.log(self.tail_ratio)
            if self.poly_degree:
                extra = extra + self.poly_degree * (np.log(k) - math.log(last))
            out[over] = self._log_values[last] + extra
        return float(out[0]) if scalar else out

    def to_json(self):
        if self.poly_degree:
            raise SpecFormatError("polynomial tails have no file representation")
        if any(v <= 0.0 for v in self.values):
            raise SpecFormatError("table values underflow the linear file representation")
        return {"kind": "table", "values": list(self.values), "tail_ratio": self.tail_ratio}

    def __eq__(self, other):
        return (
            isinstance(other, TableSequence)
            and other.values == self.values
            and other.tail_ratio == self.tail_ratio
            and other.poly_degree == self.poly_degree
        )

    def __repr__(self):
        return (
            f"TableSequence(len={len(self.values)}, tail_ratio={self.tail_ratio}, "
            f"poly_degree={self.poly_degree})"
        )


class CallableSequence(WeightSequence):
    """Arbitrary log-weight function; tail behaviour may be hinted.

    ``log_fn`` must accept numpy integer arrays.  Without hints the tail
    geometry is estimated from a ratio window during classification.
    """

    def __init__(self, log_fn, tail_ratio=None, tail_bounds=None):
        self._log_fn = log_fn
        self.tail_ratio = tail_ratio
        self.tail_bounds = tail_bounds

    def log_value(self, n):
        return np.asarray(self._log_fn(np.asarray(n)), dtype=float)


class ReciprocalSequence(WeightSequence):
    """w(n) = 1 / base(n); used to build dual chains."""

    def __init__(self, base: WeightSequence):
        self.base = base
        self.tail_ratio = _invert_limit(base.tail_ratio)
        if base.tail_bounds is not None:
            lo, hi = base.tail_bounds
            self.tail_bounds = (_invert_limit(hi), _invert_limit(lo))

    def log_value(self, n):
        return -self.base.log_value(n)

    def reciprocal(self):
        return self.base

    def __eq__(self, other):
        return isinstance(other, ReciprocalSequence) and other.base == self.base

    def __repr__(self):
        return f"ReciprocalSequence({self.base!r})"


def _invert_limit(r):
    if r is None:
        return None
    if r == 0.0:
        return math.inf
    if math.isinf(r):
        return 0.0
    return 1.0 / r


# ---------------------------------------------------------------------------
# the spec


@dataclass(frozen=True)
class BirthDeathSpec:
    """Immutable description of a birth-death chain."""

    psi: WeightSequence
    phi: WeightSequence
    lam: float
    mu: float
    cap: int | None = None
    label: str = ""

    def __post_init__(self):
        for name, v in (("lambda", self.lam), ("mu", self.mu)):
            if not (math.isfinite(v) and v > 0.0):
                raise SpecFormatError(f"{name} must be finite and positive, got {v!r}")
        if self.cap is not None and (not isinstance(self.cap, (int, np.integer)) or self.cap < 1):
            raise SpecFormatError(f"cap must be a positive integer or None, got {self.cap!r}")

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    # log psi(n) rho^n, scaled so the n = 0 term is exactly 1.  Hitting
    # probabilities from state 1 depend on the weights only through
    # psi(n)/psi(0), so this scaling keeps the closed forms exact for
    # arbitrarily scaled tables.
    def log_psi_rho(self, n):
        n = np.asarray(n)
        base = float(self.psi.log_value(0))
        return self.psi.log_value(n) - base + n * math.log(self.rho)

    def log_phi_rho(self, n):
        n = np.asarray(n)
        return self.phi.log_value(n) + n * math.log(self.rho)

    def birth_rate(self, n: int) -> float:
        if n < 0:
            raise ValueError("state must be non-negative")
        if self.cap is not None and n >= self.cap:
            raise CapExceededError(f"no birth at state {n} with cap {self.cap}")
        return self.lam * float(np.exp(self.psi.log_value(n) - self.phi.log_value(n)))

    def death_rate(self, n: int) -> float:
        if n < 1:
            raise ValueError("death rate defined for states n >= 1")
        if self.cap is not None and n > self.cap:
            raise CapExceededError(f"state {n} beyond cap {self.cap}")
        return self.mu * float(np.exp(self.psi.log_value(n - 1) - self.phi.log_value(n)))

    def dual(self) -> "BirthDeathSpec":
        """Chain with birth rate mu*phi(n)/psi(n) and death rate lam*phi(n)/psi(n-1).

        Realised by swapping the intensities and taking reciprocal weights; the
        dual of the dual reproduces the original rates exactly.
        """
        return BirthDeathSpec(
            psi=self.psi.reciprocal(),
            phi=self.phi.reciprocal(),
            lam=self.mu,
            mu=self.lam,
            cap=self.cap,
            label=f"dual({self.label})" if self.label else "dual",
        )


def birth_rate(spec: BirthDeathSpec, n: int) -> float:
    return spec.birth_rate(n)


def death_rate(spec: BirthDeathSpec, n: int) -> float:
    return spec.death_rate(n)


def mm1(lam: float, mu: float, cap: int | None = None, label: str | None = None) -> BirthDeathSpec:
    """Single server: psi = phi = 1."""
    if label is None:
        label = f"mm1(lam={lam}, mu={mu})" + (f"/cap{cap}" if cap else "")
    return BirthDeathSpec(OnesSequence(), OnesSequence(), lam, mu, cap=cap, label=label)


def mms(s: int, lam: float, mu: float, cap: int | None = None, label: str | None = None) -> BirthDeathSpec:
    """s parallel servers; service rate min(n, s)*mu."""
    if label is None:
        label = f"mms(s={s}, lam={lam}, mu={mu})" + (f"/cap{cap}" if cap else "")
    return BirthDeathSpec(MultiServerSequence(s), MultiServerSequence(s), lam, mu, cap=cap, label=label)


def mminf(lam: float, mu: float, cap: int | None = None, label: str | None = None) -> BirthDeathSpec:
    """Infinite server pool; service rate n*mu."""
    if label is None:
        label = f"mminf(lam={lam}, mu={mu})" + (f"/cap{cap}" if cap else "")
    return BirthDeathSpec(
        FactorialInverseSequence(), FactorialInverseSequence(), lam, mu, cap=cap, label=label
    )


# ---------------------------------------------------------------------------
# classification


class Verdict(str, Enum):
    POSITIVE_RECURRENT = "PositiveRecurrent"
    NULL_RECURRENT = "NullRecurrent"
    TRANSIENT = "Transient"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class _SeriesJudgement:
    value: float
    log_value: float
    convergent: bool | None  # None = inconclusive
    tail_bounded: bool


@dataclass(frozen=True)
class Classification:
    """Recurrence verdict plus the three governing series.

    ``b_phi_inv`` is sum(phi(n) rho^n), ``b_psi_inv`` is sum(psi(n) rho^n) and
    ``b_star_inv`` is sum(1/(psi(n) rho^n)); each is +inf when judged
    divergent.  The chain is positive recurrent iff b_phi_inv is finite and
    its cycle maximum is non-degenerate iff b_star_inv diverges.
    """

    verdict: Verdict
    b_phi_inv: float
    b_psi_inv: float
    b_star_inv: float
    beta_upper: float
    beta_lower: float
    beta: float | None
    regularity_ok: bool
    log_b_phi_inv: float = math.nan
    log_b_psi_inv: float = math.nan
    log_b_star_inv: float = math.nan
    b_phi_convergent: bool | None = None
    b_psi_convergent: bool | None = None
    b_star_convergent: bool | None = None
    no_tail_bound: frozenset = frozenset()

    @property
    def B_phi(self) -> float:
        return 1.0 / self.b_phi_inv

    @property
    def B_psi(self) -> float:
        return 1.0 / self.b_psi_inv

    @property
    def B_star(self) -> float:
        return 1.0 / self.b_star_inv


def _tail_geometry(seq: WeightSequence, trunc: int):
    """(liminf, limsup, limit-or-None) of w(n+1)/w(n).

    Declared tail behaviour (presets, tables) is used directly; otherwise the
    window [trunc/2, trunc] supplies empirical bounds.
    """
    if seq.tail_ratio is not None:
        r = float(seq.tail_ratio)
        return r, r, r
    if seq.tail_bounds is not None:
        lo, hi = (float(b) for b in seq.tail_bounds)
        return lo, hi, (lo if lo == hi else None)
    win = np.arange(max(1, trunc // 2), trunc)
    with np.errstate(over="ignore"):
        # an overflowing ratio is a valid (divergent) bound, not an error
        ratios = np.exp(seq.log_ratio(win))
    lo, hi = float(np.min(ratios)), float(np.max(ratios))
    limit = float(np.mean(ratios)) if hi - lo <= 1e-9 * max(1.0, abs(hi)) else None
    return lo, hi, limit


def _power_fit(n: np.ndarray, log_t: np.ndarray):
    """Fit log_t ~ log_alpha + p*log n; returns (p, log_alpha, max residual)."""
    x = np.log(n.astype(float))
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, log_t, rcond=None)
    resid = float(np.max(np.abs(design @ coef - log_t)))
    return float(coef[0]), float(coef[1]), resid


_P_MARGIN = 1e-2
_FIT_RESID_TOL = 1e-3


def _judge_series(log_term_fn, q_lo: float, q_hi: float, trunc: int, tol: float) -> _SeriesJudgement:
    """Decide convergence of sum(t_n) with term-ratio bounds [q_lo, q_hi].

    Ratio test first; near the boundary a power-law probe of the terms over
    the window [trunc/2, trunc] decides; as a last resort, non-decreasing
    terms with partial sums past 1/tol are called divergent.
    """
    idx = np.arange(trunc + 1)
    log_t = np.asarray(log_term_fn(idx), dtype=float)
    log_partial = logsumexp(log_t)

    if q_hi < 1.0 - tol:
        log_tail = log_t[-1] + math.log(q_hi) - math.log1p(-q_hi) if q_hi > 0.0 else -math.inf
        log_total = np.logaddexp(log_partial, log_tail)
        return _SeriesJudgement(float(np.exp(log_total)), float(log_total), True, True)
    if q_lo > 1.0 + tol:
        return _SeriesJudgement(math.inf, math.inf, False, False)

    win = idx[max(1, trunc // 2):]
    p, _, resid = _power_fit(win, log_t[win])
    if resid < _FIT_RESID_TOL:
        if p < -1.0 - _P_MARGIN:
            return _SeriesJudgement(float(np.exp(log_partial)), float(log_partial), True, False)
        if p > -1.0 + _P_MARGIN:
            return _SeriesJudgement(math.inf, math.inf, False, False)

    if log_partial > -math.log(tol) and np.all(np.diff(log_t[win]) >= -1e-12):
        return _SeriesJudgement(math.inf, math.inf, False, False)
    return _SeriesJudgement(float(np.exp(log_partial)), float(log_partial), None, False)


def classify(spec: BirthDeathSpec, trunc: int = 10_000, tol: float = 1e-9) -> Classification:
    """Recurrence classification via the three governing series."""
    if trunc < 10:
        raise ValueError("trunc must be at least 10")
    if not (0.0 < tol < 1.0):
        raise ValueError("tol must lie in (0, 1)")

    if spec.cap is not None:
        return _classify_finite(spec)

    log_rho = math.log(spec.rho)
    b_lo, b_hi, beta = _tail_geometry(spec.psi, trunc)
    p_lo, p_hi, _ = _tail_geometry(spec.phi, trunc)

    def phi_terms(idx):
        return spec.phi.log_value(idx) + idx * log_rho

    def psi_terms(idx):
        return spec.psi.log_value(idx) + idx * log_rho

    def star_terms(idx):
        return -psi_terms(idx)

    rho = spec.rho
    s_phi = _judge_series(phi_terms, p_lo * rho, p_hi * rho, trunc, tol)
    s_psi = _judge_series(psi_terms, b_lo * rho, b_hi * rho, trunc, tol)
    s_star = _judge_series(
        star_terms,
        _invert_limit(b_hi * rho) if b_hi > 0 else math.inf,
        _invert_limit(b_lo * rho) if b_lo > 0 else math.inf,
        trunc,
        tol,
    )

    if s_phi.convergent is True:
        verdict = Verdict.POSITIVE_RECURRENT
    elif s_star.convergent is True:
        verdict = Verdict.TRANSIENT
    elif s_phi.convergent is False and s_star.convergent is False:
        verdict = Verdict.NULL_RECURRENT
    else:
        verdict = Verdict.UNDETERMINED

    regularity_ok = _regularity(spec, trunc, tol)

    flags = frozenset(
        name
        for name, s in (("b_phi_inv", s_phi), ("b_psi_inv", s_psi), ("b_star_inv", s_star))
        if s.convergent is not False and not s.tail_bounded
    )
    return Classification(
        verdict=verdict,
        b_phi_inv=s_phi.value,
        b_psi_inv=s_psi.value,
        b_star_inv=s_star.value,
        beta_upper=b_hi,
        beta_lower=b_lo,
        beta=beta,
        regularity_ok=regularity_ok,
        log_b_phi_inv=s_phi.log_value,
        log_b_psi_inv=s_psi.log_value,
        log_b_star_inv=s_star.log_value,
        b_phi_convergent=s_phi.convergent,
        b_psi_convergent=s_psi.convergent,
        b_star_convergent=s_star.convergent,
        no_tail_bound=flags,
    )


def _classify_finite(spec: BirthDeathSpec) -> Classification:
    # Finite state space: every series is a finite sum and the chain is ergodic.
    idx = np.arange(spec.cap + 1)
    log_rho = math.log(spec.rho)
    lp = logsumexp(spec.phi.log_value(idx) + idx * log_rho)
    ls = logsumexp(spec.psi.log_value(idx) + idx * log_rho)
    lstar = logsumexp(-(spec.psi.log_value(idx) + idx * log_rho))
    return Classification(
        verdict=Verdict.POSITIVE_RECURRENT,
        b_phi_inv=float(np.exp(lp)),
        b_psi_inv=float(np.exp(ls)),
        b_star_inv=float(np.exp(lstar)),
        beta_upper=0.0,
        beta_lower=0.0,
        beta=0.0,
        regularity_ok=True,
        log_b_phi_inv=float(lp),
        log_b_psi_inv=float(ls),
        log_b_star_inv=float(lstar),
        b_phi_convergent=True,
        b_psi_convergent=True,
        b_star_convergent=True,
    )


def _regularity(spec: BirthDeathSpec, trunc: int, tol: float) -> bool:
    """Heuristic divergence check of sum phi(n)/(psi(n) + psi(n-1)).

    Divergence rules out explosion; treated as diagnostic only, so the series
    is flagged non-regular only when conclusively convergent.
    """

    def u_terms(idx):
        idx = np.maximum(idx, 1)  # the n = 0 term is irrelevant for divergence
        denom = np.logaddexp(spec.psi.log_value(idx), spec.psi.log_value(idx - 1))
        return spec.phi.log_value(idx) - denom

    win = np.arange(max(1, trunc // 2), trunc)
    lt = np.asarray(u_terms(win), dtype=float)
    ratios = np.exp(np.diff(lt))
    q_lo = float(np.min(ratios))
    q_hi = float(np.max(ratios))
    # a window extremum only bounds the tail ratio when the ratios are not
    # drifting across it; slowly varying terms (ratio -> 1, e.g. harmonic)
    # must fall through to the power-law probe instead of the ratio test
    drift = float(ratios[-1] - ratios[0])
    if drift > 1e-12:
        q_hi = max(q_hi, 1.0)
    elif drift < -1e-12:
        q_lo = min(q_lo, 1.0)
    judgement = _judge_series(u_terms, q_lo, q_hi, trunc, tol)
    return judgement.convergent is not True


# ---------------------------------------------------------------------------
# stationary laws


def stationary_distribution(
    spec: BirthDeathSpec,
    n_max: int,
    classification: Classification | None = None,
) -> np.ndarray:
    """P(X = n) for n = 0..n_max under the phi-weighted stationary law."""
    cls = classification if classification is not None else classify(spec)
    if cls.verdict is not Verdict.POSITIVE_RECURRENT:
        raise NotPositiveRecurrentError(f"verdict is {cls.verdict.value}")
    hi = n_max if spec.cap is None else min(n_max, spec.cap)
    idx = np.arange(hi + 1)
    pi = np.exp(spec.log_phi_rho(idx) - cls.log_b_phi_inv)
    if hi < n_max:  # states beyond the cap carry no mass
        pi = np.concatenate([pi, np.zeros(n_max - hi)])
    return pi


def palm_distribution(
    spec: BirthDeathSpec,
    n_max: int,
    classification: Classification | None = None,
) -> np.ndarray:
    """The psi-weighted companion law, defined when sum(psi(n) rho^n) is finite."""
    cls = classification if classification is not None else classify(spec)
    if cls.b_psi_convergent is not True:
        raise PalmUndefinedError("sum(psi(n) rho^n) does not converge")
    hi = n_max if spec.cap is None else min(n_max, spec.cap)
    idx = np.arange(hi + 1)
    log_rho = math.log(spec.rho)
    pi = np.exp(spec.psi.log_value(idx) + idx * log_rho - cls.log_b_psi_inv)
    if hi < n_max:
        pi = np.concatenate([pi, np.zeros(n_max - hi)])
    return pi


# ---------------------------------------------------------------------------
# file format


_PRESETS = {"mm1", "mms", "mminf"}


def _sequence_from_dict(d: dict, where: str) -> WeightSequence:
    if not isinstance(d, dict) or "kind" not in d:
        raise SpecFormatError(f"{where}: expected an object with a 'kind' field")
    kind = d["kind"]
    if kind == "preset":
        name = d.get("name")
        if name not in _PRESETS:
            raise SpecFormatError(f"{where}: unknown preset {name!r}")
        if name == "mm1":
            return OnesSequence()
        if name == "mminf":
            return FactorialInverseSequence()
        if "s" not in d:
            raise SpecFormatError(f"{where}: preset 'mms' needs a server count 's'")
        return MultiServerSequence(d["s"])
    if kind == "table":
        try:
            return TableSequence(d["values"], d["tail_ratio"])
        except KeyError as exc:
            raise SpecFormatError(f"{where}: table needs {exc.args[0]!r}") from None
    raise SpecFormatError(f"{where}: unknown kind {kind!r}")


def _require_number(d: dict, key: str, where: str) -> float:
    if key not in d:
        raise SpecFormatError(f"{where}: missing field {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SpecFormatError(f"{where}: field {key!r} must be a finite number")
    return float(v)


def spec_from_dict(d: dict) -> BirthDeathSpec:
    if not isinstance(d, dict):
        raise SpecFormatError("spec must be a JSON object")
    lam = _require_number(d, "lambda", "spec")
    mu = _require_number(d, "mu", "spec")
    cap = d.get("cap")
    if cap is not None:
        if isinstance(cap, bool) or not isinstance(cap, int):
            raise SpecFormatError("spec: cap must be an integer or null")
    label = d.get("label", "")
    if not isinstance(label, str):
        raise SpecFormatError("spec: label must be a string")
    psi = _sequence_from_dict(d.get("psi"), "psi")
    phi = _sequence_from_dict(d.get("phi"), "phi")
    return BirthDeathSpec(psi=psi, phi=phi, lam=lam, mu=mu, cap=cap, label=label)


def spec_to_dict(spec: BirthDeathSpec) -> dict:
    return {
        "label": spec.label,
        "lambda": spec.lam,
        "mu": spec.mu,
        "cap": spec.cap,
        "psi": spec.psi.to_json(),
        "phi": spec.phi.to_json(),
    }


def _reject_constant(s: str):
    raise SpecFormatError(f"non-finite number {s!r} not permitted in spec files")


def load_spec(path) -> BirthDeathSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"{path}: {exc}") from None
    return spec_from_dict(d)


def save_spec(spec: BirthDeathSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")
