"""Regenerative Monte-Carlo for cycle maxima.

A busy cycle starts with the jump 0 -> 1 and ends on the return to 0.  The
maximum over the cycle depends only on the embedded up/down decisions, so
holding times are never sampled.  Replications draw from substreams keyed by
(seed, replication index), which makes results independent of execution
order and safe to run concurrently.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bdp import BirthDeathSpec, classify
from .distribution import CycleMaxDistribution
from .errors import EscapedCycleError, NotApplicableError
from .extremes import as_limit_constant

__all__ = [
    "ESCAPED",
    "SimConfig",
    "CycleSample",
    "simulate_cycle",
    "simulate_cycles",
    "sample_maxima",
    "ConvergenceRow",
    "verify_as_convergence",
    "empirical_cdf",
    "ks_two_sample",
    "KS_CRIT_1PCT",
]

KS_CRIT_1PCT = 1.628  # two-sample Kolmogorov-Smirnov c(alpha) at alpha = 0.01


class _Escaped:
    """Sentinel for a cycle that hit the escape horizon instead of returning."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "ESCAPED"


ESCAPED = _Escaped()


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    cycles: int = 10_000
    escape_horizon: int = 1_000
    replications: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.cycles < 1 or self.replications < 1:
            raise ValueError("cycles and replications must be positive")
        if self.escape_horizon < 10:
            raise ValueError("escape_horizon must be at least 10")


@dataclass(frozen=True)
class CycleSample:
    """Recorded maxima of returned cycles plus the count that escaped."""

    maxima: np.ndarray
    escaped: int

    @property
    def cycles(self) -> int:
        return len(self.maxima) + self.escaped

    @property
    def escaped_fraction(self) -> float:
        return self.escaped / self.cycles


def _threads() -> int:
    raw = os.environ.get("CYCLEMAX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _up_probabilities(spec: BirthDeathSpec, horizon: int) -> np.ndarray:
    """P(step up | leave n) for n = 1..horizon-1; 0 at and beyond any cap.

    phi cancels between the birth and death rate at the same state, so only
    the psi ratio and the intensity ratio enter.
    """
    n = np.arange(1, horizon)
    log_psi = np.asarray(spec.psi.log_value(np.arange(horizon)), dtype=float)
    logit = math.log(spec.lam) - math.log(spec.mu) + (log_psi[1:] - log_psi[:-1])
    p = 1.0 / (1.0 + np.exp(-logit))
    if spec.cap is not None:
        p[n >= spec.cap] = 0.0
    return p


def simulate_cycle(spec: BirthDeathSpec, rng: np.random.Generator, escape_horizon: int = 1_000):
    """One busy cycle; returns the maximum level or ESCAPED at the horizon."""
    p_up = _up_probabilities(spec, escape_horizon)
    state, peak = 1, 1
    while state:
        if state >= escape_horizon:
            return ESCAPED
        if rng.random() < p_up[state - 1]:
            state += 1
            peak = max(peak, state)
        else:
            state -= 1
    return peak


def _simulate_batch(
    spec: BirthDeathSpec, n_cycles: int, rng: np.random.Generator, horizon: int
) -> tuple[np.ndarray, int]:
    """Vectorised cycles; returns (maxima of returned cycles, escaped count).

    All live cycles advance one jump per pass; finished ones are compacted
    out so late stragglers do not drag full-width arrays along.
    """
    p_up = _up_probabilities(spec, horizon)
    state = np.ones(n_cycles, dtype=np.int64)
    peak = np.ones(n_cycles, dtype=np.int64)
    out = np.empty(n_cycles, dtype=np.int64)
    slot = np.arange(n_cycles)
    escaped = 0
    while state.size:
        up = rng.random(state.size) < p_up[state - 1]
        np.add(state, np.where(up, 1, -1), out=state)
        np.maximum(peak, state, out=peak)
        done = state == 0
        gone = state >= horizon
        if done.any():
            out[slot[done]] = peak[done]
        if gone.any():
            escaped += int(gone.sum())
            out[slot[gone]] = -1
        live = ~(done | gone)
        if not live.all():
            state, peak, slot = state[live], peak[live], slot[live]
    return out[out > 0], escaped


def simulate_cycles(spec: BirthDeathSpec, cfg: SimConfig) -> CycleSample:
    """cfg.cycles independent busy cycles under cfg.seed."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
    maxima, escaped = _simulate_batch(spec, cfg.cycles, rng, cfg.escape_horizon)
    return CycleSample(maxima=maxima, escaped=escaped)


def empirical_cdf(maxima: np.ndarray, levels) -> np.ndarray:
    """Fraction of recorded maxima at or below each level."""
    maxima = np.sort(np.asarray(maxima))
    levels = np.asarray(levels)
    return np.searchsorted(maxima, levels, side="right") / len(maxima)


def _inversion_table(dist: CycleMaxDistribution, k: int, g_min: float) -> np.ndarray:
    """H(n) = -k log F(n) for n = 1.., extended until it falls below g_min.

    A draw G ~ Exp(1) maps to the smallest n with H(n) <= G, which realises
    the max of k cycles in one uniform.  Survival enters through log1p of
    the exact log-scale CDF, so no near-one cancellation occurs.
    """
    floor = min(g_min, 1e-12)
    n_hi = 64
    while True:
        if dist.spec.cap is not None:
            n_hi = dist.spec.cap
            levels = np.arange(1, n_hi + 1)
            h = -k * np.log1p(-np.exp(-np.asarray(dist.log_cumulative(levels), dtype=float)))
            h[-1] = 0.0  # the cap is reached with the remaining mass
            return h
        levels = np.arange(1, n_hi + 1)
        h = -k * np.log1p(-np.exp(-np.asarray(dist.log_cumulative(levels), dtype=float)))
        if h[-1] <= floor:
            return h
        n_hi *= 2


def sample_maxima(
    spec: BirthDeathSpec,
    k: int,
    reps: int,
    cfg: SimConfig | None = None,
    mode: str = "inversion",
) -> np.ndarray:
    """reps realisations of the maximum over k cycles.

    mode "inversion" samples from the exact law (fast path, any k); mode
    "jump" simulates every cycle and raises if one escapes, since the sample
    maximum is then unbounded.
    """
    cfg = cfg if cfg is not None else SimConfig()
    if k < 1 or reps < 1:
        raise ValueError("k and reps must be positive")
    if mode == "inversion":
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
        g = rng.standard_exponential(reps)
        dist = CycleMaxDistribution(spec)
        h = _inversion_table(dist, k, float(np.min(g)))
        return 1 + np.searchsorted(-h, -g, side="left").astype(np.int64)
    if mode != "jump":
        raise ValueError(f"unknown mode {mode!r}")

    def one(rep: int) -> int:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, rep]))
        maxima, escaped = _simulate_batch(spec, k, rng, cfg.escape_horizon)
        if escaped:
            raise EscapedCycleError(
                f"replication {rep}: {escaped} of {k} cycles escaped; "
                "sample maxima need a recurrent chain"
            )
        return int(maxima.max())

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(one, range(reps)), dtype=np.int64, count=reps)
    return np.fromiter((one(r) for r in range(reps)), dtype=np.int64, count=reps)


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    b_k: float
    mean_ratio: float
    median_ratio: float
    q05: float
    q95: float


def verify_as_convergence(
    spec: BirthDeathSpec,
    k_grid,
    reps: int = 500,
    cfg: SimConfig | None = None,
) -> list[ConvergenceRow]:
    """Summaries of Y^(k)/b_k per k; the band should tighten around 1."""
    cfg = cfg if cfg is not None else SimConfig()
    cls = classify(spec)
    rows = []
    for i, k in enumerate(int(k) for k in k_grid):
        if spec.cap is not None:
            b_k = float(spec.cap)
        else:
            b_k = as_limit_constant(spec, k)
            if isinstance(b_k, tuple):
                raise NotApplicableError(
                    "normaliser is only bracketed for this spec; no single b_k"
                )
        sub = SimConfig(
            seed=cfg.seed + i,
            cycles=cfg.cycles,
            escape_horizon=cfg.escape_horizon,
            replications=cfg.replications,
        )
        ratios = sample_maxima(spec, k, reps, sub, mode="inversion") / b_k
        rows.append(
            ConvergenceRow(
                k=k,
                b_k=b_k,
                mean_ratio=float(np.mean(ratios)),
                median_ratio=float(np.median(ratios)),
                q05=float(np.quantile(ratios, 0.05)),
                q95=float(np.quantile(ratios, 0.95)),
            )
        )
    _ = cls
    return rows


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic for integer-valued samples."""
    a = np.sort(np.asarray(a))
    b = np.sort(np.asarray(b))
    values = np.union1d(a, b)
    fa = np.searchsorted(a, values, side="right") / len(a)
    fb = np.searchsorted(b, values, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))
