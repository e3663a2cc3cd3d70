#!/usr/bin/env python3
"""Growth of the record cycle maximum over many cycles.

Prints the norming constants for each weight family, checks simulated
k-cycle records against the distribution-free envelope, shows the
envelope that any partial limit must respect, and finishes with the
compactness certificate and the almost-sure growth constant.
"""

import numpy as np

from cyclemax import (
    SimConfig,
    as_limit_constant,
    compactness_diagnostic,
    default_norming_kind,
    gumbel_bounds,
    mm1,
    mminf,
    mms,
    norming_constants,
    partial_limit_envelope,
    sample_maxima,
    verify_as_convergence,
)


def section(title):
    print()
    print(title)
    print("-" * len(title))


def main():
    chains = [
        ("single server, rho=0.5", mm1(0.5, 1.0)),
        ("two servers, rho=1.2", mms(2, 1.2, 1.0)),
        ("infinite servers, rho=2.0", mminf(2.0, 1.0)),
    ]

    section("Norming constants by weight family")
    ks = [10**3, 10**5, 10**7]
    for name, spec in chains:
        kind = default_norming_kind(spec)
        nc = norming_constants(spec, kind, ks)
        print(f"{name}  ({kind.value})")
        for k, a, b in zip(nc.k, nc.a, nc.b):
            print(f"  k={k:>9d}  a_k={a:9.4f}  b_k={b:9.4f}")

    section("Simulated records inside the Gumbel envelope (k=1000)")
    spec = mm1(0.5, 1.0)
    k = 1000
    maxima = sample_maxima(spec, k, reps=4000, cfg=SimConfig(seed=99, cycles=k))
    print(f"{'x':>5s} {'lower':>8s} {'empirical':>10s} {'upper':>8s}")
    for x in (-1.0, 0.0, 1.0, 2.0, 3.0):
        gb = gumbel_bounds(spec, x, k)
        emp = float(np.mean(maxima <= gb.y_upper))
        print(f"{x:5.1f} {gb.lower:8.4f} {emp:10.4f} {gb.upper:8.4f}")

    section("Envelope for every partial limit along k")
    print("limit points of P(Y_max <= a_k x + b_k) stay inside these bands:")
    for x in (-1.0, 0.0, 1.0, 2.0):
        lo, hi = partial_limit_envelope(spec, x)
        print(f"  x={x:4.1f}  [{lo:.4f}, {hi:.4f}]")

    section("Compactness of the renormalised family")
    for name, s in (("single server, rho=0.5", mm1(0.5, 1.0)),
                    ("infinite servers, rho=2.0", mminf(2.0, 1.0))):
        rep = compactness_diagnostic(s)
        print(f"{name:28s} verdict: {rep.verdict}")

    section("Almost-sure growth of the record")
    print(f"theoretical slope a* = {as_limit_constant(spec):.6f}")
    rows = verify_as_convergence(spec, [10**3, 10**4, 10**5], reps=400,
                                 cfg=SimConfig(seed=314, cycles=10**3))
    print(f"{'k':>8s} {'b_k':>9s} {'mean M/b_k':>11s} {'5%':>7s} {'95%':>7s}")
    for r in rows:
        print(f"{r.k:8d} {r.b_k:9.3f} {r.mean_ratio:11.4f}"
              f" {r.q05:7.3f} {r.q95:7.3f}")


if __name__ == "__main__":
    main()
