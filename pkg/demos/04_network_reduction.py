#!/usr/bin/env python3
"""Collapsing a service network onto one birth-death chain.

Builds a three-station mixed network, solves its traffic equations, compares
the population-level normalising constants computed three ways, reduces the
network to its induced single chain, and checks the reduced cycle-maximum law
against a seeded network simulation.  The closing section measures how large
the reduction error can get on a topology with no direct exits.
"""

import numpy as np

from cyclemax import (
    CycleMaxDistribution,
    NetworkSpec,
    SimConfig,
    Station,
    aggregate_constants,
    empirical_cdf,
    harrison_closed_form,
    network_beta,
    norton_reduce,
    simulate_network_cycles,
    station_loads,
)


def section(title):
    print()
    print(title)
    print("-" * len(title))


def mixed():
    return NetworkSpec(
        mu0=0.25,
        stations=(Station("ss", 1.0), Station("ms", 1.0, s=2), Station("is", 0.5)),
        routing=(
            (0.0, 0.5, 0.3, 0.2),
            (0.2, 0.1, 0.4, 0.3),
            (0.5, 0.2, 0.1, 0.2),
            (0.6, 0.2, 0.1, 0.1),
        ),
    )


def tandem(mu0=0.3, mu=1.0):
    return NetworkSpec(
        mu0=mu0,
        stations=(Station("ss", mu), Station("ss", mu)),
        routing=((0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
    )


def ring(rates):
    j = len(rates)
    routing = np.zeros((j + 1, j + 1))
    for i in range(j):
        routing[i, i + 1] = 1.0
    routing[j, 0] = 1.0
    return NetworkSpec(
        mu0=0.1,
        stations=tuple(Station("ss", m) for m in rates),
        routing=tuple(map(tuple, routing)),
    )


def main():
    net = mixed()

    section("Relative loads from the traffic equations")
    loads = station_loads(net)
    for i, (st, rho) in enumerate(zip(net.stations, loads), start=1):
        print(f"station {i} ({st.kind:2s})  rho = {rho:.4f}")

    section("Population normalising constants, two ways")
    psi, _ = aggregate_constants(net, 8)
    red = norton_reduce(net, n_max=8)
    print(f"{'N':>2s} {'convolution':>14s} {'reduction':>14s}")
    for n in range(1, 9):
        print(f"{n:2d} {psi[n]:14.6e} {red.psi[n]:14.6e}")

    beta, mult = network_beta(net)
    print(f"tail ratio of the induced chain: beta = {beta:.4f}"
          f" (bottleneck multiplicity {mult})")

    section("Residue closed form on a single-server ring, distinct loads")
    r = ring([5.0, 2.0, 1.25])
    r_loads = station_loads(r)
    r_psi, _ = aggregate_constants(r, 6)
    print(f"loads: {np.round(r_loads, 4)}")
    print(f"{'N':>2s} {'convolution':>14s} {'residue form':>14s}")
    for n in range(1, 7):
        print(f"{n:2d} {r_psi[n]:14.6e} {harrison_closed_form(r_loads, n):14.6e}")

    section("Induced single-chain law vs simulated network cycles")
    dist = CycleMaxDistribution(red.induced)
    sample = simulate_network_cycles(net, SimConfig(seed=11, cycles=20_000))
    levels = np.arange(1, 7)
    emp = empirical_cdf(sample.maxima, levels)
    print(f"{'N':>2s} {'reduced cdf':>12s} {'simulated':>12s} {'gap':>9s}")
    for n, e in zip(levels, emp):
        f = dist.cdf(int(n))
        print(f"{n:2d} {f:12.4f} {e:12.4f} {abs(f - e):9.4f}")
    print("every customer here can leave from any station, so the reduced")
    print("law tracks the true cycle maximum to within simulation noise.")

    section("The reduction is not exact on every topology")
    t = tandem()
    tred = norton_reduce(t, n_max=8)
    tdist = CycleMaxDistribution(tred.induced)
    tsample = simulate_network_cycles(t, SimConfig(seed=11, cycles=20_000))
    temp = empirical_cdf(tsample.maxima, np.arange(1, 5))
    print("closed tandem loop, exits only through the source:")
    print(f"{'N':>2s} {'reduced cdf':>12s} {'simulated':>12s} {'gap':>9s}")
    for n, e in zip(range(1, 5), temp):
        f = tdist.cdf(n)
        print(f"{n:2d} {f:12.4f} {e:12.4f} {abs(f - e):9.4f}")
    print("the visible gap at N=1 is a property of the reduction itself:")
    print("it preserves the stationary law exactly, but the path to a new")
    print("population record differs once customers must travel in series.")


if __name__ == "__main__":
    main()
