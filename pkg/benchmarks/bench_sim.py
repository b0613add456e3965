"""Throughput of the compiled cycle kernel against the numpy fallback.

Usage: python benchmarks/bench_sim.py [--cycles N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

from coopamc.channel import Topology, derive_topology, load_table, sr_packet_error
from coopamc.design import design_link
from coopamc.sim import backends, simulate_range


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cycles", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--nr", type=int, default=2)
    parser.add_argument("--pbar-db", type=float, default=10.0)
    args = parser.parse_args()

    table = load_table()
    g1, g2, gsr = derive_topology(Topology.from_db(args.pbar_db))
    d_sd, d_rd = design_link(table, g1, 0.3), design_link(table, g2, 0.05)
    eps = [sr_packet_error(m, gsr) for m in table]

    results = {}
    for name in backends():
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            stats = simulate_range(d_sd, d_rd, eps, args.nr, 1, 0, args.cycles, backend=name)
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, stats)
        print(f"{name:>7}: {best:7.3f} s  {args.cycles / best / 1e6:7.2f} M cycles/s  eta_hat={stats.eta_hat:.6f}")

    if len(results) == 2:
        (t_c, s_c), (t_p, s_p) = results["cython"], results["python"]
        print(f"speedup: {t_p / t_c:.2f}x  histograms identical: {s_c.histogram == s_p.histogram}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
