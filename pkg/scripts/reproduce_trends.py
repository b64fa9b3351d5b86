#!/usr/bin/env python3
"""Reproduce the headline benchmark trends and write plot-ready CSVs.

Runs the proposed active-surface full-duplex scheme against the baselines
over a jamming-budget grid, plus single-scheme sweeps over the Alice power
budget, the amplification cap, and the surface/antenna dimensions.  All
sweeps use common random numbers across schemes and grid points so the
curves are paired.  Expect roughly 10-20 minutes at the default reduced
dimensions; pass --full for the K=16, M=4 setup from the reference
parameter set (hours).
"""

import argparse
import os
import time

from covertnoma import bench
from covertnoma.scenario import Scenario, dbm_to_watt, db_to_amplitude


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="trend_results")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--full", action="store_true",
                    help="run at K=16, M=4 instead of the reduced K=6, M=2")
    args = ap.parse_args()

    overrides = {} if args.full else dict(num_elements=6, num_antennas=2)
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    scenario = Scenario().with_overrides(**overrides)
    os.makedirs(args.out, exist_ok=True)

    runs = [
        ("budget_jam",
         [0.0] + [dbm_to_watt(d) for d in (0.0, 10.0, 15.0, 20.0)],
         ["proposed_A_FD", "HD", "random_theta_A", "passive_IOS_FD"]),
        ("budget_alice",
         [dbm_to_watt(d) for d in (10.0, 15.0, 20.0, 25.0, 30.0)],
         ["proposed_A_FD", "HD"]),
        ("amp_max",
         [db_to_amplitude(d) for d in (0.0, 5.0, 10.0, 15.0)],
         ["proposed_A_FD"]),
        ("num_elements", [4, 6, 8, 12], ["proposed_A_FD"]),
        ("num_antennas", [1, 2, 3, 4], ["proposed_A_FD"]),
    ]

    for parameter, grid, schemes in runs:
        t0 = time.monotonic()
        results = bench.sweep(parameter, grid, scenario, schemes,
                              trials=args.trials, workers=args.workers)
        for name, res in results.items():
            bench.write_detail_csv(
                os.path.join(args.out, f"sweep_{parameter}_{name}.csv"), res)
        bench.write_summary_csv(
            os.path.join(args.out, f"sweep_{parameter}_summary.csv"), results)
        dt = time.monotonic() - t0
        print(f"[{dt:6.1f}s] {parameter}:")
        for name in schemes:
            means = " ".join(f"{m:8.4f}" for m in results[name].means)
            print(f"    {name:16s} {means}")


if __name__ == "__main__":
    main()
