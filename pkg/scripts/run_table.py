"""Run the 18-condition comparison (3 scenarios x 3 topologies x 2 algorithms)
and write per-condition CSVs plus a summary.

    python3 scripts/run_table.py                  # desk scale: 20 runs x 100 steps
    python3 scripts/run_table.py --runs 100       # full scale
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from maxtrust import simulator as sim


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="results/table")
    args = p.parse_args()

    configs = [
        sim.ScenarioConfig(scenario=s, topology=t, timesteps=args.steps, seed=args.seed)
        for s in sim.SCENARIOS
        for t in sim.TOPOLOGIES
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    records = sim.run_conditions(configs, args.runs, args.jobs)
    for c in configs:
        recs = [r for r in records if r.config == c]
        (out / f"scenario{c.scenario}_{c.topology}.csv").write_text(sim.records_csv(recs))
    rows = sim.aggregate(records)
    (out / "summary.csv").write_text(sim.summary_csv(rows))

    by_key = {(r.scenario, r.topology, r.algorithm): r for r in rows}
    print(f"{'scenario':>8} {'topology':>8} {'ET mean':>9} {'MT mean':>9} {'ET/MT':>7} failed")
    for c in configs:
        et, mt = by_key[c.scenario, c.topology, "ET"], by_key[c.scenario, c.topology, "MT"]
        print(f"{c.scenario:>8} {c.topology:>8} {et.mean:9.4f} {mt.mean:9.4f} {et.mean / mt.mean:7.2f} {et.failed}")
    print(f"{len(records)} runs in {time.perf_counter() - t0:.0f} s -> {out}")


if __name__ == "__main__":
    main()
