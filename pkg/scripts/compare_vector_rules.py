"""Check each MaxTrust vector rule against the direct max-plus iteration.

For random reducible trust matrices, counts how often the ranking at T
disagrees with the exact T-step iterate, and how far the values are off.
"""

from __future__ import annotations

import argparse

import numpy as np

from maxtrust import trust as tr
from maxtrust.randmat import random_reducible


def ranking_ok(values, oracle, tie=1e-9) -> bool:
    with np.errstate(invalid="ignore"):
        do = oracle[:, None] - oracle[None, :]
        dv = values[:, None] - values[None, :]
    do, dv = np.nan_to_num(do, nan=0.0), np.nan_to_num(dv, nan=0.0)
    clear = np.abs(do) > tie
    return bool(np.all(np.sign(dv[clear]) == np.sign(do[clear])))


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    misses = {rule: 0 for rule in tr.VECTOR_RULES}
    worst = {rule: 0.0 for rule in tr.VECTOR_RULES}
    for _ in range(args.cases):
        n = int(rng.integers(2, 11))
        d = random_reducible(rng, n, int(rng.integers(2, min(4, n) + 1)))
        w = rng.uniform(-1, 1, n)
        oracle = tr.recurrence_oracle(d, w, args.T)
        for rule in tr.VECTOR_RULES:
            t = tr.maxtrust(d.T, w=w, T=args.T, vector_rule=rule).t.values
            misses[rule] += not ranking_ok(t, oracle)
            worst[rule] = max(worst[rule], float(np.abs(t - oracle).max()))
    for rule in tr.VECTOR_RULES:
        print(f"{rule:>18}: ranking misses {misses[rule]}/{args.cases}, max |t - oracle| = {worst[rule]:.3g}")


if __name__ == "__main__":
    main()
