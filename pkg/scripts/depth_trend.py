#!/usr/bin/env python3
"""Robustness against tree depth at matched training accuracy.

For each seed: draw a synthetic dataset, train a shallow and a deep booster
whose training accuracies agree within the tolerance, run a campaign on the
same inputs for both, and record rho. Prints per-seed rows and the medians,
and writes them as CSV.

    python3 scripts/depth_trend.py --out depth_trend.csv
"""

import argparse
import csv
import statistics
import time
from fractions import Fraction

from verigb.booster import synth_dataset
from verigb.campaign import matched_accuracy_pair, select_inputs
from verigb.query import RobustnessQuery
from verigb.robustness import check_universal
from verigb.solver import SolverConfig, default_command


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dataset", default="blobs", choices=["blobs", "rings"])
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--shallow", type=int, default=2)
    p.add_argument("--deep", type=int, default=5)
    p.add_argument("--deep-trees", type=int, default=10)
    p.add_argument("--max-shallow-trees", type=int, default=40)
    p.add_argument("--learning-rate", default="3/10")
    p.add_argument("--tolerance", default="1/50")
    p.add_argument("--epsilon", nargs="+", default=["1", "2", "4"])
    p.add_argument("--inputs", type=int, default=20)
    p.add_argument("--budget", type=float, default=60.0)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--out", default="depth_trend.csv")
    args = p.parse_args()

    cfg = SolverConfig(default_command(), args.budget)
    eps = [Fraction(e) for e in args.epsilon]
    rows = []
    start = time.monotonic()
    for seed in range(args.seeds):
        data = synth_dataset(args.dataset, args.n, seed, n_features=args.features)
        pair = matched_accuracy_pair(
            data, args.shallow, args.deep, args.deep_trees, args.max_shallow_trees,
            args.learning_rate, seed, Fraction(args.tolerance),
        )
        if pair is None:
            print(f"seed {seed}: no accuracy-matched pair, skipped")
            continue
        idx = select_inputs(data, "random-k", args.inputs, seed)
        template = RobustnessQuery.make([0] * len(data.features), eps[0], None, "inf", True)
        for depth, model, acc in ((args.shallow, pair[0], pair[2]), (args.deep, pair[1], pair[3])):
            report = check_universal(model, [data.rows[i] for i in idx], template, eps, cfg, width=args.width)
            for agg in report.aggregates:
                rows.append({
                    "seed": seed,
                    "depth": depth,
                    "n_trees": len(model.regressors[0].trees),
                    "accuracy": float(acc),
                    "epsilon": str(agg.epsilon),
                    "rho": float(agg.rho),
                    "ce": float(agg.ce_fraction),
                    "timeout": float(agg.timeout_fraction),
                })
                print(f"seed {seed} depth {depth:2d} trees {rows[-1]['n_trees']:3d} acc {float(acc):.3f} eps {agg.epsilon}: rho {float(agg.rho):.3f}")

    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["seed"])
        w.writeheader()
        w.writerows(rows)
    print(f"\n{len(rows)} rows written to {args.out} ({time.monotonic() - start:.1f}s)")
    for e in eps:
        meds = {
            d: statistics.median(r["rho"] for r in rows if r["depth"] == d and r["epsilon"] == str(e))
            for d in (args.shallow, args.deep)
            if any(r["depth"] == d and r["epsilon"] == str(e) for r in rows)
        }
        print(f"eps {e}: median rho " + ", ".join(f"depth {d} = {m:.3f}" for d, m in meds.items()))


if __name__ == "__main__":
    main()
