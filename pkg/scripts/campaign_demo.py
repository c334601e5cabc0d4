#!/usr/bin/env python3
"""End-to-end demo: synthetic data, training, a campaign, and a rendered counter-example.

Writes everything under --workdir (default ./demo):

    data.csv (+ .schema.json), model.json, campaign.json,
    report/report.json, report/summary.txt, report/counterexamples/*.json,
    images/*.pgm for the first counter-example found.

The classifier variant uses 4 blob features, drawn as a 2x2 grayscale image.
The regressor variant uses housing-like data with a price tolerance delta.
"""

import argparse
import json
from pathlib import Path

from verigb.booster import TrainConfig, save_dataset, synth_dataset, train
from verigb.campaign import CampaignConfig, run_campaign
from verigb.images import ImageSpec, render_counterexample
from verigb.modelio import save_model
from verigb.verdict import CounterExample


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--task", default="classifier", choices=["classifier", "regressor"])
    p.add_argument("--workdir", default="demo")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    if args.task == "classifier":
        data = synth_dataset("blobs", 300, args.seed)
        cfg = TrainConfig(20, 3, "1/5", "classification", args.seed)
        epsilons, delta = ["1", "2", "4"], None
    else:
        data = synth_dataset("housing-like", 300, args.seed)
        cfg = TrainConfig(20, 3, "1/5", "regression", args.seed)
        epsilons, delta = ["10", "100"], "5000000"  # price in cents: 50,000.00

    save_dataset(data, work / "data.csv")
    model = train(data, cfg)
    save_model(model, work / "model.json")
    campaign = {
        "model": "model.json",
        "dataset": "data.csv",
        "epsilons": epsilons,
        "delta": delta,
        "selection": {"mode": "random-k", "k": 15, "seed": args.seed},
        "clamp": True,
        "budget": 60,
        "width": 4,
        "output": "report",
    }
    (work / "campaign.json").write_text(json.dumps(campaign, indent=1) + "\n")

    report = run_campaign(CampaignConfig.load(work / "campaign.json"))
    print(report.table())

    ces = sorted((work / "report" / "counterexamples").glob("*.json")) if (work / "report" / "counterexamples").exists() else []
    if ces and args.task == "classifier":
        ce = CounterExample.from_json(json.loads(ces[0].read_text()))
        paths = render_counterexample(ce, ImageSpec(2, 2), work / "images", ces[0].stem)
        print("rendered", ", ".join(str(p) for p in paths.values()))
    print(f"outputs in {work}/")


if __name__ == "__main__":
    main()
