#!/usr/bin/env python3
"""Run original vs modified variants of both geolocation algorithms on the
bundled topology and print the headline comparison.

Usage: python scripts/run_geoloc_comparison.py [--config cn-like] [--seed 42]
       [--targets 100]
"""

import argparse

from rtdcorr import experiments, netsim


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="cn-like")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--targets", type=int, default=100)
    args = ap.parse_args()

    config = netsim.resolve_config(args.config)
    print(f"preparing campaign ({args.config}, seed {args.seed}) ...")
    campaign = experiments.prepare_campaign(config, args.seed)
    truth = campaign.topology.registry

    fmt = lambda v: "n/a" if v is None else f"{v:.3f}"
    for algorithm in ("geoget", "cbg"):
        for mode in ("original", "modified"):
            spec = experiments.ExperimentSpec(
                config=args.config, algorithm=algorithm, mode=mode,
                seed=args.seed, n_targets=args.targets,
            )
            outcomes = experiments.run_experiment(spec, campaign)
            report = experiments.evaluate_outcomes(outcomes, truth)
            print(
                f"{algorithm:>6}/{mode:<8}  located {report.n_located}/{report.n_total}"
                f"  median_km {fmt(report.median_km)}"
                f"  mean_km {fmt(report.mean_km)}"
                f"  city_acc {fmt(report.city_accuracy)}"
            )


if __name__ == "__main__":
    main()
