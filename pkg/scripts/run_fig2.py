#!/usr/bin/env python3
"""Feedback-example sweep: corrected and uncorrected <Z_0> vs r for a grid of
initial rotation angles, enumerating all 64 injection instances per point."""

import argparse
import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from logical_zne.experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/fig2")
    ap.add_argument("--p", type=float, default=0.088)
    ap.add_argument("--shots", type=int, default=400)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--thetas", type=float, nargs="*",
                    default=[0.0, -0.4 * math.pi])
    args = ap.parse_args()
    for theta in args.thetas:
        cfg = ExperimentConfig(
            experiment="fig2", p=args.p, thetas=(theta, 0.0, 0.0),
            r_grid=(1.0, 1.5, 2.0, 2.5, 3.0), n_total=64, shots=args.shots,
            k_list=(1,), seed=args.seed,
            output_dir=f"{args.out}/theta{theta:+.3f}")
        res = run_experiment(cfg)
        print(f"theta0={theta:+.3f} ideal={res.ideal:+.4f}")
        for p in res.points:
            print(f"  r={p.r}: corrected={p.corrected:+.4f} "
                  f"uncorrected={p.uncorrected:+.4f}")


if __name__ == "__main__":
    main()
