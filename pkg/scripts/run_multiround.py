#!/usr/bin/env python3
"""Fixed-total-rate multi-round study: the per-round injection probability
shrinks with the round count so the summed error rate stays constant."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from logical_zne.experiments import ExperimentConfig, run_experiment

ROUND_P = {1: 0.136, 2: 0.094, 3: 0.072, 4: 0.057}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/multiround")
    ap.add_argument("--d", type=int, default=7)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--shots", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    for m, p in ROUND_P.items():
        cfg = ExperimentConfig(
            experiment="repetition", d=args.d, M=m, p=p,
            r_grid=(1.0, 1.5, 2.0, 2.5, 3.0), n_total=args.n,
            shots=args.shots, k_list=(1,), seed=args.seed,
            output_dir=f"{args.out}/M{m}")
        res = run_experiment(cfg, threads=args.threads)
        r1 = res.points[0]
        print(f"M={m} p={p}: corrected(r=1)={r1.corrected:.4f} "
              f"delta0={abs(1 - r1.corrected):.4f}")


if __name__ == "__main__":
    main()
