#!/usr/bin/env python3
"""Large-scale projection sweep on the calibrated power-law model."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from logical_zne.experiments import ExperimentConfig, run_experiment
from logical_zne.scaling import MemorySpec, calibrated_model, projected_zne


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/scaling")
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--n", type=int, default=50_000_000)
    args = ap.parse_args()
    cfg = ExperimentConfig(experiment="scaling", scaling_p=args.p,
                           scaling_n=args.n, scaling_d=(3, 5, 7, 9, 11, 13),
                           k_list=(1, 2, 3), output_dir=args.out)
    run_experiment(cfg)
    print(f"wrote {args.out}/scaling.csv")
    model = calibrated_model()
    pz = projected_zne(MemorySpec(args.n, 11, args.p, K=1), model)
    print(f"d=11 K=1 headline: delta/delta0={pz.ratio:.4f} eta={pz.eta:.1f}")


if __name__ == "__main__":
    main()
