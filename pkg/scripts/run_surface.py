#!/usr/bin/env python3
"""Distance-3 surface-code runs: depolarizing-rate calibration, Bloch-plane
points for the three reference states, and the <Z_L> sweep with scans."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from logical_zne.experiments import (ExperimentConfig, calibrate_surface_depol,
                                     run_experiment)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/surface")
    ap.add_argument("--p", type=float, default=0.036)
    ap.add_argument("--n", type=int, default=800)
    ap.add_argument("--shots", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--depol", type=float, default=None,
                    help="skip calibration and use this rate")
    args = ap.parse_args()

    base = ExperimentConfig(experiment="surface", p=args.p,
                            r_grid=(1.0, 1.5, 2.0, 2.5, 3.0),
                            n_total=args.n, shots=args.shots, k_list=(1,),
                            seed=args.seed, noise_preset="processor2",
                            output_dir=f"{args.out}/psi_z")
    q = args.depol if args.depol is not None else calibrate_surface_depol(base)
    print(f"calibrated depolarizing rate: {q:.4f}")

    cfg = ExperimentConfig(**{**base.__dict__, "depol": q})
    res = run_experiment(cfg, threads=args.threads)
    for p in res.points:
        print(f" r={p.r}: corrected={p.corrected:.4f} "
              f"uncorrected={p.uncorrected:.4f}")

    bloch = ExperimentConfig(experiment="surface_bloch", p=0.0,
                             r_grid=(1.0,), n_total=1, shots=4000,
                             seed=args.seed, noise_preset="processor2",
                             depol=q, output_dir=f"{args.out}/bloch")
    run_experiment(bloch, threads=args.threads)
    print(f"wrote {args.out}/bloch/bloch.csv")


if __name__ == "__main__":
    main()
