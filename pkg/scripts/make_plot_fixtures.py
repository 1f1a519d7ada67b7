#!/usr/bin/env python3
"""Generate the checked-in CSV fixtures consumed by the plots package.

Small instance budgets: the fixtures exercise rendering, not statistics.
"""

import math
import pathlib
import shutil
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from logical_zne.experiments import ExperimentConfig, run_experiment

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "plots" / "fixtures"


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    grid = (1.0, 1.5, 2.0, 2.5, 3.0)

    cfg = ExperimentConfig(experiment="fig2", p=0.088,
                           thetas=(-0.4 * math.pi, 0.0, 0.0), r_grid=grid,
                           n_total=64, shots=80, k_list=(1,), seed=3,
                           output_dir=str(FIXTURES / "_tmp"))
    run_experiment(cfg)
    shutil.copy(FIXTURES / "_tmp" / "points.csv", FIXTURES / "fig2_points.csv")

    for d in (3, 5, 7):
        cfg = ExperimentConfig(experiment="repetition", d=d, M=1, p=0.036,
                               r_grid=grid, n_total=250, shots=20,
                               k_list=(1, 2), seed=3,
                               output_dir=str(FIXTURES / "_tmp"))
        run_experiment(cfg)
        shutil.copy(FIXTURES / "_tmp" / "points.csv",
                    FIXTURES / f"rep_d{d}_points.csv")
        shutil.copy(FIXTURES / "_tmp" / "zne_scan.csv",
                    FIXTURES / f"rep_d{d}_scan.csv")

    round_p = {1: 0.136, 2: 0.094, 3: 0.072, 4: 0.057}
    for m, p in round_p.items():
        cfg = ExperimentConfig(experiment="repetition", d=7, M=m, p=p,
                               r_grid=grid, n_total=200, shots=12,
                               k_list=(1,), seed=3,
                               output_dir=str(FIXTURES / "_tmp"))
        run_experiment(cfg)
        shutil.copy(FIXTURES / "_tmp" / "points.csv",
                    FIXTURES / f"rounds_M{m}_points.csv")
        shutil.copy(FIXTURES / "_tmp" / "zne_scan.csv",
                    FIXTURES / f"rounds_M{m}_scan.csv")

    cfg = ExperimentConfig(experiment="surface", state="psi", basis="Z",
                           p=0.036, r_grid=grid, n_total=150, shots=15,
                           k_list=(1,), seed=3, depol=0.05,
                           noise_preset="processor2",
                           output_dir=str(FIXTURES / "_tmp"))
    run_experiment(cfg)
    shutil.copy(FIXTURES / "_tmp" / "points.csv",
                FIXTURES / "surface_points.csv")
    shutil.copy(FIXTURES / "_tmp" / "zne_scan.csv",
                FIXTURES / "surface_scan.csv")

    cfg = ExperimentConfig(experiment="surface_bloch", p=0.0, r_grid=(1.0,),
                           n_total=1, shots=800, seed=3, depol=0.05,
                           noise_preset="processor2",
                           output_dir=str(FIXTURES / "_tmp"))
    run_experiment(cfg)
    shutil.copy(FIXTURES / "_tmp" / "bloch.csv", FIXTURES / "bloch.csv")

    cfg = ExperimentConfig(experiment="scaling", k_list=(1, 2, 3),
                           scaling_d=(3, 5, 7, 9, 11, 13),
                           output_dir=str(FIXTURES / "_tmp"))
    run_experiment(cfg)
    shutil.copy(FIXTURES / "_tmp" / "scaling.csv", FIXTURES / "scaling.csv")

    shutil.rmtree(FIXTURES / "_tmp")
    print(f"fixtures in {FIXTURES}:")
    for f in sorted(FIXTURES.glob("*.csv")):
        print(" ", f.name)


if __name__ == "__main__":
    main()
