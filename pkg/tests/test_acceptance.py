"""Acceptance criteria, one printed pass/fail line per check (run with -s).

These exercise complete pipelines; the whole module takes roughly half an
hour single-core. Budgets pinned by a criterion (d=3 estimator: N=1000,
S=150) are kept verbatim; free budgets are sized for this runtime envelope.
"""

import dataclasses
import hashlib
import math
import os
import time

import numpy as np
import pytest

from logical_zne.circuit import fault_locations
from logical_zne.codes import (LogicalStateSpec, build_repetition,
                               build_surface_d3, experiment_model)
from logical_zne.decoder import (DecodedObservable, build_detector_graph,
                                 build_lookup_d3, verify_distance)
from logical_zne.engine import exact_expectation, expectation_polynomial
from logical_zne.estimator import plan_instances
from logical_zne.experiments import (ExperimentConfig, calibrate_surface_depol,
                                     run_experiment)
from logical_zne.noise import NoiseModel, device_preset
from logical_zne.scaling import (MemorySpec, bias_bounds, calibrated_model,
                                 logical_error_rate, memory_expectation,
                                 projected_zne)
from logical_zne.zne import DataPoint, bias, extrap_coeffs, extrapolate

THREADS = int(os.environ.get("LZNE_THREADS", os.cpu_count() or 1))
SEED = 1


def report(criterion, ok, detail):
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


# -- criterion 1: decoder distance --------------------------------------------

def test_criterion1_decoder_distance():
    t0 = time.time()
    results = []
    for d in (3, 5, 7):
        code = build_repetition(d, 1, 0.036)
        model = experiment_model(code, injection_p=0.036)
        t = math.ceil(d / 2) - 1
        rpt = verify_distance(code, model, t)
        results.append((f"rep d={d} t={t}", rpt.passed, rpt.patterns_checked))
    for basis, spec in (("Z", LogicalStateSpec.zero()),
                        ("X", LogicalStateSpec.plus())):
        code = build_surface_d3(spec, basis, 0.036)
        model = experiment_model(code, injection_p=0.036)
        rpt = verify_distance(code, model, 1)
        results.append((f"surface {basis} t=1", rpt.passed, rpt.patterns_checked))
    elapsed = time.time() - t0
    ok = all(r[1] for r in results) and elapsed < 120
    detail = "; ".join(f"{n}: {'ok' if p else 'BROKEN'} ({c} patterns)"
                       for n, p, c in results) + f"; {elapsed:.0f} s"
    assert report(1, ok, detail)


# -- criterion 2: leading-order structure --------------------------------------

def test_criterion2_leading_order():
    vals = {}
    for d in (3, 5):
        code = build_repetition(d, 1, 0.036)
        model = experiment_model(code, injection_p=0.036)
        graph = build_detector_graph(code, model)
        obs = DecodedObservable(code, graph)
        poly = expectation_polynomial(code.circuit, model, obs)
        vals[d] = poly.coeffs
    a1_d3, a2_d3 = abs(vals[3][1]), vals[3][2]
    a1_d5, a2_d5 = abs(vals[5][1]), abs(vals[5][2])
    ok = a1_d3 < 1e-12 and a2_d3 < 0 and a1_d5 < 1e-10 and a2_d5 < 1e-10
    assert report(2, ok,
                  f"d=3 |a1|={a1_d3:.2e}, a2={a2_d3:.3e}; "
                  f"d=5 |a1|={a1_d5:.2e}, |a2|={a2_d5:.2e}")


# -- criterion 3: ZNE exactness -------------------------------------------------

def test_criterion3_zne_exactness():
    import random
    rng = random.Random(42)
    worst_delta, worst_sum = 0.0, 0.0
    for _ in range(100):
        d = rng.choice([1, 3, 5, 7, 9, 11])
        K = rng.randint(1, 3)
        m = math.ceil(d / 2)
        c = rng.uniform(-1, 1)
        coef = {m + j: rng.uniform(-0.05, 0.05) for j in range(K)}
        rs = [1.0]
        while len(rs) < K + 1:
            r = rng.uniform(1.05, 3.5)
            if all(abs(r - x) > 0.04 for x in rs):
                rs.append(r)
        pts = [DataPoint(r, c + sum(a * r ** k for k, a in coef.items()))
               for r in rs]
        b = extrap_coeffs([p.r for p in pts], d)
        worst_sum = max(worst_sum, abs(float(b.sum()) - 1.0))
        worst_delta = max(worst_delta, bias(extrapolate(pts, d), c))
    ok = worst_delta < 1e-10 and worst_sum < 1e-10
    assert report(3, ok, f"100 designs: max delta={worst_delta:.2e}, "
                         f"max |sum b - 1|={worst_sum:.2e}")


# -- criterion 4: S4/S5 estimator ----------------------------------------------

def test_criterion4_estimator_vs_oracle():
    code = build_repetition(3, 1, 0.036)
    model = experiment_model(code, injection_p=0.036,
                             preset=device_preset("processor1"))
    graph = build_detector_graph(code, model)
    obs = DecodedObservable(code, graph)
    exact = exact_expectation(code.circuit, model, obs)

    cfg = ExperimentConfig(experiment="repetition", d=3, M=1, p=0.036,
                           r_grid=(1.0,), n_total=1000, shots=150,
                           k_list=(1,), seed=SEED, output_dir="/tmp/acc_c4")
    res = run_experiment(cfg, threads=THREADS)
    got = res.points[0]
    within = abs(got.corrected - exact) < 3 * got.corrected_err

    p0_d3 = plan_instances(6, 0.036, 1000).weights[0]
    p0_d7 = plan_instances(14, 0.036, 6000).weights[0]
    frac_ok = abs(p0_d3 - 0.803) <= 0.002 and abs(p0_d7 - 0.598) <= 0.002
    ok = within and frac_ok
    assert report(4, ok,
                  f"mean {got.corrected:.5f} vs exact {exact:.5f} "
                  f"(3*stderr={3 * got.corrected_err:.1e}); "
                  f"P(0): d3={p0_d3:.4f}, d7={p0_d7:.4f}")


# -- criterion 5: Fig. 3 reproduction ------------------------------------------

FIG3_BUDGETS = {3: (1000, 50), 5: (1500, 50), 7: (2000, 60)}


@pytest.fixture(scope="module")
def fig3_bundles(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig3")
    t0 = time.time()
    bundles = {}
    for d, (n, s) in FIG3_BUDGETS.items():
        cfg = ExperimentConfig(experiment="repetition", d=d, M=1, p=0.036,
                               r_grid=(1.0, 1.5, 2.0, 2.5, 3.0), n_total=n,
                               shots=s, k_list=(1, 2), seed=SEED,
                               noise_preset="processor1",
                               output_dir=str(out / f"d{d}"))
        bundles[d] = run_experiment(cfg, threads=THREADS)
    return bundles, time.time() - t0


def test_criterion5_fig3_reproduction(fig3_bundles):
    bundles, elapsed = fig3_bundles
    ordering = True
    for i, r in enumerate((1.5, 2.0, 2.5, 3.0), start=1):
        c3 = bundles[3].points[i].corrected
        c5 = bundles[5].points[i].corrected
        c7 = bundles[7].points[i].corrected
        unc = bundles[7].points[i].uncorrected
        ordering &= c7 > c5 > c3 > unc

    scan_ok = True
    for d, res in bundles.items():
        for row in res.scan_rows:
            if row[0] == d and row[1] == 1:   # corrected K=1 entries
                scan_ok &= row[3] < row[5]

    d7_k1 = [row for row in bundles[7].scan_rows if row[0] == 7 and row[1] == 1]
    best = min(d7_k1, key=lambda row: row[3])
    best_ok = best[3] <= 1e-3 and best[4] <= 10

    budget = 30 * 60 * 8 / THREADS
    ok = ordering and scan_ok and best_ok and elapsed < budget
    assert report(5, ok,
                  f"ordering d7>d5>d3>unc at r>1: {ordering}; all K=1 "
                  f"delta<delta0: {scan_ok}; d7 best delta={best[3]:.1e} "
                  f"eta={best[4]:.2f}; runtime {elapsed:.0f} s "
                  f"(budget {budget:.0f} s at {THREADS} threads)")


# -- criterion 6: multi-round trends --------------------------------------------

ROUND_P = {1: 0.136, 2: 0.094, 3: 0.072, 4: 0.057}


@pytest.fixture(scope="module")
def multiround_bundles(tmp_path_factory):
    out = tmp_path_factory.mktemp("rounds")
    bundles = {}
    for m, p in ROUND_P.items():
        cfg = ExperimentConfig(experiment="repetition", d=7, M=m, p=p,
                               r_grid=(1.0, 1.5, 2.0, 2.5, 3.0), n_total=700,
                               shots=30, k_list=(1,), seed=SEED,
                               noise_preset="processor1",
                               output_dir=str(out / f"M{m}"))
        bundles[m] = run_experiment(cfg, threads=THREADS)
    return bundles


def test_criterion6_multiround_trends(multiround_bundles):
    bundles = multiround_bundles
    delta0 = {m: abs(1.0 - res.points[0].corrected)
              for m, res in bundles.items()}
    decreasing = all(delta0[m] > delta0[m + 1] for m in (1, 2, 3))

    eta_by_subset = {}
    for m, res in bundles.items():
        for row in res.scan_rows:
            if row[0] == 7 and row[1] == 1:
                eta_by_subset.setdefault(row[2], {})[m] = row[4]
    ratios = [max(v.values()) / min(v.values())
              for v in eta_by_subset.values() if len(v) == 4]
    eta_stable = bool(ratios) and max(ratios) < 2.0
    ok = decreasing and eta_stable
    d0s = ", ".join(f"M{m}={delta0[m]:.4f}" for m in sorted(delta0))
    assert report(6, ok,
                  f"delta0 strictly decreasing: {decreasing} ({d0s}); "
                  f"eta max/min over M = {max(ratios):.2f} (< 2)")


# -- criterion 7: surface code ---------------------------------------------------

@pytest.fixture(scope="module")
def surface_assets(tmp_path_factory):
    out = tmp_path_factory.mktemp("surface")
    base = ExperimentConfig(experiment="surface", p=0.036,
                            noise_preset="processor2", calib_shots=2500,
                            seed=SEED)
    # Calibration target: the corrected |0_L> expectation implied by the
    # reported initial-state bias limit (about 5e-2).
    q = calibrate_surface_depol(base, target=0.95)

    bloch_cfg = ExperimentConfig(experiment="surface_bloch", p=0.0,
                                 r_grid=(1.0,), n_total=1, shots=3000,
                                 seed=SEED, noise_preset="processor2",
                                 depol=q, output_dir=str(out / "bloch"))
    bloch = run_experiment(bloch_cfg, threads=THREADS)

    psi_cfg = ExperimentConfig(experiment="surface", state="psi", basis="Z",
                               p=0.036, r_grid=(1.0, 1.5, 2.0, 2.5, 3.0),
                               n_total=400, shots=40, k_list=(1,), seed=SEED,
                               noise_preset="processor2", depol=q,
                               output_dir=str(out / "psi"))
    psi = run_experiment(psi_cfg, threads=THREADS)
    return q, bloch, psi


def test_criterion7_surface(surface_assets):
    q, bloch, psi = surface_assets
    calib_ok = 0.045 <= q <= 0.105

    bloch_ok = True
    norms = []
    for row in bloch.extra["rows"]:
        state, r = row[0], row[1]
        zc, zu, xc, xu = row[2], row[4], row[6], row[8]
        nc, nu = math.hypot(xc, zc), math.hypot(xu, zu)
        norms.append(f"{state}: corr {nc:.3f} vs unc {nu:.3f}")
        bloch_ok &= abs(1.0 - nc) < abs(1.0 - nu)

    scan_ok = all(row[3] < row[5] for row in psi.scan_rows
                  if row[0] == 3 and row[1] == 1)
    ok = calib_ok and bloch_ok and scan_ok
    assert report(7, ok,
                  f"calibration q={q:.4f} in [0.045, 0.105]: {calib_ok}; "
                  f"Bloch norms closer to 1 corrected: {bloch_ok} "
                  f"({'; '.join(norms)}); psi K=1 scans delta<delta0: {scan_ok}")


# -- criterion 8: large-scale projection ----------------------------------------

def test_criterion8_projection_model():
    model = calibrated_model()
    rate = logical_error_rate(model, 1e-3, 11)
    calib_ok = abs(rate - 2e-10) < 1e-12

    spec = MemorySpec(50_000_000, 11, 1e-3, K=1)
    raw_fail = 0.5 * (1.0 - memory_expectation(spec, model, 1.0))
    raw_ok = 0.005 <= raw_fail <= 0.02

    bound_ok = True
    for p in (5e-4, 1e-3, 2e-3, 4e-3):
        for d in (5, 7, 9, 11, 13):
            n_ops = min(10 ** 12, max(1, int(
                0.01 / max(logical_error_rate(model, p, d), 1e-300))))
            s = MemorySpec(n_ops, d, p, K=1)
            pz = projected_zne(s, model)
            bb = bias_bounds(s, model)
            bound_ok &= pz.delta <= bb.delta1_bound + 1e-12
    ok = calib_ok and raw_ok and bound_ok
    assert report("8 (model)", ok,
                  f"P_L(1e-3,11)={rate:.3e}; raw failure/shot={raw_fail:.4f}; "
                  f"delta1 bound holds on 20-point grid: {bound_ok}")


def test_criterion8_k1_windows():
    """Literal K=1 check. The delta/delta0 window holds; the eta window
    [68, 272] cannot be met at K=1 with the r_k = k^(1/ceil(d/2)) schedule
    and the importance-sampled overhead (eta <= ~82 for any curve through
    the calibrated operating point; see the decisions ledger). The K=2
    design reproduces the quoted pair within the stated factor of 2."""
    model = calibrated_model()
    pz1 = projected_zne(MemorySpec(50_000_000, 11, 1e-3, K=1), model)
    pz2 = projected_zne(MemorySpec(50_000_000, 11, 1e-3, K=2), model)
    ratio_ok = 0.012 <= pz1.ratio <= 0.05
    eta_ok = 68 <= pz1.eta <= 272
    report("8 (K=1 windows)", ratio_ok and eta_ok,
           f"K=1: delta/delta0={pz1.ratio:.4f} in [0.012,0.05]: {ratio_ok}; "
           f"eta={pz1.eta:.1f} in [68,272]: {eta_ok} "
           f"(K=2 gives ratio={pz2.ratio:.4f}, eta={pz2.eta:.1f})")
    assert ratio_ok
    assert eta_ok, (
        f"eta={pz1.eta:.1f} outside [68, 272]: unattainable at K=1 under the "
        "S6 overhead formulas with this schedule; the paper's quoted pair "
        "matches the K=2 design (see decisions ledger)")


# -- criterion 9: determinism ----------------------------------------------------

def test_criterion9_determinism(tmp_path):
    cfg = ExperimentConfig(experiment="repetition", d=3, M=1, p=0.036,
                           r_grid=(1.0, 2.0), n_total=150, shots=10,
                           k_list=(1,), seed=SEED,
                           output_dir=str(tmp_path / "a"))
    run_experiment(cfg, threads=1)
    cfg2 = dataclasses.replace(cfg, output_dir=str(tmp_path / "b"))
    run_experiment(cfg2, threads=2)

    def digest(base, name):
        return hashlib.sha256((base / name).read_bytes()).hexdigest()

    same = all(digest(tmp_path / "a", n) == digest(tmp_path / "b", n)
               for n in ("points.csv", "zne_scan.csv"))
    assert report(9, same, "re-run (different worker count) reproduces "
                           "byte-identical CSVs")
