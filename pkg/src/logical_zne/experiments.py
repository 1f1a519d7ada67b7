"""End-to-end experiment pipelines: build -> plan -> simulate -> decode ->
estimate -> extrapolate, with deterministic artifact emission.

Every run writes into its output directory:

* points.csv    r, corrected_mean, corrected_stderr, uncorrected_mean,
                uncorrected_stderr
* zne_scan.csv  d, K, r_subset, delta, eta, delta0
* manifest.json full config + source hash + seed

All randomness is derived from the single config seed through keyed hashing
per (phase, r index, instance, shot), so artifacts are byte-identical across
re-runs and worker counts. Only the injected channels are amplified with r
(through the instance weights at r*p); device-preset noise stays at its
calibrated strength, as in the hardware procedure.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import pathlib
from dataclasses import dataclass, field

import numpy as np

from .circuit import RecordParity
from .codes import (BuiltCode, LogicalStateSpec, build_fig2_example,
                    build_repetition, build_surface_d3, experiment_model,
                    strip_classical_correction)
from .decoder import (DecodedObservable, MeanParity, build_detector_graph,
                      build_lookup_d3)
from .engine import ShotRunner, compile_observable, exact_expectation
from .estimator import (InstancePlan, InstanceSet, draw_instances,
                        estimate_expectation, estimate_ratio, plan_instances)
from .noise import (NoiseModel, ScalingOverflowError, derive_seed,
                    device_preset, standard_injection)
from .scaling import MemorySpec, bias_bounds, calibrated_model, projected_zne
from .zne import DataPoint, scan_delta_eta

__all__ = [
    "ConfigError", "ExperimentConfig", "PointRow", "ExperimentResult",
    "run_experiment", "run_scan_from_points", "calibrate_surface_depol",
    "verify_config", "format_float", "write_csv", "source_hash",
]

EXPERIMENTS = ("fig2", "repetition", "surface", "surface_bloch", "scaling")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "repetition"
    d: int = 3
    M: int = 1
    p: float = 0.036
    r_grid: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5, 3.0)
    n_total: int = 1000
    shots: int = 150
    k_list: tuple[int, ...] = (1, 2)
    seed: int = 1
    noise_preset: str = "processor1"
    readout_method: int = 1
    min_frac: float = 0.01
    output_dir: str = "out"
    # feedback example
    thetas: tuple[float, float, float] = (-0.4 * math.pi, 0.0, 0.0)
    # surface code
    state: str = "psi"          # zero | plus | psi | custom
    alpha: float = math.cos(math.pi / 6)
    beta: float = math.sin(math.pi / 6)
    basis: str = "Z"
    depol: float | None = None  # None -> calibrate against the preset reference
    calib_shots: int = 4000
    # scaling projection
    scaling_p: float = 1e-3
    scaling_d: tuple[int, ...] = (3, 5, 7, 9, 11)
    scaling_n: int = 50_000_000

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.experiment != "scaling":
            if not any(abs(r - 1.0) < 1e-12 for r in self.r_grid):
                raise ConfigError("r_grid must contain 1")
            if any(r <= 0 for r in self.r_grid):
                raise ConfigError("r_grid entries must be positive")
            if self.n_total < 1 or self.shots < 1:
                raise ConfigError("n_total and shots must be positive")
            if self.noise_preset not in ("processor1", "processor2", "ideal"):
                raise ConfigError(f"unknown preset {self.noise_preset!r}")
        if self.experiment in ("surface", "surface_bloch"):
            if self.state not in ("zero", "plus", "psi", "custom"):
                raise ConfigError(f"unknown state {self.state!r}")
            if self.basis not in ("Z", "X"):
                raise ConfigError("basis must be Z or X")
        if self.experiment == "repetition":
            if self.d not in (3, 5, 7) or not 1 <= self.M <= 4:
                raise ConfigError("repetition supports d in {3,5,7}, M in 1..4")

    def to_json(self) -> str:
        obj = dataclasses.asdict(self)
        return json.dumps(obj, sort_keys=True, indent=1)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config JSON: {exc}") from None
        return ExperimentConfig.from_dict(obj)

    @staticmethod
    def from_dict(obj: dict) -> "ExperimentConfig":
        fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(obj) - fields
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(obj)
        for name in ("r_grid", "k_list", "thetas", "scaling_d"):
            if name in kwargs and kwargs[name] is not None:
                kwargs[name] = tuple(kwargs[name])
        cfg = ExperimentConfig(**kwargs)
        cfg.validate()
        return cfg

    def with_overrides(self, pairs: dict) -> "ExperimentConfig":
        obj = dataclasses.asdict(self)
        for key, raw in pairs.items():
            if key not in obj:
                raise ConfigError(f"unknown config field {key!r}")
            try:
                value = json.loads(raw) if isinstance(raw, str) else raw
            except json.JSONDecodeError:
                value = raw
            obj[key] = value
        return ExperimentConfig.from_dict(obj)


def format_float(x: float) -> str:
    return f"{x:.12g}"


def write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format_float(v) if isinstance(v, float) else str(v) for v in row))
    pathlib.Path(path).write_text("\n".join(lines) + "\n")


def source_hash() -> str:
    """Hash of the package sources, recorded in manifests."""
    root = pathlib.Path(__file__).parent
    h = hashlib.sha256()
    for f in sorted(root.glob("*.py")):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class PointRow:
    r: float
    corrected: float
    corrected_err: float
    uncorrected: float
    uncorrected_err: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list[PointRow]
    scan_rows: list[tuple]
    ideal: float
    files: dict[str, str]
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Shot execution over an instance set
# ---------------------------------------------------------------------------

@dataclass
class _Pipeline:
    code: BuiltCode
    run_model: NoiseModel          # per-shot sampled noise (injection frozen)
    corrected_fn: object           # f(bits) -> value
    uncorrected_fn: object
    accept_fn: object = None       # f(bits) -> 0/1; default: engine flag

    def run_instances(self, iset: InstanceSet, seed_parts: tuple,
                      threads: int = 1):
        """(corrected, uncorrected, accepted) tables of shape (C, S)."""
        insts = iset.instances
        s = iset.shots_per_instance
        corr = np.empty((len(insts), s))
        unc = np.empty((len(insts), s))
        acc = np.empty((len(insts), s))
        tasks = [(i, inst) for i, inst in enumerate(insts)]
        if threads > 1:
            from multiprocessing import get_context
            ctx = get_context("fork")
            chunks = [tasks[i::threads] for i in range(threads)]
            with ctx.Pool(threads, initializer=_pool_init,
                          initargs=(self, s, seed_parts)) as pool:
                for results in pool.map(_pool_run, chunks):
                    for i, c_row, u_row, a_row in results:
                        corr[i], unc[i], acc[i] = c_row, u_row, a_row
        else:
            runner = ShotRunner(self.code.circuit, self.run_model,
                                frozen_locations=set(self.code.injection_sites))
            for i, inst in tasks:
                corr[i], unc[i], acc[i] = _run_one(runner, self, inst, s,
                                                   seed_parts, i)
        return corr, unc, acc


def _run_one(runner, pipeline, inst, s, seed_parts, index):
    cfg = inst.fault_config(pipeline.code)
    c_row = np.empty(s)
    u_row = np.empty(s)
    a_row = np.empty(s)
    for shot in range(s):
        bits, ok = runner.run(derive_seed(*seed_parts, index, shot),
                              fixed_faults=cfg)
        tb = tuple(bits)
        c_row[shot] = pipeline.corrected_fn(tb)
        u_row[shot] = pipeline.uncorrected_fn(tb)
        if pipeline.accept_fn is None:
            a_row[shot] = 1.0 if ok else 0.0
        else:
            a_row[shot] = pipeline.accept_fn(tb)
    return c_row, u_row, a_row


_POOL_CTX = None


def _pool_init(pipeline, s, seed_parts):
    global _POOL_CTX
    runner = ShotRunner(pipeline.code.circuit, pipeline.run_model,
                        frozen_locations=set(pipeline.code.injection_sites))
    _POOL_CTX = (runner, pipeline, s, seed_parts)


def _pool_run(chunk):
    runner, pipeline, s, seed_parts = _POOL_CTX
    out = []
    for i, inst in chunk:
        c, u, a = _run_one(runner, pipeline, inst, s, seed_parts, i)
        out.append((i, c, u, a))
    return out


def _preset(config: ExperimentConfig) -> NoiseModel:
    return device_preset(config.noise_preset, config.readout_method)


def _decode_graph(code: BuiltCode, config: ExperimentConfig, r: float,
                  aux_mixture=None):
    """Graph for the decoder's assumed noise.

    The repetition chain tolerates the full preset; on the surface code the
    two-qubit preset creates hook mechanisms that are not matchable, so its
    graph uses the injection + aux + readout sub-model.
    """
    preset = _preset(config)
    if code.meta.get("family") == "surface":
        sub = {"measure": preset.opkind_map["measure"]} \
            if "measure" in preset.opkind_map else {}
        model = experiment_model(code, injection_p=code.meta["p"],
                                 preset=NoiseModel.build(sub),
                                 aux_mixture=aux_mixture, r=1.0)
        model = NoiseModel.build(model.opkind_map, {
            s: (m.scaled(r) if s in code.injection_sites else m)
            for s, m in model.injection_map.items()})
    else:
        model = experiment_model(code, injection_p=r * code.meta["p"],
                                 preset=preset)
    return build_detector_graph(code, model)


def _code_points(code: BuiltCode, config: ExperimentConfig, *,
                 aux_mixture=None, uncorrected_obs=None, use_lookup=False,
                 phase: str, threads: int = 1,
                 postselected: bool = False):
    """Weighted-instance estimates of both series over the r grid."""
    preset = _preset(config)
    run_model = experiment_model(code, injection_p=0.0, preset=preset,
                                 aux_mixture=aux_mixture)
    if uncorrected_obs is None:
        uncorrected_obs = RecordParity(code.logical.labels)
    f_unc = compile_observable(uncorrected_obs, code.circuit)
    rows = []
    n_sites = len(code.injection_sites)
    for ri, r in enumerate(config.r_grid):
        if r * code.meta["p"] > 1:
            raise ScalingOverflowError(
                f"injection probability {r * code.meta['p']} exceeds 1 at r={r}")
        graph = _decode_graph(code, config, r, aux_mixture)
        table = build_lookup_d3(graph) if use_lookup else None
        obs = DecodedObservable(code, graph, table)
        f_corr = compile_observable(obs, code.circuit)
        pipe = _Pipeline(code, run_model, f_corr, f_unc)
        plan = plan_instances(n_sites, r * code.meta["p"], config.n_total,
                              config.min_frac)
        iset = draw_instances(plan, code, derive_seed(config.seed, phase, ri),
                              shots_per_instance=config.shots)
        corr, unc, acc = pipe.run_instances(
            iset, (config.seed, phase, ri), threads)
        if postselected:
            c_mean, c_err = estimate_ratio(iset, plan, corr, acc)
        else:
            c_mean, c_err = estimate_expectation(iset, plan, corr)
        u_mean, u_err = estimate_expectation(iset, plan, unc)
        rows.append(PointRow(r, c_mean, c_err, u_mean, u_err))
    return rows


def _scan_rows(points: list[PointRow], ideal: float, d: int,
               k_list) -> list[tuple]:
    """Corrected-series scans at the code distance plus uncorrected at d=1."""
    rows = []
    corr_pts = [DataPoint(p.r, p.corrected, p.corrected_err) for p in points]
    unc_pts = [DataPoint(p.r, p.uncorrected, p.uncorrected_err) for p in points]
    for k in k_list:
        if k + 1 > len(points):
            continue
        for e in scan_delta_eta(corr_pts, d, k, ideal):
            rows.append((e.d, e.K, "|".join(format_float(r) for r in e.rs),
                         e.delta, e.eta, e.delta0))
        for e in scan_delta_eta(unc_pts, 1, k, ideal):
            rows.append((e.d, e.K, "|".join(format_float(r) for r in e.rs),
                         e.delta, e.eta, e.delta0))
    return rows


def _surface_spec(config: ExperimentConfig) -> LogicalStateSpec:
    if config.state == "zero":
        return LogicalStateSpec.zero()
    if config.state == "plus":
        return LogicalStateSpec.plus()
    if config.state == "psi":
        return LogicalStateSpec(math.cos(math.pi / 6), math.sin(math.pi / 6))
    return LogicalStateSpec(config.alpha, config.beta)


def calibrate_surface_depol(config: ExperimentConfig,
                            target: float | None = None) -> float:
    """Single-qubit depolarizing rate matching the corrected <Z_L> of |0_L>.

    The reference value (when not given) is the preset-noise simulation of
    the full preparation + parity-check + readout circuit, i.e. the stand-in
    for the hardware calibration point. Common random numbers across the
    bisection keep the search monotone and deterministic.
    """
    code = build_surface_d3(LogicalStateSpec.zero(), "Z", p=config.p)
    shots = config.calib_shots

    def corrected_mean(model, graph_aux, tag):
        graph = _decode_graph(code, config, 1.0, graph_aux)
        obs = DecodedObservable(code, graph, build_lookup_d3(graph))
        f = compile_observable(obs, code.circuit)
        runner = ShotRunner(code.circuit, model,
                            frozen_locations=set(code.injection_sites))
        total = 0.0
        for s in range(shots):
            bits, _ = runner.run(derive_seed(config.seed, "calib", tag, s))
            total += f(tuple(bits))
        return total / shots

    if target is None:
        ref_model = experiment_model(code, injection_p=0.0,
                                     preset=_preset(config))
        target = corrected_mean(ref_model, None, "ref")

    lo, hi = 1e-4, 0.35
    for _ in range(22):
        mid = 0.5 * (lo + hi)
        aux = standard_injection(mid)
        model = experiment_model(code, injection_p=0.0, aux_mixture=aux)
        val = corrected_mean(model, aux, "q")
        if val > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Experiment drivers
# ---------------------------------------------------------------------------

def _ideal_value(code: BuiltCode, use_lookup=False) -> float:
    graph = build_detector_graph(code, experiment_model(code))
    table = build_lookup_d3(graph) if use_lookup else None
    obs = DecodedObservable(code, graph, table)
    return exact_expectation(code.circuit, NoiseModel.build(), obs)


def _run_fig2(config: ExperimentConfig, threads: int):
    """Both series from the same raw bit strings, as in the hardware flow:
    post-select on the quiet syndrome m3, flip m0 when syndrome m1 fired."""
    code = build_fig2_example(*config.thetas, p=config.p)
    stripped = strip_classical_correction(code.circuit)
    raw_code = BuiltCode(stripped, (), code.logical, code.injection_layers,
                         (), d=1, M=1, meta=dict(code.meta))
    order = {lab: i for i, lab in enumerate(stripped.records)}
    m0, m1, m3 = order["m0"], order["m1"], order["m3"]

    f_corr = lambda bits: 1.0 - 2.0 * (bits[m0] ^ bits[m1])
    f_unc = lambda bits: 1.0 - 2.0 * bits[m0]
    f_acc = lambda bits: 1.0 if bits[m3] == 0 else 0.0
    preset = _preset(config)
    run_model = experiment_model(raw_code, injection_p=0.0, preset=preset)
    rows = []
    for ri, r in enumerate(config.r_grid):
        if r * config.p > 1:
            raise ScalingOverflowError(
                f"injection probability {r * config.p} exceeds 1 at r={r}")
        plan = plan_instances(3, r * config.p, config.n_total, config.min_frac)
        iset = draw_instances(plan, raw_code,
                              derive_seed(config.seed, "fig2", ri),
                              shots_per_instance=config.shots)
        pipe = _Pipeline(raw_code, run_model, f_corr, f_unc, f_acc)
        corr, unc, acc = pipe.run_instances(iset, (config.seed, "fig2", ri),
                                            threads)
        c_mean, c_err = estimate_ratio(iset, plan, corr, acc)
        u_mean, u_err = estimate_expectation(iset, plan, unc)
        rows.append(PointRow(r, c_mean, c_err, u_mean, u_err))
    ideal = exact_expectation(code.circuit, NoiseModel.build(),
                              code.circuit.observable)
    return code, rows, ideal


def _run_repetition(config: ExperimentConfig, threads: int):
    code = build_repetition(config.d, config.M, config.p)
    data_records = tuple(f"d{i}" for i in range(config.d))
    rows = _code_points(code, config, uncorrected_obs=MeanParity(data_records),
                        phase="rep", threads=threads)
    return code, rows, 1.0


def _run_surface(config: ExperimentConfig, threads: int):
    """Benchmark-model runs: prep imperfection as a uniform single-qubit
    depolarizing channel (calibrated against the device preset when not
    given) plus the amplified injection; gates and readout are clean."""
    spec = _surface_spec(config)
    code = build_surface_d3(spec, config.basis, config.p)
    q = config.depol if config.depol is not None else \
        calibrate_surface_depol(config)
    aux = standard_injection(q) if q > 0 else None
    cfg_run = dataclasses.replace(config, noise_preset="ideal")
    rows = _code_points(code, cfg_run, aux_mixture=aux, use_lookup=True,
                        phase=f"surface_{config.basis}", threads=threads)
    ideal = _ideal_value(code, use_lookup=True)
    return code, rows, ideal, q


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   output_dir=None) -> ExperimentResult:
    """Run one experiment and write its artifact bundle."""
    config.validate()
    out = pathlib.Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    extra = {}

    if config.experiment == "scaling":
        model = calibrated_model()
        rows = []
        for d in config.scaling_d:
            for k in config.k_list:
                spec = MemorySpec(config.scaling_n, d, config.scaling_p, K=k)
                pz = projected_zne(spec, model)
                bb = bias_bounds(spec, model)
                rows.append((format_float(config.scaling_p), d,
                             config.scaling_n, k, pz.ratio, pz.eta,
                             pz.delta0, bb.delta1_bound))
        write_csv(out / "scaling.csv",
                  ["p", "d", "N", "K", "delta_ratio", "eta", "delta0",
                   "delta_tilde_1"], rows)
        files["scaling"] = "scaling.csv"
        result = ExperimentResult(config, [], rows, 1.0, files)
        _write_manifest(out, config, files)
        files["manifest"] = "manifest.json"
        return result

    if config.experiment == "surface_bloch":
        return _run_surface_bloch(config, threads, out)

    if config.experiment == "fig2":
        code, points, ideal = _run_fig2(config, threads)
    elif config.experiment == "repetition":
        code, points, ideal = _run_repetition(config, threads)
    else:
        code, points, ideal, q = _run_surface(config, threads)
        extra["depol"] = q

    write_csv(out / "points.csv",
              ["r", "corrected_mean", "corrected_stderr",
               "uncorrected_mean", "uncorrected_stderr"],
              [[p.r, p.corrected, p.corrected_err, p.uncorrected,
                p.uncorrected_err] for p in points])
    files["points"] = "points.csv"
    scan = _scan_rows(points, ideal, code.d, config.k_list)
    write_csv(out / "zne_scan.csv",
              ["d", "K", "r_subset", "delta", "eta", "delta0"], scan)
    files["scan"] = "zne_scan.csv"
    _write_manifest(out, config, files, extra={"ideal": ideal, **extra})
    files["manifest"] = "manifest.json"
    return ExperimentResult(config, points, scan, ideal, files, extra)


def _run_surface_bloch(config: ExperimentConfig, threads: int, out):
    """Bloch-plane table: (X_L, Z_L) for the three reference states."""
    q = config.depol if config.depol is not None else \
        calibrate_surface_depol(config)
    aux = standard_injection(q) if q > 0 else None
    states = [("zero", LogicalStateSpec.zero()),
              ("plus", LogicalStateSpec.plus()),
              ("psi", LogicalStateSpec(math.cos(math.pi / 6),
                                       math.sin(math.pi / 6)))]
    header = ["state", "r", "zl_corr", "zl_corr_err", "zl_unc", "zl_unc_err",
              "xl_corr", "xl_corr_err", "xl_unc", "xl_unc_err"]
    rows = []
    for name, spec in states:
        per_basis = {}
        for basis in ("Z", "X"):
            cfg = dataclasses.replace(config, state="custom", basis=basis,
                                      alpha=spec.alpha, beta=spec.beta,
                                      depol=q, noise_preset="ideal")
            code = build_surface_d3(spec, basis, config.p)
            per_basis[basis] = _code_points(
                code, cfg, aux_mixture=aux, use_lookup=True,
                phase=f"bloch_{name}_{basis}", threads=threads)
        for i, r in enumerate(config.r_grid):
            z, x = per_basis["Z"][i], per_basis["X"][i]
            rows.append([name, r, z.corrected, z.corrected_err, z.uncorrected,
                         z.uncorrected_err, x.corrected, x.corrected_err,
                         x.uncorrected, x.uncorrected_err])
    write_csv(out / "bloch.csv", header, rows)
    files = {"bloch": "bloch.csv"}
    _write_manifest(out, config, files, extra={"depol": q})
    files["manifest"] = "manifest.json"
    return ExperimentResult(config, [], [], 1.0, files, {"depol": q,
                                                         "rows": rows})


def _write_manifest(out, config: ExperimentConfig, files: dict,
                    extra: dict | None = None) -> None:
    manifest = {"config": json.loads(config.to_json()),
                "source_hash": source_hash(),
                "files": dict(sorted(files.items()))}
    if extra:
        manifest["derived"] = {k: v for k, v in sorted(extra.items())}
    (pathlib.Path(out) / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def run_scan_from_points(points_csv, ideal: float, d: int, k_list,
                         out_csv) -> int:
    """Standalone delta-eta scan over an existing points.csv."""
    rows = []
    text = pathlib.Path(points_csv).read_text().strip().splitlines()
    header = text[0].split(",")
    want = ["r", "corrected_mean", "corrected_stderr", "uncorrected_mean",
            "uncorrected_stderr"]
    if header != want:
        raise ConfigError(f"points csv columns {header}, expected {want}")
    pts = []
    for line in text[1:]:
        r, cm, ce, um, ue = (float(v) for v in line.split(","))
        pts.append(PointRow(r, cm, ce, um, ue))
    rows = _scan_rows(pts, ideal, d, k_list)
    write_csv(out_csv, ["d", "K", "r_subset", "delta", "eta", "delta0"], rows)
    return len(rows)


# ---------------------------------------------------------------------------
# Verification checks (CLI `verify`)
# ---------------------------------------------------------------------------

def verify_config(config: ExperimentConfig) -> list[tuple[str, bool, str]]:
    """Acceptance-linked checks reachable at the config's scale."""
    from .decoder import verify_distance
    from .engine import expectation_polynomial

    checks = []
    if config.experiment == "repetition":
        code = build_repetition(config.d, config.M, config.p)
        model = experiment_model(code, injection_p=config.p)

        runner = ShotRunner(code.circuit, NoiseModel.build())
        order = {lab: i for i, lab in enumerate(code.circuit.records)}
        quiet = True
        for s in range(500):
            bits, _ = runner.run(s)
            for det in code.detectors:
                par = 0
                for lab in det.labels:
                    par ^= bits[order[lab]]
                if par != det.expected:
                    quiet = False
        checks.append(("detectors-quiet", quiet, "500 ideal shots"))

        t = math.ceil(config.d / 2) - 1
        rpt = verify_distance(code, model, t)
        checks.append((f"distance-t{t}", rpt.passed,
                       f"{rpt.patterns_checked} patterns"))

        if config.M == 1 and config.d <= 5:
            graph = build_detector_graph(code, model)
            obs = DecodedObservable(code, graph)
            poly = expectation_polynomial(code.circuit, model, obs)
            a1 = abs(poly.coeffs[1])
            checks.append(("leading-order-a1", a1 < 1e-12, f"|a1|={a1:.2e}"))

        if config.d == 3 and config.M == 1:
            graph = build_detector_graph(code, model)
            obs = DecodedObservable(code, graph)
            exact = exact_expectation(code.circuit, model, obs)
            cfg_small = dataclasses.replace(config, n_total=min(config.n_total, 300),
                                            shots=min(config.shots, 20),
                                            noise_preset="ideal")
            rows = _code_points(code, cfg_small, phase="verify")
            got = [row for row in rows if abs(row.r - 1.0) < 1e-12][0]
            err = max(3 * got.corrected_err, 5e-3)
            ok = abs(got.corrected - exact) < err
            checks.append(("estimator-vs-oracle", ok,
                           f"|{got.corrected:.5f}-{exact:.5f}| < {err:.1e}"))
    elif config.experiment in ("surface", "surface_bloch"):
        spec = _surface_spec(config)
        code = build_surface_d3(spec, config.basis, config.p)
        model = experiment_model(code, injection_p=config.p)
        rpt = verify_distance(code, model, 1)
        checks.append(("distance-t1", rpt.passed, f"{rpt.patterns_checked} patterns"))
    else:
        code = build_fig2_example(*config.thetas, p=config.p)
        val = exact_expectation(code.circuit, NoiseModel.build(),
                                code.circuit.observable)
        ideal = math.cos(config.thetas[0])
        checks.append(("fig2-ideal", abs(val - ideal) < 1e-10,
                       f"<Z0>={val:.6f}"))
    return checks
