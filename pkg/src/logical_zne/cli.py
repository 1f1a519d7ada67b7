"""Command line entry point.

Subcommands: run, verify, scan, scaling, decode-check, export-circuit.
Exit codes: 0 success, 2 config error, 3 capacity error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import pathlib
import sys

from .codes import (LogicalStateSpec, build_fig2_example, build_repetition,
                    build_surface_d3, experiment_model)
from .decoder import DecoderError, DefectCapacityError, verify_distance
from .engine import CapacityError
from .estimator import EstimatorError
from .experiments import (ConfigError, ExperimentConfig, run_experiment,
                          run_scan_from_points, verify_config)
from .noise import NoiseError, ScalingOverflowError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_VERIFY = 4


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(pathlib.Path(args.config).read_text())
    else:
        cfg = ExperimentConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    if overrides:
        cfg = cfg.with_overrides(overrides)
    cfg.validate()
    return cfg


def _build_code(cfg: ExperimentConfig):
    if cfg.experiment == "repetition":
        return build_repetition(cfg.d, cfg.M, cfg.p)
    if cfg.experiment in ("surface", "surface_bloch"):
        from .experiments import _surface_spec
        return build_surface_d3(_surface_spec(cfg), cfg.basis, cfg.p)
    if cfg.experiment == "fig2":
        return build_fig2_example(*cfg.thetas, p=cfg.p)
    raise ConfigError(f"experiment {cfg.experiment!r} has no circuit to build")


def cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_experiment(cfg, threads=args.threads, output_dir=args.out)
    out = pathlib.Path(args.out or cfg.output_dir)
    for name, fname in sorted(result.files.items()):
        print(f"{name}: {out / fname}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    checks = verify_config(cfg)
    failed = False
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed |= not ok
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_scan(args) -> int:
    cfg = _load_config(args)
    n = run_scan_from_points(args.points, args.ideal, args.d or cfg.d,
                             cfg.k_list, args.out_csv)
    print(f"wrote {n} scan rows to {args.out_csv}")
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg = _load_config(args)
    if cfg.experiment != "scaling":
        cfg = cfg.with_overrides({"experiment": "scaling"})
    result = run_experiment(cfg, output_dir=args.out)
    out = pathlib.Path(args.out or cfg.output_dir)
    print(f"scaling: {out / result.files['scaling']}")
    return EXIT_OK


def cmd_decode_check(args) -> int:
    cfg = _load_config(args)
    code = _build_code(cfg)
    model = experiment_model(code, injection_p=cfg.p)
    t = args.t if args.t is not None else max(1, math.ceil(code.d / 2) - 1)
    rpt = verify_distance(code, model, t)
    status = "PASS" if rpt.passed else "FAIL"
    print(f"{status} distance check t={t}: {rpt.patterns_checked} patterns"
          + ("" if rpt.passed else
             f", first failure at weight {rpt.min_failing_weight}"))
    return EXIT_OK if rpt.passed else EXIT_VERIFY


def cmd_export_circuit(args) -> int:
    cfg = _load_config(args)
    code = _build_code(cfg)
    out = pathlib.Path(args.out or cfg.output_dir)
    files = code.export(out)
    for name, fname in sorted(files.items()):
        print(f"{name}: {out / fname}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lzne",
        description="Error-corrected circuit simulation with zero-noise "
                    "extrapolation")
    parser.add_argument("--config", help="experiment config JSON file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field (JSON-parsed value)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker process cap (results are identical "
                             "for any value)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment, emit CSV artifacts")
    p_run.add_argument("--out", help="output directory (default: config)")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="acceptance-linked spot checks")
    p_verify.set_defaults(func=cmd_verify)

    p_scan = sub.add_parser("scan", help="delta-eta scan from a points.csv")
    p_scan.add_argument("--points", required=True)
    p_scan.add_argument("--ideal", type=float, required=True)
    p_scan.add_argument("--d", type=int)
    p_scan.add_argument("--out-csv", required=True)
    p_scan.set_defaults(func=cmd_scan)

    p_scaling = sub.add_parser("scaling", help="large-scale projection sweep")
    p_scaling.add_argument("--out", help="output directory")
    p_scaling.set_defaults(func=cmd_scaling)

    p_dc = sub.add_parser("decode-check", help="exhaustive distance check")
    p_dc.add_argument("--t", type=int, help="max fault weight (default "
                                            "ceil(d/2)-1)")
    p_dc.set_defaults(func=cmd_decode_check)

    p_export = sub.add_parser("export-circuit", help="write code fixture files")
    p_export.add_argument("--out", help="output directory")
    p_export.set_defaults(func=cmd_export_circuit)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EstimatorError, NoiseError, json.JSONDecodeError,
            FileNotFoundError) as exc:
        if isinstance(exc, ScalingOverflowError):
            print(f"capacity error: {exc}", file=sys.stderr)
            return EXIT_CAPACITY
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, DefectCapacityError, ScalingOverflowError) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DecoderError as exc:
        print(f"decoder error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
