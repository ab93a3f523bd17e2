"""Command line interface.

Subcommands: run, ablate, sweep-ctv, heatmap, make-fixture, extract-mock.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 success with
convergence warnings.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import fixture, pipeline
from .config import PipelineConfig, config_from_mapping, load_config, parse_config_text
from .errors import ConfigError, ConvergenceWarning, SpeciesIdError
from .reduce import CTV_GRID

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--manifest", help="dataset manifest CSV")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def _build_config(args) -> PipelineConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides.update(parse_config_text(item, "<--set>"))
    if args.manifest:
        overrides["manifest"] = args.manifest
    if args.out:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        return load_config(args.config, overrides)
    if "manifest" not in overrides:
        raise ConfigError("either --config or --manifest is required")
    return config_from_mapping(overrides)


def _cmd_run(args) -> int:
    cfg = _build_config(args)
    report = pipeline.run_experiment(cfg)
    paths = pipeline.emit_run_artifacts(report, cfg.out_dir)
    print(pipeline.report_table(report), end="")
    print(f"report: {paths['report']}")
    return EXIT_CONVERGENCE if report.n_convergence_warnings else EXIT_OK


def _cmd_sweep_ctv(args) -> int:
    cfg = _build_config(args).with_overrides(ctv_grid=CTV_GRID)
    report = pipeline.run_experiment(cfg)
    paths = pipeline.emit_run_artifacts(report, cfg.out_dir)
    print(pipeline.ctv_curve_csv(report), end="")
    print(f"best ctv: {report.ctv_percent}% -> {100 * report.mean_accuracy:.2f}%")
    print(f"curve: {paths['curve']}")
    return EXIT_CONVERGENCE if report.n_convergence_warnings else EXIT_OK


def _cmd_ablate(args) -> int:
    cfg = _build_config(args)
    rungs = pipeline.run_ablation(cfg)
    pipeline.emit_ablation_artifacts(rungs, cfg.out_dir)
    print(pipeline.ablation_table(rungs), end="")
    warned = any(r.report and r.report.n_convergence_warnings for r in rungs)
    return EXIT_CONVERGENCE if warned else EXIT_OK


def _cmd_heatmap(args) -> int:
    cfg = _build_config(args)
    samples = args.samples.split(",") if args.samples else None
    written = pipeline.render_heatmaps(
        cfg,
        Path(cfg.out_dir) / "heatmaps",
        sample_ids=samples,
        per_class=args.per_class,
        alpha=args.alpha,
        ctv_percent=args.ctv,
    )
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_make_fixture(args) -> int:
    if args.profile == "images":
        path = fixture.make_image_fixture(args.out, seed=args.seed)
    else:
        spec = fixture.PROFILES[args.profile]
        if args.gan_per_class:
            from dataclasses import replace

            spec = replace(spec, gan_per_class=args.gan_per_class)
        if args.seed != 2024:
            from dataclasses import replace

            spec = replace(spec, seed=args.seed)
        path = fixture.make_feature_fixture(args.out, spec)
    print(path)
    return EXIT_OK


def _cmd_extract_mock(args) -> int:
    cfg = _build_config(args)
    out = pipeline.extract_mock_features(cfg, args.out_fvec)
    print(out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="speciesid",
        description="Few-sample species identification experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    _add_config_args(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep-ctv", help="run the full CTV grid")
    _add_config_args(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep_ctv)

    p_abl = sub.add_parser("ablate", help="baseline / +rotation / +gan / +all ladder")
    _add_config_args(p_abl)
    p_abl.set_defaults(func=_cmd_ablate)

    p_heat = sub.add_parser("heatmap", help="emit CAM heatmap overlays")
    _add_config_args(p_heat)
    p_heat.add_argument("--samples", help="comma-separated sample ids")
    p_heat.add_argument("--per-class", action="store_true", help="aggregate per class")
    p_heat.add_argument("--alpha", type=float, default=0.5)
    p_heat.add_argument("--ctv", type=int, help="CTV percent for the explained model")
    p_heat.set_defaults(func=_cmd_heatmap)

    p_fix = sub.add_parser("make-fixture", help="write a synthetic dataset")
    p_fix.add_argument("--out", required=True)
    p_fix.add_argument(
        "--profile", choices=["imbalanced", "separable", "images"], default="imbalanced"
    )
    p_fix.add_argument("--seed", type=int, default=2024)
    p_fix.add_argument("--gan-per-class", type=int, default=0)
    p_fix.set_defaults(func=_cmd_make_fixture)

    p_ext = sub.add_parser("extract-mock", help="mock-extract features to .fvec")
    _add_config_args(p_ext)
    p_ext.add_argument("--out-fvec", required=True)
    p_ext.set_defaults(func=_cmd_extract_mock)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpeciesIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
