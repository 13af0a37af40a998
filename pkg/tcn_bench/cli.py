"""Command-line interface."""

import argparse
import sys
from collections.abc import Callable
from pathlib import Path

from .config import ExperimentConfig, apply_overrides, config_hash, dump_config, load_config
from .config_validator import ConfigValidator
from .constants import (
    AUTOENCODER_LOSS_LOG,
    DYNOBJ_SEQUENCE_LENGTH,
    DYNOBJ_SPLITS,
    EXIT_FAILURE,
    EXIT_INPUT_MISSING,
    EXIT_NUMERICAL_ABORT,
    EXIT_OK,
    EXIT_USAGE,
    LOSS_LOG,
    PREDICTOR_LOSS_LOG,
    PROBLEMS_PER_REGION,
    REGIME_KINDS,
)
from .exceptions import (
    ConfigurationError,
    DatasetError,
    InputMissingError,
    NumericalAbortError,
    TCNBenchError,
)
from .export_writers import Cell, read_loss_log, write_columns, write_table
from .helpers import derive_seed, format_duration
from .logger import attach_file_handler, detach_file_handler, logger, set_debug_mode
from .run_directory import RUN_ROOT, RunDirectory, resolve_run_path

EPILOG = """
examples:
  %(prog)s gen --task vaec --regime translation --region 1 --seed 7
  %(prog)s gen --task dynobj --split test --count 1000
  %(prog)s train --config configs/desk_translation_tcn.cfg --run desk_translation_tcn
  %(prog)s eval --run desk_translation_tcn
  %(prog)s analyze --run desk_translation_tcn --pca --dims
  %(prog)s analyze --run desk_translation_tcn --curves desk_translation_none
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcn-bench",
        description="Temporal context normalization benchmarks: visual analogies and dynamic object prediction.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="enable debug output",
    )
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    gen = commands.add_parser("gen", help="write dataset manifests and optional PNGs")
    gen.add_argument("--task", choices=("vaec", "dynobj"), required=True)
    gen.add_argument("--regime", choices=REGIME_KINDS, default="translation")
    gen.add_argument("--region", type=int, default=1, help="region or scale index (default: 1)")
    gen.add_argument("--split", choices=DYNOBJ_SPLITS, default="train")
    gen.add_argument("--length", type=int, default=DYNOBJ_SEQUENCE_LENGTH, help="frames per sequence")
    gen.add_argument("--count", type=int, help=f"records to write (vaec default: {PROBLEMS_PER_REGION}, dynobj: 1000)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, help="manifest path (default: under the run root)")
    gen.add_argument("--png", type=Path, metavar="DIR", help="also export PNG strips to DIR")
    gen.add_argument("--png-count", type=int, default=10, help="PNG strips to export (default: 10)")

    for name, text in (
        ("train", "train a model; resumes from the run's checkpoint"),
        ("eval", "evaluate a trained run"),
        ("analyze", "embedding, per-dimension and loss-curve analyses"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--run", help="run directory; bare names resolve under the run root")
        sub.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )
        if name == "train":
            sub.add_argument("--config", type=Path, help="experiment config file")
        if name == "eval":
            sub.add_argument("--regions", type=int, nargs="+", help="regions or scales to evaluate")
            sub.add_argument("--split", choices=DYNOBJ_SPLITS, default="test")
        if name == "analyze":
            sub.add_argument("--regions", type=int, nargs="+", help="regions or scales to analyze")
            sub.add_argument("--pca", action="store_true", help="embedding PCA report per region")
            sub.add_argument("--dims", action="store_true", help="accuracy per relevant dimension")
            sub.add_argument(
                "--curves", nargs="*", metavar="RUN", help="compare loss curves with other runs"
            )
    return parser


def cmd_gen(args: argparse.Namespace) -> int:
    from .dynobj import export_sequence_png, sample_sequence
    from .manifest import export_manifest, export_sequences
    from .vaec import RegimeSpec, export_problem_png, make_candidates, sample_problems

    if args.task == "vaec":
        count = PROBLEMS_PER_REGION if args.count is None else args.count
        try:
            regime = RegimeSpec.create(args.regime, args.region)
            problems = sample_problems(regime, count, seed=args.seed)
        except DatasetError as e:
            raise ConfigurationError(str(e)) from e
        out = args.out or RUN_ROOT / "manifests" / f"{regime.tag}-seed{args.seed}.txt"
        export_manifest(problems, out, seed=args.seed)
        print(f"{regime.tag}: {len(problems)} problems -> {out}")
        if args.png:
            args.png.mkdir(parents=True, exist_ok=True)
            for i, problem in enumerate(problems[: args.png_count]):
                candidates, _ = make_candidates(problem, derive_seed(args.seed, "manifest", i))
                export_problem_png(problem, candidates, args.png / f"{regime.tag}-{i:05d}.png")
        return EXIT_OK

    count = 1000 if args.count is None else args.count
    if count < 0 or args.length < 1:
        raise ConfigurationError("--count must be non-negative and --length positive")
    out = args.out or RUN_ROOT / "manifests" / f"dynobj_{args.split}-seed{args.seed}.txt"
    specs = [
        sample_sequence(args.split, derive_seed(args.seed, "sequences", args.split, i), args.length)
        for i in range(count)
    ]
    export_sequences(specs, out)
    print(f"dynobj {args.split}: {len(specs)} sequences -> {out}")
    if args.png:
        args.png.mkdir(parents=True, exist_ok=True)
        for i, spec in enumerate(specs[: args.png_count]):
            export_sequence_png(spec, args.png / f"dynobj_{args.split}-{i:05d}.png")
    return EXIT_OK


def _validated(config: ExperimentConfig) -> ExperimentConfig:
    is_valid, errors, warnings = ConfigValidator().validate_all(config, RUN_ROOT)
    for warning in warnings:
        logger.warning(warning)
    if not is_valid:
        for error in errors:
            logger.error(error)
        raise ConfigurationError(f"{len(errors)} configuration error(s)")
    return config


def _open_run(args: argparse.Namespace) -> tuple[RunDirectory, ExperimentConfig]:
    if not args.run:
        raise ConfigurationError("--run is required")
    run = RunDirectory.open(resolve_run_path(args.run))
    config = apply_overrides(load_config(run.config_path), args.set)
    return run, _validated(config)


def cmd_train(args: argparse.Namespace) -> int:
    from .training import train_analogy, train_autoencoder, train_predictor

    if args.config is None:
        run, config = _open_run(args)
    else:
        config = _validated(apply_overrides(load_config(args.config), args.set))
        name = args.run or f"{args.config.stem}-{config_hash(config)}"
        path = resolve_run_path(name)
        snapshot = dump_config(config)
        existing = RunDirectory(path).config_path
        if existing.exists() and existing.read_text(encoding="utf-8") != snapshot:
            raise ConfigurationError(f"Run directory {path} holds a different config")
        run = RunDirectory.create(path, snapshot)

    digest = config_hash(config)
    handler = attach_file_handler(run.log_path)
    try:
        logger.info(f"Run {run.path} (config {digest}, seed {config.seed})")
        if config.task == "dynobj":
            ae_record, autoencoder = train_autoencoder(config, run)
            record, _ = train_predictor(config, run, autoencoder)
            wall_clock = ae_record.wall_clock + record.wall_clock
        else:
            record, _ = train_analogy(config, run)
            wall_clock = record.wall_clock
        run.mark_done(digest)
        final = f"{record.losses[-1]:.4f}" if record.losses else "n/a"
        print(f"Trained {record.iterations} iterations, final loss {final} ({format_duration(wall_clock)})")
    finally:
        detach_file_handler(handler)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from .training import evaluate_analogy, evaluate_prediction, load_analogy_model, load_dynobj_models

    run, config = _open_run(args)
    digest = config_hash(config)
    if config.task == "dynobj":
        autoencoder, predictor = load_dynobj_models(config, run)
        metrics = evaluate_prediction(autoencoder, predictor, config, args.split, run)
        write_table(
            run.output_path(f"prediction_{args.split}.csv"),
            ["norm", "seed", "split", "mse", "copy_baseline_mse", "reconstruction_mse", "sequences", "config_hash"],
            [
                [
                    config.norm,
                    config.seed,
                    metrics.split,
                    metrics.mse,
                    metrics.copy_baseline_mse,
                    metrics.reconstruction_mse,
                    metrics.sequences,
                    digest,
                ]
            ],
        )
        return EXIT_OK

    model = load_analogy_model(config, run)
    regions = evaluate_analogy(model, config, args.regions, run)
    write_table(
        run.output_path("accuracy.csv"),
        ["norm", "seed", *(r.tag for r in regions), "config_hash"],
        [[config.norm, config.seed, *(r.accuracy for r in regions), digest]],
    )
    return EXIT_OK


def _curves(run: RunDirectory, config: ExperimentConfig, others: list[str], digest: str) -> None:
    from .analysis import curve_compare, iterations_to_halve

    logs = [LOSS_LOG] if config.task != "dynobj" else [AUTOENCODER_LOSS_LOG, PREDICTOR_LOSS_LOG]
    for log in logs:
        records: dict[str, list[list[float]]] = {}
        for path in [run.path, *(resolve_run_path(o) for o in others)]:
            other = RunDirectory.open(path)
            method = load_config(other.config_path).norm
            losses, _ = read_loss_log(other.require(other.output_path(log), "loss log"))
            records.setdefault(method, []).append(losses)
        curves = curve_compare(records)
        stem = Path(log).stem
        write_columns(run.output_path(f"curves_{stem}.csv"), curves, digest)
        halving: list[list[Cell]] = [
            [method, iterations_to_halve([v for v in curve if v is not None]), digest]
            for method, curve in curves.items()
        ]
        write_table(run.output_path(f"halving_{stem}.csv"), ["norm", "iterations_to_halve", "config_hash"], halving)


def cmd_analyze(args: argparse.Namespace) -> int:
    from .analysis import embedding_report, per_dimension_accuracy
    from .constants import DIMENSIONS
    from .training import evaluate_analogy, load_analogy_model

    run, config = _open_run(args)
    digest = config_hash(config)
    wants_all = not (args.pca or args.dims or args.curves is not None)

    if args.curves is not None or (wants_all and config.task == "dynobj"):
        _curves(run, config, args.curves or [], digest)
    if config.task == "dynobj":
        return EXIT_OK

    model = load_analogy_model(config, run)
    indices = args.regions or list(config.eval_regions)
    if args.dims or wants_all:
        table = per_dimension_accuracy(evaluate_analogy(model, config, indices, run))
        rows: list[list[Cell]] = [
            [dim, *(table.accuracy(dim, i) for i in table.regions), digest] for dim in DIMENSIONS
        ]
        write_table(run.output_path("per_dimension.csv"), ["dim", *table.tags, "config_hash"], rows)
    if args.pca or wants_all:
        fits: list[list[Cell]] = []
        for index in indices:
            report = embedding_report(model, config, index, run)
            pairs: list[list[Cell]] = [
                [fit.dim, float(pc), float(value), digest]
                for fit in report.fits
                for pc, value in zip(fit.pc1, fit.values)
            ]
            write_table(
                run.output_path(f"embedding_{report.tag}.csv"),
                ["dim", "pc1", "value", "config_hash"],
                pairs,
                dat=True,
            )
            fits.extend(
                [report.tag, f.dim, f.explained_ratio, f.fit.slope, f.fit.intercept, f.fit.r_squared, digest]
                for f in report.fits
            )
        write_table(
            run.output_path("embedding_fits.csv"),
            ["tag", "dim", "explained_ratio", "slope", "intercept", "r_squared", "config_hash"],
            fits,
        )
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
}


def main() -> None:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args()

    if args.debug:
        set_debug_mode(True)

    if args.command == "train" and args.config is None and not args.run:
        parser.error("train needs --config or --run")

    try:
        code = COMMANDS[args.command](args)
    except InputMissingError as e:
        logger.error(str(e))
        code = EXIT_INPUT_MISSING
    except NumericalAbortError as e:
        logger.error(str(e))
        code = EXIT_NUMERICAL_ABORT
    except ConfigurationError as e:
        logger.error(str(e))
        code = EXIT_USAGE
    except TCNBenchError as e:
        logger.error(str(e))
        code = EXIT_FAILURE
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        code = EXIT_FAILURE

    sys.exit(code)
