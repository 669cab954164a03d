#!/usr/bin/env python
# Copyright 2024 areapo developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command line interface

Run ``areapo --help`` for the list of subcommands. Exit codes are

* 0 - success
* 1 - a self test check failed, or another error
* 2 - configuration error or missing input file
* 3 - checkpoint error
"""

import argparse
import dataclasses
import logging
import pathlib
import sys
import typing as T

import numpy
import pandas

from . import plot
from .config import RunConfig, load_config, load_noise_config
from .errors import AreapoError, CheckpointError, ConfigError
from .evaluation import (
    CATEGORIES,
    criteria_table,
    evaluate,
    export_report,
    robustness_suite,
)
from .io import load_checkpoint, load_trajectory_csv, save_trajectory_csv
from .learner import read_training_log, train
from .selftest import GROUPS, run_selftest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CHECKPOINT = 3


def _csv_list(text: str) -> T.List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _int_list(text: str) -> T.List[int]:
    try:
        return [int(x) for x in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="More logging (repeatable)"
    )
    common.add_argument("-q", "--quiet", action="store_true", help="Only log warnings")
    common.add_argument(
        "--config",
        action="append",
        default=[],
        metavar="FILE",
        help="YAML config file (repeatable, later files win)",
    )
    common.add_argument(
        "--set",
        action="append",
        default=[],
        dest="overrides",
        metavar="SECTION.KEY=VALUE",
        help="Override one config value (repeatable)",
    )
    common.add_argument("--task", choices=["acrobot", "pendubot"], help="Actuated joint")
    common.add_argument("--seed", type=int, help="Random seed (random if not set)")
    common.add_argument(
        "--output", help="Output directory (default $AREAPO_OUTPUT or ./areapo-output)"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="areapo",
        description="Average-reward entropy-advantage policy optimisation for "
        "double pendulum swing-up",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="Train a policy")
    p.add_argument("--frames", type=int, help="Training frame budget")
    p.add_argument(
        "--seeds", type=_int_list, help="Train once per seed, e.g. 1,2,3 (overrides --seed)"
    )
    p.add_argument("--no-progress", action="store_true", help="Hide the progress bar")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True, help="Checkpoint file")
    p.add_argument("--noise-config", help="YAML file of episode disturbances")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("robust", parents=[common], help="Robustness sweep of a checkpoint")
    p.add_argument("--checkpoint", required=True, help="Checkpoint file")
    p.add_argument(
        "--categories",
        type=_csv_list,
        help=f"Comma separated subset of {','.join(CATEGORIES)}",
    )
    p.add_argument("--serial", action="store_true", help="Run sweep points one at a time")
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("selftest", parents=[common], help="Run the health checks")
    p.add_argument(
        "--filter", type=_csv_list, help=f"Comma separated subset of {','.join(GROUPS)}"
    )
    p.add_argument(
        "--fixture",
        action="append",
        default=[],
        help="MDP fixture file or packaged fixture name (repeatable)",
    )
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("export", parents=[common], help="Plot existing CSV outputs")
    p.add_argument(
        "inputs",
        nargs="+",
        help="training_log.csv, trajectory or robustness CSV files",
    )
    p.set_defaults(func=cmd_export)

    return parser


def setup_logging(args: argparse.Namespace) -> None:
    if args.quiet:
        level = logging.WARNING
    elif args.verbose >= 1:
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.verbose < 2:
        # Plotting libraries are chatty at debug level
        logging.getLogger("matplotlib").setLevel(logging.WARNING)


def _load(args: argparse.Namespace, default_task: str = None, **flags) -> RunConfig:
    config = load_config(
        args.config,
        args.overrides,
        task=args.task or default_task,
        seed=args.seed,
        output=args.output,
        **flags,
    )
    if config.run.seed is None:
        seed = int(numpy.random.SeedSequence().entropy % 2 ** 31)
        logger.info("no seed given, using %d", seed)
        config = dataclasses.replace(config, run=dataclasses.replace(config.run, seed=seed))
    return config


def _prepare_output(config: RunConfig) -> pathlib.Path:
    out = config.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    config.write(out / "config.yaml")
    return out


def cmd_train(args: argparse.Namespace) -> int:
    """Train one policy per seed, writing checkpoints and logs"""
    config = _load(args, frames=args.frames)
    if args.seeds:
        config = dataclasses.replace(
            config, run=dataclasses.replace(config.run, seeds=tuple(args.seeds))
        )
    out = _prepare_output(config)

    seeds = list(config.run.seeds) or [config.run.seed]
    rows = []
    for seed in seeds:
        run_out = out if len(seeds) == 1 else out / f"seed-{seed}"
        run_config = dataclasses.replace(
            config, run=dataclasses.replace(config.run, seed=seed, seeds=())
        )
        if run_out != out:
            run_out.mkdir(parents=True, exist_ok=True)
            run_config.write(run_out / "config.yaml")

        result = train(
            config.learner,
            config.env,
            seed,
            run_out,
            thresholds=config.evaluation.thresholds,
            normalizers=config.evaluation.normalizers,
            eval_duration=config.evaluation.duration,
            config_text=run_config.to_yaml(),
            show_progress=not args.no_progress,
        )
        plot.learning_curve_chart(
            read_training_log(run_out / "training_log.csv"),
            run_out / "learning_curve.svg",
            title=f"{config.task.value} seed {seed}",
        )

        report = result.best_report
        rows.append(
            {
                "seed": seed,
                "best_score": result.best_score,
                "best_iteration": result.best_iteration,
                "success": report.success if report else False,
                "swingup_time": report.swingup_time if report else numpy.nan,
                "rho_hat": result.gains.rho_hat,
                "rho_H_hat": result.gains.rho_H_hat,
                "frames": result.frames,
            }
        )

    summary = pandas.DataFrame(rows)
    if len(seeds) > 1:
        summary.to_csv(out / "seeds.csv", index=False)
    print(summary.to_string(index=False))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Run one episode of a checkpoint and report its criteria"""
    ckpt = load_checkpoint(args.checkpoint)
    # The checkpoint's task unless --task says otherwise
    config = _load(args, default_task=ckpt.task)
    if ckpt.task != config.task.value:
        logger.warning(
            "checkpoint was trained on %s, evaluating on %s", ckpt.task, config.task.value
        )
    noise = load_noise_config(args.noise_config) if args.noise_config else None

    out = _prepare_output(config)
    report, traj = evaluate(
        ckpt,
        config.env,
        noise,
        config.evaluation.thresholds,
        config.evaluation.normalizers,
        config.evaluation.duration,
    )

    name = "trajectory_noisy" if noise is not None else "trajectory"
    save_trajectory_csv(traj, out / f"{name}.csv")
    plot.trajectory_chart(traj, out / f"{name}.svg", title=f"{config.task.value}")
    table = criteria_table([report], [pathlib.Path(args.checkpoint).name])
    table.to_csv(out / "criteria.csv", index=False)

    print(table.to_string(index=False))
    return EXIT_OK


def cmd_robust(args: argparse.Namespace) -> int:
    """Run the robustness sweep of a checkpoint"""
    ckpt = load_checkpoint(args.checkpoint)
    config = _load(args, default_task=ckpt.task)
    out = _prepare_output(config)

    report = robustness_suite(
        ckpt,
        config.env,
        config.sweep,
        config.evaluation.thresholds,
        config.evaluation.normalizers,
        categories=args.categories,
        parallel=config.run.parallel and not args.serial,
    )
    export_report(out, robustness=[report], labels=[pathlib.Path(args.checkpoint).name])

    for k, v in report.categories.items():
        print(f"{k:16s} {100 * v:6.1f}%")
    print(f"{'overall':16s} {100 * report.overall:6.1f}%")
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    """Run the health checks, failing if any check fails"""
    if args.output is not None:
        _prepare_output(_load(args))

    try:
        results = run_selftest(args.filter, args.fixture)
    except (FileNotFoundError, ValueError) as e:
        raise ConfigError(str(e)) from e

    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.group:9s} {r.name}: {r.detail}")

    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    """Render SVG figures from CSV outputs, next to each input file"""
    for name in args.inputs:
        path = pathlib.Path(name)
        if not path.is_file():
            raise ConfigError(f"input file {path} does not exist")

        columns = set(pandas.read_csv(path, nrows=0).columns)
        target = path.with_suffix(".svg")
        if {"rho_hat", "eval_score"} <= columns:
            plot.learning_curve_chart(read_training_log(path), target, title=path.stem)
        elif {"q1", "q2", "torque"} <= columns:
            plot.trajectory_chart(load_trajectory_csv(path), target, title=path.stem)
        elif "overall" in columns:
            table = pandas.read_csv(path)
            for _, row in table.iterrows():
                scores = {
                    c: float(row[c])
                    for c in CATEGORIES
                    if c in columns and pandas.notna(row[c])
                }
                chart = (
                    target
                    if len(table) == 1
                    else path.with_name(f"{path.stem}-{row['label']}.svg")
                )
                plot.robustness_chart(scores, chart, title=f"Overall {100 * row['overall']:.1f}%")
        else:
            raise ConfigError(f"don't know how to plot {path}, columns {sorted(columns)}")
        logger.info("plotted %s", path)
    return EXIT_OK


def main(argv: T.Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args)

    try:
        return args.func(args)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except CheckpointError as e:
        logger.error("%s", e)
        return EXIT_CHECKPOINT
    except AreapoError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
