#!/usr/bin/env python3

# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import argparse
import asyncio
import enum
import functools
import logging
import pathlib
import sys
import typing
from importlib import metadata

import dotenv

# This must occur before importing any package components that depend
# on environment-based settings.
dotenv.load_dotenv(".env")

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import pydantic  # noqa: E402

from pyfcaging import database, logger_wrapper  # noqa: E402
from pyfcaging.__about__ import __description__  # noqa: E402
from pyfcaging._executor import TaskExecutor  # noqa: E402
from pyfcaging.aging_laws import AgingLaws, fit_aging_laws  # noqa: E402
from pyfcaging.changepoint import (  # noqa: E402
    detect_change,
    discrete_derivatives,
    interpolate_jlim_hourly,
)
from pyfcaging.database import AgingDatabase  # noqa: E402
from pyfcaging.ekf import trace_frame  # noqa: E402
from pyfcaging.exceptions import (  # noqa: E402
    DataValidationError,
    ModelDomainError,
    NumericalError,
)
from pyfcaging.identification import FitResult, fit_curve_set  # noqa: E402
from pyfcaging.prognosis import (  # noqa: E402
    PrognosisPipeline,
    PrognosisResult,
    predict_model1,
    score,
    sweep,
)
from pyfcaging.scenario import generate_scenarios, write_scenarios  # noqa: E402
from pyfcaging.settings import RunConfig  # noqa: E402
from pyfcaging.synthdata import generate_database, write_truth  # noqa: E402

logger = logging.getLogger("pyfcaging")

EX_FAILURE: typing.Final[int] = 1
EX_VALIDATION: typing.Final[int] = 2
EX_IO: typing.Final[int] = 3
EX_NUMERICAL: typing.Final[int] = 4
EX_INTERRUPT: typing.Final[int] = 130

MANIFEST_FILE: typing.Final[str] = "manifest.json"


class Command(enum.Enum):
    SYNTH = "synth"
    IDENTIFY = "identify"
    FITLAWS = "fitlaws"
    DETECT = "detect"
    PREDICT = "predict"
    SCENARIOS = "scenarios"
    SWEEP = "sweep"


def _write_manifest(
    settings: RunConfig, out: pathlib.Path, **extra: typing.Any
) -> None:
    database.write_json(
        {"config": settings.model_dump(mode="json")} | extra, out / MANIFEST_FILE
    )


def _learning_window(db: AgingDatabase, arguments: argparse.Namespace) -> AgingDatabase:
    # Analysis commands use the whole database unless --tn is given.
    return db if arguments.tn is None else db.restrict(arguments.tn)


def _params_frame(times: typing.Sequence[float], fits: list[FitResult]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t_h": times,
            "j0": [fit.params.j0 for fit in fits],
            "jn": [fit.params.jn for fit in fits],
            "beta": [fit.params.beta for fit in fits],
            "jlim": [fit.params.jlim for fit in fits],
            "r_ohm": [fit.params.r_ohm for fit in fits],
            "rmse_V": [fit.rmse for fit in fits],
            "n_iterations": [fit.n_iterations for fit in fits],
            "converged": [fit.converged for fit in fits],
        }
    )


async def _identify(
    db: AgingDatabase, settings: RunConfig, tasks: TaskExecutor
) -> list[FitResult]:
    loop = asyncio.get_running_loop()

    return await loop.run_in_executor(
        None,
        functools.partial(
            fit_curve_set,
            db.curves,
            settings.physical_constants,
            j_ref=settings.prognosis.j_op,
            executor=tasks.executor,
        ),
    )


async def _synth(settings: RunConfig, out: pathlib.Path) -> None:
    gt = settings.synth.build(settings.physical_constants, settings.operating)
    db = generate_database(gt, settings.seed)

    database.write_database(db, out)
    write_truth(gt, out, settings.seed)
    _write_manifest(settings, out)


async def _analyze(
    command: Command,
    settings: RunConfig,
    db: AgingDatabase,
    out: pathlib.Path,
) -> None:
    async with TaskExecutor(
        max_workers=settings.max_workers, log_interval=settings.log_interval
    ) as tasks:
        fits = await _identify(db, settings, tasks)

    times = np.array([curve.t for curve in db.curves])
    database.write_csv(_params_frame(times, fits), out / "params.csv")

    if command in (Command.FITLAWS, Command.DETECT):
        laws = fit_aging_laws(
            times,
            [fit.params for fit in fits],
            t_max=settings.prognosis.t_max,
            jlim_variant=settings.prognosis.jlim_variant,
        )
        database.write_json(laws.to_dict(), out / "laws.json")

    if command is Command.DETECT:
        scenario = settings.prognosis.scenario
        t_n = int(times[-1])
        _, series = interpolate_jlim_hourly(
            np.column_stack([times, [fit.params.jlim for fit in fits]]), t_n
        )
        detection = detect_change(series, scenario.tau, scenario.lambda0)
        database.write_json(detection.to_dict(), out / "detection.json")

        first, second = discrete_derivatives(series)
        database.write_csv(
            pd.DataFrame(
                {
                    "t_h": np.arange(series.size, dtype=np.int64),
                    "jlim": series,
                    "d1": np.concatenate([[np.nan], first]),
                    "d2": np.concatenate([[np.nan, np.nan], second]),
                }
            ),
            out / "jlim_hourly.csv",
        )
        database.write_csv(
            pd.DataFrame(
                detection.lambda_actual_trace, columns=["t_h", "lambda_actual"]
            ),
            out / "lambda_trace.csv",
        )

    _write_manifest(settings, out)


def _summary(result: PrognosisResult) -> dict[str, typing.Any]:
    return {
        "t_n": result.t_n,
        "n_scenarios": len(result.scenarios),
        "n_failed": result.n_failed,
        "n_without_eol": result.n_without_eol,
        "rul_median": result.rul_median,
        "rul_mean": result.rul_mean,
    }


async def _predict(
    settings: RunConfig,
    db: AgingDatabase,
    out: pathlib.Path,
    compare_model1: bool,
) -> None:
    cfg = settings.prognosis
    async with PrognosisPipeline(
        cfg,
        settings.physical_constants,
        max_workers=settings.max_workers,
        log_interval=settings.log_interval,
    ) as pipeline:
        trained, result = await pipeline.run(db)

    database.write_csv(result.quantiles, out / "quantiles.csv")
    database.write_csv(result.ruls_frame(), out / "ruls.csv")
    database.write_csv(trace_frame(trained.trace), out / "ekf_trace.csv")

    scores = score(result, db, cfg) or _summary(result)
    scores["detection"] = trained.learning.detection.to_dict()
    if compare_model1:
        reference = predict_model1(trained, cfg)
        scores["model1"] = score(reference, db, cfg) or _summary(reference)

    database.write_json(scores, out / "metrics.json")
    _write_manifest(settings, out)


async def _scenarios(settings: RunConfig, db: AgingDatabase, out: pathlib.Path) -> None:
    cfg = settings.prognosis
    async with PrognosisPipeline(
        cfg,
        settings.physical_constants,
        max_workers=settings.max_workers,
        log_interval=settings.log_interval,
    ) as pipeline:
        trained = await pipeline.train(db)

    scenarios = generate_scenarios(trained.learning, cfg.scenario, j_op=cfg.j_op)
    write_scenarios(
        scenarios,
        out / "scenarios",
        {"config": settings.model_dump(mode="json")},
    )
    _write_manifest(settings, out)


async def _sweep(
    settings: RunConfig,
    db: AgingDatabase,
    source: pathlib.Path,
    out: pathlib.Path,
    t_n_values: list[int],
) -> None:
    truth: AgingLaws | None = None
    if (source / "truth.json").exists():
        truth = AgingLaws.from_dict(database.read_json(source / "truth.json")["laws"])

    loop = asyncio.get_running_loop()
    async with TaskExecutor(
        max_workers=settings.max_workers, log_interval=settings.log_interval
    ) as tasks:
        frame = await loop.run_in_executor(
            None,
            functools.partial(
                sweep,
                db,
                t_n_values,
                settings.prognosis,
                settings.physical_constants,
                truth=truth,
                executor=tasks.executor,
            ),
        )

    database.write_csv(frame, out / "sweep.csv")
    _write_manifest(settings, out, t_n_values=t_n_values)


async def _main() -> None:
    """The command-line interface."""
    parser = argparse.ArgumentParser(description=__description__)
    parser.add_argument(
        "-v", "--version", action="version", version=metadata.version("pyfcaging")
    )
    parser.add_argument(
        "--config",
        type=pathlib.Path,
        metavar="PATH",
        help="JSON configuration document",
    )
    parser.add_argument(
        "--out",
        type=pathlib.Path,
        default=pathlib.Path("."),
        metavar="DIR",
        help="output directory",
    )
    parser.add_argument(
        "--database",
        type=pathlib.Path,
        metavar="DIR",
        help="directory holding the aging database",
    )
    parser.add_argument(
        "--tn",
        type=int,
        metavar="HOURS",
        help="learning horizon in hours",
    )
    parser.add_argument(
        "--scenarios",
        type=int,
        metavar="N",
        help="number of jlim scenarios",
    )
    parser.add_argument(
        "--seed",
        type=int,
        metavar="U64",
        help="seed of every stochastic step",
    )
    parser.add_argument(
        "--max-workers",
        type=int,
        metavar="N",
        help="maximum number of worker threads for parallel tasks",
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default="INFO",
        metavar="LEVEL",
        help="logging level name",
    )

    subparsers = parser.add_subparsers(dest="cmd", required=True)

    subparsers.add_parser(Command.SYNTH.value, help="Generate a synthetic database.")
    subparsers.add_parser(
        Command.IDENTIFY.value, help="Identify every polarization curve."
    )
    subparsers.add_parser(Command.FITLAWS.value, help="Fit the aging laws.")
    subparsers.add_parser(Command.DETECT.value, help="Detect the jlim breakpoint.")
    predict_parser = subparsers.add_parser(
        Command.PREDICT.value, help="Predict the voltage and the remaining useful life."
    )
    predict_parser.add_argument(
        "--compare-model1",
        action="store_true",
        help="also run the single-exponential jlim extrapolation",
    )
    subparsers.add_parser(Command.SCENARIOS.value, help="Dump the jlim scenarios.")
    sweep_parser = subparsers.add_parser(
        Command.SWEEP.value, help="Repeat the prediction for several learning horizons."
    )
    sweep_parser.add_argument(
        "--tn-values",
        type=int,
        nargs="+",
        default=[10_000, 15_000, 20_000, 25_000, 30_000, 35_000],
        metavar="HOURS",
        help="learning horizons in hours",
    )

    try:
        arguments = parser.parse_args()
        logger_wrapper.setup(arguments.log_level)

        settings = RunConfig.from_arguments(arguments)
        command = Command(arguments.cmd)
        out: pathlib.Path = arguments.out
        out.mkdir(parents=True, exist_ok=True)

        if command is Command.SYNTH:
            await _synth(settings, out)
            return

        if arguments.database is None:
            raise DataValidationError(f"Command {command.value!s} needs --database.")

        db = database.read_database(arguments.database)

        match command:
            case Command.IDENTIFY | Command.FITLAWS | Command.DETECT:
                await _analyze(command, settings, _learning_window(db, arguments), out)

            case Command.PREDICT:
                await _predict(settings, db, out, arguments.compare_model1)

            case Command.SCENARIOS:
                await _scenarios(settings, db, out)

            case Command.SWEEP:
                await _sweep(settings, db, arguments.database, out, arguments.tn_values)

        logger.info("Command %s has finished successfully.", command.value)
    except pydantic.ValidationError as err:
        logger.error("Failed to load and set configuration.")
        logger.error(err)

        sys.exit(EX_VALIDATION)

    except (DataValidationError, ModelDomainError) as err:
        logger.error("Invalid input: %s", err)

        sys.exit(EX_VALIDATION)

    except NumericalError as err:
        logger.error("Numerical failure: %s", err)

        sys.exit(EX_NUMERICAL)

    except OSError as err:
        logger.error("Input or output failure: %s", err)

        sys.exit(EX_IO)

    except Exception:
        logger.exception("An unexpected error occurred at this program runtime.")

        sys.exit(EX_FAILURE)

    except KeyboardInterrupt:
        logger.info(
            "Abort this program runtime as a consequence of a keyboard interrupt."
        )

        sys.exit(EX_INTERRUPT)


def main() -> None:
    """This function is only necessary for creating an entry point script."""
    asyncio.run(_main())


if __name__ == "__main__":
    main()
