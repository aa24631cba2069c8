# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import asyncio
import dataclasses
import functools
import logging
import typing
from concurrent.futures import Executor

import numpy as np
import numpy.typing as npt
import pandas as pd
import pydantic

from pyfcaging._executor import TaskExecutor
from pyfcaging.aging_laws import (
    AgingLaws,
    Model1,
    eval_laws,
    fit_aging_laws,
    fit_jlim_model1,
    normalize_time,
)
from pyfcaging.changepoint import detect_change, interpolate_jlim_hourly
from pyfcaging.database import AgingDatabase
from pyfcaging.ekf import (
    EkfState,
    FilterTrace,
    NoiseConfig,
    NoiseSettings,
    TransitionModel,
    propagate,
    run_filter,
    state_rmse,
    true_states,
)
from pyfcaging.electrochem import PhysicalConstants, voltage_field
from pyfcaging.exceptions import DataValidationError, ModelDomainError, NumericalError
from pyfcaging.identification import RESTART_RMSE, FitResult, fit_curve_set
from pyfcaging.scenario import (
    JlimScenario,
    LearningWindow,
    ScenarioConfig,
    generate_scenarios,
    model1_trajectory,
)

__all__ = [
    "Metrics",
    "PrognosisConfig",
    "PrognosisPipeline",
    "PrognosisResult",
    "ScenarioOutcome",
    "TrainedModel",
    "aggregate",
    "ape",
    "estimate_eol",
    "estimate_rul",
    "evaluate_scenario",
    "metrics",
    "predict_ensemble",
    "predict_model1",
    "score",
    "screen_fits",
    "sweep",
    "train",
]

logger = logging.getLogger("pyfcaging")

MIN_CHARACTERIZATIONS: typing.Final[int] = 3

QUANTILES: typing.Final[dict[str, float]] = {
    "min": 0.0,
    "q05": 0.05,
    "q25": 0.25,
    "median": 0.5,
    "q75": 0.75,
    "q95": 0.95,
    "max": 1.0,
}


class PrognosisConfig(pydantic.BaseModel):
    """Learning horizon, end-of-life rule and the nested stochastic settings."""

    model_config = pydantic.ConfigDict(extra="forbid")

    t_n: int = pydantic.Field(25_000, gt=0, description="learning horizon, h")
    t_max: int = pydantic.Field(38_000, gt=0, description="prediction horizon, h")
    j_op: float = pydantic.Field(1.0, gt=0, description="A/cm2")
    eol_fraction: float = pydantic.Field(0.9, gt=0, lt=1)
    jlim_variant: typing.Literal["model1", "model2"] = "model1"
    max_fit_rmse: float = pydantic.Field(5e-3, gt=0, description="V")
    fit_rmse_factor: float = pydantic.Field(100.0, gt=1)
    horizons: tuple[int, ...] = (500, 1000, 1500, 2000, 2500, 3000)
    scenario: ScenarioConfig = pydantic.Field(default_factory=ScenarioConfig)
    noise: NoiseSettings = pydantic.Field(default_factory=NoiseSettings)

    @pydantic.model_validator(mode="after")
    def _sync_horizons(self) -> "PrognosisConfig":
        if self.t_n >= self.t_max:
            raise ValueError(f"t_n={self.t_n!s} must be below t_max={self.t_max!s}")

        # The scenario sampler always works on this learning window.
        self.scenario = self.scenario.model_copy(
            update={"t_n": float(self.t_n), "t_max": float(self.t_max)}
        )

        return self


@dataclasses.dataclass(frozen=True)
class TrainedModel:
    """Everything the prediction phase needs from the learning window."""

    t_n: int
    times: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    fits: list[FitResult] = dataclasses.field(repr=False)
    laws: AgingLaws
    beta: float
    learning: LearningWindow
    transition: TransitionModel
    noise: NoiseConfig
    trace: FilterTrace = dataclasses.field(repr=False)
    state: EkfState = dataclasses.field(repr=False)
    measured: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    constants: PhysicalConstants = dataclasses.field(repr=False)

    @property
    def y0(self) -> float:
        return float(self.measured[0])

    @property
    def jlim_samples(self) -> npt.NDArray[np.float64]:
        """Identified ``(t, jlim)`` pairs, t in hours."""
        return np.column_stack([self.times, [fit.params.jlim for fit in self.fits]])


def screen_fits(
    times: npt.NDArray[np.float64],
    fits: typing.Sequence[FitResult],
    cfg: PrognosisConfig,
) -> tuple[npt.NDArray[np.float64], list[FitResult]]:
    """Drops identifications whose RMSE marks them as failed.

    A fit is rejected above ``cfg.max_fit_rmse`` or above
    ``cfg.fit_rmse_factor`` times the median RMSE of the set, the latter
    never below the restart level of the identification.

    Raises
    ------
    DataValidationError
        If fewer than three fits remain.
    """
    errors = np.array([fit.rmse for fit in fits])
    limit = min(
        cfg.max_fit_rmse,
        max(RESTART_RMSE, cfg.fit_rmse_factor * float(np.median(errors))),
    )
    keep = errors <= limit
    if not np.all(keep):
        logger.warning(
            "Dropping %d identifications with RMSE above %.3e V at t=%s h.",
            int(np.count_nonzero(~keep)),
            limit,
            ", ".join(f"{t:g}" for t in times[~keep]),
        )

    if np.count_nonzero(keep) < MIN_CHARACTERIZATIONS:
        logger.error("Only %d identifications pass the RMSE check.", keep.sum())
        raise DataValidationError(
            f"At least {MIN_CHARACTERIZATIONS!s} identifications with RMSE "
            f"below {limit:.3e} V are required."
        )

    return times[keep], [f for f, k in zip(fits, keep, strict=True) if k]


def train(
    db: AgingDatabase,
    cfg: PrognosisConfig,
    c: PhysicalConstants,
    *,
    executor: Executor | None = None,
) -> TrainedModel:
    """Learns every model component from the data available at ``t_n``.

    Runs identification with an RMSE screen, aging-law fitting, hourly
    jlim interpolation, breakpoint detection and the filter correction pass,
    in this order.

    Raises
    ------
    DataValidationError
        If fewer than three characterizations or fewer than three fits
        passing the RMSE screen are available, or if the data do not cover
        ``[0, t_n]``.
    """
    window = db.restrict(cfg.t_n)
    if len(window.curves) < MIN_CHARACTERIZATIONS:
        logger.error(
            "Only %d characterizations before t_n=%d.", len(window.curves), cfg.t_n
        )
        raise DataValidationError(
            f"At least {MIN_CHARACTERIZATIONS!s} characterizations are required "
            f"before t_n={cfg.t_n!s} h."
        )

    logger.info("Training on [0, %d] h with %d curves.", cfg.t_n, len(window.curves))

    fits = fit_curve_set(window.curves, c, j_ref=cfg.j_op, executor=executor)
    times, fits = screen_fits(
        np.array([curve.t for curve in window.curves]), fits, cfg
    )
    params = [fit.params for fit in fits]
    beta = params[0].beta

    laws = fit_aging_laws(
        times, params, t_max=cfg.t_max, jlim_variant=cfg.jlim_variant
    )

    spline, series = interpolate_jlim_hourly(
        np.column_stack([times, [p.jlim for p in params]]), cfg.t_n
    )
    detection = detect_change(series, cfg.scenario.tau, cfg.scenario.lambda0)

    transition = TransitionModel.from_laws(laws)
    j0, jn, r_ohm, _ = eval_laws(laws, 0.0)
    noise = cfg.noise.build([j0, jn, r_ohm])
    trace, state = run_filter(
        window.voltage, series, transition, noise, cfg.j_op, c, beta=beta
    )

    return TrainedModel(
        t_n=cfg.t_n,
        times=times,
        fits=fits,
        laws=laws,
        beta=beta,
        learning=LearningWindow(spline=spline, detection=detection, series=series),
        transition=transition,
        noise=noise,
        trace=trace,
        state=state,
        measured=window.voltage,
        constants=c,
    )


def estimate_eol(
    voltage: npt.ArrayLike, y0: float, eol_fraction: float = 0.9
) -> int | None:
    """First hour at which the voltage falls to ``eol_fraction * y0``.

    >>> estimate_eol([1.0, 0.95, 0.9, 0.85], 1.0)
    2
    """
    if y0 <= 0:
        raise ModelDomainError("The initial voltage must be positive.")

    below = np.flatnonzero(np.asarray(voltage, dtype=np.float64) <= eol_fraction * y0)

    return int(below[0]) if below.size else None


def estimate_rul(t_eol: float, t_n: float) -> float:
    if t_eol < t_n:
        raise ModelDomainError(f"End of life at {t_eol!s} h precedes t_n={t_n!s} h.")

    return float(t_eol - t_n)


@dataclasses.dataclass(frozen=True)
class Metrics:
    rmse_by_horizon: dict[int, float]
    rmse: float
    mape: float
    ape: float | None


def ape(rul_pred: float, rul_true: float) -> float:
    """Absolute percentage error of a RUL estimate.

    >>> ape(9000.0, 10000.0)
    10.0
    """
    if rul_true == 0:
        logger.error("APE is undefined for a zero true RUL.")
        raise DataValidationError("The true RUL must be non-zero.")

    return float(100.0 * abs((rul_true - rul_pred) / rul_true))


def metrics(
    predicted: npt.ArrayLike,
    truth: npt.ArrayLike,
    rul_pred: float | None,
    rul_true: float | None,
    *,
    horizons: typing.Sequence[int] = (500, 1000, 1500, 2000, 2500, 3000),
) -> Metrics:
    """Voltage errors over cumulative horizons, MAPE and the RUL APE.

    The APE is None when either RUL is unknown.

    Raises
    ------
    DataValidationError
        If the series are misaligned or the true RUL is zero.
    """
    p = np.asarray(predicted, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape or p.size == 0:
        raise DataValidationError(f"Misaligned series: {p.shape} != {t.shape}")

    errors = p - t
    rmse_by_horizon = {
        int(h): float(np.sqrt(np.mean(errors[:h] ** 2)))
        for h in horizons
        if h <= p.size
    }
    mape = float(np.mean(100.0 * np.abs(errors) / np.abs(t)))

    return Metrics(
        rmse_by_horizon=rmse_by_horizon,
        rmse=float(np.sqrt(np.mean(errors**2))),
        mape=mape,
        ape=None if rul_pred is None or rul_true is None else ape(rul_pred, rul_true),
    )


@dataclasses.dataclass(frozen=True)
class ScenarioOutcome:
    index: int
    voltage: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    t_eol: int | None
    rul: float | None


@dataclasses.dataclass(frozen=True)
class PrognosisResult:
    """Voltage ensemble on ``(t_n, t_max]`` and the end-of-life statistics."""

    t_n: int
    hours: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    scenarios: list[JlimScenario] = dataclasses.field(repr=False)
    voltages: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    t_eol: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    rul: npt.NDArray[np.float64] = dataclasses.field(repr=False)
    rul_median: float | None
    rul_mean: float | None
    n_failed: int
    n_without_eol: int

    @functools.cached_property
    def quantiles(self) -> pd.DataFrame:
        levels = np.quantile(self.voltages, list(QUANTILES.values()), axis=0)
        frame = pd.DataFrame({"t": self.hours})
        for name, row in zip(QUANTILES, levels, strict=True):
            frame[name] = row
        frame["mean"] = self.voltages.mean(axis=0)

        return frame

    def ruls_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "scenario": [s.index for s in self.scenarios],
                "t_c": [s.t_c for s in self.scenarios],
                "lambda": [s.lam for s in self.scenarios],
                "t_EOL": self.t_eol,
                "RUL": self.rul,
            }
        )


def _future_states(
    trained: TrainedModel, cfg: PrognosisConfig
) -> npt.NDArray[np.float64]:
    # jlim is exogenous, so the state forecast is shared by every scenario.
    theta, _, _ = propagate(
        trained.state, trained.transition, trained.noise.q, cfg.t_max - trained.t_n
    )

    return theta


def evaluate_scenario(
    trained: TrainedModel,
    cfg: PrognosisConfig,
    theta: npt.NDArray[np.float64],
    scenario: JlimScenario,
) -> ScenarioOutcome | None:
    """Predicted voltage and end of life of one scenario, or None on failure."""
    try:
        voltage = voltage_field(
            cfg.j_op,
            theta[:, 0],
            theta[:, 1],
            trained.beta,
            scenario.trajectory,
            theta[:, 2],
            trained.constants,
        )
    except ModelDomainError:
        logger.warning("Scenario %d leaves the model domain.", scenario.index)

        return None

    t_eol = estimate_eol(
        np.concatenate([trained.measured, voltage]), trained.y0, cfg.eol_fraction
    )
    if t_eol is None:
        rul = None
    elif t_eol <= trained.t_n:
        logger.warning("End of life already reached at %d h.", t_eol)
        rul = 0.0
    else:
        rul = estimate_rul(t_eol, trained.t_n)

    return ScenarioOutcome(index=scenario.index, voltage=voltage, t_eol=t_eol, rul=rul)


def aggregate(
    trained: TrainedModel,
    cfg: PrognosisConfig,
    scenarios: typing.Sequence[JlimScenario],
    outcomes: typing.Sequence[ScenarioOutcome | None],
) -> PrognosisResult:
    """Reduces per-scenario outcomes, ordered by scenario index."""
    kept = [(s, o) for s, o in zip(scenarios, outcomes, strict=True) if o is not None]
    if not kept:
        logger.error("Every scenario failed; no prediction is available.")
        raise NumericalError("All scenarios left the model domain.")

    t_eol = np.array([np.nan if o.t_eol is None else o.t_eol for _, o in kept])
    rul = np.array([np.nan if o.rul is None else o.rul for _, o in kept])
    reached = rul[np.isfinite(rul)]
    n_without_eol = int(rul.size - reached.size)
    if n_without_eol:
        logger.warning("%d scenarios do not reach end of life.", n_without_eol)

    result = PrognosisResult(
        t_n=trained.t_n,
        hours=np.arange(trained.t_n + 1, cfg.t_max + 1, dtype=np.float64),
        scenarios=[s for s, _ in kept],
        voltages=np.vstack([o.voltage for _, o in kept]),
        t_eol=t_eol,
        rul=rul,
        rul_median=float(np.median(reached)) if reached.size else None,
        rul_mean=float(np.mean(reached)) if reached.size else None,
        n_failed=len(outcomes) - len(kept),
        n_without_eol=n_without_eol,
    )
    logger.info(
        "Ensemble of %d scenarios: median RUL=%s h, mean RUL=%s h.",
        len(kept),
        result.rul_median,
        result.rul_mean,
    )

    return result


def predict_ensemble(
    trained: TrainedModel,
    cfg: PrognosisConfig,
    *,
    scenarios: typing.Sequence[JlimScenario] | None = None,
    executor: Executor | None = None,
) -> PrognosisResult:
    """Predicts the voltage under every jlim scenario from the filtered state.

    Parameters
    ----------
    trained : TrainedModel
        Output of :func:`train`.

    cfg : PrognosisConfig
        Prognosis configuration.

    scenarios : sequence of JlimScenario, optional
        Scenarios to use instead of sampling ``cfg.scenario``.

    executor : concurrent.futures.Executor, optional
        Executor for per-scenario evaluation.
    """
    if scenarios is None:
        scenarios = generate_scenarios(trained.learning, cfg.scenario, j_op=cfg.j_op)

    theta = _future_states(trained, cfg)
    evaluate = functools.partial(evaluate_scenario, trained, cfg, theta)
    outcomes = list((executor.map if executor else map)(evaluate, scenarios))

    return aggregate(trained, cfg, scenarios, outcomes)


def predict_model1(trained: TrainedModel, cfg: PrognosisConfig) -> PrognosisResult:
    """Single deterministic prediction with jlim extrapolated by the model1 law."""
    samples = trained.jlim_samples
    samples[:, 0] = normalize_time(samples[:, 0], trained.laws.t_max)
    laws = dataclasses.replace(
        trained.laws, jlim_model=Model1(*fit_jlim_model1(samples))
    )
    scenario = JlimScenario(
        index=0,
        case=0,
        t_c=float("nan"),
        lam=1.0,
        p1=None,
        t_n=trained.t_n,
        trajectory=model1_trajectory(
            laws,
            trained.t_n,
            cfg.t_max,
            floor=cfg.scenario.floor_factor * cfg.j_op,
        ),
    )

    return predict_ensemble(trained, cfg, scenarios=[scenario])


def score(
    result: PrognosisResult,
    db: AgingDatabase,
    cfg: PrognosisConfig,
) -> dict[str, typing.Any] | None:
    """Compares a prediction with the recorded future of the database.

    Returns
    -------
    dict or None
        Metrics ready for JSON export, or None when the database does not
        extend to ``t_max``.
    """
    if db.horizon < cfg.t_max:
        logger.info("No recorded future beyond %d h; skipping metrics.", db.horizon)

        return None

    truth = db.voltage[result.t_n + 1 : cfg.t_max + 1]
    true_eol = estimate_eol(db.voltage, db.y0, cfg.eol_fraction)

    rul_true: float | None = None
    if true_eol is None or true_eol <= result.t_n:
        logger.warning("The recorded end of life does not follow t_n; no APE.")
    else:
        rul_true = estimate_rul(true_eol, result.t_n)

    median = metrics(
        result.quantiles["median"].to_numpy(),
        truth,
        result.rul_median,
        rul_true,
        horizons=cfg.horizons,
    )
    per_scenario = [
        metrics(v, truth, None if np.isnan(r) else float(r), rul_true, horizons=())
        for v, r in zip(result.voltages, result.rul, strict=True)
    ]
    apes = [m.ape for m in per_scenario if m.ape is not None]

    return {
        "t_n": result.t_n,
        "n_scenarios": len(result.scenarios),
        "n_failed": result.n_failed,
        "n_without_eol": result.n_without_eol,
        "t_eol_true": true_eol,
        "rul_true": rul_true,
        "rul_median": result.rul_median,
        "rul_mean": result.rul_mean,
        "ape_median": median.ape,
        "ape_mean": (
            None
            if result.rul_mean is None or rul_true is None
            else ape(result.rul_mean, rul_true)
        ),
        "ape_scenarios_mean": float(np.mean(apes)) if apes else None,
        "rmse_by_horizon": {str(h): v for h, v in median.rmse_by_horizon.items()},
        "rmse_median": median.rmse,
        "mape_median": median.mape,
        "rmse_scenarios_mean": float(np.mean([m.rmse for m in per_scenario])),
        "mape_scenarios_mean": float(np.mean([m.mape for m in per_scenario])),
    }


def sweep(
    db: AgingDatabase,
    t_n_values: typing.Sequence[int],
    cfg: PrognosisConfig,
    c: PhysicalConstants,
    *,
    truth: AgingLaws | None = None,
    executor: Executor | None = None,
) -> pd.DataFrame:
    """Runs the whole pipeline for several learning horizons."""
    rows: list[dict[str, typing.Any]] = []
    for t_n in t_n_values:
        local = PrognosisConfig.model_validate(cfg.model_dump() | {"t_n": int(t_n)})
        trained = train(db, local, c, executor=executor)
        result = predict_ensemble(trained, local, executor=executor)
        scores = score(result, db, local) or {}

        row: dict[str, typing.Any] = {
            "t_n": int(t_n),
            "detected": trained.learning.detection.detected,
            "t_c": trained.learning.detection.t_c,
            "rul_median": result.rul_median,
            "rul_mean": result.rul_mean,
            "rul_true": scores.get("rul_true"),
            "ape_median": scores.get("ape_median"),
            "ape_mean": scores.get("ape_mean"),
            "mape_mean": scores.get("mape_scenarios_mean"),
        }
        if truth is not None:
            errors = state_rmse(trained.trace, true_states(truth, trained.trace.t))
            row |= {"rmse_j0": errors[0], "rmse_jn": errors[1], "rmse_r_ohm": errors[2]}

        logger.info("Learning horizon %d h: APE=%s %%", t_n, row["ape_median"])
        rows.append(row)

    return pd.DataFrame(rows)


class PrognosisPipeline:
    """Asynchronous driver of training and ensemble prediction.

    Per-curve fits and per-scenario evaluations run on a shared thread pool;
    progress is logged every ``log_interval`` completed tasks.
    """

    def __init__(
        self,
        cfg: PrognosisConfig,
        constants: PhysicalConstants,
        *,
        max_workers: int | None = None,
        log_interval: int = TaskExecutor.DEFAULT_LOGGER_INTERVAL,
    ) -> None:
        self._cfg = cfg
        self._constants = constants
        self._tasks = TaskExecutor(max_workers=max_workers, log_interval=log_interval)

    @property
    def config(self) -> PrognosisConfig:
        return self._cfg

    async def __aenter__(self) -> "PrognosisPipeline":
        await self._tasks.__aenter__()

        return self

    async def __aexit__(self, *args: typing.Any, **kwargs: typing.Any) -> None:
        await self._tasks.__aexit__(*args, **kwargs)

    async def train(self, db: AgingDatabase) -> TrainedModel:
        loop = asyncio.get_running_loop()

        # The default loop executor keeps the worker pool free for the fits.
        return await loop.run_in_executor(
            None,
            functools.partial(
                train, db, self._cfg, self._constants, executor=self._tasks.executor
            ),
        )

    async def predict(
        self,
        trained: TrainedModel,
        scenarios: typing.Sequence[JlimScenario] | None = None,
    ) -> PrognosisResult:
        loop = asyncio.get_running_loop()
        if scenarios is None:
            scenarios = await loop.run_in_executor(
                None,
                functools.partial(
                    generate_scenarios,
                    trained.learning,
                    self._cfg.scenario,
                    j_op=self._cfg.j_op,
                ),
            )

        theta = await loop.run_in_executor(None, _future_states, trained, self._cfg)
        outcomes = await self._tasks.map(
            functools.partial(evaluate_scenario, trained, self._cfg, theta),
            scenarios,
            label="Scenarios",
        )

        return aggregate(trained, self._cfg, scenarios, outcomes)

    async def run(self, db: AgingDatabase) -> tuple[TrainedModel, PrognosisResult]:
        trained = await self.train(db)

        return trained, await self.predict(trained)
