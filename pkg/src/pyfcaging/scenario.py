# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import pathlib
import typing

import numpy as np
import numpy.typing as npt
import pandas as pd
import pydantic
from numpy.polynomial import Polynomial

from pyfcaging import database
from pyfcaging.aging_laws import AgingLaws, eval_jlim, normalize_time
from pyfcaging.changepoint import ChangeDetection, SplineModel, eval_spline
from pyfcaging.exceptions import DataValidationError, ModelDomainError, NumericalError

__all__ = [
    "JlimScenario",
    "LearningWindow",
    "ScenarioConfig",
    "build_p1",
    "extend_p2",
    "generate_scenarios",
    "model1_trajectory",
    "sample_pareto",
    "sample_truncated_exponential",
    "write_scenarios",
]

logger = logging.getLogger("pyfcaging")

MAX_RESAMPLES: typing.Final[int] = 100

# Relative size under which the P1 denominator counts as singular.
_SINGULAR: typing.Final[float] = 1e-12


class ScenarioConfig(pydantic.BaseModel):
    """Sampling parameters of the jlim scenarios beyond the learning window."""

    model_config = pydantic.ConfigDict(extra="forbid")

    mu: float = pydantic.Field(1_500.0, gt=0, description="exponential scale, h")
    s: float = pydantic.Field(10.0, gt=0, description="Pareto shape")
    n_scenarios: int = pydantic.Field(500, ge=1)
    t_n: float = pydantic.Field(25_000.0, gt=0, description="learning horizon, h")
    t_max: float = pydantic.Field(38_000.0, gt=0, description="prediction horizon, h")
    tau: int = pydantic.Field(10, ge=1, description="detection window, h")
    lambda0: float = pydantic.Field(2.0, gt=1)
    seed: int = pydantic.Field(0, ge=0)
    floor_factor: float = pydantic.Field(
        1.05, gt=1, description="jlim floor as a multiple of the operating j"
    )

    @pydantic.model_validator(mode="after")
    def _check_horizon(self) -> "ScenarioConfig":
        if self.t_n >= self.t_max:
            raise ValueError(f"t_n={self.t_n!s} must be below t_max={self.t_max!s}")

        return self


@dataclasses.dataclass(frozen=True)
class LearningWindow:
    """What the learning phase knows about jlim on ``[0, t_n]``."""

    spline: SplineModel
    detection: ChangeDetection
    series: npt.NDArray[np.float64]  # hourly jlim, index = hour

    @property
    def t_n(self) -> int:
        return self.series.size - 1


@dataclasses.dataclass(frozen=True)
class JlimScenario:
    """One sampled jlim future.

    ``trajectory[k]`` holds jlim at hour ``t_n + 1 + k``.
    """

    index: int
    case: int  # 1: breakpoint sampled, 2: breakpoint already detected
    t_c: float
    lam: float
    p1: tuple[float, float, float] | None
    t_n: int
    trajectory: npt.NDArray[np.float64] = dataclasses.field(repr=False)

    @property
    def hours(self) -> npt.NDArray[np.float64]:
        start = self.t_n + 1

        return np.arange(start, start + self.trajectory.size, dtype=np.float64)


def sample_truncated_exponential(
    u: npt.ArrayLike, mu: float, t_n: float, t_max: float
) -> npt.NDArray[np.float64] | float:
    """Inverse CDF of the exponential law truncated to ``[t_n, t_max]``.

    >>> sample_truncated_exponential(0.0, 10000.0, 20000.0, 38000.0)
    20000.0
    """
    if not t_n < t_max or mu <= 0:
        raise ModelDomainError("Sampling requires mu > 0 and t_n < t_max.")

    p = np.asarray(u, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise ModelDomainError("Uniform draws must lie in [0, 1].")

    mass = -np.expm1(-(t_max - t_n) / mu)
    t_c = np.clip(t_n - mu * np.log1p(-mass * p), t_n, t_max)

    return t_c if t_c.ndim else float(t_c)


def sample_pareto(u: npt.ArrayLike, s: float) -> npt.NDArray[np.float64] | float:
    """Inverse CDF of the Pareto law with unit location.

    >>> sample_pareto(0.5, 1.0)
    2.0
    """
    p = np.asarray(u, dtype=np.float64)
    if s <= 0:
        raise ModelDomainError("The Pareto shape must be positive.")

    if np.any((p <= 0) | (p > 1)):
        raise ModelDomainError("Uniform draws must lie in (0, 1]; u = 0 is unbounded.")

    lam = p ** (-1.0 / s)

    return lam if lam.ndim else float(lam)


def build_p1(
    t_n: float,
    jlim_n: float,
    slope_n: float,
    jlim_0: float,
    t_c: float,
    tau: float,
    lambda0: float,
) -> tuple[float, float, float]:
    """Quadratic continuation ``a t**2 + b t + c`` of the learning curve.

    The quadratic matches the value and slope at ``t_n`` and makes the
    detection ratio reach exactly ``lambda0`` at ``t_c``:
    ``t_c * (P1(t_c) - P1(t_c + tau)) = lambda0 * tau * (jlim_0 - P1(t_c))``.

    Raises
    ------
    NumericalError
        If the system is singular for this ``t_c``.
    """
    if t_c <= t_n:
        raise ModelDomainError(f"t_c={t_c!s} must lie after t_n={t_n!s}.")

    d = t_c - t_n
    denominator = lambda0 * d**2 - t_c * (2.0 * d + tau)
    if abs(denominator) <= _SINGULAR * (lambda0 * d**2 + t_c * (2.0 * d + tau)):
        raise NumericalError(f"The P1 system is singular at t_c={t_c!s}.")

    a = (lambda0 * (jlim_0 - jlim_n - slope_n * d) + t_c * slope_n) / denominator
    b = slope_n - 2.0 * a * t_n
    c = jlim_n - slope_n * t_n + a * t_n**2

    return a, b, c


class _Curve(typing.Protocol):
    def __call__(self, t: npt.ArrayLike) -> typing.Any: ...

    def deriv(self) -> "_Curve": ...


def extend_p2(
    p1: _Curve, t_c: float, lam: float, t: npt.ArrayLike
) -> npt.NDArray[np.float64] | float:
    """Accelerated continuation of ``p1`` after ``t_c``.

    ``P2(t) = (1 - lam) P1(t_c) + lam P1(t) + (1 - lam) P1'(t_c) (t - t_c)``
    keeps value and slope at ``t_c`` and scales the curvature by ``lam``.
    """
    if lam < 1:
        raise ModelDomainError(f"Acceleration factor must be >= 1, got {lam!s}.")

    x = np.asarray(t, dtype=np.float64)
    value = (1.0 - lam) * p1(t_c) + lam * p1(x) + (1.0 - lam) * p1.deriv()(t_c) * (
        x - t_c
    )

    return value if np.ndim(value) else float(value)


def _terminal_taylor(learning: LearningWindow) -> Polynomial:
    """Quadratic model of jlim around ``t_n`` for a detected breakpoint.

    Value and slope come from the spline at ``t_n``. The curvature does not
    come from a one-sided second derivative there: the constrained spline has
    zero curvature at its last knot, so the curvature is taken from the least
    squares quadratic over ``[t_c, t_n]`` instead.
    """
    t_n = learning.t_n
    value, slope = (float(v) for v in eval_spline(learning.spline, float(t_n)))

    start = int(np.floor(learning.detection.t_c or 0.0))
    hours = np.arange(start, t_n + 1, dtype=np.float64)
    fit = Polynomial.fit(hours - t_n, learning.series[start:], 2).convert()
    curvature = 2.0 * fit.coef[2]

    shift = Polynomial([-float(t_n), 1.0])

    return Polynomial([value, slope, 0.5 * curvature])(shift)


def _apply_floor(
    trajectory: npt.NDArray[np.float64], floor: float
) -> npt.NDArray[np.float64]:
    crossed = np.flatnonzero(trajectory <= floor)
    if crossed.size:
        trajectory = trajectory.copy()
        trajectory[crossed[0] :] = floor

    return trajectory


def _substreams(seed: int, n: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n)

    return [np.random.Generator(np.random.Philox(child)) for child in children]


def _case_one(
    index: int,
    rng: np.random.Generator,
    learning: LearningWindow,
    cfg: ScenarioConfig,
    hours: npt.NDArray[np.float64],
) -> JlimScenario:
    t_n = learning.t_n
    jlim_n = float(learning.series[-1])
    _, slope = eval_spline(learning.spline, float(t_n))
    lam = float(sample_pareto(1.0 - rng.random(), cfg.s))

    for attempt in range(MAX_RESAMPLES):
        u = rng.random()
        t_c = float(sample_truncated_exponential(u, cfg.mu, t_n, cfg.t_max))
        if t_c <= t_n:
            continue

        try:
            a, b, c = build_p1(
                float(t_n),
                jlim_n,
                float(slope),
                float(learning.series[0]),
                t_c,
                cfg.tau,
                cfg.lambda0,
            )
        except NumericalError:
            logger.debug("Scenario %d: singular P1 on attempt %d.", index, attempt)
            continue

        p1 = Polynomial([c, b, a])
        trajectory = np.where(hours <= t_c, p1(hours), extend_p2(p1, t_c, lam, hours))

        return JlimScenario(
            index=index,
            case=1,
            t_c=t_c,
            lam=lam,
            p1=(a, b, c),
            t_n=t_n,
            trajectory=trajectory,
        )

    logger.error(
        "Scenario %d: P1 stayed singular after %d draws.", index, MAX_RESAMPLES
    )
    raise NumericalError(
        f"Could not build scenario {index!s} after {MAX_RESAMPLES!s} resamples."
    )


def generate_scenarios(
    learning: LearningWindow, cfg: ScenarioConfig, *, j_op: float = 1.0
) -> list[JlimScenario]:
    """Samples ``cfg.n_scenarios`` jlim futures on ``(t_n, t_max]``.

    Without a detected breakpoint, each scenario draws a breakpoint and an
    acceleration factor and follows P1 then P2. With a detected breakpoint,
    only the acceleration factor is drawn and the terminal quadratic model of
    the learning curve is accelerated from ``t_n``. Scenario ``i`` uses its
    own Philox substream so results do not depend on execution order.
    """
    t_n = learning.t_n
    if t_n != int(cfg.t_n):
        raise DataValidationError(
            f"Learning window ends at {t_n!s} h, expected t_n={cfg.t_n!s}."
        )

    hours = np.arange(t_n + 1, int(cfg.t_max) + 1, dtype=np.float64)
    floor = cfg.floor_factor * j_op
    streams = _substreams(cfg.seed, cfg.n_scenarios)

    detected = learning.detection.detected and learning.detection.t_c is not None
    taylor = _terminal_taylor(learning) if detected else None

    scenarios: list[JlimScenario] = []
    for index, rng in enumerate(streams):
        if taylor is None:
            scenario = _case_one(index, rng, learning, cfg, hours)
        else:
            lam = float(sample_pareto(1.0 - rng.random(), cfg.s))
            scenario = JlimScenario(
                index=index,
                case=2,
                t_c=float(learning.detection.t_c),  # type: ignore[arg-type]
                lam=lam,
                p1=None,
                t_n=t_n,
                trajectory=np.asarray(extend_p2(taylor, float(t_n), lam, hours)),
            )

        floored = _apply_floor(scenario.trajectory, floor)
        if floored is not scenario.trajectory:
            logger.debug("Scenario %d reaches the jlim floor %g.", index, floor)
            scenario = dataclasses.replace(scenario, trajectory=floored)

        scenarios.append(scenario)

    logger.info(
        "Generated %d jlim scenarios (case %d) on (%d, %d].",
        len(scenarios),
        2 if detected else 1,
        t_n,
        int(cfg.t_max),
    )

    return scenarios


def model1_trajectory(
    laws: AgingLaws, t_n: int, t_max: float, *, floor: float = 1.05
) -> npt.NDArray[np.float64]:
    """Hourly jlim on ``(t_n, t_max]`` extrapolated from the fitted jlim law."""
    hours = np.arange(t_n + 1, int(t_max) + 1, dtype=np.float64)
    x = normalize_time(hours, laws.t_max)
    trajectory = np.asarray(eval_jlim(laws.jlim_model, x))

    return _apply_floor(trajectory, floor)


def write_scenarios(
    scenarios: typing.Sequence[JlimScenario],
    directory: str | pathlib.Path,
    manifest: dict[str, typing.Any],
) -> None:
    """Writes one CSV per scenario and a manifest listing every draw."""
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    for scenario in scenarios:
        frame = pd.DataFrame({"t_h": scenario.hours, "jlim_A_cm2": scenario.trajectory})
        database.write_csv(frame, directory / f"scenario_{scenario.index:04d}.csv")

    database.write_json(
        manifest
        | {
            "scenarios": [
                {"index": s.index, "case": s.case, "t_c": s.t_c, "lambda": s.lam}
                for s in scenarios
            ]
        },
        directory / "manifest.json",
    )
    logger.info("Wrote %d scenarios to %s", len(scenarios), directory)
