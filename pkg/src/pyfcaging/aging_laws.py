# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import typing

import numpy as np
import numpy.typing as npt
import scipy.stats

from pyfcaging._levmar import LevenbergMarquardt
from pyfcaging.electrochem import QuasiStaticParams
from pyfcaging.exceptions import DataValidationError, ModelDomainError, NumericalError

__all__ = [
    "AgingLaws",
    "JlimModel",
    "Model1",
    "Model2",
    "PiecewiseQuadratic",
    "T_MAX",
    "eval_jlim",
    "eval_laws",
    "fit_aging_laws",
    "fit_exponential_law",
    "fit_jlim_model1",
    "fit_jlim_model2",
    "fit_linear_law",
    "normalize_time",
]

logger = logging.getLogger("pyfcaging")

T_MAX: typing.Final[float] = 38_000.0

Samples = typing.Sequence[tuple[float, float]] | npt.NDArray[np.float64]
ArrayLike = float | npt.NDArray[np.float64]


@dataclasses.dataclass(frozen=True, slots=True)
class Model1:
    """Quadratic exponential decay ``a1 * exp(-k1 * t**2)``."""

    a1: float
    k1: float


@dataclasses.dataclass(frozen=True, slots=True)
class Model2:
    """Quadratic exponential decay with an accelerated term after ``t_c``."""

    a1: float
    k1: float
    a2: float
    k2: float
    t_c: float


@dataclasses.dataclass(frozen=True, slots=True)
class PiecewiseQuadratic:
    """Quadratic trend whose curvature is multiplied by ``lam`` after ``t_c``.

    ``jlim(t) = a1 - b1*t - c1*t**2 - (lam - 1)*c1*(t - t_c)**2`` for
    ``t >= t_c``; value and slope are continuous at ``t_c``.
    """

    a1: float
    b1: float
    c1: float
    lam: float
    t_c: float


JlimModel = Model1 | Model2 | PiecewiseQuadratic


@dataclasses.dataclass(frozen=True, slots=True)
class AgingLaws:
    """Fitted coefficients of the time-evolution laws.

    All coefficients are expressed in normalized time ``t / t_max``.
    """

    a0: float
    k0: float
    an: float
    kn: float
    r_ohm0: float
    k_ohm: float
    jlim_model: JlimModel
    t_max: float = T_MAX

    def __post_init__(self) -> None:
        if not (self.a0 > 0 and self.an > 0 and self.r_ohm0 > 0 and self.t_max > 0):
            raise ModelDomainError(
                "Aging law amplitudes and t_max must be strictly positive."
            )

        match self.jlim_model:
            case Model1(a1, k1):
                valid = a1 > 0 and k1 >= 0
            case Model2(a1, k1, a2, k2, t_c):
                valid = a1 > 0 and k1 >= 0 and a2 >= 0 and k2 >= 0 and 0 < t_c < 1
            case PiecewiseQuadratic(a1, _, _, lam, t_c):
                valid = a1 > 0 and lam >= 1 and 0 < t_c < 1
            case _:
                valid = False

        if not valid:
            raise ModelDomainError(f"Invalid jlim law: {self.jlim_model!r}")

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            "a0": self.a0,
            "k0": self.k0,
            "an": self.an,
            "kn": self.kn,
            "r_ohm0": self.r_ohm0,
            "k_ohm": self.k_ohm,
            "t_max": self.t_max,
            "jlim_model": {
                "kind": type(self.jlim_model).__name__,
                **dataclasses.asdict(self.jlim_model),
            },
        }

    @classmethod
    def from_dict(cls: type["AgingLaws"], data: dict[str, typing.Any]) -> "AgingLaws":
        jlim = dict(data["jlim_model"])
        kinds: dict[str, type[JlimModel]] = {
            "Model1": Model1,
            "Model2": Model2,
            "PiecewiseQuadratic": PiecewiseQuadratic,
        }
        try:
            model = kinds[jlim.pop("kind")](**jlim)
        except (KeyError, TypeError) as err:
            raise DataValidationError(
                f"Unknown jlim law: {data['jlim_model']!r}"
            ) from err

        return cls(
            a0=data["a0"],
            k0=data["k0"],
            an=data["an"],
            kn=data["kn"],
            r_ohm0=data["r_ohm0"],
            k_ohm=data["k_ohm"],
            jlim_model=model,
            t_max=data.get("t_max", T_MAX),
        )


def normalize_time(t: ArrayLike, t_max: float = T_MAX) -> ArrayLike:
    """Normalizes time by the horizon ``t_max``.

    >>> normalize_time(19000.0, 38000.0)
    0.5
    """
    if t_max <= 0:
        raise ModelDomainError("t_max must be strictly positive.")

    return t / t_max


def _as_samples(
    samples: Samples, *, positive: bool, minimum: int = 2
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    data = np.asarray(samples, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DataValidationError("Samples must be a sequence of (t, value) pairs.")

    if data.shape[0] < minimum:
        logger.error("Too few samples to fit an aging law: %d", data.shape[0])
        raise DataValidationError(
            f"At least {minimum} samples are required, got {data.shape[0]}."
        )

    if positive and np.any(data[:, 1] <= 0):
        logger.error("Logarithmic fits require strictly positive values.")
        raise DataValidationError("Sample values must be strictly positive.")

    order = np.argsort(data[:, 0], kind="stable")

    return data[order, 0], data[order, 1]


def _regress(
    x: npt.NDArray[np.float64], y: npt.NDArray[np.float64]
) -> tuple[float, float]:
    """Ordinary least squares line, returned as ``(intercept, slope)``."""
    try:
        result = scipy.stats.linregress(x, y)
    except ValueError as err:
        logger.exception("Unable to regress samples with identical abscissas.")
        raise DataValidationError("Sample times must not all be identical.") from err

    return float(result.intercept), float(result.slope)


def fit_exponential_law(
    samples: Samples, sign: typing.Literal["decay", "growth"]
) -> tuple[float, float]:
    """Fits ``a * exp(-k t)`` (decay) or ``a * exp(k t)`` (growth) in log space.

    Returns
    -------
    tuple[float, float]
        ``(a, k)`` with ``k`` oriented by ``sign``.
    """
    t, values = _as_samples(samples, positive=True)
    intercept, slope = _regress(t, np.log(values))

    k = -slope if sign == "decay" else slope
    if k < 0:
        logger.warning("Fitted %s rate is negative: k=%g", sign, k)

    return float(np.exp(intercept)), k


def fit_linear_law(samples: Samples) -> tuple[float, float]:
    """Fits ``r_ohm0 + k_ohm * t`` by ordinary least squares."""
    t, values = _as_samples(samples, positive=False)

    return _regress(t, values)


def fit_jlim_model1(samples: Samples) -> tuple[float, float]:
    """Fits ``a1 * exp(-k1 t**2)`` by linear regression of ``ln jlim`` on ``t**2``."""
    t, values = _as_samples(samples, positive=True)
    intercept, slope = _regress(t**2, np.log(values))

    return float(np.exp(intercept)), -slope


def _model2_values(
    x: npt.NDArray[np.float64], t: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    a1, k1, a2, k2, t_c = x
    s = t - t_c
    tail = np.where(s >= 0, a2 * (np.exp(-k2 * s**2) - 1.0), 0.0)

    return a1 * np.exp(-k1 * t**2) + tail


def _model2_jacobian(
    x: npt.NDArray[np.float64], t: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    a1, k1, a2, k2, t_c = x
    s = t - t_c
    active = (s >= 0).astype(np.float64)
    base = np.exp(-k1 * t**2)
    bump = np.exp(-k2 * s**2)

    return np.column_stack(
        [
            base,
            -a1 * t**2 * base,
            active * (bump - 1.0),
            -active * a2 * s**2 * bump,
            active * 2.0 * a2 * k2 * s * bump,
        ]
    )


def fit_jlim_model2(
    samples: Samples, *, solver: LevenbergMarquardt | None = None
) -> tuple[Model2, float]:
    """Fits the two-regime law by Levenberg-Marquardt with a grid of breakpoints.

    Every sample time leaving at least two samples on each side is tried as
    the starting breakpoint; the start with the lowest residual wins.

    Returns
    -------
    tuple[Model2, float]
        The fitted law and its residual RMSE.

    Raises
    ------
    DataValidationError
        If fewer than six samples are given or the best breakpoint leaves
        fewer than two samples after it.

    NumericalError
        If no start produces a finite fit.
    """
    t, values = _as_samples(samples, positive=True, minimum=6)
    solver = solver or LevenbergMarquardt()

    best: tuple[float, npt.NDArray[np.float64]] | None = None
    for index in range(1, t.size - 2):
        t_c = t[index]
        before = t <= t_c
        a1, k1 = fit_jlim_model1(np.column_stack([t[before], values[before]]))
        after = ~before
        span = t[after][-1] - t_c
        k2 = 1.0 / span**2
        gap = values[after][-1] - a1 * np.exp(-k1 * t[after][-1] ** 2)
        a2 = max(-gap / (1.0 - np.exp(-1.0)), 1e-6 * a1)

        def residuals(x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
            return _model2_values(x, t) - values

        def jacobian(x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
            return _model2_jacobian(x, t)

        try:
            result = solver.minimize(residuals, jacobian, [a1, k1, a2, k2, t_c])
        except NumericalError:
            logger.debug("Skipping breakpoint start t_c=%g.", t_c)
            continue

        if best is None or result.cost < best[0]:
            best = (result.cost, result.x)

    if best is None:
        logger.error("No breakpoint start produced a finite fit.")
        raise NumericalError("Failed to fit the two-regime jlim law.")

    cost, (a1, k1, a2, k2, t_c) = best
    if np.count_nonzero(t > t_c) < 2:
        logger.error("Best breakpoint t_c=%g leaves too few samples after it.", t_c)
        raise DataValidationError(
            "At least two samples are required after the fitted breakpoint."
        )

    # The admissible region is a2 >= 0, k2 >= 0; round-off can cross it at a2 = 0.
    model = Model2(
        a1=float(a1),
        k1=float(k1),
        a2=float(max(a2, 0.0)),
        k2=float(max(k2, 0.0)),
        t_c=float(t_c),
    )
    error = float(np.sqrt(cost / t.size))
    logger.debug("Fitted two-regime jlim law %r rmse=%.3e", model, error)

    return model, error


def eval_jlim(model: JlimModel, t_norm: ArrayLike) -> ArrayLike:
    """Evaluates a jlim law at normalized times."""
    x = np.asarray(t_norm, dtype=np.float64)

    match model:
        case Model1(a1, k1):
            value = a1 * np.exp(-k1 * x**2)
        case Model2():
            value = _model2_values(
                np.array([model.a1, model.k1, model.a2, model.k2, model.t_c]), x
            )
        case PiecewiseQuadratic(a1, b1, c1, lam, t_c):
            s = np.maximum(x - t_c, 0.0)
            value = a1 - b1 * x - c1 * x**2 - (lam - 1.0) * c1 * s**2
        case _:
            raise ModelDomainError(f"Unsupported jlim law: {model!r}")

    return value if np.ndim(value) else float(value)


def eval_laws(
    laws: AgingLaws, t: ArrayLike
) -> tuple[ArrayLike, ArrayLike, ArrayLike, ArrayLike]:
    """Evaluates (j0, jn, r_ohm, jlim) at times in hours."""
    x = normalize_time(np.asarray(t, dtype=np.float64), laws.t_max)
    j0 = laws.a0 * np.exp(-laws.k0 * x)
    jn = laws.an * np.exp(laws.kn * x)
    r_ohm = laws.r_ohm0 + laws.k_ohm * x
    jlim = eval_jlim(laws.jlim_model, x)

    if np.ndim(x) == 0:
        return float(j0), float(jn), float(r_ohm), float(jlim)

    return j0, jn, r_ohm, jlim


def fit_aging_laws(
    times: npt.ArrayLike,
    params: typing.Sequence[QuasiStaticParams],
    *,
    t_max: float = T_MAX,
    jlim_variant: typing.Literal["model1", "model2"] = "model1",
) -> AgingLaws:
    """Fits all four aging laws to identified parameters.

    Parameters
    ----------
    times : array-like
        Characterization times in hours.

    params : sequence of QuasiStaticParams
        Identified parameters; ``r_ohm`` holds the resistance at the
        operating current density.

    t_max : float, default=38000
        Normalization horizon in hours.

    jlim_variant : {"model1", "model2"}, default="model1"
        Law used for the limiting current density.
    """
    t = np.asarray(times, dtype=np.float64)
    if t.size != len(params):
        raise DataValidationError("Times and identified parameters are misaligned.")

    x = normalize_time(t, t_max)

    def column(name: str) -> npt.NDArray[np.float64]:
        return np.column_stack([x, [getattr(p, name) for p in params]])

    a0, k0 = fit_exponential_law(column("j0"), "decay")
    an, kn = fit_exponential_law(column("jn"), "growth")
    r_ohm0, k_ohm = fit_linear_law(column("r_ohm"))

    jlim_model: JlimModel
    if jlim_variant == "model2":
        jlim_model, _ = fit_jlim_model2(column("jlim"))
    else:
        jlim_model = Model1(*fit_jlim_model1(column("jlim")))

    laws = AgingLaws(
        a0=a0,
        k0=k0,
        an=an,
        kn=kn,
        r_ohm0=r_ohm0,
        k_ohm=k_ohm,
        jlim_model=jlim_model,
        t_max=t_max,
    )
    logger.info("Fitted aging laws on %d characterizations.", t.size)

    return laws
