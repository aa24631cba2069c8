# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import typing

import numpy as np
import numpy.typing as npt
import scipy.interpolate

from pyfcaging.exceptions import DataValidationError, ModelDomainError

__all__ = [
    "ChangeDetection",
    "SplineModel",
    "detect_change",
    "discrete_derivatives",
    "eval_spline",
    "fit_constrained_spline",
    "interpolate_jlim_hourly",
    "scan_change",
]

logger = logging.getLogger("pyfcaging")

# Long-run rates at or below this value skip the ratio test.
RATE_FLOOR: typing.Final[float] = 1e-15


@dataclasses.dataclass(frozen=True)
class SplineModel:
    """Constrained cubic Hermite interpolant of jlim.

    Interior slopes are the harmonic mean of the adjacent secants (zero when
    the secants differ in sign); endpoint slopes use the one-sided rule
    ``1.5 * secant - interior_slope / 2``. The resulting cubics never leave
    the range of their two bounding knots.
    """

    t: npt.NDArray[np.float64]
    y: npt.NDArray[np.float64]
    slopes: npt.NDArray[np.float64]
    _poly: scipy.interpolate.CubicHermiteSpline = dataclasses.field(
        repr=False, compare=False
    )

    @property
    def coefficients(self) -> npt.NDArray[np.float64]:
        """Per-interval coefficients in descending powers of ``t - t_i``."""
        return self._poly.c

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def derivative(self, t: npt.ArrayLike, order: int = 1) -> npt.NDArray[np.float64]:
        _check_range(self, t)

        return self._poly(np.asarray(t, dtype=np.float64), nu=order)


def _constrained_slopes(
    t: npt.NDArray[np.float64], y: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    secants = np.diff(y) / np.diff(t)
    left, right = secants[:-1], secants[1:]
    product = left * right

    interior = np.zeros_like(left)
    same_sign = product > 0
    interior[same_sign] = (
        2.0 * product[same_sign] / (left[same_sign] + right[same_sign])
    )

    slopes = np.empty_like(t)
    slopes[1:-1] = interior
    slopes[0] = 1.5 * secants[0] - 0.5 * interior[0]
    slopes[-1] = 1.5 * secants[-1] - 0.5 * interior[-1]

    return slopes


def fit_constrained_spline(knots: npt.ArrayLike) -> SplineModel:
    """Builds the constrained spline through ``(t, jlim)`` knots.

    Knots on a straight line produce that line.

    Raises
    ------
    DataValidationError
        If fewer than three knots are given or knot times are not strictly
        increasing.
    """
    data = np.asarray(knots, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 3:
        logger.error("A constrained spline needs at least three (t, jlim) knots.")
        raise DataValidationError(
            "Spline knots must be at least three (t, jlim) pairs."
        )

    t, y = data[:, 0].copy(), data[:, 1].copy()
    if np.any(np.diff(t) <= 0):
        logger.error("Spline knot times are duplicated or out of order.")
        raise DataValidationError("Spline knot times must be strictly increasing.")

    slopes = _constrained_slopes(t, y)

    return SplineModel(
        t=t,
        y=y,
        slopes=slopes,
        _poly=scipy.interpolate.CubicHermiteSpline(t, y, slopes, extrapolate=False),
    )


def _check_range(s: SplineModel, t: npt.ArrayLike) -> None:
    values = np.asarray(t, dtype=np.float64)
    if np.any(values < s.t[0]) or np.any(values > s.t[-1]):
        raise ModelDomainError(
            f"Spline is defined on [{s.t[0]!s}, {s.t[-1]!s}] only."
        )


def eval_spline(
    s: SplineModel, t: npt.ArrayLike
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Evaluates the spline value and first derivative.

    >>> s = fit_constrained_spline([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])
    >>> [float(v) for v in eval_spline(s, 0.5)]
    [0.5, 1.0]
    """
    _check_range(s, t)
    x = np.asarray(t, dtype=np.float64)

    return s._poly(x), s._poly(x, nu=1)


def _as_series(series: npt.ArrayLike, tau: int) -> npt.NDArray[np.float64]:
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise DataValidationError("A jlim series must be one-dimensional.")

    if tau < 1:
        raise DataValidationError("The detection window tau must be at least 1 h.")

    if values.size - 1 < 3 * tau:
        logger.error(
            "Series of %d hours is shorter than 3 * tau = %d.", values.size - 1, 3 * tau
        )
        raise DataValidationError(
            f"The jlim series must cover at least 3 * tau = {3 * tau} hours."
        )

    return values


def scan_change(series: npt.ArrayLike, tau: int = 10) -> npt.NDArray[np.float64]:
    """Evaluates the short-to-long decrease ratio at every admissible hour.

    Parameters
    ----------
    series : array-like
        Hourly jlim values, index ``k`` holding hour ``k``.

    tau : int, default=10
        Short window, h.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(n, 2)`` with columns ``(t, ratio)`` for
        ``t = 3 * tau, ..., t_n``; the ratio is NaN wherever the long-run
        rate is not positive.
    """
    values = _as_series(series, tau)

    t = np.arange(3 * tau, values.size, dtype=np.int64)
    short = (values[t - tau] - values[t]) / tau
    long = (values[0] - values[t - tau]) / (t - tau)

    ratio = np.full(t.size, np.nan)
    valid = long > RATE_FLOOR
    ratio[valid] = short[valid] / long[valid]

    return np.column_stack([t.astype(np.float64), ratio])


@dataclasses.dataclass(frozen=True)
class ChangeDetection:
    detected: bool
    t_c: float | None
    tau: int
    lambda0: float
    lambda_actual_trace: npt.NDArray[np.float64] = dataclasses.field(repr=False)

    def to_dict(self) -> dict[str, typing.Any]:
        ratios = self.lambda_actual_trace[:, 1]
        finite = ratios[np.isfinite(ratios)]

        return {
            "detected": self.detected,
            "t_c": self.t_c,
            "tau": self.tau,
            "lambda0": self.lambda0,
            "max_ratio": float(finite.max()) if finite.size else None,
        }


def detect_change(
    series: npt.ArrayLike, tau: int = 10, lambda0: float = 2.0
) -> ChangeDetection:
    """Detects the first hour where the recent jlim decrease accelerates.

    The hour ``t`` fires when the decrease rate over ``[t - tau, t]`` is at
    least ``lambda0`` times the rate over ``[0, t - tau]``; the breakpoint is
    then ``t - tau``.
    """
    trace = scan_change(series, tau)
    with np.errstate(invalid="ignore"):
        hits = np.flatnonzero(trace[:, 1] >= lambda0)

    if hits.size == 0:
        logger.info("No breakpoint detected over %d hours.", len(trace) + 3 * tau - 1)

        return ChangeDetection(
            detected=False,
            t_c=None,
            tau=tau,
            lambda0=lambda0,
            lambda_actual_trace=trace,
        )

    t_c = float(trace[hits[0], 0] - tau)
    logger.info("Breakpoint detected at t_c=%g h.", t_c)

    return ChangeDetection(
        detected=True,
        t_c=t_c,
        tau=tau,
        lambda0=lambda0,
        lambda_actual_trace=trace,
    )


def interpolate_jlim_hourly(
    samples: npt.ArrayLike, t_n: int
) -> tuple[SplineModel, npt.NDArray[np.float64]]:
    """Interpolates identified jlim samples onto every hour of ``[0, t_n]``.

    Two samples are joined by a straight line through their midpoint knot.

    Returns
    -------
    tuple[SplineModel, numpy.ndarray]
        The spline and its values at hours ``0, 1, ..., t_n``.

    Raises
    ------
    DataValidationError
        If the samples do not cover ``[0, t_n]``.
    """
    data = np.asarray(samples, dtype=np.float64)
    if data.shape == (2, 2):
        data = np.insert(data, 1, data.mean(axis=0), axis=0)

    spline = fit_constrained_spline(data)
    start, stop = spline.domain
    if start > 0 or stop < t_n:
        logger.error("jlim samples span [%g, %g], not [0, %d].", start, stop, t_n)
        raise DataValidationError(
            f"Identified jlim samples do not cover the learning window [0, {t_n!s}]."
        )

    hours = np.arange(int(t_n) + 1, dtype=np.float64)
    values, _ = eval_spline(spline, hours)
    # Knot values are reproduced exactly, not up to round-off.
    on_knot = np.isin(hours, spline.t)
    values[on_knot] = spline.y[np.searchsorted(spline.t, hours[on_knot])]

    return spline, values


def discrete_derivatives(
    series: npt.ArrayLike,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """First and second forward differences of an hourly series."""
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1 or values.size < 3:
        raise DataValidationError("At least three hourly values are required.")

    return np.diff(values), np.diff(values, n=2)
