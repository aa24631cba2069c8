# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import typing
from concurrent.futures import Executor

import numpy as np
import numpy.typing as npt

from pyfcaging._levmar import LevenbergMarquardt
from pyfcaging.electrochem import (
    PhysicalConstants,
    QuasiStaticParams,
    cell_voltage,
    voltage_gradient,
)
from pyfcaging.exceptions import DataValidationError, NumericalError

__all__ = [
    "FitResult",
    "PolarizationCurve",
    "default_initial_guess",
    "fit_curve_set",
    "fit_single_curve",
    "interpolate_r_ohm",
    "profile_initial_guess",
    "rmse",
]

logger = logging.getLogger("pyfcaging")

MIN_POINTS: typing.Final[int] = 5

# RMSE in volts above which identification restarts from other guesses.
RESTART_RMSE: typing.Final[float] = 1e-6

# Parasitic current densities tried by the restarts, A/cm2.
JN_SEEDS: typing.Final[tuple[float, ...]] = (1e-4, 1e-3, 1e-2)


@dataclasses.dataclass(frozen=True)
class PolarizationCurve:
    """Polarization samples and ohmic resistance profile at one characterization.

    Attributes
    ----------
    t : float
        Characterization time, h.

    j, u : numpy.ndarray
        Current densities (A/cm2, strictly increasing) and voltages (V).

    profile_j, profile_r : numpy.ndarray
        Ohmic resistance profile ``r_ohm(j)`` in Ohm.cm2.
    """

    t: float
    j: npt.NDArray[np.float64]
    u: npt.NDArray[np.float64]
    profile_j: npt.NDArray[np.float64]
    profile_r: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        for name in ("j", "u", "profile_j", "profile_r"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=np.float64)
            )

        if self.j.shape != self.u.shape or self.j.ndim != 1:
            raise DataValidationError(
                f"Curve at t={self.t!s} has misaligned current and voltage samples."
            )

        if self.profile_j.shape != self.profile_r.shape or self.profile_j.size == 0:
            raise DataValidationError(
                f"Curve at t={self.t!s} has an empty or misaligned r_ohm profile."
            )

        if np.any(np.diff(self.j) <= 0):
            raise DataValidationError(
                f"Current densities at t={self.t!s} must be strictly increasing."
            )

        if np.any(self.u <= 0):
            raise DataValidationError(f"Voltages at t={self.t!s} must be positive.")

        if self.profile_j.size > 1 and (
            self.profile_j.min() > self.j[0] or self.profile_j.max() < self.j[-1]
        ):
            raise DataValidationError(
                f"The r_ohm profile at t={self.t!s} does not cover the curve."
            )


@dataclasses.dataclass(frozen=True, slots=True)
class FitResult:
    params: QuasiStaticParams
    rmse: float
    n_iterations: int
    converged: bool


def rmse(model_u: npt.ArrayLike, data_u: npt.ArrayLike) -> float:
    """Root mean square error between two voltage vectors.

    >>> rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    0.0
    """
    model = np.asarray(model_u, dtype=np.float64)
    data = np.asarray(data_u, dtype=np.float64)
    if model.shape != data.shape:
        raise DataValidationError(
            f"Length mismatch between model and data: {model.shape} != {data.shape}"
        )

    if model.size == 0:
        raise DataValidationError("RMSE requires at least one sample.")

    return float(np.sqrt(np.mean((model - data) ** 2)))


def interpolate_r_ohm(
    curve: PolarizationCurve, j: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    """Linear interpolation of the ohmic resistance profile, clamped at both ends."""
    order = np.argsort(curve.profile_j)

    return np.interp(
        np.asarray(j, dtype=np.float64),
        curve.profile_j[order],
        curve.profile_r[order],
    )


def default_initial_guess(curve: PolarizationCurve) -> QuasiStaticParams:
    return QuasiStaticParams(j0=1e-6, jn=1e-3, beta=0.3, jlim=1.2 * float(curve.j[-1]))


def profile_initial_guess(
    curve: PolarizationCurve, c: PhysicalConstants, beta: float | None = None
) -> QuasiStaticParams:
    """Best grid point of (jn, jlim) with j0 and beta solved in closed form.

    For fixed jn and jlim the voltage is linear in ``ln j0`` and in the
    diffusion coefficient ``RT/(2 beta F)``, so both follow from a linear
    regression. A given ``beta`` fixes the slope and leaves the intercept.
    """
    j = curve.j
    kinetic = c.rt_over_f / (2.0 * c.alpha)
    jn_grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e-1, 51)])
    jn_grid = jn_grid[j[0] + jn_grid > 0]
    jlim_grid = float(j[-1]) * (1.0 + np.geomspace(1e-3, 10.0, 61))

    # y = kinetic * ln(j0) + diffusion * ln(1 - j/jlim)
    y = (curve.u + interpolate_r_ohm(curve, j) * j - c.e_rev)[None, :]
    y = y + kinetic * np.log(j[None, :] + jn_grid[:, None])
    log_term = np.log1p(-j[None, :] / jlim_grid[:, None])

    y_mean = y.mean(axis=1)
    term_mean = log_term.mean(axis=1)
    if beta is None:
        y_centered = y - y_mean[:, None]
        term_centered = log_term - term_mean[:, None]
        sxy = y_centered @ term_centered.T
        sxx = np.sum(term_centered**2, axis=1)
        diffusion = sxy / sxx[None, :]
        sse = np.sum(y_centered**2, axis=1)[:, None] - sxy * diffusion
        sse = np.where(diffusion > 0, sse, np.inf)
    else:
        diffusion = np.full(
            (jn_grid.size, jlim_grid.size), c.rt_over_f / (2.0 * beta)
        )
        misfit = y[:, None, :] - diffusion[:, :, None] * log_term[None, :, :]
        sse = np.sum((misfit - misfit.mean(axis=2, keepdims=True)) ** 2, axis=2)

    if not np.any(np.isfinite(sse)):
        logger.debug("No grid point fits the curve at t=%s.", curve.t)

        return default_initial_guess(curve)

    row, column = np.unravel_index(np.argmin(sse), sse.shape)
    slope = float(diffusion[row, column])
    intercept = float(y_mean[row] - slope * term_mean[column])

    return QuasiStaticParams(
        j0=float(np.exp(intercept / kinetic)),
        jn=float(jn_grid[row]),
        beta=float(c.rt_over_f / (2.0 * slope)) if beta is None else beta,
        jlim=float(jlim_grid[column]),
    )


def fit_single_curve(
    curve: PolarizationCurve,
    c: PhysicalConstants,
    init: QuasiStaticParams | None = None,
    free_beta: bool = True,
    *,
    j_ref: float = 1.0,
    restart_rmse: float = RESTART_RMSE,
    solver: LevenbergMarquardt | None = None,
) -> FitResult:
    """Identifies (j0, jn, beta, jlim) from one polarization curve.

    The ohmic term is supplied by the resistance profile and is not fitted.
    j0, beta and jlim are optimized in logarithmic coordinates so that every
    trial point stays positive. jn is optimized as is with a lower bound at
    zero, which keeps its gradient alive and lets ``jn = 0`` be reached.

    When the fit from ``init`` leaves an RMSE above ``restart_rmse`` the
    solver restarts from :func:`profile_initial_guess` and from that guess
    with jn set to each of :data:`JN_SEEDS`; the lowest residual wins.

    Parameters
    ----------
    curve : PolarizationCurve
        Characterization to fit.

    c : PhysicalConstants
        Physical constants.

    init : QuasiStaticParams, optional
        Initial guess; see :func:`default_initial_guess`.

    free_beta : bool, default=True
        Whether beta is identified or held at ``init.beta``.

    j_ref : float, default=1.0
        Current density at which the resistance profile is read to fill
        ``params.r_ohm``.

    restart_rmse : float, default=1e-6
        RMSE in volts above which the multistart runs.

    Returns
    -------
    FitResult
        Identified parameters and fit quality.

    Raises
    ------
    DataValidationError
        If the curve has fewer than five points.
    """
    n_free = 4 if free_beta else 3
    if curve.j.size < max(MIN_POINTS, n_free + 1):
        logger.error("Too few points to identify the curve at t=%s.", curve.t)
        raise DataValidationError(
            f"Curve at t={curve.t!s} has {curve.j.size} points; "
            f"at least {MIN_POINTS} are required."
        )

    guess = init or default_initial_guess(curve)
    if guess.jlim <= curve.j[-1]:
        logger.warning(
            "Initial jlim=%g is below the largest current density; raising it.",
            guess.jlim,
        )
        guess = guess.replace(jlim=1.2 * float(curve.j[-1]))

    j = curve.j
    ohmic = interpolate_r_ohm(curve, j) * j
    fixed_beta = guess.beta
    columns = [0, 1, 2, 3] if free_beta else [0, 1, 3]
    logarithmic = np.array([True, False, True, True])[columns]
    lower = np.where(logarithmic, -np.inf, 0.0)

    def unpack(z: npt.NDArray[np.float64]) -> QuasiStaticParams:
        values = np.where(logarithmic, np.exp(z), z)
        if free_beta:
            j0, jn, beta, jlim = values
        else:
            (j0, jn, jlim), beta = values, fixed_beta

        return QuasiStaticParams(
            j0=float(j0), jn=float(jn), beta=float(beta), jlim=float(jlim)
        )

    def residuals(z: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        p = unpack(z)
        if p.jlim <= j[-1]:
            return np.full(j.size, np.inf)

        return np.asarray(cell_voltage(j, p, c)) - ohmic - curve.u

    def jacobian(z: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        p = unpack(z)
        gradient = voltage_gradient(j, p, c)[:, columns]
        # Chain rule for the logarithmic coordinates.
        values = np.array([p.j0, p.jn, p.beta, p.jlim])[columns]

        return gradient * np.where(logarithmic, values, 1.0)

    def pack(p: QuasiStaticParams) -> npt.NDArray[np.float64]:
        values = np.array([p.j0, p.jn, p.beta, p.jlim])[columns]

        return np.where(logarithmic, np.log(values), values)

    engine = solver or LevenbergMarquardt()
    result = engine.minimize(residuals, jacobian, pack(guess), lower=lower)
    if np.sqrt(result.cost / j.size) > restart_rmse:
        logger.debug(
            "Restarting the fit at t=%s from RMSE %.3e V.",
            curve.t,
            np.sqrt(result.cost / j.size),
        )
        profile = profile_initial_guess(curve, c, None if free_beta else fixed_beta)
        starts = [profile, *(profile.replace(jn=seed) for seed in JN_SEEDS)]
        for start in starts:
            try:
                candidate = engine.minimize(
                    residuals, jacobian, pack(start), lower=lower
                )
            except NumericalError:
                continue

            if candidate.cost < result.cost:
                result = candidate

    params = unpack(result.x).replace(
        r_ohm=float(interpolate_r_ohm(curve, j_ref))
    )
    fit = FitResult(
        params=params,
        rmse=float(np.sqrt(result.cost / j.size)),
        n_iterations=result.n_iterations,
        converged=result.converged,
    )

    if not fit.converged:
        logger.warning(
            "Identification at t=%s did not converge after %d iterations.",
            curve.t,
            fit.n_iterations,
        )
    logger.debug("Identified curve at t=%s: %r rmse=%.3e", curve.t, params, fit.rmse)

    return fit


def fit_curve_set(
    curves: typing.Sequence[PolarizationCurve],
    c: PhysicalConstants,
    *,
    init: QuasiStaticParams | None = None,
    j_ref: float = 1.0,
    executor: Executor | None = None,
) -> list[FitResult]:
    """Identifies a set of curves with a diffusion coefficient shared by all.

    Stage one fits every curve with a free beta. Stage two fixes beta to the
    median of the stage-one values and refits j0, jn and jlim.

    Parameters
    ----------
    curves : sequence of PolarizationCurve
        Characterizations ordered by time.

    c : PhysicalConstants
        Physical constants.

    init : QuasiStaticParams, optional
        Initial guess used for every curve in stage one.

    j_ref : float, default=1.0
        Current density at which ``params.r_ohm`` is read.

    executor : concurrent.futures.Executor, optional
        Executor for independent per-curve fits; results keep input order.

    Returns
    -------
    list[FitResult]
        One result per curve, all sharing one beta value.
    """
    if not curves:
        logger.error("No polarization curves to identify.")
        raise DataValidationError("At least one polarization curve is required.")

    run: typing.Callable[..., typing.Iterable[FitResult]] = (
        executor.map if executor is not None else map
    )

    def first(curve: PolarizationCurve) -> FitResult:
        return fit_single_curve(curve, c, init, j_ref=j_ref)

    stage_one = list(run(first, curves))
    if len(stage_one) == 1:
        return stage_one

    shared_beta = float(np.median([fit.params.beta for fit in stage_one]))
    logger.info(
        "Shared diffusion coefficient over %d curves: beta=%.6g",
        len(curves),
        shared_beta,
    )

    def refit(pair: tuple[PolarizationCurve, FitResult]) -> FitResult:
        curve, stage = pair

        return fit_single_curve(
            curve,
            c,
            stage.params.replace(beta=shared_beta),
            free_beta=False,
            j_ref=j_ref,
        )

    stage_two = list(run(refit, zip(curves, stage_one, strict=True)))
    logger.info(
        "Identified %d curves, maximum RMSE %.3e V.",
        len(stage_two),
        max(fit.rmse for fit in stage_two),
    )

    return stage_two
