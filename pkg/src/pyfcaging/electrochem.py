# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import typing

import numpy as np
import numpy.typing as npt
import pydantic

from pyfcaging.exceptions import ModelDomainError

__all__ = [
    "OperatingConditions",
    "PhysicalConstants",
    "QuasiStaticParams",
    "cell_voltage",
    "loss_components",
    "polarization_curve",
    "voltage_field",
    "voltage_gradient",
]

logger = logging.getLogger("pyfcaging")

ArrayLike = float | npt.NDArray[np.float64]

_KELVIN_OFFSET: typing.Final[float] = 273.15


class PhysicalConstants(pydantic.BaseModel):
    """Constants of the quasi-static model.

    The temperature is stored in Kelvin; use :meth:`from_celsius` at the
    boundaries where temperatures are expressed in degrees Celsius.
    """

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    faraday: float = pydantic.Field(96485.33, gt=0, description="C/mol")
    gas_constant: float = pydantic.Field(8.314, gt=0, description="J/(K.mol)")
    temperature: float = pydantic.Field(348.15, gt=0, description="K")
    alpha: float = pydantic.Field(
        0.5, gt=0, le=1, description="charge transfer coefficient"
    )
    e_rev: float = pydantic.Field(1.18, gt=0, description="reversible voltage, V")

    @classmethod
    def from_celsius(
        cls: type["PhysicalConstants"], temperature: float, **kwargs: typing.Any
    ) -> "PhysicalConstants":
        return cls(temperature=temperature + _KELVIN_OFFSET, **kwargs)

    @property
    def rt_over_f(self) -> float:
        """Thermal voltage RT/F in volts."""
        return self.gas_constant * self.temperature / self.faraday


class OperatingConditions(pydantic.BaseModel):
    """Fixed operating conditions under which the aging database is produced."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    temperature: float = pydantic.Field(75.0, gt=0, description="degrees Celsius")
    pressure: float = pydantic.Field(2.0, gt=0, description="bara")
    rh_air: float = pydantic.Field(30.0, gt=0, le=100, description="%")
    stoich_air: float = pydantic.Field(2.5, gt=0)
    rh_h2: float = pydantic.Field(50.0, gt=0, le=100, description="%")
    stoich_h2: float = pydantic.Field(1.5, gt=0)


@dataclasses.dataclass(frozen=True, slots=True)
class QuasiStaticParams:
    """Identifiable electrochemical parameters at one instant.

    Attributes
    ----------
    j0 : float
        Exchange current density, A/cm2.

    jn : float
        Parasitic current density, A/cm2.

    beta : float
        Diffusion coefficient.

    jlim : float
        Limiting current density, A/cm2.

    r_ohm : float
        Ohmic resistance density, Ohm.cm2.
    """

    j0: float
    jn: float
    beta: float
    jlim: float
    r_ohm: float = 0.0

    def __post_init__(self) -> None:
        if not (self.j0 > 0 and self.beta > 0 and self.jlim > 0):
            raise ModelDomainError(
                f"j0, beta and jlim must be strictly positive: {self!r}"
            )

        if not (self.jn >= 0 and self.r_ohm >= 0):
            raise ModelDomainError(f"jn and r_ohm must be non-negative: {self!r}")

    def replace(self, **changes: float) -> "QuasiStaticParams":
        return dataclasses.replace(self, **changes)


def _check_domain(j: npt.NDArray[np.float64], p: QuasiStaticParams) -> None:
    if np.any(j < 0) or np.any(j >= p.jlim):
        logger.error("Current density is outside of [0, jlim): jlim=%g", p.jlim)
        raise ModelDomainError(
            f"Diffusion loss is singular for current densities >= jlim={p.jlim!r}."
        )

    if np.any(j + p.jn <= 0):
        logger.error("Activation loss is undefined for j + jn <= 0.")
        raise ModelDomainError("The sum of j and jn must be strictly positive.")


def loss_components(
    j: ArrayLike, p: QuasiStaticParams, c: PhysicalConstants
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Computes the activation, diffusion and ohmic losses.

    Parameters
    ----------
    j : float or numpy.ndarray
        Current density, A/cm2.

    p : QuasiStaticParams
        Electrochemical parameters.

    c : PhysicalConstants
        Physical constants.

    Returns
    -------
    tuple
        ``(eta_act, eta_diff, eta_ohm)`` in volts.

    Raises
    ------
    ModelDomainError
        If ``j >= jlim`` or ``j + jn <= 0``.
    """
    current = np.asarray(j, dtype=np.float64)
    _check_domain(current, p)

    rt_over_f = c.rt_over_f
    eta_act = rt_over_f / (2.0 * c.alpha) * np.log((current + p.jn) / p.j0)
    # The log1p form keeps precision for small j / jlim.
    eta_diff = -rt_over_f / (2.0 * p.beta) * np.log1p(-current / p.jlim)
    eta_ohm = p.r_ohm * current

    return eta_act, eta_diff, eta_ohm


def cell_voltage(j: ArrayLike, p: QuasiStaticParams, c: PhysicalConstants) -> ArrayLike:
    """Evaluates the quasi-static cell voltage in volts."""
    eta_act, eta_diff, eta_ohm = loss_components(j, p, c)

    return c.e_rev - eta_act - eta_diff - eta_ohm


def polarization_curve(
    j_grid: npt.ArrayLike, p: QuasiStaticParams, c: PhysicalConstants
) -> npt.NDArray[np.float64]:
    """Evaluates a whole polarization curve over a current-density grid."""
    grid = np.asarray(j_grid, dtype=np.float64)
    if grid.ndim != 1:
        raise ModelDomainError("A polarization grid must be one-dimensional.")

    return np.asarray(cell_voltage(grid, p, c), dtype=np.float64)


def voltage_field(
    j: npt.ArrayLike,
    j0: npt.ArrayLike,
    jn: npt.ArrayLike,
    beta: float,
    jlim: npt.ArrayLike,
    r_ohm: npt.ArrayLike,
    c: PhysicalConstants,
) -> npt.NDArray[np.float64]:
    """Cell voltage with every parameter broadcast as an array.

    Used for hourly series and scenario ensembles where the parameters change
    along one or more axes.

    Raises
    ------
    ModelDomainError
        If any point lies outside of the model domain.
    """
    current, j0, jn, jlim, r_ohm = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (j, j0, jn, jlim, r_ohm))
    )
    if np.any(current >= jlim) or np.any(current + jn <= 0) or np.any(j0 <= 0):
        logger.error("Voltage requested outside of the model domain.")
        raise ModelDomainError("Every point must satisfy 0 < j + jn and j < jlim.")

    rt_over_f = c.rt_over_f
    eta_act = rt_over_f / (2.0 * c.alpha) * np.log((current + jn) / j0)
    eta_diff = -rt_over_f / (2.0 * beta) * np.log1p(-current / jlim)

    return c.e_rev - eta_act - eta_diff - r_ohm * current


def voltage_gradient(
    j: ArrayLike, p: QuasiStaticParams, c: PhysicalConstants
) -> npt.NDArray[np.float64]:
    """Partial derivatives of the cell voltage.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(n, 5)`` with derivatives with respect to
        ``(j0, jn, beta, jlim, r_ohm)``.
    """
    current = np.atleast_1d(np.asarray(j, dtype=np.float64))
    _check_domain(current, p)

    rt_over_f = c.rt_over_f
    kinetic = rt_over_f / (2.0 * c.alpha)
    diffusion = rt_over_f / (2.0 * p.beta)

    gradient = np.empty((current.size, 5), dtype=np.float64)
    gradient[:, 0] = kinetic / p.j0
    gradient[:, 1] = -kinetic / (current + p.jn)
    gradient[:, 2] = -diffusion / p.beta * np.log1p(-current / p.jlim)
    gradient[:, 3] = diffusion * current / (p.jlim * (p.jlim - current))
    gradient[:, 4] = -current

    return gradient
