# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import pathlib
import typing

import numpy as np
import numpy.typing as npt
import pydantic

from pyfcaging import database
from pyfcaging.aging_laws import (
    AgingLaws,
    Model2,
    PiecewiseQuadratic,
    eval_laws,
)
from pyfcaging.database import AgingDatabase
from pyfcaging.electrochem import (
    OperatingConditions,
    PhysicalConstants,
    QuasiStaticParams,
    polarization_curve,
    voltage_field,
)
from pyfcaging.exceptions import ModelDomainError
from pyfcaging.identification import PolarizationCurve

__all__ = [
    "GroundTruth",
    "SynthSettings",
    "TRUTH_FILE",
    "generate_database",
    "write_truth",
]

logger = logging.getLogger("pyfcaging")

TRUTH_FILE: typing.Final[str] = "truth.json"


class SynthSettings(pydantic.BaseModel):
    """Planted aging laws of the synthetic database.

    Rates are expressed in normalized time ``t / t_max``; the breakpoint
    ``t_c`` is given in hours.
    """

    model_config = pydantic.ConfigDict(extra="forbid")

    a0: float = pydantic.Field(1e-6, gt=0)
    k0: float = pydantic.Field(0.8, ge=0)
    an: float = pydantic.Field(1e-3, gt=0)
    kn: float = pydantic.Field(1.5, ge=0)
    r_ohm0: float = pydantic.Field(0.08, gt=0)
    k_ohm: float = pydantic.Field(0.0205, ge=0)
    beta: float = pydantic.Field(0.2, gt=0)

    jlim_kind: typing.Literal["piecewise", "model2"] = "piecewise"
    a1: float = pydantic.Field(1.8, gt=0)
    t_c: float = pydantic.Field(30_000.0, gt=0, description="breakpoint, h")
    # piecewise quadratic
    b1: float = 0.006
    c1: float = 0.3
    lam: float = pydantic.Field(2.5, ge=1)
    # two-regime exponential
    k1: float = pydantic.Field(0.2, ge=0)
    a2: float = pydantic.Field(0.45, ge=0)
    k2: float = pydantic.Field(12.0, ge=0)

    cadence: int = pydantic.Field(500, gt=0, description="characterization period, h")
    horizon: int = pydantic.Field(38_072, gt=0, description="test duration, h")
    t_max: float = pydantic.Field(38_000.0, gt=0, description="normalization, h")
    j_op: float = pydantic.Field(1.0, gt=0, description="A/cm2")
    n_points: int = pydantic.Field(30, ge=5)
    j_min: float = pydantic.Field(0.02, gt=0, description="A/cm2")
    j_max_fraction: float = pydantic.Field(0.97, gt=0, lt=1)

    @pydantic.model_validator(mode="after")
    def _check_breakpoint(self) -> "SynthSettings":
        if not self.t_c < min(self.horizon, self.t_max):
            raise ValueError(
                f"The breakpoint t_c={self.t_c!s} must lie strictly inside the "
                f"horizon of {min(self.horizon, self.t_max)!s} h."
            )

        return self

    def laws(self) -> AgingLaws:
        t_c = self.t_c / self.t_max
        jlim_model = (
            PiecewiseQuadratic(
                a1=self.a1, b1=self.b1, c1=self.c1, lam=self.lam, t_c=t_c
            )
            if self.jlim_kind == "piecewise"
            else Model2(a1=self.a1, k1=self.k1, a2=self.a2, k2=self.k2, t_c=t_c)
        )

        return AgingLaws(
            a0=self.a0,
            k0=self.k0,
            an=self.an,
            kn=self.kn,
            r_ohm0=self.r_ohm0,
            k_ohm=self.k_ohm,
            jlim_model=jlim_model,
            t_max=self.t_max,
        )

    def build(
        self,
        constants: PhysicalConstants | None = None,
        operating: OperatingConditions | None = None,
    ) -> "GroundTruth":
        return GroundTruth(
            laws=self.laws(),
            beta=self.beta,
            constants=constants or PhysicalConstants(),
            operating=operating or OperatingConditions(),
            cadence=self.cadence,
            horizon=self.horizon,
            j_op=self.j_op,
            n_points=self.n_points,
            j_min=self.j_min,
            j_max_fraction=self.j_max_fraction,
        )


@dataclasses.dataclass(frozen=True)
class GroundTruth:
    """Everything needed to regenerate the synthetic database exactly."""

    laws: AgingLaws
    beta: float
    constants: PhysicalConstants
    operating: OperatingConditions
    cadence: int = 500
    horizon: int = 38_072
    j_op: float = 1.0
    n_points: int = 30
    j_min: float = 0.02
    j_max_fraction: float = 0.97

    def __post_init__(self) -> None:
        below = np.flatnonzero(self.jlim_hourly() <= self.j_op)
        if below.size:
            hour = int(below[0])
            logger.error("Planted jlim reaches the operating region at %d h.", hour)
            raise ModelDomainError(
                f"jlim must stay above the operating current density; it reaches "
                f"{self.j_op!s} A/cm2 at {hour!s} h."
            )

    @property
    def breakpoint(self) -> float:
        """Planted acceleration onset, h."""
        t_c = getattr(self.laws.jlim_model, "t_c", 1.0)

        return float(t_c * self.laws.t_max)

    @property
    def hours(self) -> npt.NDArray[np.float64]:
        return np.arange(self.horizon + 1, dtype=np.float64)

    def jlim_hourly(self) -> npt.NDArray[np.float64]:
        return np.asarray(eval_laws(self.laws, self.hours)[3])

    def params_at(self, t: float) -> QuasiStaticParams:
        j0, jn, r_ohm, jlim = eval_laws(self.laws, float(t))

        return QuasiStaticParams(j0=j0, jn=jn, beta=self.beta, jlim=jlim, r_ohm=r_ohm)

    def voltage_hourly(self) -> npt.NDArray[np.float64]:
        j0, jn, r_ohm, jlim = eval_laws(self.laws, self.hours)

        return voltage_field(self.j_op, j0, jn, self.beta, jlim, r_ohm, self.constants)

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            "laws": self.laws.to_dict(),
            "beta": self.beta,
            "constants": self.constants.model_dump(mode="json"),
            "operating": self.operating.model_dump(mode="json"),
            "cadence": self.cadence,
            "horizon": self.horizon,
            "j_op": self.j_op,
            "breakpoint": self.breakpoint,
        }


def generate_database(gt: GroundTruth, seed: int | None = None) -> AgingDatabase:
    """Evaluates the planted laws into a noiseless aging database.

    Parameters
    ----------
    gt : GroundTruth
        Planted laws and sampling layout.

    seed : int, optional
        Recorded for reproducibility; generation itself is deterministic.

    Returns
    -------
    AgingDatabase
        Polarization curves and constant-in-j resistance profiles every
        ``gt.cadence`` hours, and the hourly voltage at ``gt.j_op``.
    """
    curves: list[PolarizationCurve] = []
    for t in np.arange(0, gt.horizon + 1, gt.cadence, dtype=np.float64):
        p = gt.params_at(t)
        grid = np.linspace(gt.j_min, gt.j_max_fraction * p.jlim, gt.n_points)
        curves.append(
            PolarizationCurve(
                t=float(t),
                j=grid,
                u=polarization_curve(grid, p, gt.constants),
                profile_j=grid,
                profile_r=np.full(grid.size, p.r_ohm),
            )
        )

    voltage = gt.voltage_hourly()
    logger.info(
        "Generated %d characterizations and %d hourly voltages (seed=%s).",
        len(curves),
        voltage.size,
        seed,
    )

    return AgingDatabase(curves=curves, voltage=voltage)


def write_truth(gt: GroundTruth, directory: str | pathlib.Path, seed: int) -> None:
    path = pathlib.Path(directory) / TRUTH_FILE
    database.write_json(gt.to_dict() | {"seed": seed}, path)
