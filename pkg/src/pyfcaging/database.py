# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import json
import logging
import os
import pathlib
import tempfile
import typing

import numpy as np
import numpy.typing as npt
import pandas as pd

from pyfcaging.exceptions import DataValidationError
from pyfcaging.identification import PolarizationCurve

__all__ = [
    "AgingDatabase",
    "POLARIZATION_FILE",
    "R_OHM_FILE",
    "VOLTAGE_FILE",
    "read_database",
    "read_json",
    "write_csv",
    "write_database",
    "write_json",
    "write_text",
]

logger = logging.getLogger("pyfcaging")

POLARIZATION_FILE: typing.Final[str] = "polarization.csv"
R_OHM_FILE: typing.Final[str] = "r_ohm.csv"
VOLTAGE_FILE: typing.Final[str] = "voltage.csv"

_POLARIZATION_COLUMNS = ["t_h", "j_A_cm2", "u_V"]
_R_OHM_COLUMNS = ["t_h", "j_A_cm2", "r_ohm_cm2"]
_VOLTAGE_COLUMNS = ["t_h", "u_V"]


@dataclasses.dataclass(frozen=True)
class AgingDatabase:
    """Characterizations every few hundred hours plus the hourly voltage.

    ``voltage[k]`` holds the cell voltage at hour ``k``.
    """

    curves: list[PolarizationCurve]
    voltage: npt.NDArray[np.float64] = dataclasses.field(repr=False)

    @property
    def horizon(self) -> int:
        return self.voltage.size - 1

    @property
    def y0(self) -> float:
        return float(self.voltage[0])

    def restrict(self, t_n: int) -> "AgingDatabase":
        """Keeps what is known at ``t_n``.

        Raises
        ------
        DataValidationError
            If ``t_n`` lies beyond the recorded voltage.
        """
        if t_n > self.horizon or t_n < 0:
            logger.error(
                "t_n=%s is outside of the recorded [0, %d] h.", t_n, self.horizon
            )
            raise DataValidationError(
                f"The database covers [0, {self.horizon!s}] h, not t_n={t_n!s}."
            )

        return AgingDatabase(
            curves=[curve for curve in self.curves if curve.t <= t_n],
            voltage=self.voltage[: int(t_n) + 1],
        )


def write_text(text: str, path: str | pathlib.Path) -> None:
    """Writes a file at once through a temporary sibling and a rename."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with tempfile.NamedTemporaryFile(
        "w",
        encoding="utf-8",
        newline="\n",
        dir=path.parent,
        prefix=f".{path.name}.",
        delete=False,
    ) as stream:
        stream.write(text)

    os.replace(stream.name, path)
    logger.debug("File has been written: %s", path)


def write_csv(frame: pd.DataFrame, path: str | pathlib.Path) -> None:
    write_text(frame.to_csv(index=False, lineterminator="\n"), path)


def write_json(data: typing.Any, path: str | pathlib.Path) -> None:
    write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", path)


def read_json(path: str | pathlib.Path) -> typing.Any:
    try:
        return json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        logger.exception("Unable to decode a JSON document: %s", path)
        raise DataValidationError(f"Malformed JSON document: {path!s}") from err


def _read_csv(path: pathlib.Path, columns: list[str]) -> pd.DataFrame:
    frame = pd.read_csv(path, encoding="utf-8")
    if list(frame.columns) != columns:
        logger.error("Unexpected columns in %s: %s", path, list(frame.columns))
        raise DataValidationError(
            f"File {path.name!s} must have the columns {', '.join(columns)!s}."
        )

    return frame


def read_database(directory: str | pathlib.Path) -> AgingDatabase:
    """Reads the three database files from a directory.

    Raises
    ------
    OSError
        If a file is missing or unreadable.

    DataValidationError
        If the files are malformed or inconsistent.
    """
    directory = pathlib.Path(directory)

    polarization = _read_csv(directory / POLARIZATION_FILE, _POLARIZATION_COLUMNS)
    profiles = _read_csv(directory / R_OHM_FILE, _R_OHM_COLUMNS)
    voltage = _read_csv(directory / VOLTAGE_FILE, _VOLTAGE_COLUMNS)

    hours = voltage["t_h"].to_numpy(dtype=np.float64)
    if hours.size == 0 or np.any(hours != np.arange(hours.size)):
        logger.error("Hourly voltage must start at 0 h without gaps.")
        raise DataValidationError("The voltage file must list hours 0, 1, 2, ...")

    profile_groups = dict(tuple(profiles.groupby("t_h", sort=True)))

    curves: list[PolarizationCurve] = []
    for t, group in polarization.groupby("t_h", sort=True):
        try:
            profile = profile_groups[t]
        except KeyError as err:
            logger.exception("No r_ohm profile recorded at t=%s h.", t)
            raise DataValidationError(f"Missing r_ohm profile at t={t!s} h.") from err

        curves.append(
            PolarizationCurve(
                t=float(t),
                j=group["j_A_cm2"].to_numpy(dtype=np.float64),
                u=group["u_V"].to_numpy(dtype=np.float64),
                profile_j=profile["j_A_cm2"].to_numpy(dtype=np.float64),
                profile_r=profile["r_ohm_cm2"].to_numpy(dtype=np.float64),
            )
        )

    logger.info(
        "Loaded %d characterizations and %d hourly voltages from %s",
        len(curves),
        hours.size,
        directory,
    )

    return AgingDatabase(curves=curves, voltage=voltage["u_V"].to_numpy(np.float64))


def write_database(db: AgingDatabase, directory: str | pathlib.Path) -> None:
    directory = pathlib.Path(directory)

    polarization = pd.concat(
        [
            pd.DataFrame({"t_h": curve.t, "j_A_cm2": curve.j, "u_V": curve.u})
            for curve in db.curves
        ],
        ignore_index=True,
    )
    profiles = pd.concat(
        [
            pd.DataFrame(
                {
                    "t_h": curve.t,
                    "j_A_cm2": curve.profile_j,
                    "r_ohm_cm2": curve.profile_r,
                }
            )
            for curve in db.curves
        ],
        ignore_index=True,
    )
    voltage = pd.DataFrame(
        {"t_h": np.arange(db.voltage.size, dtype=np.int64), "u_V": db.voltage}
    )

    write_csv(polarization, directory / POLARIZATION_FILE)
    write_csv(profiles, directory / R_OHM_FILE)
    write_csv(voltage, directory / VOLTAGE_FILE)

    logger.info("Database has been written to %s", directory)
