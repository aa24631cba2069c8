# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import argparse
import logging
import pathlib
import typing

import pydantic
import pydantic_settings

from pyfcaging import database
from pyfcaging._executor import TaskExecutor
from pyfcaging.electrochem import OperatingConditions, PhysicalConstants
from pyfcaging.exceptions import DataValidationError
from pyfcaging.prognosis import PrognosisConfig
from pyfcaging.synthdata import SynthSettings

__all__ = ["ConstantsSettings", "RunConfig"]

logger = logging.getLogger("pyfcaging")


class ConstantsSettings(pydantic.BaseModel):
    """Physical constants as written in configuration files, in degrees Celsius."""

    model_config = pydantic.ConfigDict(extra="forbid")

    temperature: float = pydantic.Field(75.0, gt=-273.15, description="degrees Celsius")
    alpha: float = pydantic.Field(0.5, gt=0, le=1)
    e_rev: float = pydantic.Field(1.18, gt=0, description="V")
    faraday: float = pydantic.Field(96485.33, gt=0, description="C/mol")
    gas_constant: float = pydantic.Field(8.314, gt=0, description="J/(K.mol)")

    def build(self) -> PhysicalConstants:
        return PhysicalConstants.from_celsius(
            self.temperature,
            alpha=self.alpha,
            e_rev=self.e_rev,
            faraday=self.faraday,
            gas_constant=self.gas_constant,
        )


def _merge(base: dict[str, typing.Any], update: dict[str, typing.Any]) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value

    return merged


class RunConfig(pydantic_settings.BaseSettings):
    """Effective configuration of one command-line run.

    Sources by increasing precedence: defaults, environment and ``.env``,
    the JSON document given with ``--config``, command-line flags.
    """

    model_config = pydantic_settings.SettingsConfigDict(
        env_file_encoding="utf-8",
        env_file=".env",
        env_nested_delimiter="__",
        env_prefix="PYFCAGING_",
        extra="ignore",
    )

    constants: ConstantsSettings = pydantic.Field(default_factory=ConstantsSettings)
    operating: OperatingConditions = pydantic.Field(
        default_factory=OperatingConditions
    )
    synth: SynthSettings = pydantic.Field(default_factory=SynthSettings)
    prognosis: PrognosisConfig = pydantic.Field(default_factory=PrognosisConfig)
    seed: pydantic.NonNegativeInt = pydantic.Field(
        0, description="seed of every stochastic step"
    )
    max_workers: pydantic.PositiveInt | None = pydantic.Field(
        None, description="maximum number of worker threads"
    )
    log_interval: pydantic.PositiveInt = pydantic.Field(
        TaskExecutor.DEFAULT_LOGGER_INTERVAL,
        description="completed tasks between progress records",
    )

    @pydantic.model_validator(mode="after")
    def _sync_seed(self) -> "RunConfig":
        self.prognosis.scenario = self.prognosis.scenario.model_copy(
            update={"seed": self.seed}
        )

        return self

    @property
    def physical_constants(self) -> PhysicalConstants:
        return self.constants.build()

    @classmethod
    def read_document(
        cls: type["RunConfig"], path: str | pathlib.Path
    ) -> dict[str, typing.Any]:
        """Loads a JSON configuration document and rejects unknown sections."""
        document = database.read_json(path)
        if not isinstance(document, dict):
            raise DataValidationError(f"{path!s} must hold a JSON object.")

        unknown = sorted(set(document) - set(cls.model_fields))
        if unknown:
            logger.error("Unknown configuration keys: %s", ", ".join(unknown))
            raise DataValidationError(
                f"Unknown configuration keys in {path!s}: {', '.join(unknown)!s}"
            )

        return document

    @classmethod
    def from_arguments(
        cls: type["RunConfig"], arguments: argparse.Namespace
    ) -> "RunConfig":
        settings = cls()

        document: dict[str, typing.Any] = {}
        if getattr(arguments, "config", None) is not None:
            document = cls.read_document(arguments.config)

        overrides: dict[str, typing.Any] = {}
        for key, value in vars(arguments).items():
            if value is None:
                continue

            match key:
                case "seed" | "max_workers":
                    overrides[key] = value

                case "tn":
                    overrides = _merge(overrides, {"prognosis": {"t_n": value}})

                case "scenarios":
                    overrides = _merge(
                        overrides, {"prognosis": {"scenario": {"n_scenarios": value}}}
                    )

                case _:
                    continue

        return cls.model_validate(
            _merge(_merge(settings.model_dump(), document), overrides)
        )
