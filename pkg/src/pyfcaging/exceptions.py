# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

__all__ = [
    "DataValidationError",
    "FuelCellError",
    "ModelDomainError",
    "NumericalError",
]


class FuelCellError(Exception):
    """Base exception for all errors related to fuel cell aging computations."""


class ModelDomainError(FuelCellError, ValueError):
    """A model was evaluated outside of its domain of definition."""


class DataValidationError(FuelCellError, ValueError):
    """Input data are malformed, misaligned or insufficient."""


class NumericalError(FuelCellError):
    """A numerical procedure failed to produce a usable result."""
