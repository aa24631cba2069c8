# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import decimal
import logging

import numpy as np
import pydantic
import pytest

from pyfcaging.electrochem import (
    OperatingConditions,
    PhysicalConstants,
    QuasiStaticParams,
    cell_voltage,
    loss_components,
    polarization_curve,
    voltage_field,
    voltage_gradient,
)
from pyfcaging.exceptions import ModelDomainError


def _reference_voltage(j, p, c):
    with decimal.localcontext() as ctx:
        ctx.prec = 40
        d = decimal.Decimal
        thermal = d(c.gas_constant) * d(c.temperature) / d(c.faraday)
        act = thermal / (2 * d(c.alpha)) * ((d(j) + d(p.jn)) / d(p.j0)).ln()
        diff = -thermal / (2 * d(p.beta)) * (1 - d(j) / d(p.jlim)).ln()

        return float(d(c.e_rev) - act - diff - d(p.r_ohm) * d(j))


def test_constants_from_celsius():
    c = PhysicalConstants.from_celsius(75.0, alpha=0.4)

    assert c.temperature == pytest.approx(348.15)
    assert c.alpha == 0.4
    assert c.rt_over_f == pytest.approx(8.314 * 348.15 / 96485.33)


def test_constants_reject_unknown_fields():
    with pytest.raises(pydantic.ValidationError):
        PhysicalConstants(pressure=2.0)

    with pytest.raises(pydantic.ValidationError):
        OperatingConditions(rh_air=120.0)


@pytest.mark.parametrize("j", [0.02, 0.5, 1.0, 1.7])
def test_cell_voltage(constants, params, j):
    assert cell_voltage(j, params, constants) == pytest.approx(
        _reference_voltage(j, params, constants), rel=1e-13
    )


def test_loss_components(constants, params):
    eta_act, eta_diff, eta_ohm = loss_components(1.0, params, constants)

    assert eta_act > 0
    assert eta_diff > 0
    assert eta_ohm == pytest.approx(0.08)
    assert constants.e_rev - eta_act - eta_diff - eta_ohm == pytest.approx(
        cell_voltage(1.0, params, constants)
    )


def test_cell_voltage_at_jlim(caplog, constants, params):
    with caplog.at_level(logging.ERROR, logger="pyfcaging"):
        with pytest.raises(ModelDomainError) as err:
            cell_voltage(params.jlim, params, constants)

    message = "Current density is outside of [0, jlim)"
    assert message in caplog.text

    message = "Diffusion loss is singular for current densities >= jlim"
    assert message in str(err.value)


def test_cell_voltage_without_current(constants, params):
    with pytest.raises(ModelDomainError) as err:
        cell_voltage(0.0, params.replace(jn=0.0), constants)

    message = "The sum of j and jn must be strictly positive."
    assert message in str(err.value)


@pytest.mark.parametrize(
    "changes",
    [{"j0": 0.0}, {"beta": -0.1}, {"jlim": 0.0}, {"jn": -1e-3}, {"r_ohm": -0.01}],
)
def test_invalid_params(params, changes):
    with pytest.raises(ModelDomainError):
        params.replace(**changes)


def test_params_without_ohmic_resistance():
    params = QuasiStaticParams(j0=1e-6, jn=1e-3, beta=0.2, jlim=1.8)

    assert params.r_ohm == 0.0

    with pytest.raises(ModelDomainError) as err:
        QuasiStaticParams(j0=1e-6, jn=-1e-3, beta=0.2, jlim=1.8)

    assert "jn and r_ohm must be non-negative" in str(err.value)


def test_polarization_curve_is_decreasing(constants, params):
    grid = np.linspace(0.02, 0.97 * params.jlim, 30)
    u = polarization_curve(grid, params, constants)

    assert u.shape == grid.shape
    assert np.all(np.diff(u) < 0)


def test_polarization_curve_with_error(constants, params):
    with pytest.raises(ModelDomainError):
        polarization_curve(np.ones((2, 2)), params, constants)


def test_voltage_gradient(constants, params):
    j = np.array([0.05, 0.8, 1.5])
    gradient = voltage_gradient(j, params, constants)

    names = ["j0", "jn", "beta", "jlim", "r_ohm"]
    for column, name in enumerate(names):
        value = getattr(params, name)
        h = 1e-6 * value
        upper = polarization_curve(j, params.replace(**{name: value + h}), constants)
        lower = polarization_curve(j, params.replace(**{name: value - h}), constants)

        np.testing.assert_allclose(
            gradient[:, column], (upper - lower) / (2.0 * h), rtol=1e-6
        )


def test_voltage_field_matches_cell_voltage(constants, params):
    jlim = np.array([1.8, 1.6, 1.4])
    field = voltage_field(1.0, params.j0, params.jn, params.beta, jlim, 0.08, constants)

    expected = [cell_voltage(1.0, params.replace(jlim=v), constants) for v in jlim]
    np.testing.assert_allclose(field, expected, rtol=1e-14)


def test_voltage_field_with_error(caplog, constants, params):
    with caplog.at_level(logging.ERROR, logger="pyfcaging"):
        with pytest.raises(ModelDomainError):
            voltage_field(1.0, 1e-6, 1e-3, 0.2, [1.5, 1.0], 0.08, constants)

    message = "Voltage requested outside of the model domain."
    assert message in caplog.text
