# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import logging

import numpy as np
import pytest

from pyfcaging.aging_laws import (
    AgingLaws,
    Model1,
    Model2,
    PiecewiseQuadratic,
    eval_jlim,
    eval_laws,
    fit_aging_laws,
    fit_exponential_law,
    fit_jlim_model1,
    fit_jlim_model2,
    fit_linear_law,
    normalize_time,
)
from pyfcaging.exceptions import DataValidationError, ModelDomainError
from pyfcaging.synthdata import SynthSettings


@pytest.fixture
def x():
    return np.arange(0, 38_001, 500) / 38_000


@pytest.fixture
def laws():
    return AgingLaws(
        a0=1e-6,
        k0=0.8,
        an=1e-3,
        kn=1.5,
        r_ohm0=0.08,
        k_ohm=0.0205,
        jlim_model=PiecewiseQuadratic(a1=1.8, b1=0.006, c1=0.3, lam=2.5, t_c=0.75),
    )


def test_normalize_time():
    assert normalize_time(19_000.0) == 0.5

    with pytest.raises(ModelDomainError):
        normalize_time(1.0, 0.0)


@pytest.mark.parametrize("sign, k", [("decay", 0.8), ("growth", 1.5)])
def test_fit_exponential_law(x, sign, k):
    rate = -k if sign == "decay" else k
    samples = np.column_stack([x, 2e-4 * np.exp(rate * x)])

    a, fitted = fit_exponential_law(samples, sign)

    assert a == pytest.approx(2e-4, rel=1e-8)
    assert fitted == pytest.approx(k, rel=1e-8)


def test_fit_exponential_law_with_negative_rate(caplog, x):
    samples = np.column_stack([x, np.exp(0.5 * x)])

    with caplog.at_level(logging.WARNING, logger="pyfcaging"):
        _, k = fit_exponential_law(samples, "decay")

    assert k == pytest.approx(-0.5)
    assert "Fitted decay rate is negative" in caplog.text


def test_fit_exponential_law_with_error(caplog):
    with caplog.at_level(logging.ERROR, logger="pyfcaging"):
        with pytest.raises(DataValidationError) as err:
            fit_exponential_law([(0.0, 1.0), (0.5, -1.0)], "decay")

    message = "Logarithmic fits require strictly positive values."
    assert message in caplog.text

    message = "Sample values must be strictly positive."
    assert message in str(err.value)


@pytest.mark.parametrize(
    "samples, message",
    [
        ([(0.0, 1.0)], "At least 2 samples are required, got 1."),
        ([(0.5, 1.0), (0.5, 2.0)], "Sample times must not all be identical."),
        ([1.0, 2.0, 3.0], "Samples must be a sequence of (t, value) pairs."),
    ],
)
def test_fit_linear_law_with_error(samples, message):
    with pytest.raises(DataValidationError) as err:
        fit_linear_law(samples)

    assert message in str(err.value)


def test_fit_linear_law(x):
    intercept, slope = fit_linear_law(np.column_stack([x, 0.08 + 0.0205 * x]))

    assert intercept == pytest.approx(0.08, rel=1e-8)
    assert slope == pytest.approx(0.0205, rel=1e-8)


def test_fit_jlim_model1(x):
    samples = np.column_stack([x, eval_jlim(Model1(a1=1.8, k1=0.2), x)])

    a1, k1 = fit_jlim_model1(samples)

    assert a1 == pytest.approx(1.8, rel=1e-8)
    assert k1 == pytest.approx(0.2, rel=1e-8)


def test_fit_jlim_model2(x):
    planted = Model2(a1=1.8, k1=0.2, a2=0.45, k2=12.0, t_c=30_000 / 38_000)
    samples = np.column_stack([x, eval_jlim(planted, x)])

    model, error = fit_jlim_model2(samples)

    for name in ("a1", "k1", "a2", "k2", "t_c"):
        assert getattr(model, name) == pytest.approx(getattr(planted, name), rel=1e-2)
    assert error < 1e-6


def test_fit_jlim_model2_with_too_few_samples(x):
    samples = np.column_stack([x[:5], np.linspace(1.8, 1.7, 5)])

    with pytest.raises(DataValidationError) as err:
        fit_jlim_model2(samples)

    message = "At least 6 samples are required, got 5."
    assert message in str(err.value)


def test_piecewise_quadratic_is_smooth_at_breakpoint():
    model = PiecewiseQuadratic(a1=1.8, b1=0.006, c1=0.3, lam=2.5, t_c=0.75)
    h = 1e-6

    before = (eval_jlim(model, 0.75) - eval_jlim(model, 0.75 - h)) / h
    after = (eval_jlim(model, 0.75 + h) - eval_jlim(model, 0.75)) / h
    assert before == pytest.approx(after, abs=1e-5)

    def second_difference(t, step=0.01):
        upper, lower = eval_jlim(model, t + step), eval_jlim(model, t - step)

        return (upper - 2 * eval_jlim(model, t) + lower) / step**2

    curvature = [second_difference(0.5), second_difference(0.9)]
    assert curvature[1] == pytest.approx(2.5 * curvature[0], rel=1e-6)


def test_eval_laws(laws):
    j0, jn, r_ohm, jlim = eval_laws(laws, 19_000.0)

    assert isinstance(j0, float)
    assert j0 == pytest.approx(1e-6 * np.exp(-0.4))
    assert jn == pytest.approx(1e-3 * np.exp(0.75))
    assert r_ohm == pytest.approx(0.08 + 0.0205 * 0.5)
    assert jlim == pytest.approx(1.8 - 0.003 - 0.075)

    values = eval_laws(laws, np.array([0.0, 38_000.0]))
    assert all(v.shape == (2,) for v in values)


def test_aging_laws_to_dict(laws):
    data = laws.to_dict()

    assert data["jlim_model"]["kind"] == "PiecewiseQuadratic"
    assert AgingLaws.from_dict(data) == laws


def test_aging_laws_from_dict_with_error(laws):
    data = laws.to_dict()
    data["jlim_model"]["kind"] = "Model3"

    with pytest.raises(DataValidationError) as err:
        AgingLaws.from_dict(data)

    assert "Unknown jlim law" in str(err.value)


@pytest.mark.parametrize(
    "jlim_model",
    [
        Model1(a1=-1.0, k1=0.2),
        Model2(a1=1.8, k1=0.2, a2=0.45, k2=12.0, t_c=1.5),
        PiecewiseQuadratic(a1=1.8, b1=0.006, c1=0.3, lam=0.5, t_c=0.75),
    ],
)
def test_invalid_jlim_law(laws, jlim_model):
    with pytest.raises(ModelDomainError) as err:
        AgingLaws(
            a0=laws.a0,
            k0=laws.k0,
            an=laws.an,
            kn=laws.kn,
            r_ohm0=laws.r_ohm0,
            k_ohm=laws.k_ohm,
            jlim_model=jlim_model,
        )

    assert "Invalid jlim law" in str(err.value)


@pytest.mark.parametrize(
    "jlim_kind, variant, kind",
    [("piecewise", "model1", Model1), ("model2", "model2", Model2)],
)
def test_fit_aging_laws(caplog, constants, jlim_kind, variant, kind):
    truth = SynthSettings(jlim_kind=jlim_kind).build(constants)
    times = np.arange(0, 38_001, 500, dtype=np.float64)
    params = [truth.params_at(t) for t in times]

    with caplog.at_level(logging.INFO, logger="pyfcaging"):
        laws = fit_aging_laws(times, params, jlim_variant=variant)

    assert laws.a0 == pytest.approx(1e-6, rel=1e-8)
    assert laws.k0 == pytest.approx(0.8, rel=1e-8)
    assert laws.an == pytest.approx(1e-3, rel=1e-8)
    assert laws.kn == pytest.approx(1.5, rel=1e-8)
    assert laws.r_ohm0 == pytest.approx(0.08, rel=1e-8)
    assert laws.k_ohm == pytest.approx(0.0205, rel=1e-8)
    assert isinstance(laws.jlim_model, kind)

    message = "Fitted aging laws on 77 characterizations."
    assert message in caplog.text


def test_fit_aging_laws_with_error(truth):
    with pytest.raises(DataValidationError) as err:
        fit_aging_laws([0.0, 500.0], [truth.params_at(0.0)])

    message = "Times and identified parameters are misaligned."
    assert message in str(err.value)
