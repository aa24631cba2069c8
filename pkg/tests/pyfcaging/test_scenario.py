# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import json
import logging
import pathlib

import numpy as np
import pandas as pd
import pydantic
import pytest
import scipy.stats
from numpy.polynomial import Polynomial

from pyfcaging.changepoint import detect_change, eval_spline, interpolate_jlim_hourly
from pyfcaging.exceptions import DataValidationError, ModelDomainError
from pyfcaging.scenario import (
    LearningWindow,
    ScenarioConfig,
    build_p1,
    extend_p2,
    generate_scenarios,
    model1_trajectory,
    sample_pareto,
    sample_truncated_exponential,
    write_scenarios,
)


def _learning(truth, t_n):
    times = np.arange(0, t_n + 1, 500, dtype=np.float64)
    knots = np.column_stack([times, [truth.params_at(t).jlim for t in times]])
    spline, series = interpolate_jlim_hourly(knots, t_n)

    return LearningWindow(spline=spline, detection=detect_change(series), series=series)


@pytest.fixture(scope="module")
def early(truth):
    return _learning(truth, 25_000)


@pytest.fixture(scope="module")
def late(truth):
    return _learning(truth, 35_000)


def test_truncated_exponential_endpoints():
    assert sample_truncated_exponential(0.0, 10_000.0, 25_000.0, 38_000.0) == 25_000.0
    assert sample_truncated_exponential(1.0, 10_000.0, 25_000.0, 38_000.0) == (
        pytest.approx(38_000.0, rel=1e-12)
    )


def test_truncated_exponential_distribution(rng):
    mu, t_n, t_max = 10_000.0, 25_000.0, 38_000.0
    samples = sample_truncated_exponential(rng.random(10_000), mu, t_n, t_max)

    def cdf(t):
        return np.expm1(-(t - t_n) / mu) / np.expm1(-(t_max - t_n) / mu)

    assert scipy.stats.kstest(samples, cdf).statistic < 0.02
    assert samples.min() >= t_n
    assert samples.max() <= t_max


def test_pareto_distribution(rng):
    samples = sample_pareto(1.0 - rng.random(10_000), 3.0)

    assert scipy.stats.kstest(samples, "pareto", args=(3.0,)).statistic < 0.02
    assert samples.min() >= 1.0


@pytest.mark.parametrize(
    "u, s, message",
    [
        (0.0, 3.0, "u = 0 is unbounded"),
        (0.5, 0.0, "The Pareto shape must be positive."),
    ],
)
def test_pareto_with_error(u, s, message):
    with pytest.raises(ModelDomainError) as err:
        sample_pareto(u, s)

    assert message in str(err.value)


def test_truncated_exponential_with_error():
    with pytest.raises(ModelDomainError):
        sample_truncated_exponential(0.5, 10_000.0, 38_000.0, 25_000.0)

    with pytest.raises(ModelDomainError):
        sample_truncated_exponential(1.5, 10_000.0, 25_000.0, 38_000.0)


def test_build_p1(rng):
    checked = 0
    for _ in range(1000):
        t_n = rng.uniform(5_000.0, 30_000.0)
        t_c = rng.uniform(t_n + 100.0, 38_000.0)
        tau = float(rng.integers(5, 50))
        lambda0 = rng.uniform(1.5, 3.0)
        slope = -rng.uniform(1e-6, 1e-4)
        jlim_n = rng.uniform(1.2, 1.8)
        jlim_0 = jlim_n + rng.uniform(0.01, 0.5)

        d = t_c - t_n
        scale = lambda0 * d**2 + t_c * (2 * d + tau)
        if abs(lambda0 * d**2 - t_c * (2 * d + tau)) < 1e-4 * scale:
            # Near-singular draws lose digits in the check itself.
            continue

        a, b, c = build_p1(t_n, jlim_n, slope, jlim_0, t_c, tau, lambda0)
        spread = abs(a) * t_n**2
        assert a * t_n**2 + b * t_n + c == pytest.approx(
            jlim_n, rel=1e-9, abs=1e-13 * spread
        )
        assert 2 * a * t_n + b == pytest.approx(slope, rel=1e-9, abs=1e-13 * spread)

        value_c = jlim_n + slope * d + a * d**2
        drop = -(slope * tau + a * (2 * d * tau + tau**2))
        assert t_c * drop == pytest.approx(
            lambda0 * tau * (jlim_0 - value_c), rel=1e-9, abs=1e-12
        )
        checked += 1

    assert checked > 900


def test_build_p1_with_error():
    with pytest.raises(ModelDomainError) as err:
        build_p1(30_000.0, 1.5, -1e-5, 1.8, 25_000.0, 10.0, 2.0)

    assert "must lie after" in str(err.value)


def test_extend_p2():
    p1 = Polynomial([1.8, -2e-6, -3e-10])
    t_c, lam, h = 30_000.0, 2.5, 100.0

    assert extend_p2(p1, t_c, lam, t_c) == pytest.approx(p1(t_c), rel=1e-14)

    slope = (extend_p2(p1, t_c, lam, t_c + h) - extend_p2(p1, t_c, lam, t_c - h)) / (
        2 * h
    )
    assert slope == pytest.approx(p1.deriv()(t_c), rel=1e-6)

    t = 34_000.0
    values = extend_p2(p1, t_c, lam, np.array([t - h, t, t + h]))
    curvature = (values[0] - 2 * values[1] + values[2]) / h**2
    assert curvature == pytest.approx(lam * p1.deriv(2)(t), rel=1e-6)


def test_extend_p2_with_error():
    with pytest.raises(ModelDomainError):
        extend_p2(Polynomial([1.0, -1.0]), 0.0, 0.9, 1.0)


def test_scenario_config_with_error():
    with pytest.raises(pydantic.ValidationError) as err:
        ScenarioConfig(t_n=40_000.0)

    assert "must be below t_max" in str(err.value)


def test_generate_scenarios_without_breakpoint(caplog, early):
    cfg = ScenarioConfig(n_scenarios=50, t_n=25_000.0)

    with caplog.at_level(logging.INFO, logger="pyfcaging"):
        scenarios = generate_scenarios(early, cfg)

    assert not early.detection.detected
    assert [s.index for s in scenarios] == list(range(50))
    for scenario in scenarios:
        assert scenario.case == 1
        assert 25_000.0 < scenario.t_c <= 38_000.0
        assert scenario.lam >= 1.0
        assert scenario.trajectory.shape == (13_000,)
        assert scenario.hours[0] == 25_001.0
        assert scenario.trajectory[0] == pytest.approx(early.series[-1], abs=1e-3)
        assert np.all(scenario.trajectory >= 1.05)

    message = "Generated 50 jlim scenarios (case 1) on (25000, 38000]."
    assert message in caplog.text


def test_generate_scenarios_follow_p1_until_breakpoint(early):
    cfg = ScenarioConfig(n_scenarios=20, t_n=25_000.0)

    for scenario in generate_scenarios(early, cfg):
        a, b, c = scenario.p1
        kept = (scenario.hours <= scenario.t_c) & (scenario.trajectory > 1.05)
        expected = Polynomial([c, b, a])(scenario.hours[kept])

        np.testing.assert_allclose(scenario.trajectory[kept], expected, rtol=1e-12)


def test_generate_scenarios_with_breakpoint(late):
    cfg = ScenarioConfig(n_scenarios=30, t_n=35_000.0)
    scenarios = generate_scenarios(late, cfg)

    assert late.detection.detected
    for scenario in scenarios:
        assert scenario.case == 2
        assert scenario.t_c == late.detection.t_c
        assert scenario.trajectory.shape == (3_000,)
        assert scenario.trajectory[0] == pytest.approx(late.series[-1], abs=1e-3)
        assert np.all(np.diff(scenario.trajectory) <= 0)


def test_generate_scenarios_without_acceleration(mocker, late):
    mocker.patch("pyfcaging.scenario.sample_pareto", return_value=1.0)
    scenarios = generate_scenarios(late, ScenarioConfig(n_scenarios=5, t_n=35_000.0))
    _, slope = eval_spline(late.spline, 35_000.0)
    trajectory = scenarios[0].trajectory

    for scenario in scenarios:
        assert scenario.lam == 1.0
        np.testing.assert_array_equal(scenario.trajectory, trajectory)

    # A plain quadratic continuation of the learning curve.
    curvature = np.diff(trajectory, 2)
    np.testing.assert_allclose(curvature, curvature[0], rtol=1e-4, atol=1e-13)
    assert trajectory[0] - late.series[-1] == pytest.approx(
        slope + 0.5 * curvature[0], rel=1e-6
    )


def test_case_one_scenarios_fire_at_their_breakpoint(early):
    cfg = ScenarioConfig(n_scenarios=100, t_n=25_000.0)
    checked = 0
    for scenario in generate_scenarios(early, cfg):
        if scenario.t_c > cfg.t_max - cfg.tau - 1:
            continue

        series = np.concatenate([early.series, scenario.trajectory])
        detection = detect_change(series, cfg.tau, cfg.lambda0)

        assert detection.detected
        assert abs(detection.t_c - scenario.t_c) <= cfg.tau
        checked += 1

    assert checked > 50


def test_breakpoints_grow_with_mu(rng, early):
    u = np.sort(rng.random(1000))
    samples = [
        sample_truncated_exponential(u, mu, 25_000.0, 38_000.0)
        for mu in (1_000.0, 5_000.0, 10_000.0, 50_000.0)
    ]
    assert np.all(np.diff(samples, axis=0) >= -1e-9)

    found = [
        [
            scenario.t_c
            for scenario in generate_scenarios(
                early, ScenarioConfig(n_scenarios=30, t_n=25_000.0, mu=mu, seed=3)
            )
        ]
        for mu in (2_000.0, 10_000.0, 40_000.0)
    ]
    assert np.all(np.diff(found, axis=0) >= -1e-9)


def test_generate_scenarios_is_deterministic(early):
    cfg = ScenarioConfig(n_scenarios=10, t_n=25_000.0, seed=7)
    first = generate_scenarios(early, cfg)
    second = generate_scenarios(early, cfg)
    more = generate_scenarios(early, cfg.model_copy(update={"n_scenarios": 20}))

    for one, two, three in zip(first, second, more):
        np.testing.assert_array_equal(one.trajectory, two.trajectory)
        # Substreams do not depend on the number of scenarios.
        np.testing.assert_array_equal(one.trajectory, three.trajectory)


def test_generate_scenarios_with_error(early):
    with pytest.raises(DataValidationError) as err:
        generate_scenarios(early, ScenarioConfig(t_n=20_000.0))

    message = "Learning window ends at 25000 h, expected t_n=20000.0."
    assert message in str(err.value)


def test_generate_scenarios_hold_floor(early):
    learning = dataclasses.replace(early, series=early.series - 0.3)
    cfg = ScenarioConfig(n_scenarios=20, t_n=25_000.0, floor_factor=1.2)

    for scenario in generate_scenarios(learning, cfg, j_op=1.0):
        crossed = np.flatnonzero(scenario.trajectory <= 1.2)
        if crossed.size:
            assert np.all(scenario.trajectory[crossed[0] :] == 1.2)


def test_model1_trajectory(truth):
    trajectory = model1_trajectory(truth.laws, 25_000, 38_000.0, floor=1.05)

    assert trajectory.shape == (13_000,)
    assert trajectory[0] == pytest.approx(
        truth.params_at(25_001.0).jlim, rel=1e-12
    )


def test_write_scenarios(fs_no_root, early):
    cfg = ScenarioConfig(n_scenarios=3, t_n=25_000.0)
    scenarios = generate_scenarios(early, cfg)

    write_scenarios(scenarios, "/out/scenarios", {"seed": 0})

    frame = pd.read_csv("/out/scenarios/scenario_0002.csv")
    assert list(frame.columns) == ["t_h", "jlim_A_cm2"]
    assert len(frame) == 13_000

    manifest = json.loads(pathlib.Path("/out/scenarios/manifest.json").read_text())
    assert manifest["seed"] == 0
    assert [s["index"] for s in manifest["scenarios"]] == [0, 1, 2]
