# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import logging
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

from pyfcaging._executor import TaskExecutor


def _slow_square(value):
    # Later items finish first.
    time.sleep(0.001 * (10 - value))

    return value * value


@pytest.mark.asyncio
async def test_map_keeps_input_order(caplog):
    with caplog.at_level(logging.INFO, logger="pyfcaging"):
        async with TaskExecutor(max_workers=4, log_interval=3) as tasks:
            results = await tasks.map(_slow_square, range(10), label="Squares")

    assert results == [value * value for value in range(10)]

    for done in (3, 6, 9):
        assert f"Squares: {done!s} / 10" in caplog.text
    assert "Squares: all 10 tasks finished." in caplog.text


@pytest.mark.asyncio
async def test_map_without_items():
    async with TaskExecutor(max_workers=1) as tasks:
        assert await tasks.map(_slow_square, []) == []


@pytest.mark.parametrize("value", [0, -10, 2.5, "5"])
def test_set_log_interval_with_error(value):
    tasks = TaskExecutor(max_workers=1)

    with pytest.raises(ValueError) as err:
        tasks.log_interval = value

    message = "Logging interval must be a positive integer."
    assert message in str(err.value)

    tasks.executor.shutdown()


@pytest.mark.asyncio
async def test_owned_executor_is_closed(mocker):
    tasks = TaskExecutor(max_workers=1)
    shutdown = mocker.spy(tasks.executor, "shutdown")

    async with tasks:
        pass

    shutdown.assert_called_once_with(wait=True)


@pytest.mark.asyncio
async def test_external_executor_stays_open(mocker):
    with ThreadPoolExecutor(max_workers=1) as executor:
        shutdown = mocker.spy(executor, "shutdown")

        async with TaskExecutor(executor=executor) as tasks:
            assert tasks.executor is executor

        shutdown.assert_not_called()
        assert executor.submit(_slow_square, 3).result() == 9
