# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import asyncio
import logging
import os
import typing
from concurrent.futures import ThreadPoolExecutor

__all__ = ["TaskExecutor"]

logger = logging.getLogger("pyfcaging")

T = typing.TypeVar("T")
R = typing.TypeVar("R")


class TaskExecutor:
    """Asynchronous front end to a thread pool for independent numerical tasks.

    Results are always returned in input order, whatever the completion
    order, so reductions over them stay deterministic.
    """

    DEFAULT_LOGGER_INTERVAL: typing.Final[int] = int(
        os.environ.get("PYFCAGING_LOGGER_INTERVAL", 50)
    )

    def __init__(
        self,
        *,
        max_workers: int | None = None,
        log_interval: int = DEFAULT_LOGGER_INTERVAL,
        executor: ThreadPoolExecutor | None = None,
    ) -> None:
        self.log_interval = log_interval

        # External executor or an internal one for blocking calls.
        self._owned = executor is None
        self._executor = executor or ThreadPoolExecutor(max_workers=max_workers)

    @property
    def executor(self) -> ThreadPoolExecutor:
        return self._executor

    @property
    def log_interval(self) -> int:
        """Returns the number of completed tasks between progress records."""
        return self._log_interval

    @log_interval.setter
    def log_interval(self, value: typing.Any) -> None:
        if not isinstance(value, int) or value <= 0:
            raise ValueError("Logging interval must be a positive integer.")

        self._log_interval = value

    async def __aenter__(self) -> "TaskExecutor":
        return self

    async def __aexit__(self, *args: typing.Any, **kwargs: typing.Any) -> None:
        if self._owned:
            self._executor.shutdown(wait=True)
            logger.debug("The worker pool is now closed.")

    async def map(
        self,
        fn: typing.Callable[[T], R],
        items: typing.Sequence[T],
        *,
        label: str = "Completed",
    ) -> list[R]:
        """Runs ``fn`` over ``items`` in the pool.

        Parameters
        ----------
        fn : callable
            Blocking function of one argument.

        items : sequence
            Task inputs.

        label : str, default="Completed"
            Prefix of the periodic progress records.

        Returns
        -------
        list
            One result per item, in input order.
        """
        loop = asyncio.get_running_loop()

        async def indexed(index: int, item: T) -> tuple[int, R]:
            return index, await loop.run_in_executor(self._executor, fn, item)

        tasks = [indexed(index, item) for index, item in enumerate(items)]
        results: list[typing.Any] = [None] * len(tasks)

        done: int = 0
        for future in asyncio.as_completed(tasks):
            index, result = await future
            results[index] = result
            done += 1

            if done % self._log_interval == 0:
                logger.info("%s: %d / %d", label, done, len(tasks))

        logger.info("%s: all %d tasks finished.", label, len(tasks))

        return results
