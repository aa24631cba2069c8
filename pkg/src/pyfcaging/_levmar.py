# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import logging
import typing

import numpy as np
import numpy.typing as npt
import scipy.linalg

from pyfcaging.exceptions import FuelCellError, NumericalError

__all__ = ["LevMarResult", "LevenbergMarquardt"]

logger = logging.getLogger("pyfcaging")

Vector = npt.NDArray[np.float64]
ResidualFunction = typing.Callable[[Vector], Vector]
JacobianFunction = typing.Callable[[Vector], npt.NDArray[np.float64]]


@dataclasses.dataclass(frozen=True, slots=True)
class LevMarResult:
    x: Vector
    residuals: Vector
    cost: float  # sum of squared residuals
    n_iterations: int
    converged: bool
    gradient_norm: float


class LevenbergMarquardt:
    """Levenberg-Marquardt solver for small dense least-squares problems.

    The damping term is scaled by the diagonal of ``J^T J`` (Marquardt
    scaling). A rejected step multiplies the damping by ``increase``, an
    accepted one divides it by ``decrease``. Iteration stops when the relative
    decrease of the objective drops under ``ftol``, when the infinity norm of
    the gradient drops under ``gtol`` or after ``max_iterations``.

    Optional lower bounds are handled by projection: a variable sitting on its
    bound with a gradient pushing it outward is held fixed for the step and
    left out of the gradient norm.
    """

    MAX_REJECTIONS: typing.Final[int] = 40

    def __init__(
        self,
        *,
        damping: float = 1e-3,
        increase: float = 10.0,
        decrease: float = 10.0,
        ftol: float = 1e-12,
        gtol: float = 1e-12,
        max_iterations: int = 200,
    ) -> None:
        if damping <= 0 or increase <= 1 or decrease <= 1:
            raise ValueError("Damping must be positive and its factors above one.")

        self._damping = damping
        self._increase = increase
        self._decrease = decrease
        self._ftol = ftol
        self._gtol = gtol
        self._max_iterations = max_iterations

    @staticmethod
    def _evaluate(residuals: ResidualFunction, x: Vector) -> tuple[Vector, float]:
        try:
            values = np.asarray(residuals(x), dtype=np.float64)
        except (FuelCellError, FloatingPointError, OverflowError):
            return np.full(1, np.inf), np.inf

        if not np.all(np.isfinite(values)):
            return values, np.inf

        return values, float(values @ values)

    def minimize(
        self,
        residuals: ResidualFunction,
        jacobian: JacobianFunction,
        x0: npt.ArrayLike,
        *,
        lower: npt.ArrayLike | None = None,
    ) -> LevMarResult:
        """Minimizes the sum of squared residuals starting from ``x0``.

        Parameters
        ----------
        residuals, jacobian : callable
            Residual vector and its Jacobian as functions of the parameters.

        x0 : array_like
            Initial guess; projected onto the bounds when ``lower`` is given.

        lower : array_like, optional
            Lower bounds, ``-inf`` for unbounded variables.

        Raises
        ------
        NumericalError
            If the residuals are not finite at the initial guess.
        """
        x = np.array(x0, dtype=np.float64)
        bound = np.full(x.shape, -np.inf)
        if lower is not None:
            bound = np.broadcast_to(np.asarray(lower, dtype=np.float64), x.shape)
            x = np.maximum(x, bound)

        values, cost = self._evaluate(residuals, x)
        if not np.isfinite(cost):
            logger.error("The initial guess lies outside of the model domain.")
            raise NumericalError(f"Residuals are not finite at the initial guess: {x}")

        damping = self._damping
        converged = False
        gradient_norm = np.inf
        iteration = 0
        for iteration in range(1, self._max_iterations + 1):
            jac = np.asarray(jacobian(x), dtype=np.float64)
            gradient = jac.T @ values
            free = (x > bound) | (gradient < 0)
            gradient_norm = float(np.max(np.abs(gradient[free]), initial=0.0))
            if gradient_norm < self._gtol or cost == 0.0:
                converged = True
                break

            normal = jac[:, free].T @ jac[:, free]
            scale = np.diag(normal).copy()
            scale = np.maximum(scale, 1e-12 * max(float(scale.max()), 1.0))

            for _ in range(self.MAX_REJECTIONS):
                try:
                    step = scipy.linalg.solve(
                        normal + damping * np.diag(scale),
                        -gradient[free],
                        assume_a="pos",
                    )
                except (scipy.linalg.LinAlgError, ValueError):
                    damping *= self._increase
                    continue

                candidate = x.copy()
                candidate[free] += step
                candidate = np.maximum(candidate, bound)
                candidate_values, candidate_cost = self._evaluate(residuals, candidate)
                if candidate_cost < cost:
                    break

                damping *= self._increase
            else:
                # No damping produces a decrease: x is a minimum to working precision.
                logger.debug(
                    "Levenberg-Marquardt stalled after %d iterations.", iteration
                )
                break

            decrease = cost - candidate_cost
            x, values, cost = candidate, candidate_values, candidate_cost
            damping = max(damping / self._decrease, 1e-15)

            if decrease <= self._ftol * cost or cost == 0.0:
                converged = True
                break

        logger.debug(
            "Levenberg-Marquardt finished: iterations=%d cost=%.3e converged=%s",
            iteration,
            cost,
            converged,
        )

        return LevMarResult(
            x=x,
            residuals=values,
            cost=cost,
            n_iterations=iteration,
            converged=converged,
            gradient_norm=gradient_norm,
        )
