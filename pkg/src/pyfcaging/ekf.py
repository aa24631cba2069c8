# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import dataclasses
import functools
import logging

import numpy as np
import numpy.typing as npt
import pandas as pd
import pydantic

from pyfcaging.aging_laws import AgingLaws, eval_laws
from pyfcaging.electrochem import PhysicalConstants, voltage_field
from pyfcaging.exceptions import DataValidationError, ModelDomainError

__all__ = [
    "EkfState",
    "FilterTrace",
    "NoiseConfig",
    "NoiseSettings",
    "TransitionModel",
    "observation",
    "observation_jacobian",
    "predict",
    "propagate",
    "run_filter",
    "state_rmse",
    "trace_frame",
    "true_states",
    "update",
]

logger = logging.getLogger("pyfcaging")

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]


@dataclasses.dataclass(frozen=True)
class EkfState:
    """Filter state ``theta = (j0, jn, r_ohm)`` with its covariance at hour ``k``."""

    theta: Vector
    covariance: Matrix
    k: int = 0

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        covariance = np.asarray(self.covariance, dtype=np.float64)
        if theta.shape != (3,) or covariance.shape != (3, 3):
            raise DataValidationError("The state is a 3-vector with a 3x3 covariance.")

        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "covariance", covariance)

    def is_consistent(self, tolerance: float = 1e-12) -> bool:
        """Checks symmetry, positive semi-definiteness and positive components."""
        p = self.covariance
        scale = max(float(np.max(np.abs(p))), 1.0)
        symmetric = float(np.max(np.abs(p - p.T))) <= tolerance * scale
        eigenvalues = np.linalg.eigvalsh(0.5 * (p + p.T))

        return (
            symmetric
            and bool(eigenvalues.min() >= -tolerance * scale)
            and bool(np.all(self.theta > 0))
        )


@dataclasses.dataclass(frozen=True)
class NoiseConfig:
    q: Matrix
    r: float
    p0: Matrix
    theta0: Vector

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise ModelDomainError("The measurement variance must be positive.")

        for name in ("q", "p0", "theta0"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=np.float64)
            )

        for name in ("q", "p0"):
            matrix = getattr(self, name)
            if matrix.shape != (3, 3) or np.linalg.eigvalsh(matrix).min() < -1e-30:
                raise ModelDomainError(f"{name!s} must be a 3x3 PSD matrix.")


class NoiseSettings(pydantic.BaseModel):
    """Configuration of the filter noise, relative to the initial state.

    Explicit diagonals override the relative scales.
    """

    model_config = pydantic.ConfigDict(extra="forbid")

    r: float = pydantic.Field(1e-8, gt=0, description="measurement variance, V2")
    q_scale: float = pydantic.Field(1e-4, ge=0, description="per hour, relative")
    p0_scale: float = pydantic.Field(1e-2, ge=0, description="relative")
    q_diagonal: tuple[float, float, float] | None = None
    p0_diagonal: tuple[float, float, float] | None = None

    def build(self, theta0: npt.ArrayLike) -> NoiseConfig:
        theta = np.asarray(theta0, dtype=np.float64)
        q = self.q_diagonal or (self.q_scale * theta) ** 2
        p0 = self.p0_diagonal or (self.p0_scale * theta) ** 2

        return NoiseConfig(
            q=np.diag(np.asarray(q, dtype=np.float64)),
            r=self.r,
            p0=np.diag(np.asarray(p0, dtype=np.float64)),
            theta0=theta,
        )


@dataclasses.dataclass(frozen=True)
class TransitionModel:
    """Exact discrete form of the aging laws for one step of ``dt_norm``."""

    k0: float
    kn: float
    k_ohm: float
    dt_norm: float

    def __post_init__(self) -> None:
        if self.dt_norm <= 0:
            raise ModelDomainError("The normalized step must be positive.")

    @classmethod
    def from_laws(
        cls: type["TransitionModel"], laws: AgingLaws, step: float = 1.0
    ) -> "TransitionModel":
        return cls(
            k0=laws.k0, kn=laws.kn, k_ohm=laws.k_ohm, dt_norm=step / laws.t_max
        )

    @functools.cached_property
    def matrix(self) -> Matrix:
        return np.diag(
            [np.exp(-self.k0 * self.dt_norm), np.exp(self.kn * self.dt_norm), 1.0]
        )

    @functools.cached_property
    def offset(self) -> Vector:
        return np.array([0.0, 0.0, self.k_ohm * self.dt_norm])


def _symmetrize(p: Matrix) -> Matrix:
    return 0.5 * (p + p.T)


def predict(state: EkfState, m: TransitionModel, q: Matrix) -> EkfState:
    f = m.matrix

    return EkfState(
        theta=f @ state.theta + m.offset,
        covariance=_symmetrize(f @ state.covariance @ f.T + q),
        k=state.k + 1,
    )


def observation(
    theta: npt.ArrayLike,
    jlim: float,
    j: float,
    c: PhysicalConstants,
    *,
    beta: float,
) -> float:
    """Cell voltage seen by the filter at the operating current density.

    Raises
    ------
    ModelDomainError
        If ``j >= jlim`` or a state component leaves the model domain.
    """
    j0, jn, r_ohm = np.asarray(theta, dtype=np.float64)

    return float(voltage_field(j, j0, jn, beta, jlim, r_ohm, c))


def observation_jacobian(
    theta: npt.ArrayLike,
    jlim: float,
    j: float,
    c: PhysicalConstants,
) -> Vector:
    """Row of partial derivatives of the observation with respect to the state."""
    j0, jn, _ = np.asarray(theta, dtype=np.float64)
    if j >= jlim:
        raise ModelDomainError(
            f"Observation is singular for j={j!s} >= jlim={jlim!s}."
        )

    kinetic = c.rt_over_f / (2.0 * c.alpha)

    return np.array([kinetic / j0, -kinetic / (j + jn), -j])


def update(
    state: EkfState,
    y: float,
    jlim: float,
    j: float,
    c: PhysicalConstants,
    r: float,
    *,
    beta: float,
) -> EkfState:
    """Scalar-measurement update with the Joseph covariance form.

    A non-finite innovation rejects the step; the state passes through.
    """
    try:
        innovation = y - observation(state.theta, jlim, j, c, beta=beta)
        h = observation_jacobian(state.theta, jlim, j, c)
    except ModelDomainError:
        innovation = np.nan

    if not np.isfinite(innovation):
        logger.warning("Rejected the update at k=%d: non-finite innovation.", state.k)

        return state

    p = state.covariance
    s = float(h @ p @ h) + r
    gain = p @ h / s

    identity_minus = np.eye(3) - np.outer(gain, h)
    covariance = identity_minus @ p @ identity_minus.T + r * np.outer(gain, gain)

    return EkfState(
        theta=state.theta + gain * innovation,
        covariance=_symmetrize(covariance),
        k=state.k,
    )


@dataclasses.dataclass(frozen=True)
class FilterTrace:
    """Per-hour record of the correction pass."""

    t: npt.NDArray[np.float64]
    theta: npt.NDArray[np.float64]  # filtered states, shape (n, 3)
    variance: npt.NDArray[np.float64]  # covariance diagonals, shape (n, 3)
    predicted: npt.NDArray[np.float64]  # observation before each update
    innovation: npt.NDArray[np.float64]


def run_filter(
    measurements: npt.ArrayLike,
    jlim_series: npt.ArrayLike,
    m: TransitionModel,
    n: NoiseConfig,
    j: float,
    c: PhysicalConstants,
    *,
    beta: float,
) -> tuple[FilterTrace, EkfState]:
    """Alternates prediction and update over hourly measurements.

    Hour 0 is an update of the initial state; every later hour is a
    prediction followed by an update.
    """
    y = np.asarray(measurements, dtype=np.float64)
    jlim = np.asarray(jlim_series, dtype=np.float64)
    if y.shape != jlim.shape or y.ndim != 1 or y.size == 0:
        logger.error(
            "Measurements and jlim series are misaligned: %s, %s", y.shape, jlim.shape
        )
        raise DataValidationError(
            "Measurements and jlim series must have equal lengths."
        )

    size = y.size
    theta = np.empty((size, 3))
    variance = np.empty((size, 3))
    predicted = np.full(size, np.nan)
    innovation = np.full(size, np.nan)

    state = EkfState(theta=n.theta0, covariance=n.p0, k=0)
    for k in range(size):
        if k:
            state = predict(state, m, n.q)

        try:
            predicted[k] = observation(state.theta, jlim[k], j, c, beta=beta)
            innovation[k] = y[k] - predicted[k]
        except ModelDomainError:
            pass

        state = update(state, y[k], jlim[k], j, c, n.r, beta=beta)
        theta[k] = state.theta
        variance[k] = np.diag(state.covariance)

    logger.info("Filtered %d hourly measurements.", size)

    trace = FilterTrace(
        t=np.arange(size, dtype=np.float64),
        theta=theta,
        variance=variance,
        predicted=predicted,
        innovation=innovation,
    )

    return trace, state


def propagate(
    state: EkfState, m: TransitionModel, q: Matrix, n_steps: int
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64], EkfState]:
    """Runs prediction steps only.

    Returns
    -------
    tuple
        States and covariance diagonals for the ``n_steps`` future hours, and
        the last state.
    """
    theta = np.empty((n_steps, 3))
    variance = np.empty((n_steps, 3))
    for step in range(n_steps):
        state = predict(state, m, q)
        theta[step] = state.theta
        variance[step] = np.diag(state.covariance)

    return theta, variance, state


def true_states(laws: AgingLaws, t: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """States generated by the aging laws, shape ``(n, 3)``."""
    j0, jn, r_ohm, _ = eval_laws(laws, np.atleast_1d(np.asarray(t, dtype=np.float64)))

    return np.column_stack([j0, jn, r_ohm])


def state_rmse(trace: FilterTrace, truth: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Per-component RMSE of the filtered states."""
    reference = np.asarray(truth, dtype=np.float64)
    if reference.shape != trace.theta.shape:
        raise DataValidationError(
            f"Truth of shape {reference.shape} does not match {trace.theta.shape}."
        )

    return np.sqrt(np.mean((trace.theta - reference) ** 2, axis=0))


def trace_frame(trace: FilterTrace) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "k": np.arange(trace.t.size, dtype=np.int64),
            "t": trace.t,
            "j0": trace.theta[:, 0],
            "jn": trace.theta[:, 1],
            "r_ohm": trace.theta[:, 2],
            "predicted_V": trace.predicted,
            "innovation": trace.innovation,
        }
    )
