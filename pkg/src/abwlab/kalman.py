"""Direct-probing baseline: a two-state Kalman filter on inter-packet strain.

Above the available bandwidth the strain ``r_in/r_out - 1`` is affine in the
probe rate, ``alpha*r_in + beta`` with ``alpha = 1/C`` and
``beta = (lambda - C)/C``. The filter tracks ``x = [alpha, beta]`` under a
random-walk model and only sees trains probing above its current estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .core import (
    ActionGrid,
    EpisodeError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidMeasurementError,
    NotIdentifiedError,
    NumericalDegeneracyError,
    TrainMeasurement,
)

VARIANCE_FLOOR = 1e-12
REGULARIZATION = 1e-12


@dataclass(frozen=True)
class KalmanConfig:
    process_noise: float = 1e-2  # Q = process_noise * I
    initial_beta: float = -0.5
    initial_variance: float = 10.0

    def __post_init__(self):
        if not self.process_noise >= 0:
            raise InvalidArgumentError("process_noise must be >= 0")
        if not self.initial_variance > 0:
            raise InvalidArgumentError("initial_variance must be positive")


@dataclass
class KalmanState:
    x: np.ndarray
    P: np.ndarray
    lambda_tuning: float = 1e-2

    @classmethod
    def initial(cls, top_rate: float, config: KalmanConfig = KalmanConfig()) -> "KalmanState":
        """Prior with capacity equal to the top probe rate and half of it in use."""
        x = np.array([1.0 / top_rate, config.initial_beta])
        P = config.initial_variance * np.eye(2)
        return cls(x, P, config.process_noise)

    @property
    def alpha(self) -> float:
        return float(self.x[0])

    @property
    def beta(self) -> float:
        return float(self.x[1])

    @property
    def capacity(self) -> float:
        if self.alpha <= 0:
            raise NotIdentifiedError("alpha must be positive to derive capacity")
        return 1.0 / self.alpha

    @property
    def cross_rate(self) -> float:
        return (self.beta + 1.0) * self.capacity


@dataclass(frozen=True)
class StrainObservation:
    rates: np.ndarray
    strains: np.ndarray
    noise_variances: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float).ravel()
        strains = np.asarray(self.strains, dtype=float).ravel()
        var = np.asarray(self.noise_variances, dtype=float).ravel()
        if rates.size == 0:
            raise InvalidArgumentError("observation must contain at least one row")
        if not rates.size == strains.size == var.size:
            raise InvalidArgumentError("rates, strains and variances must align")
        if not np.all(np.isfinite(strains)):
            raise InvalidMeasurementError("strains must be finite")
        if not np.all(var > 0):
            raise InvalidArgumentError("noise variances must be positive")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "strains", strains)
        object.__setattr__(self, "noise_variances", var)

    @property
    def H(self) -> np.ndarray:
        return np.column_stack([self.rates, np.ones_like(self.rates)])


def strain(measurement: TrainMeasurement) -> float:
    if not measurement.output_rate > 0:
        raise InvalidMeasurementError("output rate must be positive")
    return measurement.input_rate / measurement.output_rate - 1.0


def per_train_noise_variance(measurement: TrainMeasurement) -> float:
    """Variance of the train-mean strain, estimated from its per-gap strains."""
    n = measurement.spec.packet_count
    if n < 3:
        raise InsufficientDataError("need at least three packets (two gaps)")
    gap_strains = measurement.output_gaps / measurement.spec.input_gap - 1.0
    return max(float(np.var(gap_strains, ddof=1)) / (n - 1), VARIANCE_FLOOR)


def kalman_step(state: KalmanState, observation: StrainObservation) -> KalmanState:
    """One predict/update cycle; returns a new state.

    The update is evaluated in information form, which is algebraically the
    gain form ``G = P H^T (H P H^T + R)^-1`` but inverts a 2x2 matrix instead
    of the m x m innovation covariance (badly conditioned when R is tiny).
    An infinite variance contributes no information.
    """
    P_pred = state.P + state.lambda_tuning * np.eye(2)
    H = observation.H
    weights = 1.0 / observation.noise_variances
    info = np.linalg.inv(P_pred) + H.T @ (weights[:, None] * H)
    try:
        P_post = _inv_spd(info)
    except NumericalDegeneracyError:
        P_post = _inv_spd(info + REGULARIZATION * np.eye(2))
    innovation = observation.strains - H @ state.x
    x = state.x + P_post @ (H.T @ (weights * innovation))
    P_post = 0.5 * (P_post + P_post.T)
    return KalmanState(x, P_post, state.lambda_tuning)


def _inv_spd(m: np.ndarray) -> np.ndarray:
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError("singular information matrix") from exc
    if not np.all(np.isfinite(inv)):
        raise NumericalDegeneracyError("non-finite covariance after update")
    return inv


def gate_observations(measurements: Iterable[TrainMeasurement], current_estimate: float) -> StrainObservation:
    """Keep trains probing above ``current_estimate`` (at least the two fastest)."""
    ms = sorted(measurements, key=lambda m: m.input_rate)
    kept = [m for m in ms if m.input_rate > current_estimate]
    if len(kept) < 2:
        kept = ms[-2:]
    return StrainObservation(
        rates=[m.input_rate for m in kept],
        strains=[strain(m) for m in kept],
        noise_variances=[per_train_noise_variance(m) for m in kept],
    )


def available_bandwidth(state: KalmanState, upper: float = np.inf) -> float:
    """Bend of the fitted strain line, ``-beta/alpha``, clamped to ``[0, upper]``."""
    if state.alpha <= 0:
        raise NotIdentifiedError("alpha <= 0: strain line not identified yet")
    return float(min(max(-state.beta / state.alpha, 0.0), upper))


class KalmanStep(NamedTuple):
    step: int
    rates: tuple[float, ...]
    mean_r_out: float
    mean_strain: float
    estimate: float


def run_episode(stream: Callable[[Sequence[float]], list[TrainMeasurement]], grid: ActionGrid,
                steps: int, config: KalmanConfig = KalmanConfig()) -> list[KalmanStep]:
    """Run ``steps`` filter iterations, each consuming one multi-rate stream.

    ``stream(rates)`` must return one measurement per rate of the grid.
    """
    if steps < 1:
        raise InvalidArgumentError("steps must be >= 1")
    state = KalmanState.initial(grid.top, config)
    estimate = available_bandwidth(state, grid.top)
    trace = []
    for t in range(steps):
        try:
            ms = stream(grid.rates)
            obs = gate_observations(ms, estimate)
            state = kalman_step(state, obs)
        except Exception as exc:
            raise EpisodeError(f"kalman step {t + 1}: {exc}") from exc
        try:
            estimate = available_bandwidth(state, grid.top)
        except NotIdentifiedError:
            pass  # keep the previous estimate
        kept = set(obs.rates.tolist())
        r_out = [m.output_rate for m in ms if m.input_rate in kept]
        trace.append(KalmanStep(t + 1, tuple(obs.rates.tolist()), float(np.mean(r_out)),
                                float(np.mean(obs.strains)), estimate))
    return trace
