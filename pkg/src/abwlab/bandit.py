"""Single-state epsilon-greedy bandit over the probe-rate grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .core import (
    ActionGrid,
    EpisodeError,
    InvalidArgumentError,
    NotReadyError,
    TrainMeasurement,
)

MeasurementSource = Callable[[float], TrainMeasurement]


@dataclass(frozen=True)
class BanditConfig:
    grid: ActionGrid = field(default_factory=ActionGrid)
    epsilon: float = 0.1
    gamma: float = 0.3

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise InvalidArgumentError("epsilon must lie in [0, 1]")
        if not 0 < self.gamma < 1:
            raise InvalidArgumentError("gamma must lie in (0, 1)")


class BanditState:
    """Sample-average action values for every arm of the grid.

    Values are kept as running sums and counts; ``q`` is derived lazily.
    """

    def __init__(self, count: int):
        self.reward_sum = np.zeros(count)
        self.count = np.zeros(count, dtype=np.int64)
        self.step = 0

    @property
    def n_actions(self) -> int:
        return self.count.size

    @property
    def ready(self) -> bool:
        return bool(np.all(self.count > 0))

    @property
    def q(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.count > 0, self.reward_sum / np.maximum(self.count, 1), np.nan)

    def greedy(self) -> int:
        """Index of the best arm among those sampled; ties go to the lowest rate."""
        q = np.where(self.count > 0, self.q, -np.inf)
        return int(np.argmax(q))

    def copy(self) -> "BanditState":
        other = BanditState(self.n_actions)
        other.reward_sum[:] = self.reward_sum
        other.count[:] = self.count
        other.step = self.step
        return other


def reward(measurement: TrainMeasurement, gamma: float) -> float:
    """Reward of one train, ``r_out * r_in**(gamma - 1)`` in Mbps units."""
    return reward_from_rates(measurement.input_rate, measurement.output_rate, gamma)


def reward_from_rates(r_in: float, r_out: float, gamma: float) -> float:
    if not r_in > 0:
        raise InvalidArgumentError("input rate must be positive")
    return r_out * r_in ** (gamma - 1.0)


def select_action(state: BanditState, config: BanditConfig, rng: np.random.Generator) -> int:
    """Pick the greedy arm with probability 1-epsilon, else a uniform other arm."""
    best = state.greedy()
    if config.epsilon > 0 and rng.random() < config.epsilon:
        other = int(rng.integers(state.n_actions - 1))
        return other + (other >= best)
    return best


def update(state: BanditState, action: int, reward_value: float) -> BanditState:
    if not 0 <= action < state.n_actions:
        raise InvalidArgumentError(f"action {action} out of range")
    state.reward_sum[action] += reward_value
    state.count[action] += 1
    state.step += 1
    return state


def current_estimate(state: BanditState, grid: ActionGrid) -> float:
    """Rate of the arm with the highest mean reward."""
    if not state.ready:
        raise NotReadyError("every action must be sampled once before estimating")
    return grid.rate(state.greedy())


class BanditStep(NamedTuple):
    step: int
    rate: float
    r_out: float
    reward: float
    estimate: float


def run_episode(source: MeasurementSource, config: BanditConfig, steps: int,
                rng: np.random.Generator) -> list[BanditStep]:
    """Drive the bandit for ``steps`` probe trains.

    The first ``k`` steps sample every rate once in ascending order; the rest
    follow the epsilon-greedy policy. During that first pass the estimate is
    the best arm sampled so far.
    """
    grid = config.grid
    if steps < grid.count:
        raise InvalidArgumentError(f"need at least {grid.count} steps to visit every action")
    state = BanditState(grid.count)
    trace = []
    for t in range(steps):
        action = t if t < grid.count else select_action(state, config, rng)
        rate = grid.rate(action)
        try:
            m = source(rate)
        except Exception as exc:
            raise EpisodeError(f"bandit step {t + 1} at {rate:g} Mbps: {exc}") from exc
        rho = reward(m, config.gamma)
        update(state, action, rho)
        trace.append(BanditStep(t + 1, rate, m.output_rate, rho, grid.rate(state.greedy())))
    return trace
