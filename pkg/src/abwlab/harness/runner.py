"""Repeated estimator episodes and their per-step aggregates."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .. import bandit, kalman
from ..core import EpisodeError, InsufficientDataError, explore_rng, jitter_rng, link_rng
from ..netsim import run_train
from .config import ScenarioConfig


class Method(str, enum.Enum):
    BANDIT = "BANDIT"
    KALMAN = "KALMAN"

    @property
    def stream(self) -> str:
        return self.value.lower()


@dataclass(frozen=True)
class RunRecord:
    step: int
    method: Method
    chosen_rates: tuple[float, ...]
    r_out: float
    reward_or_strain: float
    estimate: float
    probe_bits_sent: int


def sd_metric(estimates: Sequence[float], true_value: float) -> float:
    """Root-mean-square deviation around the true value, with K-1 normalization."""
    est = np.asarray(estimates, dtype=float)
    if est.size < 2:
        raise InsufficientDataError("SD needs at least two estimates")
    return float(math.sqrt(np.sum((est - true_value) ** 2) / (est.size - 1)))


class _Network:
    """Measurement source for one (episode, method): one RNG stream per link."""

    def __init__(self, config: ScenarioConfig, episode: int, method: Method):
        seed = config.master_seed
        self.config = config
        self.rngs = [link_rng(seed, episode, method.stream, j) for j in range(len(config.path.links))]
        self.jitter = jitter_rng(seed, episode, method.stream)

    def __call__(self, rate: float):
        c = self.config
        return run_train(c.path, c.probe.train(rate), self.rngs, warmup=c.warmup,
                         jitter_sd=c.timestamp_jitter_sd, jitter_rng=self.jitter)

    def stream(self, rates: Iterable[float]):
        return [self(r) for r in rates]


def run_bandit_episode(config: ScenarioConfig, episode: int) -> list[RunRecord]:
    source = _Network(config, episode, Method.BANDIT)
    trace = bandit.run_episode(source, config.bandit, config.steps, explore_rng(config.master_seed, episode))
    bits = config.probe.bits
    return [RunRecord(s.step, Method.BANDIT, (s.rate,), s.r_out, s.reward, s.estimate, bits)
            for s in trace]


def run_kalman_episode(config: ScenarioConfig, episode: int) -> list[RunRecord]:
    source = _Network(config, episode, Method.KALMAN)
    trace = kalman.run_episode(source.stream, config.grid, config.kalman_steps, config.kalman)
    bits = config.probe.bits * config.grid.count
    return [RunRecord(s.step, Method.KALMAN, s.rates, s.mean_r_out, s.mean_strain, s.estimate, bits)
            for s in trace]


_EPISODE_RUNNERS = {Method.BANDIT: run_bandit_episode, Method.KALMAN: run_kalman_episode}


def _run_one(job: tuple[ScenarioConfig, Method, int]):
    config, method, episode = job
    try:
        return method, episode, _EPISODE_RUNNERS[method](config, episode)
    except Exception as exc:
        raise EpisodeError(f"scenario {config.name!r}, {method.value} episode {episode}: {exc}") from exc


@dataclass
class MethodAggregate:
    method: Method
    steps: np.ndarray
    estimates: np.ndarray  # (repetitions, steps)
    rewards: np.ndarray
    probe_bits_cum: np.ndarray
    true_value: float

    @property
    def mean_estimate(self) -> np.ndarray:
        return self.estimates.mean(axis=0)

    @property
    def sd(self) -> np.ndarray:
        if self.estimates.shape[0] < 2:
            return np.full(self.steps.size, np.nan)
        dev = self.estimates - self.true_value
        return np.sqrt(np.sum(dev**2, axis=0) / (self.estimates.shape[0] - 1))

    @property
    def mean_reward(self) -> np.ndarray:
        return self.rewards.mean(axis=0)

    def at_step(self, step: int) -> tuple[float, float]:
        """(mean estimate, SD) after ``step`` steps (1-based)."""
        i = step - 1
        return float(self.mean_estimate[i]), float(self.sd[i])

    @property
    def final_estimates(self) -> np.ndarray:
        return self.estimates[:, -1]


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    methods: dict[Method, MethodAggregate]

    @property
    def true_available_bandwidth(self) -> float:
        return self.config.true_available_bandwidth


def aggregate(config: ScenarioConfig, method: Method,
              episodes: dict[int, list[RunRecord]]) -> MethodAggregate:
    """Stack episode traces by episode index; completion order is irrelevant."""
    ordered = [episodes[i] for i in sorted(episodes)]
    first = ordered[0]
    return MethodAggregate(
        method=method,
        steps=np.array([r.step for r in first]),
        estimates=np.array([[r.estimate for r in ep] for ep in ordered]),
        rewards=np.array([[r.reward_or_strain for r in ep] for ep in ordered]),
        probe_bits_cum=np.cumsum([r.probe_bits_sent for r in first]),
        true_value=config.true_available_bandwidth,
    )


def run_scenario(config: ScenarioConfig, methods: Sequence[Method] = (Method.BANDIT, Method.KALMAN),
                 workers: int = 1) -> ScenarioResult:
    """Run ``config.repetitions`` independent episodes per method and aggregate per step."""
    jobs = [(config, Method(m), ep) for m in methods for ep in range(config.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    by_method: dict[Method, dict[int, list[RunRecord]]] = {}
    for method, episode, records in results:
        by_method.setdefault(method, {})[episode] = records
    return ScenarioResult(config, {m: aggregate(config, m, eps) for m, eps in sorted(
        by_method.items(), key=lambda kv: kv[0].value)})
