"""Constant-rate fluid-flow model of a FIFO link.

These closed forms are the ground truth for tests and the analytic oracle
for the reward argmax. Multi-link paths are handled by folding the
single-link rate response hop by hop, an idealization that is only used
as an oracle: downstream hops of a real path see randomized gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    MBPS,
    ActionGrid,
    ConstraintViolationError,
    InvalidArgumentError,
    ProbeTrainSpec,
    TrainMeasurement,
    _check_rate,
)


@dataclass(frozen=True)
class FluidLink:
    capacity: float
    cross_rate: float = 0.0

    def __post_init__(self):
        _check_rate(self.capacity, "capacity")
        _check_rate(self.cross_rate, "cross_rate")
        if self.capacity <= 0:
            raise InvalidArgumentError("capacity must be positive")
        if self.cross_rate > self.capacity:
            raise InvalidArgumentError("cross_rate must not exceed capacity")

    @property
    def available(self) -> float:
        return self.capacity - self.cross_rate


Path = Union[FluidLink, Sequence[FluidLink]]


def _links(link_or_path: Path) -> list[FluidLink]:
    if isinstance(link_or_path, FluidLink):
        return [link_or_path]
    links = list(link_or_path)
    if not links:
        raise InvalidArgumentError("path must contain at least one link")
    return links


def available_bandwidth(link_or_path: Path) -> float:
    """End-to-end available bandwidth, set by the tight link."""
    return min(link.available for link in _links(link_or_path))


def gap_response(link: FluidLink, g_in: float, packet_size_bits: float) -> float:
    """Output gap of two probe packets sent ``g_in`` seconds apart."""
    if not g_in > 0:
        raise InvalidArgumentError("input gap must be positive")
    # cross_rate*g_in bits of cross traffic squeeze in between the pair
    return max(g_in, (g_in * link.cross_rate * MBPS + packet_size_bits) / (link.capacity * MBPS))


def rate_response(link: FluidLink, r_in: float, packet_size_bits: float = 0) -> float:
    """Output rate for input rate ``r_in``; ``packet_size_bits`` cancels out."""
    if not r_in > 0:
        raise InvalidArgumentError("input rate must be positive")
    if r_in <= link.available:
        return float(r_in)
    return r_in * link.capacity / (r_in + link.cross_rate)


def path_rate_response(links: Path, r_in: float) -> float:
    r = float(r_in)
    for link in _links(links):
        r = rate_response(link, r)
    return r


def fluid_measurement(link_or_path: Path, spec: ProbeTrainSpec, start: float = 0.0) -> TrainMeasurement:
    """Noiseless train: every output gap equals the fluid prediction."""
    r_out = path_rate_response(link_or_path, spec.rate)
    return TrainMeasurement.from_gap(spec, spec.packet_size_bits / (r_out * MBPS), start)


def fluid_strain(links: Path, r_in: float) -> float:
    return r_in / path_rate_response(links, r_in) - 1.0


def fluid_reward(link_or_path: Path, r_in: float, gamma: float) -> float:
    """Reward ``r_out * r_in**(gamma - 1)`` on the fluid response."""
    if not 0 < gamma < 1:
        raise InvalidArgumentError("gamma must lie in (0, 1)")
    return path_rate_response(link_or_path, r_in) * r_in ** (gamma - 1.0)


def gamma_interval(link: FluidLink) -> tuple[float, float]:
    """Open interval of gamma for which the reward peaks at the available bandwidth."""
    return 0.0, 1.0 - link.cross_rate / link.capacity


def fluid_argmax(link: FluidLink, grid: ActionGrid, gamma: float) -> float:
    """Grid rate with the largest fluid reward; ties go to the lower rate."""
    lo, hi = gamma_interval(link)
    if not lo < gamma < hi:
        raise ConstraintViolationError(f"gamma={gamma:g} outside the convergent range", (lo, hi))
    return _grid_argmax(link, grid, gamma)


def _grid_argmax(link_or_path: Path, grid: ActionGrid, gamma: float) -> float:
    rewards = [fluid_reward(link_or_path, r, gamma) for r in grid.rates]
    # np.argmax returns the first maximum, i.e. the lowest rate
    return float(grid.rates[int(np.argmax(rewards))])
