"""Packet-level simulation of probe trains crossing a chain of FIFO links.

Every link is a lossless work-conserving FIFO multiplexer with fixed
capacity. Probe trains are path-persistent; each link adds its own fresh,
single-hop-persistent cross-traffic. A train is pushed through the path hop
by hop: probe traffic cannot influence upstream links, so processing hop i
completely before hop i+1 is exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    DEFAULT_PACKET_BITS,
    MBPS,
    InvalidArgumentError,
    ProbeTrainSpec,
    TrainMeasurement,
    _check_rate,
)
from .fluid import FluidLink


class TrafficKind(str, enum.Enum):
    CBR = "CBR"
    EXPONENTIAL = "EXPONENTIAL"
    PARETO = "PARETO"


@dataclass(frozen=True)
class CrossTrafficModel:
    kind: TrafficKind = TrafficKind.EXPONENTIAL
    mean_rate: float = 0.0
    packet_size_bits: int = DEFAULT_PACKET_BITS
    pareto_shape: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "kind", TrafficKind(self.kind))
        _check_rate(self.mean_rate, "cross-traffic rate")
        if self.packet_size_bits <= 0:
            raise InvalidArgumentError("cross-traffic packet size must be positive")
        if self.kind is TrafficKind.PARETO and not self.pareto_shape > 1:
            raise InvalidArgumentError("Pareto shape must exceed 1 for a finite mean")

    @property
    def mean_interarrival(self) -> float:
        """Mean spacing between cross-traffic packets; infinite when idle."""
        if self.mean_rate == 0:
            return math.inf
        return self.packet_size_bits / (self.mean_rate * MBPS)

    @property
    def pareto_scale(self) -> float:
        a = self.pareto_shape
        return self.mean_interarrival * (a - 1) / a


@dataclass(frozen=True)
class SimLink:
    capacity: float
    cross_traffic: CrossTrafficModel = field(default_factory=CrossTrafficModel)
    propagation_delay: float = 0.0

    def __post_init__(self):
        _check_rate(self.capacity, "capacity")
        if self.capacity <= 0:
            raise InvalidArgumentError("capacity must be positive")
        if self.cross_traffic.mean_rate > self.capacity:
            raise InvalidArgumentError("cross-traffic rate exceeds link capacity")
        if not self.propagation_delay >= 0:
            raise InvalidArgumentError("propagation delay must be >= 0")

    @property
    def available(self) -> float:
        return self.capacity - self.cross_traffic.mean_rate

    def fluid(self) -> FluidLink:
        return FluidLink(self.capacity, self.cross_traffic.mean_rate)


@dataclass(frozen=True)
class PathModel:
    links: tuple[SimLink, ...]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        if not self.links:
            raise InvalidArgumentError("a path needs at least one link")

    @property
    def available_bandwidth(self) -> float:
        return min(link.available for link in self.links)

    @property
    def tight_link(self) -> int:
        return min(range(len(self.links)), key=lambda i: self.links[i].available)

    @property
    def bottleneck_link(self) -> int:
        return min(range(len(self.links)), key=lambda i: self.links[i].capacity)

    def fluid(self) -> list[FluidLink]:
        return [link.fluid() for link in self.links]


def generate_cross_arrivals(model: CrossTrafficModel, t_start: float, t_end: float,
                            rng: np.random.Generator) -> np.ndarray:
    """Sorted cross-traffic arrival times in ``[t_start, t_end)``."""
    if t_end < t_start:
        raise InvalidArgumentError("t_end must not precede t_start")
    span = t_end - t_start
    if span == 0 or model.mean_rate == 0:
        return np.empty(0)
    mean = model.mean_interarrival

    if model.kind is TrafficKind.CBR:
        # random phase keeps the deterministic stream stationary
        first = t_start + rng.random() * mean
        count = max(0, math.ceil((t_end - first) / mean))
        times = first + mean * np.arange(count)
        return times[times < t_end]

    def draw(size: int) -> np.ndarray:
        if model.kind is TrafficKind.EXPONENTIAL:
            return rng.exponential(mean, size)
        # numpy's pareto is the Lomax form; shift by one for the classical Pareto
        return model.pareto_scale * (1.0 + rng.pareto(model.pareto_shape, size))

    expected = span / mean
    batch = int(expected + 4 * math.sqrt(expected) + 16)
    chunks = []
    last = t_start
    while True:
        times = last + np.cumsum(draw(batch))
        chunks.append(times)
        last = times[-1]
        if last >= t_end:
            break
    times = np.concatenate(chunks)
    return times[: np.searchsorted(times, t_end, side="left")]


def fifo_departures(arrivals, packet_sizes_bits, capacity: float) -> np.ndarray:
    """Departure times of a FIFO server starting empty.

    Solves ``d[i] = max(a[i], d[i-1]) + s[i]`` in closed form:
    ``d[i] = S[i] + max_{j<=i}(a[j] - S[j-1])`` with ``S`` the cumulative
    service time.
    """
    a = np.asarray(arrivals, dtype=float)
    if a.size and np.any(np.diff(a) < 0):
        raise InvalidArgumentError("arrivals must be sorted")
    service = np.broadcast_to(np.asarray(packet_sizes_bits, dtype=float), a.shape) / (capacity * MBPS)
    done = np.cumsum(service)
    return done + np.maximum.accumulate(a - (done - service))


def _traverse_link(link: SimLink, probe_arrivals: np.ndarray, probe_bits: int,
                   rng: np.random.Generator, warmup: float) -> np.ndarray:
    ct = link.cross_traffic
    # cross packets arriving after the last probe cannot delay it
    cross = generate_cross_arrivals(ct, probe_arrivals[0] - warmup, probe_arrivals[-1], rng)
    if cross.size == 0:
        departures = fifo_departures(probe_arrivals, probe_bits, link.capacity)
    else:
        # cross packets go first on timestamp ties
        slots = np.searchsorted(cross, probe_arrivals, side="right") + np.arange(probe_arrivals.size)
        merged = np.empty(cross.size + probe_arrivals.size)
        sizes = np.full(merged.size, float(ct.packet_size_bits))
        is_probe = np.zeros(merged.size, dtype=bool)
        is_probe[slots] = True
        merged[is_probe] = probe_arrivals
        merged[~is_probe] = cross
        sizes[is_probe] = probe_bits
        departures = fifo_departures(merged, sizes, link.capacity)[is_probe]
    return departures + link.propagation_delay


def _apply_jitter(times: np.ndarray, sd: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.normal(0.0, sd, times.size)
    jittered = times + noise
    if np.all(np.diff(jittered) > 0):
        return jittered
    # clamp each offset below half the tightest true gap so order survives
    bound = 0.5 * np.min(np.diff(times)) * (1 - 1e-9)
    return times + np.clip(noise, -bound, bound)


def run_train(path: PathModel, spec: ProbeTrainSpec, rng, warmup: float = 1.0,
              jitter_sd: float = 0.0, jitter_rng: np.random.Generator | None = None) -> TrainMeasurement:
    """Send one probe train across ``path`` and measure it at the receiver.

    ``rng`` is either one generator shared by all links or a sequence with
    one generator per link. Cross-traffic at each link starts ``warmup``
    seconds before the first probe reaches it, with an empty queue.
    """
    if warmup < 0:
        raise InvalidArgumentError("warmup must be >= 0")
    rngs: Sequence[np.random.Generator]
    if isinstance(rng, np.random.Generator):
        rngs = [rng] * len(path.links)
    else:
        rngs = list(rng)
        if len(rngs) != len(path.links):
            raise InvalidArgumentError("need one generator per link")

    times = warmup + spec.input_gap * np.arange(spec.packet_count)
    for link, link_rng in zip(path.links, rngs):
        times = _traverse_link(link, times, spec.packet_size_bits, link_rng, warmup)
    if jitter_sd > 0:
        if jitter_rng is None:
            raise InvalidArgumentError("timestamp jitter needs its own generator")
        times = _apply_jitter(times, jitter_sd, jitter_rng)
    return TrainMeasurement(spec, times)
