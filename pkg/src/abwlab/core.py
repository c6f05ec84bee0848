"""Shared value types, unit conventions and RNG plumbing.

Units used throughout the package:

* rates in Mbps (megabits per second),
* times in seconds (absolute simulation time at the measurement point),
* packet sizes in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MBPS = 1e6
DEFAULT_PACKET_BITS = 1514 * 8  # full Ethernet frame incl. header


class AbwError(Exception):
    """Base class for all errors raised by abwlab."""


class InvalidArgumentError(AbwError, ValueError):
    pass


class InvalidMeasurementError(AbwError, ValueError):
    pass


class InsufficientDataError(AbwError, ValueError):
    pass


class ConstraintViolationError(AbwError, ValueError):
    """A parameter lies outside its admissible open interval."""

    def __init__(self, message: str, interval: tuple[float, float]):
        super().__init__(f"{message}; valid interval is ({interval[0]:g}, {interval[1]:g})")
        self.interval = interval


class NotReadyError(AbwError, RuntimeError):
    pass


class NotIdentifiedError(AbwError, RuntimeError):
    pass


class NumericalDegeneracyError(AbwError, ArithmeticError):
    pass


class EpisodeError(AbwError, RuntimeError):
    """An estimator episode aborted; the cause is chained."""


def _check_rate(value: float, name: str = "rate") -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise InvalidArgumentError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def rate_from_gap(packet_size_bits: float, gap_seconds: float) -> float:
    """Rate in Mbps of packets of ``packet_size_bits`` spaced ``gap_seconds`` apart."""
    if not gap_seconds > 0:
        raise InvalidArgumentError(f"gap must be positive, got {gap_seconds!r}")
    return packet_size_bits / gap_seconds / MBPS


def gap_from_rate(packet_size_bits: float, rate_mbps: float) -> float:
    if not rate_mbps > 0:
        raise InvalidArgumentError(f"rate must be positive, got {rate_mbps!r}")
    return packet_size_bits / (rate_mbps * MBPS)


def train_output_rate(departure_times, packet_size_bits: float) -> float:
    """Output rate of a train: (n-1) * l over the first-to-last dispersion."""
    t = np.asarray(departure_times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidMeasurementError("a train needs at least two timestamps")
    if np.any(np.diff(t) <= 0):
        raise InvalidMeasurementError("timestamps must be strictly increasing")
    return (t.size - 1) * packet_size_bits / (t[-1] - t[0]) / MBPS


@dataclass(frozen=True)
class ProbeTrainSpec:
    rate: float
    packet_size_bits: int = DEFAULT_PACKET_BITS
    packet_count: int = 100

    def __post_init__(self):
        _check_rate(self.rate, "probe rate")
        if self.rate <= 0:
            raise InvalidArgumentError("probe rate must be positive")
        if int(self.packet_size_bits) != self.packet_size_bits or self.packet_size_bits <= 0:
            raise InvalidArgumentError("packet_size_bits must be a positive integer")
        if int(self.packet_count) != self.packet_count or self.packet_count < 2:
            raise InvalidArgumentError("packet_count must be an integer >= 2")

    @property
    def input_gap(self) -> float:
        return gap_from_rate(self.packet_size_bits, self.rate)

    @property
    def bits(self) -> int:
        return int(self.packet_size_bits) * int(self.packet_count)


@dataclass(frozen=True)
class TrainMeasurement:
    """Receiver-side record of one probe train."""

    spec: ProbeTrainSpec
    departure_times: np.ndarray = field(repr=False)
    output_rate: float = field(init=False)
    output_gaps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.array(self.departure_times, dtype=float)
        if t.size != self.spec.packet_count:
            raise InvalidMeasurementError(
                f"expected {self.spec.packet_count} timestamps, got {t.size}")
        rate = train_output_rate(t, self.spec.packet_size_bits)
        t.flags.writeable = False
        gaps = np.diff(t)
        gaps.flags.writeable = False
        object.__setattr__(self, "departure_times", t)
        object.__setattr__(self, "output_gaps", gaps)
        object.__setattr__(self, "output_rate", rate)

    @property
    def input_rate(self) -> float:
        return self.spec.rate

    @classmethod
    def from_gap(cls, spec: ProbeTrainSpec, gap: float, start: float = 0.0) -> "TrainMeasurement":
        """Train whose output gaps all equal ``gap`` (the deterministic fluid case)."""
        return cls(spec, start + gap * np.arange(spec.packet_count))


@dataclass(frozen=True)
class ActionGrid:
    """Probe rates ``increment, 2*increment, ..., count*increment``."""

    increment: float = 5.0
    count: int = 20

    def __post_init__(self):
        if not (math.isfinite(self.increment) and self.increment > 0):
            raise InvalidArgumentError("grid increment must be positive")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidArgumentError("grid count must be an integer >= 2")

    @property
    def rates(self) -> np.ndarray:
        return self.increment * np.arange(1, self.count + 1)

    @property
    def top(self) -> float:
        return self.increment * self.count

    def rate(self, index: int) -> float:
        """Rate of the 0-based action ``index``."""
        return self.increment * (index + 1)


# Stream identifiers for seed fan-out; appended to the spawn key.
STREAM_IDS = {"bandit": 0, "kalman": 1}
_LINK, _EXPLORE, _JITTER = 0, 1, 2


def make_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream named by ``key``.

    Every distinct key yields an independent Philox stream; adding new keys
    never perturbs existing ones.
    """
    if not 0 <= int(master_seed) < 2**64:
        raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def link_rng(master_seed: int, episode: int, method: str, link: int) -> np.random.Generator:
    return make_rng(master_seed, episode, STREAM_IDS[method], _LINK, link)


def explore_rng(master_seed: int, episode: int) -> np.random.Generator:
    return make_rng(master_seed, episode, STREAM_IDS["bandit"], _EXPLORE)


def jitter_rng(master_seed: int, episode: int, method: str) -> np.random.Generator:
    return make_rng(master_seed, episode, STREAM_IDS[method], _JITTER)
