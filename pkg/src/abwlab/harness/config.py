"""Scenario configuration and its JSON document form."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Any

from ..bandit import BanditConfig
from ..core import DEFAULT_PACKET_BITS, AbwError, ActionGrid, InvalidArgumentError, ProbeTrainSpec
from ..kalman import KalmanConfig
from ..netsim import CrossTrafficModel, PathModel, SimLink

DEFAULT_SEED = 1
FULL_REPETITIONS = 1000


class ConfigError(AbwError, ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class ProbeDefaults:
    packet_size_bits: int = DEFAULT_PACKET_BITS
    packet_count: int = 100

    def __post_init__(self):
        # validates both fields
        self.train(1.0)

    def train(self, rate: float) -> ProbeTrainSpec:
        return ProbeTrainSpec(rate, self.packet_size_bits, self.packet_count)

    @property
    def bits(self) -> int:
        return self.packet_size_bits * self.packet_count


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    path: PathModel
    probe: ProbeDefaults = field(default_factory=ProbeDefaults)
    grid: ActionGrid = field(default_factory=ActionGrid)
    bandit: BanditConfig = field(default_factory=BanditConfig)
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    steps: int = 1000
    kalman_steps: int = 200
    repetitions: int = 50
    master_seed: int = DEFAULT_SEED
    timestamp_jitter_sd: float = 0.0
    warmup: float = 1.0

    def __post_init__(self):
        if self.bandit.grid != self.grid:
            object.__setattr__(self, "bandit", dataclasses.replace(self.bandit, grid=self.grid))
        if self.steps < self.grid.count:
            raise InvalidArgumentError(f"steps must be >= grid count ({self.grid.count})")
        if self.kalman_steps < 1:
            raise InvalidArgumentError("kalman_steps must be >= 1")
        if self.repetitions < 1:
            raise InvalidArgumentError("repetitions must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidArgumentError("master_seed must be a 64-bit unsigned integer")
        if not self.timestamp_jitter_sd >= 0:
            raise InvalidArgumentError("timestamp_jitter_sd must be >= 0")
        if not self.warmup >= 0:
            raise InvalidArgumentError("warmup must be >= 0")

    @property
    def true_available_bandwidth(self) -> float:
        return self.path.available_bandwidth

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "path": {"links": [_link_to_dict(link) for link in self.path.links]},
            "probe": dataclasses.asdict(self.probe),
            "grid": {"increment": self.grid.increment, "count": self.grid.count},
            "bandit": {"epsilon": self.bandit.epsilon, "gamma": self.bandit.gamma},
            "kalman": dataclasses.asdict(self.kalman),
            "steps": self.steps,
            "kalman_steps": self.kalman_steps,
            "repetitions": self.repetitions,
            "master_seed": self.master_seed,
            "timestamp_jitter_sd": self.timestamp_jitter_sd,
            "warmup": self.warmup,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ScenarioConfig":
        try:
            _check_keys(doc, _TOP_KEYS, "config", required={"name", "path"})
            links = doc["path"]
            _check_keys(links, {"links"}, "path", required={"links"})
            kwargs: dict[str, Any] = {
                "name": str(doc["name"]),
                "path": PathModel(tuple(_link_from_dict(d) for d in links["links"])),
            }
            if "probe" in doc:
                kwargs["probe"] = ProbeDefaults(**_checked(doc["probe"], ProbeDefaults, "probe"))
            if "grid" in doc:
                kwargs["grid"] = ActionGrid(**_checked(doc["grid"], ActionGrid, "grid"))
            if "bandit" in doc:
                _check_keys(doc["bandit"], {"epsilon", "gamma"}, "bandit")
                kwargs["bandit"] = BanditConfig(kwargs.get("grid", ActionGrid()), **doc["bandit"])
            if "kalman" in doc:
                kwargs["kalman"] = KalmanConfig(**_checked(doc["kalman"], KalmanConfig, "kalman"))
            for key in ("steps", "kalman_steps", "repetitions", "master_seed"):
                if key in doc:
                    kwargs[key] = _as_int(doc[key], key)
            for key in ("timestamp_jitter_sd", "warmup"):
                if key in doc:
                    kwargs[key] = float(doc[key])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid scenario config: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)


_TOP_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)}


def load_config(path: str | FilePath) -> ScenarioConfig:
    try:
        text = FilePath(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ScenarioConfig.from_json(text)


def _link_to_dict(link: SimLink) -> dict[str, Any]:
    ct = link.cross_traffic
    return {
        "capacity": link.capacity,
        "cross_traffic": {
            "kind": ct.kind.value,
            "mean_rate": ct.mean_rate,
            "packet_size_bits": ct.packet_size_bits,
            "pareto_shape": ct.pareto_shape,
        },
        "propagation_delay": link.propagation_delay,
    }


def _link_from_dict(doc: dict[str, Any]) -> SimLink:
    _check_keys(doc, {"capacity", "cross_traffic", "propagation_delay"}, "link", required={"capacity"})
    ct = doc.get("cross_traffic", {})
    _check_keys(ct, {"kind", "mean_rate", "packet_size_bits", "pareto_shape"}, "cross_traffic")
    return SimLink(
        capacity=float(doc["capacity"]),
        cross_traffic=CrossTrafficModel(**ct),
        propagation_delay=float(doc.get("propagation_delay", 0.0)),
    )


def _check_keys(doc, allowed: set[str], where: str, required: set[str] = frozenset()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {', '.join(sorted(missing))}")


def _checked(doc, cls, where: str) -> dict[str, Any]:
    _check_keys(doc, {f.name for f in dataclasses.fields(cls)}, where)
    return doc


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"{key} must be an integer")
    return int(value)
