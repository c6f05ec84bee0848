"""Preset scenarios: burstiness, intensity, multi-hop and tight-vs-bottleneck."""

from __future__ import annotations

from ..bandit import BanditConfig
from ..netsim import CrossTrafficModel, PathModel, SimLink, TrafficKind
from .config import ScenarioConfig

# gamma must stay below 1 - lambda/C of the tight link; 0.3 breaks that
# for lambda = 75 on C = 100, so those presets use 0.2
DEFAULT_GAMMA = 0.3
HEAVY_LOAD_GAMMA = 0.2


def _link(capacity: float, kind: TrafficKind, rate: float) -> SimLink:
    return SimLink(capacity, CrossTrafficModel(kind, rate))


def _single(name: str, kind: TrafficKind, rate: float, gamma: float = DEFAULT_GAMMA) -> ScenarioConfig:
    return ScenarioConfig(name, PathModel((_link(100, kind, rate),)),
                          bandit=BanditConfig(gamma=gamma))


def scenario_catalog() -> dict[str, ScenarioConfig]:
    cat: dict[str, ScenarioConfig] = {}
    for label, kind in (("cbr", TrafficKind.CBR), ("exp", TrafficKind.EXPONENTIAL),
                        ("pareto", TrafficKind.PARETO)):
        cat[f"burstiness-{label}"] = _single(f"burstiness-{label}", kind, 50)

    # one gamma across the sweep keeps the SD comparison like for like
    for rate in (25, 50, 75):
        cat[f"intensity-{rate}"] = _single(f"intensity-{rate}", TrafficKind.EXPONENTIAL, rate,
                                           HEAVY_LOAD_GAMMA)

    for hops in range(1, 5):
        links = tuple(_link(100, TrafficKind.EXPONENTIAL, 50) for _ in range(hops))
        cat[f"multihop-{hops}"] = ScenarioConfig(f"multihop-{hops}", PathModel(links),
                                                 bandit=BanditConfig(gamma=DEFAULT_GAMMA))

    bottleneck = _link(50, TrafficKind.CBR, 12.5)
    tight = _link(100, TrafficKind.CBR, 75)
    for label, links in (("I", (bottleneck, tight)), ("II", (tight, bottleneck))):
        cat[f"tightbottleneck-{label}"] = ScenarioConfig(
            f"tightbottleneck-{label}", PathModel(links), bandit=BanditConfig(gamma=HEAVY_LOAD_GAMMA))
    return cat


def get_scenario(name: str) -> ScenarioConfig:
    cat = scenario_catalog()
    try:
        return cat[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(cat)}") from None
