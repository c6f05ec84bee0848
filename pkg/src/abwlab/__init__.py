"""Simulated available bandwidth estimation with an epsilon-greedy bandit
and a Kalman-filter direct-probing baseline."""

from .core import ActionGrid, ProbeTrainSpec, TrainMeasurement, rate_from_gap, train_output_rate
from .fluid import FluidLink, path_rate_response, rate_response
from .netsim import CrossTrafficModel, PathModel, SimLink, TrafficKind, run_train

__version__ = "0.1.0"

__all__ = [
    "ActionGrid",
    "CrossTrafficModel",
    "FluidLink",
    "PathModel",
    "ProbeTrainSpec",
    "SimLink",
    "TrafficKind",
    "TrainMeasurement",
    "path_rate_response",
    "rate_from_gap",
    "rate_response",
    "run_train",
    "train_output_rate",
]
