from .catalog import get_scenario, scenario_catalog
from .config import ConfigError, ProbeDefaults, ScenarioConfig, load_config
from .output import emit_results
from .runner import Method, RunRecord, ScenarioResult, run_scenario, sd_metric

__all__ = [
    "ConfigError",
    "Method",
    "ProbeDefaults",
    "RunRecord",
    "ScenarioConfig",
    "ScenarioResult",
    "emit_results",
    "get_scenario",
    "load_config",
    "run_scenario",
    "scenario_catalog",
    "sd_metric",
]
