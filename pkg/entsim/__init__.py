"""Space-to-ground entanglement distribution mission simulator."""

from entsim.config import load_config, parse_config
from entsim.scenario import KpiSummary, SampleRecord, Scenario, run_scenario

__all__ = [
    "KpiSummary",
    "SampleRecord",
    "Scenario",
    "load_config",
    "parse_config",
    "run_scenario",
]

__version__ = "0.1.0"
