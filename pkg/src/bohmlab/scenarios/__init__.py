"""Scenario files and shipped presets."""

from bohmlab.scenarios.base import Scenario, Tolerances, load_scenario
from bohmlab.scenarios.registry import PresetRegistry

# Register the shipped presets
from bohmlab.scenarios import presets  # noqa: F401, E402

__all__ = ["PresetRegistry", "Scenario", "Tolerances", "load_scenario"]
