"""Configuration-driven scenario runner."""

from .cli import main, run, validate
from .config import SCENARIOS, SCHEMA, ScenarioConfig, load_config, parse_config, validate_document
from .report import RunReport, explain

__all__ = [
    "SCENARIOS",
    "SCHEMA",
    "RunReport",
    "ScenarioConfig",
    "explain",
    "load_config",
    "main",
    "parse_config",
    "run",
    "validate",
    "validate_document",
]
