"""Configuration-driven experiment runner, figure recipes and CLI."""

from .config import load_config, resolve_points, validate, with_defaults
from .runner import RunRecord, read_aggregate, run, timescales

__all__ = ["load_config", "resolve_points", "validate", "with_defaults",
           "RunRecord", "read_aggregate", "run", "timescales"]
