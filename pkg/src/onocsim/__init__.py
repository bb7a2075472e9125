"""Cycle-accurate simulator for hybrid electrical/optical NoCs under
gain-competition attacks, with detection and mitigation support."""

from .config import NetworkConfig, SweepSpec, parse_config
from .engine import Engine, run
from .metrics import MetricsReport

__version__ = "0.1.0"

__all__ = [
    "NetworkConfig",
    "SweepSpec",
    "parse_config",
    "Engine",
    "run",
    "MetricsReport",
    "__version__",
]
