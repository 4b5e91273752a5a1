"""Command line interface: configuration, orchestration, persistence."""

from .config import RunManifest, SimConfig, load_config_file
from . import checks

__all__ = ["RunManifest", "SimConfig", "load_config_file", "checks"]
