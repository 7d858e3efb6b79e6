"""Experiment harness: configs, reproducible RNG substreams, BER sweeps,
output files, and the command line interface."""

from .rng import substream
from .config import (ConfigError, EQUALIZERS, apply_profile, config_hash,
                     load_config, merge_config, preset, resolve_config,
                     snn_config_from)
from .ber import BerPoint, run_point, sweep

__all__ = [
    "substream", "ConfigError", "EQUALIZERS", "apply_profile", "config_hash",
    "load_config", "merge_config", "preset", "resolve_config",
    "snn_config_from", "BerPoint", "run_point", "sweep",
]
