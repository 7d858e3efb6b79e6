"""Experiment configuration: presets, YAML loading, validation, hashing.

Configs are plain nested dicts (YAML-shaped). Presets carry the reference
receiver geometry and neuron constants for the three named channels; a user
file or CLI flags override individual keys. resolve_config() validates,
fills derived values (numeric y_max, input width), and returns a canonical
dict whose SHA-256 identifies the run in every output file.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math

import numpy as np
import yaml

from ..encoding import TernaryEncoderConfig, frame_width
from ..link import get_channel, make_constellation
from ..neuron import NeuronParams, SurrogateSpec
from ..equalizers.snn_dfe import DfeArchitecture, SnnDfeConfig

EQUALIZERS = ("snn_dfe", "ann_dfe_encoded", "ann_dfe_raw",
              "zf", "lmmse", "dfe", "map")


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending key path."""


_NEURON_DEFAULTS = {
    "hidden": {"tau_m": 10.0, "tau_s": 5.0, "v_th": 1.0, "v_rest": 0.0,
               "dt": 1.0, "integration": "shared-decay"},
    "readout": {"tau_m": 100.0, "tau_s": 1.0, "v_th": 1000.0, "v_rest": 0.0,
                "dt": 1.0, "integration": "shared-decay"},
}

# Receiver geometry per channel: window n, feedback m, hidden size,
# constellation, training operating point, sweep grid.
_PRESETS = {
    "proakis-a": {
        "constellation": "16qam",
        "architecture": {"n_ff": 20, "m_fb": 11, "n_hidden": 640,
                         "n_steps": 10},
        "training": {"ebn0_db": 12.0},
        "sweep": {"ebn0_db": [6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0,
                              20.0, 22.0]},
    },
    "proakis-b": {
        "constellation": "qpsk",
        "architecture": {"n_ff": 28, "m_fb": 3, "n_hidden": 320,
                         "n_steps": 10},
        "training": {"ebn0_db": 11.0},
        "sweep": {"ebn0_db": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0,
                              16.0]},
    },
    "proakis-c": {
        "constellation": "qpsk",
        "architecture": {"n_ff": 20, "m_fb": 11, "n_hidden": 320,
                         "n_steps": 10},
        "training": {"ebn0_db": 15.0},
        "sweep": {"ebn0_db": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0,
                              16.0]},
    },
}

_BASE = {
    "channel": None,
    "constellation": None,
    "equalizer": "snn_dfe",
    "seed": 1234,
    "architecture": {"n_ff": None, "m_fb": None, "n_hidden": None,
                     "n_steps": 10},
    "encoder": {"m_bits": 8, "y_max": "auto", "drive_mode": "constant"},
    "neurons": copy.deepcopy(_NEURON_DEFAULTS),
    "surrogate": {"kind": "fast_sigmoid", "slope": 100.0},
    "reset": "zero",
    "self_recurrence": False,
    "training": {"epochs": 10000, "burst_len": 200, "lr0": 1e-3,
                 "decay_per_epoch": 8e-4, "ebn0_db": None,
                 "val_every": 500, "val_symbols": 5000},
    "sweep": {"ebn0_db": None, "min_bit_errors": 500, "max_bits": 10_000_000,
              "burst_symbols": 2000, "workers": 1},
}


def preset(channel: str) -> dict:
    if channel not in _PRESETS:
        raise ConfigError(f"channel: no preset named {channel!r} "
                          f"(choose from {sorted(_PRESETS)})")
    cfg = copy.deepcopy(_BASE)
    cfg["channel"] = channel
    merge_config(cfg, copy.deepcopy(_PRESETS[channel]))
    return cfg


def merge_config(base: dict, override: dict) -> dict:
    """Recursive in-place merge of override into base."""
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            merge_config(base[key], val)
        else:
            base[key] = val
    return base


def load_config(path) -> dict:
    """Parse a YAML config file; syntax errors keep their line marks."""
    with open(str(path), "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _req(cfg, path, types, check=None, what=""):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"{path}: missing")
        node = node[part]
    if types is not None and not isinstance(node, types):
        raise ConfigError(f"{path}: expected {what or types}, got {node!r}")
    if check is not None and not check(node):
        raise ConfigError(f"{path}: invalid value {node!r}")
    return node


def validate_config(cfg: dict):
    num = (int, float)
    _req(cfg, "channel", (str, list), what="channel name or tap list")
    try:
        get_channel(cfg["channel"])
    except ValueError as e:
        raise ConfigError(f"channel: {e}") from e
    _req(cfg, "constellation", str,
         lambda v: v in ("qpsk", "16qam"), "qpsk or 16qam")
    _req(cfg, "equalizer", str, lambda v: v in EQUALIZERS,
         f"one of {EQUALIZERS}")
    _req(cfg, "seed", int, lambda v: v >= 0, "non-negative int")
    _req(cfg, "architecture.n_ff", int, lambda v: v >= 1)
    _req(cfg, "architecture.m_fb", int, lambda v: v >= 0)
    _req(cfg, "architecture.n_hidden", int, lambda v: v >= 1)
    _req(cfg, "architecture.n_steps", int, lambda v: v >= 1)
    _req(cfg, "encoder.m_bits", int, lambda v: 1 <= v <= 16)
    ymax = _req(cfg, "encoder.y_max", (str, *num))
    if isinstance(ymax, str) and ymax != "auto":
        raise ConfigError("encoder.y_max: must be a number or 'auto'")
    if isinstance(ymax, num) and not ymax > 0:
        raise ConfigError("encoder.y_max: must be > 0")
    _req(cfg, "encoder.drive_mode", str,
         lambda v: v in ("constant", "impulse"))
    for group in ("hidden", "readout"):
        for key in ("tau_m", "tau_s", "dt"):
            _req(cfg, f"neurons.{group}.{key}", num, lambda v: v > 0)
        for key in ("v_th", "v_rest"):
            _req(cfg, f"neurons.{group}.{key}", num,
                 lambda v: math.isfinite(v))
        _req(cfg, f"neurons.{group}.integration", str,
             lambda v: v in ("shared-decay", "unit-gain"))
    _req(cfg, "surrogate.kind", str, lambda v: v == "fast_sigmoid")
    _req(cfg, "surrogate.slope", num, lambda v: v > 0)
    _req(cfg, "reset", str, lambda v: v in ("zero", "subtract"))
    _req(cfg, "self_recurrence", bool)
    _req(cfg, "training.epochs", int, lambda v: v >= 1)
    _req(cfg, "training.burst_len", int, lambda v: v >= 1)
    _req(cfg, "training.lr0", num, lambda v: v > 0)
    _req(cfg, "training.decay_per_epoch", num, lambda v: 0 <= v < 1)
    _req(cfg, "training.ebn0_db", num, lambda v: math.isfinite(v))
    _req(cfg, "training.val_every", int, lambda v: v >= 0)
    _req(cfg, "training.val_symbols", int, lambda v: v >= 1)
    grid = _req(cfg, "sweep.ebn0_db", list, lambda v: len(v) >= 1)
    if not all(isinstance(p, num) and math.isfinite(p) for p in grid):
        raise ConfigError("sweep.ebn0_db: entries must be finite numbers")
    _req(cfg, "sweep.min_bit_errors", int, lambda v: v >= 1)
    _req(cfg, "sweep.max_bits", int, lambda v: v >= 1)
    _req(cfg, "sweep.burst_symbols", int, lambda v: v >= 1)
    _req(cfg, "sweep.workers", int, lambda v: v >= 1)


def resolve_config(cfg: dict) -> dict:
    """Validate and fill derived values; returns a canonical deep copy."""
    cfg = copy.deepcopy(cfg)
    validate_config(cfg)
    ch = get_channel(cfg["channel"])
    if isinstance(cfg["channel"], list):
        cfg["channel"] = [float(t) for t in cfg["channel"]]
    if cfg["encoder"]["y_max"] == "auto":
        cfg["encoder"]["y_max"] = float(2.0 * np.sqrt(ch.energy))
    const = make_constellation(cfg["constellation"])
    arch = cfg["architecture"]
    cfg["derived"] = {
        "alphabet_size": const.size,
        "input_size": frame_width(arch["n_ff"], arch["m_fb"],
                                  cfg["encoder"]["m_bits"], const.size),
        "decision_delay": arch["n_ff"] - 1,
        "channel_taps": [float(t) for t in ch.taps],
    }
    return cfg


def apply_profile(cfg: dict, profile: str) -> dict:
    """smoke: 200 epochs and a 3-point sweep; full: the complete schedule."""
    if profile not in ("smoke", "full"):
        raise ConfigError(f"profile: unknown profile {profile!r}")
    if profile == "smoke":
        cfg["training"]["epochs"] = 200
        grid = cfg["sweep"]["ebn0_db"]
        if len(grid) > 3:
            cfg["sweep"]["ebn0_db"] = [grid[0], grid[len(grid) // 2],
                                       grid[-1]]
    else:
        cfg["training"]["epochs"] = 10000
    return cfg


def config_hash(cfg: dict) -> str:
    """SHA-256 over the canonical JSON dump (derived keys excluded)."""
    plain = {k: v for k, v in cfg.items() if k != "derived"}
    blob = json.dumps(plain, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def snn_config_from(cfg: dict) -> SnnDfeConfig:
    """Typed receiver config from a resolved dict."""
    const = make_constellation(cfg["constellation"])
    arch = DfeArchitecture(
        n_ff=cfg["architecture"]["n_ff"], m_fb=cfg["architecture"]["m_fb"],
        m_bits=cfg["encoder"]["m_bits"], alphabet_size=const.size,
        n_hidden=cfg["architecture"]["n_hidden"],
        n_steps=cfg["architecture"]["n_steps"])
    enc = TernaryEncoderConfig(m_bits=cfg["encoder"]["m_bits"],
                               y_max=float(cfg["encoder"]["y_max"]),
                               drive_mode=cfg["encoder"]["drive_mode"])
    return SnnDfeConfig(
        architecture=arch, encoder=enc,
        hidden=NeuronParams(**cfg["neurons"]["hidden"]),
        readout=NeuronParams(**cfg["neurons"]["readout"]),
        surrogate=SurrogateSpec(**cfg["surrogate"]),
        reset=cfg["reset"], self_recurrence=cfg["self_recurrence"])
