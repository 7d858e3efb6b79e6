"""Streaming-kernel backend selection.

The per-symbol decision-feedback loop is the hot path of BER validation.
A compiled Cython kernel is used when available; a numpy implementation
with identical semantics is the fallback. SPIKEQ_BACKEND=ext|numpy forces
the choice (forcing "ext" when the extension is missing is an error).
"""

from __future__ import annotations

import os

from . import numpy_stream

try:
    from . import _stream as _ext
except ImportError:
    _ext = None

_FORCED = os.environ.get("SPIKEQ_BACKEND", "").strip().lower()
if _FORCED and _FORCED not in ("ext", "numpy"):
    raise RuntimeError(f"SPIKEQ_BACKEND must be 'ext' or 'numpy', "
                       f"got {_FORCED!r}")
if _FORCED == "ext" and _ext is None:
    raise RuntimeError("SPIKEQ_BACKEND=ext but the compiled extension is "
                       "not importable")


def active_backend() -> str:
    if _FORCED:
        return _FORCED
    return "ext" if _ext is not None else "numpy"


def get_stream_fn(name: str | None = None):
    """Return the streaming kernel for `name` (default: active backend)."""
    name = name or active_backend()
    if name == "numpy":
        return numpy_stream.run_stream
    if name == "ext":
        if _ext is None:
            raise RuntimeError("compiled backend not available")
        return _ext.run_stream
    raise ValueError(f"unknown backend {name!r}")
