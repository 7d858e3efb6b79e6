"""Ternary spike encoding of soft values and input-frame assembly.

A real value y is quantized on a uniform grid of step delta = y_max / 2**M,
rounded to the nearest level, and the magnitude's M-bit binary expansion
(MSB at the lowest index) is multiplied by sign(y), giving a vector over
{-1, 0, +1}. Complex values concatenate the real-part code and the
imaginary-part code. Decided symbols are fed back as one-hot index vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TernaryEncoderConfig:
    m_bits: int
    y_max: float
    drive_mode: str = "constant"  # constant | impulse

    def __post_init__(self):
        if self.m_bits < 1:
            raise ValueError("m_bits must be >= 1")
        if not (np.isfinite(self.y_max) and self.y_max > 0):
            raise ValueError("y_max must be finite and > 0")
        if self.drive_mode not in ("constant", "impulse"):
            raise ValueError(f"unknown drive_mode {self.drive_mode!r}")

    @property
    def delta(self) -> float:
        return self.y_max / (1 << self.m_bits)

    @property
    def n_levels(self) -> int:
        return 1 << self.m_bits


class TernaryEncoder:
    """Stateful wrapper keeping a clip counter across calls."""

    def __init__(self, config: TernaryEncoderConfig):
        self.config = config
        self.clip_count = 0

    def encode(self, y) -> np.ndarray:
        codes, clipped = ternary_encode(y, self.config, count_clips=True)
        self.clip_count += clipped
        return codes

    def encode_complex(self, y) -> np.ndarray:
        codes, clipped = encode_complex(y, self.config, count_clips=True)
        self.clip_count += clipped
        return codes


def _quantize_magnitudes(y: np.ndarray, config: TernaryEncoderConfig):
    """Nearest-level magnitudes as ints in [0, 2**M - 1], plus clip count."""
    mag = np.floor(np.abs(y) / config.delta + 0.5)
    top = config.n_levels - 1
    clipped = int(np.count_nonzero(mag > top))
    return np.minimum(mag, top).astype(np.int64), clipped


def ternary_encode(y, config: TernaryEncoderConfig, count_clips: bool = False):
    """Real value(s) -> ternary code(s) over {-1, 0, +1}.

    Scalar input gives shape (M,), an array of K values gives (K, M). The MSB
    sits at index 0. Out-of-range magnitudes saturate at the all-ones code;
    with count_clips=True the saturation count is returned alongside.
    """
    arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot encode non-finite values")
    mag, clipped = _quantize_magnitudes(arr, config)
    m = config.m_bits
    shifts = np.arange(m - 1, -1, -1)
    bits = (mag[:, None] >> shifts) & 1
    codes = (bits * np.sign(arr)[:, None].astype(np.int64)).astype(np.int8)
    if np.isscalar(y) or np.asarray(y).ndim == 0:
        codes = codes[0]
    return (codes, clipped) if count_clips else codes


def ternary_decode(code: np.ndarray, config: TernaryEncoderConfig) -> float:
    """Inverse of ternary_encode up to the quantization step."""
    code = np.asarray(code)
    if code.shape != (config.m_bits,):
        raise ValueError(f"expected shape ({config.m_bits},), got {code.shape}")
    if not np.all(np.isin(code, (-1, 0, 1))):
        raise ValueError("code entries must be in {-1, 0, +1}")
    has_pos = bool(np.any(code > 0))
    has_neg = bool(np.any(code < 0))
    if has_pos and has_neg:
        raise ValueError("mixed-sign code is not a valid ternary encoding")
    weights = 1 << np.arange(config.m_bits - 1, -1, -1)
    mag = int(np.abs(code) @ weights)
    sign = 1.0 if has_pos else (-1.0 if has_neg else 0.0)
    return sign * mag * config.delta


def encode_complex(y, config: TernaryEncoderConfig, count_clips: bool = False):
    """Complex value(s) -> concatenated [real code, imag code] of width 2M.

    Scalar input gives (2M,), an array of K values gives (K, 2M).
    """
    arr = np.atleast_1d(np.asarray(y, dtype=np.complex128))
    re, c1 = ternary_encode(arr.real, config, count_clips=True)
    im, c2 = ternary_encode(arr.imag, config, count_clips=True)
    codes = np.concatenate([re, im], axis=-1)
    if np.isscalar(y) or np.asarray(y).ndim == 0:
        codes = codes[0]
    return (codes, c1 + c2) if count_clips else codes


def one_hot(index: int, size: int) -> np.ndarray:
    if not 0 <= index < size:
        raise ValueError(f"index {index} out of range for size {size}")
    v = np.zeros(size, dtype=np.int8)
    v[index] = 1
    return v


def frame_width(n_ff: int, m_fb: int, m_bits: int, alphabet_size: int) -> int:
    """Input width: 2*M ternary lanes per window sample plus one-hot feedback."""
    return 2 * m_bits * n_ff + alphabet_size * m_fb


@dataclass(frozen=True)
class SpikeFrame:
    """One network presentation: a single input row replicated over time.

    With drive_mode="constant" the row drives the input synapses at every
    step; with "impulse" only at step 0.
    """

    row: np.ndarray
    n_steps: int
    drive_mode: str = "constant"

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_steps, self.row.size), dtype=np.float64)
        if self.drive_mode == "constant":
            out[:] = self.row
        else:
            out[0] = self.row
        return out


def build_frame(window, feedback, config: TernaryEncoderConfig,
                alphabet_size: int, n_steps: int) -> SpikeFrame:
    """Assemble one input frame.

    window: received samples, most recent first (window[0] = y[k]).
    feedback: decided symbol indices, most recent first.
    """
    window = np.asarray(window, dtype=np.complex128)
    parts = [encode_complex(window, config).reshape(-1)] if window.size else []
    for idx in feedback:
        parts.append(one_hot(int(idx), alphabet_size))
    row = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int8)
    expected = frame_width(window.size, len(feedback), config.m_bits, alphabet_size)
    if row.size != expected:
        raise ValueError(f"frame width {row.size} != expected {expected}")
    return SpikeFrame(row=row, n_steps=n_steps, drive_mode=config.drive_mode)


def encode_stream(y: np.ndarray, config: TernaryEncoderConfig,
                  prehistory: int) -> np.ndarray:
    """Encode a burst with `prehistory` all-zero rows prepended.

    Row prehistory + k holds the code of y[k]; windows are then contiguous
    slices. Returned as float64 (K + prehistory, 2M) ready for BLAS.
    """
    codes = encode_complex(np.asarray(y, dtype=np.complex128), config)
    out = np.zeros((prehistory + len(y), 2 * config.m_bits), dtype=np.float64)
    out[prehistory:] = codes
    return out


def window_frames(enc_padded: np.ndarray, n_ff: int) -> np.ndarray:
    """Stack encoded samples into per-decision window blocks.

    enc_padded: (n_ff - 1 + K, 2M) from encode_stream. Returns (K, 2M * n_ff)
    where block t of row k is the code of y[k - t] (lag order, newest first).
    """
    from numpy.lib.stride_tricks import sliding_window_view

    two_m = enc_padded.shape[1]
    win = sliding_window_view(enc_padded, n_ff, axis=0)  # (K, 2M, n_ff)
    # win[k, :, j] = enc_padded[k + j]; lag t corresponds to j = n_ff - 1 - t.
    win = win[:, :, ::-1].transpose(0, 2, 1)  # (K, n_ff, 2M), lag-major
    return np.ascontiguousarray(win).reshape(win.shape[0], n_ff * two_m)


def feedback_indices(true_indices: np.ndarray, n_ff: int, m_fb: int) -> np.ndarray:
    """Teacher-forced feedback index matrix, one row per received sample.

    Row k lists the indices of the m_fb symbols preceding the one decided at
    receive time k (symbol k' = k - n_ff + 1); prehistory is index 0.
    """
    true_indices = np.asarray(true_indices, dtype=np.int64)
    k = np.arange(true_indices.size)[:, None]
    j = np.arange(m_fb)[None, :]
    src = k - n_ff - j  # index of symbol k' - 1 - j
    valid = src >= 0
    out = np.zeros((true_indices.size, m_fb), dtype=np.int64)
    out[valid] = true_indices[src[valid]]
    return out


def one_hot_block(indices: np.ndarray, alphabet_size: int) -> np.ndarray:
    """(K, m) index matrix -> (K, m * alphabet_size) stacked one-hot rows."""
    indices = np.asarray(indices, dtype=np.int64)
    k, m = indices.shape
    out = np.zeros((k, m * alphabet_size), dtype=np.float64)
    rows = np.repeat(np.arange(k), m)
    cols = (np.arange(m) * alphabet_size)[None, :] + indices
    out[rows, cols.reshape(-1)] = 1.0
    return out
