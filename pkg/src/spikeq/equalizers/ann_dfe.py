"""Feedforward ANN decision-feedback baselines.

Two input variants share one two-layer ReLU network without biases:

* "encoded": the same ternary/one-hot frame rows the spiking receiver sees,
  presented once (no time dimension),
* "raw": real/imaginary parts of the window samples followed by
  real/imaginary parts of the fed-back decided symbols, width 2*(n + m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoding import encode_stream, feedback_indices, one_hot_block, window_frames
from . import EqualizerOutput
from .snn_dfe import DfeArchitecture, SnnDfeConfig, teacher_frames


@dataclass
class AnnDfe:
    """Weights and geometry. w1 is (input, hidden), w2 is (hidden, out)."""

    w1: np.ndarray
    w2: np.ndarray
    arch: DfeArchitecture
    variant: str  # encoded | raw

    def __post_init__(self):
        if self.variant not in ("encoded", "raw"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.w1.shape != (self.input_size, self.arch.n_hidden):
            raise ValueError(f"w1 must be ({self.input_size}, "
                             f"{self.arch.n_hidden}), got {self.w1.shape}")
        if self.w2.shape != (self.arch.n_hidden, self.arch.alphabet_size):
            raise ValueError("w2 shape mismatch")

    @property
    def input_size(self) -> int:
        if self.variant == "encoded":
            return self.arch.input_size
        return 2 * (self.arch.n_ff + self.arch.m_fb)

    def parameters(self):
        return [self.w1, self.w2]


def build_ann(arch: DfeArchitecture, variant: str, seed=0) -> AnnDfe:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    fan_in = (arch.input_size if variant == "encoded"
              else 2 * (arch.n_ff + arch.m_fb))
    g1 = 1.0 / np.sqrt(fan_in)
    g2 = 1.0 / np.sqrt(arch.n_hidden)
    return AnnDfe(w1=rng.uniform(-g1, g1, size=(fan_in, arch.n_hidden)),
                  w2=rng.uniform(-g2, g2, size=(arch.n_hidden,
                                                arch.alphabet_size)),
                  arch=arch, variant=variant)


def ann_dfe_forward(model: AnnDfe, frames: np.ndarray, want_tape: bool = False):
    """logits = relu(x @ w1) @ w2, rows = frames."""
    x = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if x.shape[1] != model.input_size:
        raise ValueError(f"frame width {x.shape[1]} != model input "
                         f"{model.input_size}")
    z = x @ model.w1
    h = np.maximum(z, 0.0)
    logits = h @ model.w2
    if want_tape:
        return logits, (x, z, h)
    return logits


def ann_dfe_backward(model: AnnDfe, tape, grad_logits: np.ndarray):
    x, z, h = tape
    g2 = h.T @ grad_logits
    gh = grad_logits @ model.w2.T
    gz = gh * (z > 0.0)
    g1 = x.T @ gz
    return [g1, g2]


def raw_frames(y: np.ndarray, fed_back_points: np.ndarray,
               arch: DfeArchitecture) -> np.ndarray:
    """Raw-variant rows: [Re/Im window, newest first | Re/Im feedback]."""
    from numpy.lib.stride_tricks import sliding_window_view

    y = np.asarray(y, dtype=np.complex128)
    pad = np.concatenate([np.zeros(arch.n_ff - 1, dtype=np.complex128), y])
    win = sliding_window_view(pad, arch.n_ff)[:, ::-1]  # (K, n), newest first
    parts = [win.real, win.imag]
    if arch.m_fb:
        parts += [fed_back_points.real, fed_back_points.imag]
    return np.ascontiguousarray(np.concatenate(parts, axis=1))


def teacher_raw_frames(y: np.ndarray, true_indices: np.ndarray,
                       arch: DfeArchitecture, constellation):
    """Teacher-forced raw frames plus targets (prehistory targets index 0)."""
    true_indices = np.asarray(true_indices, dtype=np.int64)
    fb_idx = feedback_indices(true_indices, arch.n_ff, arch.m_fb)
    points = constellation.points[fb_idx]
    # Prehistory entries feed back the zero point, not symbol 0's point.
    k = np.arange(true_indices.size)[:, None]
    j = np.arange(arch.m_fb)[None, :]
    points = np.where(k - arch.n_ff - j >= 0, points, 0.0 + 0.0j)
    frames = raw_frames(y, points, arch)
    kp = np.arange(true_indices.size) - (arch.n_ff - 1)
    targets = np.where(kp >= 0, true_indices[np.maximum(kp, 0)], 0)
    return frames, targets


class _AnnModel:
    """Trainer adapter; see training.train_decision_feedback."""

    def __init__(self, model: AnnDfe, snn_cfg: SnnDfeConfig | None,
                 constellation):
        if model.variant == "encoded" and snn_cfg is None:
            raise ValueError("encoded variant needs the encoder config")
        self.model = model
        self.snn_cfg = snn_cfg
        self.constellation = constellation

    def parameters(self):
        return self.model.parameters()

    def frames(self, y, true_indices):
        if self.model.variant == "encoded":
            return teacher_frames(y, true_indices, self.snn_cfg)
        return teacher_raw_frames(y, true_indices, self.model.arch,
                                  self.constellation)

    def forward(self, frames):
        logits, tape = ann_dfe_forward(self.model, frames, want_tape=True)
        return logits, tape

    def backward(self, tape, grad_logits):
        return ann_dfe_backward(self.model, tape, grad_logits)

    def after_step(self):
        pass

    def validation_ser(self, y, true_indices) -> float:
        out = run_ann_dfe(y, self.model, snn_cfg=self.snn_cfg,
                          constellation=self.constellation)
        tx, est = out.aligned_pairs(true_indices)
        return float(np.mean(tx != est)) if tx.size else float("nan")


def run_ann_dfe(y: np.ndarray, model: AnnDfe, snn_cfg: SnnDfeConfig | None = None,
                constellation=None, mode: str = "decision",
                true_indices: np.ndarray | None = None) -> EqualizerOutput:
    """Stream a burst through the ANN receiver (python loop, GEMV per symbol)."""
    from .training import constellation_for_alphabet

    arch = model.arch
    if mode not in ("decision", "teacher"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "teacher" and true_indices is None:
        raise ValueError("teacher mode requires true_indices")
    constellation = constellation or constellation_for_alphabet(arch.alphabet_size)
    y = np.asarray(y, dtype=np.complex128)
    k_total = y.size

    if model.variant == "encoded":
        if snn_cfg is None:
            raise ValueError("encoded variant needs the encoder config")
        enc = encode_stream(y, snn_cfg.encoder, prehistory=arch.n_ff - 1)
        ff = window_frames(enc, arch.n_ff)  # (K, 2M n)
        a = arch.alphabet_size
        offs = np.arange(arch.m_fb) * a
        w_fb_rows = model.w1[ff.shape[1]:]
        ff_part = ff @ model.w1[: ff.shape[1]]
    else:
        pad = np.concatenate([np.zeros(arch.n_ff - 1, dtype=np.complex128), y])
        from numpy.lib.stride_tricks import sliding_window_view

        win = sliding_window_view(pad, arch.n_ff)[:, ::-1]
        wpart = np.concatenate([win.real, win.imag], axis=1)
        ff_part = wpart @ model.w1[: 2 * arch.n_ff]
        w_fb_block = model.w1[2 * arch.n_ff:]  # (2 m_fb, hidden)

    out = np.empty(k_total, dtype=np.int32)
    fb_idx = np.zeros(arch.m_fb, dtype=np.int64)
    fb_live = np.zeros(arch.m_fb, dtype=bool)  # False while prehistory
    for k in range(k_total):
        z = ff_part[k].copy()
        if arch.m_fb:
            if model.variant == "encoded":
                z += w_fb_rows[offs + fb_idx].sum(axis=0)
            else:
                pts = np.where(fb_live, constellation.points[fb_idx], 0.0)
                z += np.concatenate([pts.real, pts.imag]) @ w_fb_block
        logits = np.maximum(z, 0.0) @ model.w2
        dec = int(np.argmax(logits))
        out[k] = dec
        if arch.m_fb:
            kp = k - (arch.n_ff - 1)
            fb_idx[1:] = fb_idx[:-1]
            fb_live[1:] = fb_live[:-1]
            if kp >= 0:
                fb_idx[0] = int(true_indices[kp]) if mode == "teacher" else dec
                fb_live[0] = True
            else:
                fb_idx[0] = 0
                fb_live[0] = False
    return EqualizerOutput(indices=out, decision_delay=arch.decision_delay)


def train_ann_dfe(arch: DfeArchitecture, variant: str, channel, ebn0_db: float,
                  epochs: int, master_seed: int, snn_cfg: SnnDfeConfig | None = None,
                  burst_len: int = 200, lr0: float = 1e-3,
                  decay_per_epoch: float = 8e-4, constellation=None,
                  val_every: int = 0, val_symbols: int = 5000, progress=None,
                  model: AnnDfe | None = None):
    """Same protocol as the spiking trainer. Returns (model, TrainLog)."""
    from ..harness.rng import substream
    from .training import constellation_for_alphabet, train_decision_feedback

    constellation = constellation or constellation_for_alphabet(arch.alphabet_size)
    if model is None:
        model = build_ann(arch, variant, seed=substream(master_seed, "init"))
    adapter = _AnnModel(model, snn_cfg, constellation)
    log = train_decision_feedback(
        adapter, arch, channel=channel, ebn0_db=ebn0_db, epochs=epochs,
        master_seed=master_seed, burst_len=burst_len, lr0=lr0,
        decay_per_epoch=decay_per_epoch, constellation=constellation,
        val_every=val_every, val_symbols=val_symbols, progress=progress)
    return model, log
