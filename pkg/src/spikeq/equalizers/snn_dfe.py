"""Spiking decision-feedback equalizer: architecture, streaming, training."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import backends
from ..encoding import (TernaryEncoderConfig, build_frame, encode_stream,
                        feedback_indices, frame_width, one_hot_block,
                        window_frames)
from ..engine import Network, decide, forward, init_network
from ..neuron import LIF_HIDDEN, LI_READOUT, NeuronParams, SurrogateSpec
from . import EqualizerOutput


@dataclass(frozen=True)
class DfeArchitecture:
    """Window/feedback geometry and layer sizes of a DFE receiver."""

    n_ff: int              # received samples per window
    m_fb: int              # fed-back decisions
    m_bits: int            # ternary bits per real component
    alphabet_size: int
    n_hidden: int
    n_steps: int

    def __post_init__(self):
        for name in ("n_ff", "m_bits", "alphabet_size", "n_hidden", "n_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.m_fb < 0:
            raise ValueError("m_fb must be >= 0")

    @property
    def input_size(self) -> int:
        return frame_width(self.n_ff, self.m_fb, self.m_bits,
                           self.alphabet_size)

    @property
    def decision_delay(self) -> int:
        return self.n_ff - 1


@dataclass
class SnnDfeConfig:
    architecture: DfeArchitecture
    encoder: TernaryEncoderConfig
    hidden: NeuronParams = LIF_HIDDEN
    readout: NeuronParams = LI_READOUT
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    reset: str = "zero"
    self_recurrence: bool = False

    def __post_init__(self):
        if self.encoder.m_bits != self.architecture.m_bits:
            raise ValueError("encoder m_bits != architecture m_bits")


def build_snn(cfg: SnnDfeConfig, seed=0) -> Network:
    arch = cfg.architecture
    extra = {"reset": cfg.reset, "self_recurrence": cfg.self_recurrence}
    return init_network(
        [
            (arch.input_size, arch.n_hidden, "lif", True, cfg.hidden, extra),
            (arch.n_hidden, arch.alphabet_size, "li", False, cfg.readout),
        ],
        surrogate=cfg.surrogate, seed=seed)


def _check_net(cfg: SnnDfeConfig, net: Network):
    arch = cfg.architecture
    if net.input_size != arch.input_size or net.output_size != arch.alphabet_size:
        raise ValueError(
            f"network is {net.input_size}->{net.output_size}, architecture "
            f"requires {arch.input_size}->{arch.alphabet_size}")


def snn_dfe_step(window, feedback, net: Network, cfg: SnnDfeConfig) -> int:
    """One decision from an explicit window and feedback register."""
    arch = cfg.architecture
    if len(window) != arch.n_ff or len(feedback) != arch.m_fb:
        raise ValueError("window/feedback length does not match architecture")
    _check_net(cfg, net)
    frame = build_frame(window, feedback, cfg.encoder, arch.alphabet_size,
                        arch.n_steps)
    tape = forward(net, frame.row.astype(np.float64), arch.n_steps,
                   drive_mode=frame.drive_mode)
    return int(decide(tape.v_out[0]))


def _stream_args(cfg: SnnDfeConfig, net: Network):
    hid = net.layers[0].neuron
    out = net.layers[-1].neuron
    hid_scalars = (hid.alpha, hid.beta, hid.current_gain, hid.v_th, hid.v_rest)
    out_scalars = (out.alpha, out.beta, out.current_gain, out.v_th, out.v_rest)
    return hid_scalars, out_scalars


def run_snn_dfe(y: np.ndarray, net: Network, cfg: SnnDfeConfig,
                mode: str = "decision", true_indices: np.ndarray | None = None,
                backend: str | None = None) -> EqualizerOutput:
    """Stream a burst through the receiver.

    mode="decision" feeds emitted decisions back; mode="teacher" feeds the
    true indices (training-style feedback) while still emitting decisions.
    """
    if mode not in ("decision", "teacher"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "teacher" and true_indices is None:
        raise ValueError("teacher mode requires true_indices")
    _check_net(cfg, net)
    arch = cfg.architecture
    y = np.asarray(y, dtype=np.complex128)
    enc = encode_stream(y, cfg.encoder, prehistory=arch.n_ff - 1)
    hid_scalars, out_scalars = _stream_args(cfg, net)
    w_rec = net.layers[0].w_rec
    if w_rec is None:
        w_rec = np.zeros((arch.n_hidden, arch.n_hidden))
    stream = backends.get_stream_fn(backend)
    truth = None
    if mode == "teacher":
        truth = np.ascontiguousarray(true_indices, dtype=np.int32)
    indices = stream(
        np.ascontiguousarray(enc), np.ascontiguousarray(net.layers[0].w_in),
        np.ascontiguousarray(w_rec), np.ascontiguousarray(net.layers[1].w_in),
        hid_scalars, out_scalars, arch.n_ff, arch.m_fb, arch.m_bits,
        arch.n_steps, net.layers[0].reset == "subtract",
        cfg.encoder.drive_mode == "impulse", mode == "teacher", truth)
    return EqualizerOutput(indices=np.asarray(indices),
                           decision_delay=arch.decision_delay)


def teacher_frames(y: np.ndarray, true_indices: np.ndarray,
                   cfg: SnnDfeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized teacher-forced frames for a whole burst.

    Returns (frames (K, input_size) float64, targets (K,) int64). The frame
    at row k decides the symbol at k - (n_ff - 1); rows whose decided symbol
    lies in the prehistory target index 0.
    """
    arch = cfg.architecture
    y = np.asarray(y, dtype=np.complex128)
    true_indices = np.asarray(true_indices, dtype=np.int64)
    if true_indices.size != y.size:
        raise ValueError("one true index per received sample required")
    enc = encode_stream(y, cfg.encoder, prehistory=arch.n_ff - 1)
    ff = window_frames(enc, arch.n_ff)
    parts = [ff]
    if arch.m_fb:
        fb = feedback_indices(true_indices, arch.n_ff, arch.m_fb)
        parts.append(one_hot_block(fb, arch.alphabet_size))
    frames = np.concatenate(parts, axis=1)
    kp = np.arange(y.size) - (arch.n_ff - 1)
    targets = np.where(kp >= 0, true_indices[np.maximum(kp, 0)], 0)
    return frames, targets


def snn_forward_batch(net: Network, frames: np.ndarray, cfg: SnnDfeConfig):
    return forward(net, frames, cfg.architecture.n_steps,
                   drive_mode=cfg.encoder.drive_mode)


from .training import TrainLog, train_decision_feedback  # noqa: E402


class _SnnModel:
    """Adapter giving the generic trainer a uniform forward/backward."""

    def __init__(self, net: Network, cfg: SnnDfeConfig):
        self.net = net
        self.cfg = cfg

    def parameters(self):
        return self.net.parameters()

    def frames(self, y, true_indices):
        return teacher_frames(y, true_indices, self.cfg)

    def forward(self, frames):
        tape = snn_forward_batch(self.net, frames, self.cfg)
        return tape.v_out, tape

    def backward(self, tape, grad_logits):
        from ..engine import backward as engine_backward

        grads = engine_backward(self.net, tape, grad_logits)
        out = []
        for idx, layer in enumerate(self.net.layers):
            out.append(grads[idx]["w_in"])
            if layer.w_rec is not None:
                out.append(grads[idx]["w_rec"])
        return out

    def after_step(self):
        self.net.mask_self_recurrence()
        self.net.bump_version()

    def validation_ser(self, y, true_indices) -> float:
        out = run_snn_dfe(y, self.net, self.cfg, mode="decision")
        tx, est = out.aligned_pairs(true_indices)
        return float(np.mean(tx != est)) if tx.size else float("nan")


def train_snn_dfe(cfg: SnnDfeConfig, channel, ebn0_db: float, epochs: int,
                  master_seed: int, burst_len: int = 200, lr0: float = 1e-3,
                  decay_per_epoch: float = 8e-4, constellation=None,
                  val_every: int = 0, val_symbols: int = 5000,
                  progress=None, net: Network | None = None):
    """Teacher-forced training loop. Returns (net, TrainLog).

    The TrainLog carries the final AdamState for checkpointing.
    """
    if net is None:
        net = build_snn(cfg, seed=_init_rng(master_seed))
    model = _SnnModel(net, cfg)
    log = train_decision_feedback(
        model, cfg.architecture, channel=channel, ebn0_db=ebn0_db,
        epochs=epochs, master_seed=master_seed, burst_len=burst_len,
        lr0=lr0, decay_per_epoch=decay_per_epoch, constellation=constellation,
        val_every=val_every, val_symbols=val_symbols, progress=progress)
    return net, log


def _init_rng(master_seed: int):
    from ..harness.rng import substream

    return substream(master_seed, "init")
