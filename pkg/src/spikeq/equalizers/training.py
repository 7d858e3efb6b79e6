"""Shared teacher-forced training loop for the SNN and ANN receivers.

Every epoch draws a fresh burst, builds teacher-forced frames, takes one
Adam step on the mean softmax cross-entropy over all decisions of the
burst, and decays the learning rate multiplicatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..engine import loss_softmax_ce
from ..link import (NoiseSpec, add_awgn, apply_channel, bits_to_indices,
                    generate_bits, get_channel, make_constellation)
from ..optim import AdamState, adam_update, lr_at


class DivergenceError(RuntimeError):
    """Raised when the training loss leaves the finite range."""


@dataclass
class TrainLog:
    rows: list = field(default_factory=list)  # (epoch, loss, lr, val_ser|None)
    opt: AdamState | None = None

    def add(self, epoch: int, loss: float, lr: float, val_ser=None):
        self.rows.append((epoch, loss, lr, val_ser))

    @property
    def losses(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def final_loss(self) -> float:
        return self.rows[-1][1] if self.rows else float("nan")


def constellation_for_alphabet(size: int):
    if size == 4:
        return make_constellation("qpsk")
    if size == 16:
        return make_constellation("16qam")
    raise ValueError(f"no built-in constellation with {size} points")


def train_decision_feedback(model, arch, channel, ebn0_db: float, epochs: int,
                            master_seed: int, burst_len: int = 200,
                            lr0: float = 1e-3, decay_per_epoch: float = 8e-4,
                            constellation=None, val_every: int = 0,
                            val_symbols: int = 5000, progress=None) -> TrainLog:
    """Run the epoch loop against `model` (see _SnnModel for the protocol)."""
    from ..harness.rng import substream

    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    const = constellation or constellation_for_alphabet(arch.alphabet_size)
    ch = get_channel(channel)
    bps = const.bits_per_symbol
    noise_spec = NoiseSpec.from_ebn0(ebn0_db, bps)
    data_rng = substream(master_seed, "train-data")
    noise_rng = substream(master_seed, "train-noise")
    val_rng = substream(master_seed, "train-val")

    opt = AdamState.for_params(model.parameters())
    log = TrainLog(opt=opt)
    for epoch in range(epochs):
        lr = lr_at(epoch, lr0, decay_per_epoch)
        bits = generate_bits(burst_len * bps, data_rng)
        idx = bits_to_indices(bits, const)
        x = const.points[idx]
        y = add_awgn(apply_channel(x, ch), noise_spec, rng=noise_rng)
        frames, targets = model.frames(y, idx)
        logits, tape = model.forward(frames)
        loss, grad_logits = loss_softmax_ce(logits, targets)
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        grads = model.backward(tape, grad_logits)
        adam_update(model.parameters(), grads, opt, lr)
        model.after_step()

        val_ser = None
        if val_every and (epoch + 1) % val_every == 0:
            vbits = generate_bits(val_symbols * bps, val_rng)
            vidx = bits_to_indices(vbits, const)
            vy = add_awgn(apply_channel(const.points[vidx], ch), noise_spec,
                          rng=val_rng)
            val_ser = model.validation_ser(vy, vidx)
        log.add(epoch, loss, lr, val_ser)
        if progress is not None:
            progress(epoch, loss, lr, val_ser)
    return log
