"""Adam optimizer and the per-epoch learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    """First/second-moment accumulators, one pair per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   beta1=beta1, beta2=beta2, eps=eps)


def adam_update(params, grads, state: AdamState, lr: float):
    """One bias-corrected Adam step, applied to params in place."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("params/grads/state length mismatch")
    if lr <= 0:
        raise ValueError("lr must be > 0")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


def lr_at(epoch: int, lr0: float = 1e-3, decay_per_epoch: float = 8e-4) -> float:
    """Multiplicative schedule: lr0 * (1 - decay)^epoch."""
    return lr0 * (1.0 - decay_per_epoch) ** epoch
