"""Classical MMSE decision-feedback equalizer.

Feedforward taps solve the MMSE criterion under the assumption that the
m_fb symbols right behind the cursor are perfectly cancelled; the feedback
taps are the residual combined-response postcursors at those lags. At run
time the feedback uses the receiver's own decisions (or the true symbols in
genie mode, which isolates the design from error propagation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..link import get_channel, nearest_indices
from . import EqualizerOutput
from .linear import DegenerateChannelError, _conv_matrix


@dataclass(frozen=True)
class DfeDesign:
    ff_taps: np.ndarray  # apply as conj(w) convolution, like LinearEqualizer
    fb_taps: np.ndarray  # fb_taps[j-1] multiplies the decision at lag j
    delay: int
    mse: float


def classical_dfe(channel, n_ff: int = 28, m_fb: int = 3,
                  sigma2: float = 0.0) -> DfeDesign:
    """MMSE design over all cursor delays.

    w_d = (sum_{i not in FB} h_i h_i^T + sigma2 I)^-1 h_d with
    FB = {d+1, ..., d+m_fb}; feedback taps b_j = h_{d+j}^T w_d.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if n_ff < 1 or m_fb < 0:
        raise ValueError("need n_ff >= 1 and m_fb >= 0")
    h = get_channel(channel).taps
    m = _conv_matrix(h, n_ff)
    n_lags = m.shape[1]
    gram_full = m @ m.T
    best = None
    for d in range(n_lags):
        fb_lags = [d + j for j in range(1, m_fb + 1) if d + j < n_lags]
        g = gram_full - sum(np.outer(m[:, i], m[:, i]) for i in fb_lags)
        g = g + sigma2 * np.eye(n_ff)
        try:
            w = np.linalg.solve(g, m[:, d])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(w)):
            continue
        mse = 1.0 - float(m[:, d] @ w)
        if best is None or mse < best[0]:
            best = (mse, d, w)
    if best is None:
        raise DegenerateChannelError("no solvable cursor delay")
    mse, d, w = best
    fb = np.array([m[:, d + j] @ w if d + j < n_lags else 0.0
                   for j in range(1, m_fb + 1)])
    return DfeDesign(ff_taps=w.copy(), fb_taps=fb, delay=d, mse=mse)


def run_classical_dfe(y: np.ndarray, design: DfeDesign, constellation,
                      genie_symbols: np.ndarray | None = None) -> EqualizerOutput:
    """Sequential detection with decision feedback.

    genie_symbols: true transmitted symbols; when given, the feedback uses
    them instead of the receiver's decisions (zero prehistory either way).
    """
    y = np.asarray(y, dtype=np.complex128)
    z = np.convolve(y, np.conj(design.ff_taps))[: y.size]
    m_fb = design.fb_taps.size
    points = constellation.points
    out = np.empty(y.size, dtype=np.int32)
    # Value register of previously decided symbols, newest first.
    reg = np.zeros(m_fb, dtype=np.complex128)
    d = design.delay
    for k in range(y.size):
        zk = z[k] - (design.fb_taps @ reg if m_fb else 0.0)
        idx = int(np.argmin(np.abs(zk - points)))
        out[k] = idx
        if m_fb:
            kp = k - d
            if genie_symbols is not None:
                fresh = genie_symbols[kp] if 0 <= kp < y.size else 0.0
            else:
                fresh = points[idx] if kp >= 0 else 0.0
            reg[1:] = reg[:-1]
            reg[0] = fresh
    return EqualizerOutput(indices=out, decision_delay=d)
