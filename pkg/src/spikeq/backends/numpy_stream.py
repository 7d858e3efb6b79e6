"""Pure-numpy decision-feedback streaming loop.

Semantically identical to the compiled kernel in _stream.pyx: one decision
per received sample, network state zeroed per symbol, feedback register
shifted with the emitted (or teacher) index. The feedforward drive of every
position is precomputed with one GEMM per burst; the per-symbol work is the
n_steps two-layer simulation.
"""

from __future__ import annotations

import numpy as np


def run_stream(enc_padded: np.ndarray, w_in: np.ndarray, w_rec: np.ndarray,
               w_out: np.ndarray, hid_scalars, out_scalars,
               n_ff: int, m_fb: int, m_bits: int, n_steps: int,
               reset_subtract: bool, impulse: bool,
               teacher: bool, true_idx: np.ndarray | None) -> np.ndarray:
    """Run the streaming loop over one burst.

    enc_padded: (n_ff - 1 + K, 2*m_bits) encoded samples, zero prehistory.
    hid_scalars/out_scalars: (alpha, beta, current_gain, v_th, v_rest).
    Returns int32 decisions, one per received sample; the decision at
    position k estimates the symbol at k - (n_ff - 1).
    """
    from ..encoding import window_frames

    alpha, beta, ci, v_th, v_rest = hid_scalars
    alpha_o, beta_o, ci_o, _, _ = out_scalars
    two_m = 2 * m_bits
    n_hidden = w_in.shape[1]
    n_out = w_out.shape[1]
    k_total = enc_padded.shape[0] - (n_ff - 1)
    ff_width = two_m * n_ff
    alphabet = (w_in.shape[0] - ff_width) // max(m_fb, 1) if m_fb else n_out
    if m_fb and ff_width + alphabet * m_fb != w_in.shape[0]:
        raise ValueError("w_in width inconsistent with architecture")
    if teacher and true_idx is None:
        raise ValueError("teacher mode requires true indices")

    ff_drive = window_frames(enc_padded, n_ff) @ w_in[:ff_width]  # (K, H)
    w_fb = w_in[ff_width:]

    out = np.empty(k_total, dtype=np.int32)
    fb = np.zeros(m_fb, dtype=np.int64)
    for k in range(k_total):
        d = ff_drive[k]
        if m_fb:
            d = d + w_fb[np.arange(m_fb) * alphabet + fb].sum(axis=0)
        v = np.zeros(n_hidden)
        i = np.zeros(n_hidden)
        vo = np.zeros(n_out)
        io = np.zeros(n_out)
        for step in range(n_steps):
            s = v > v_th
            vo = alpha_o * vo + ci_o * io
            io = beta_o * io
            if s.any():
                io = io + w_out[s].sum(axis=0)
            a = alpha * v + ci * i
            if reset_subtract:
                v = a - s * v_th
            else:
                v = np.where(s, v_rest, a)
            i = beta * i
            if step == 0 or not impulse:
                i = i + d
            if s.any():
                i = i + w_rec[s].sum(axis=0)
        dec = int(np.argmax(vo))
        out[k] = dec
        if m_fb:
            kp = k - (n_ff - 1)
            if kp >= 0:
                pushed = int(true_idx[kp]) if teacher else dec
            else:
                pushed = 0
            fb[1:] = fb[:-1]
            fb[0] = pushed
    return out
