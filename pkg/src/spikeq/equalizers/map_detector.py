"""Symbol-by-symbol MAP detection (log-domain BCJR over the ISI trellis).

The state at time k encodes the previous L-1 symbols, most recent in the
top base-|A| digit. Burst boundaries are exact: branch means at step k only
include taps whose support lies inside the burst, so the zero prehistory is
conditioned on without pilot symbols (fictitious state digits never touch a
metric), and the final symbols simply see less future evidence.

Complexity is O(K * |A|^L); channels whose state count exceeds max_states
are refused.
"""

from __future__ import annotations

import numpy as np

from ..link import get_channel
from . import EqualizerOutput


class MapInfeasibleError(RuntimeError):
    """Trellis would exceed the configured state budget."""


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def map_feasible(channel, alphabet_size: int, max_states: int = 4096) -> bool:
    l = get_channel(channel).n_taps
    return alphabet_size ** max(l - 1, 0) <= max_states


def map_detector(y: np.ndarray, channel, constellation, sigma2: float,
                 max_states: int = 4096) -> EqualizerOutput:
    """MAP symbol decisions for one burst (processed as a whole).

    Memory grows as O(len(y) * states); feed bursts, not whole campaigns.
    """
    h = np.asarray(get_channel(channel).taps, dtype=np.float64)
    pts = constellation.points
    a_size = pts.size
    l = h.size
    n_states = a_size ** (l - 1) if l > 1 else 1
    if n_states > max_states:
        raise MapInfeasibleError(
            f"{n_states} trellis states exceed the budget of {max_states} "
            f"({a_size}-ary alphabet, {l}-tap channel)")
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    y = np.asarray(y, dtype=np.complex128)
    k_total = y.size
    if k_total == 0:
        return EqualizerOutput(indices=np.zeros(0, dtype=np.int32),
                               decision_delay=0)
    sig = max(sigma2, 1e-12)

    # digit j of state s holds a[k-j]; j = 1 sits in the top position.
    head = h[0] * pts  # cursor contribution per input symbol, (A,)
    if l > 1:
        s = np.arange(n_states)
        tail_terms = np.empty((l - 1, n_states), dtype=np.complex128)
        for j in range(1, l):
            digit = (s // a_size ** (l - 1 - j)) % a_size
            tail_terms[j - 1] = h[j] * pts[digit]
        base = a_size ** (l - 2)
        nxt = (s // a_size)[:, None] + np.arange(a_size)[None, :] * base
        mean_full = tail_terms.sum(axis=0)[:, None] + head[None, :]
    else:
        nxt = np.zeros((1, a_size), dtype=np.int64)
        mean_full = head[None, :]

    def gamma(k: int) -> np.ndarray:
        """Log branch metrics at step k; broadcasts against (S, A)."""
        if k >= l - 1:
            mean = mean_full
        elif k == 0:
            mean = head[None, :]
        else:
            mean = tail_terms[:k].sum(axis=0)[:, None] + head[None, :]
        return -np.abs(y[k] - mean) ** 2 / sig

    # Forward pass, renormalized every step to stay in range.
    log_alpha = np.empty((k_total + 1, n_states))
    log_alpha[0] = -np.log(n_states)
    for k in range(k_total):
        contrib = np.broadcast_to(log_alpha[k][:, None] + gamma(k),
                                  (n_states, a_size))
        if l > 1:
            # next(s, a) = a * base + s // A, so states merge over the lowest
            # digit r of s = q * A + r.
            merged = _logsumexp(contrib.reshape(base, a_size, a_size), axis=1)
            new_alpha = merged.T.reshape(-1)  # flat index a * base + q
        else:
            new_alpha = _logsumexp(contrib, axis=1)  # single state
        new_alpha = new_alpha - new_alpha.max()
        log_alpha[k + 1] = new_alpha

    # Backward pass fused with the per-symbol posterior decision.
    out = np.empty(k_total, dtype=np.int32)
    log_beta = np.zeros(n_states)
    for k in range(k_total - 1, -1, -1):
        g = gamma(k) + log_beta[nxt]
        out[k] = int(np.argmax(_logsumexp(
            np.broadcast_to(log_alpha[k][:, None] + g, (n_states, a_size)),
            axis=0)))
        log_beta = _logsumexp(g, axis=1)
        log_beta = log_beta - log_beta.max()
    return EqualizerOutput(indices=out, decision_delay=0)
