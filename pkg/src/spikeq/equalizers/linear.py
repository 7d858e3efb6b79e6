"""Linear transversal equalizers: zero-forcing (least squares) and LMMSE.

Both designs pick the decision delay that optimizes their own criterion and
return taps for the conjugate form x_hat[k - d] = sum_j conj(w[j]) y[k - j].
ZF is the sigma2 -> 0 limit of the LMMSE solution, so the two coincide for
vanishing noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..link import FIRChannel, get_channel, nearest_indices
from . import EqualizerOutput


class DegenerateChannelError(RuntimeError):
    """Normal equations are numerically singular for this channel."""


@dataclass(frozen=True)
class LinearEqualizer:
    taps: np.ndarray
    delay: int
    criterion: float  # residual ISI norm (ZF) or MMSE (LMMSE)
    kind: str


def _conv_matrix(h: np.ndarray, n_taps: int) -> np.ndarray:
    """H with H[j, j+l] = h[l]; maps stacked symbols to the delay line."""
    l = h.size
    m = np.zeros((n_taps, n_taps + l - 1), dtype=np.float64)
    for j in range(n_taps):
        m[j, j:j + l] = h
    return m


def _solve_all_delays(h: np.ndarray, n_taps: int, sigma2: float):
    m = _conv_matrix(h, n_taps)
    gram = m @ m.T + sigma2 * np.eye(n_taps)
    try:
        taps_all = np.linalg.solve(gram, m)  # column d solves for delay d
    except np.linalg.LinAlgError as e:
        raise DegenerateChannelError(str(e)) from e
    if not np.all(np.isfinite(taps_all)):
        raise DegenerateChannelError("non-finite solution")
    return m, taps_all


def zf_equalizer(channel, n_taps: int = 31) -> LinearEqualizer:
    """Least-squares zero forcing: min ||H^T w - e_d|| over taps and delay."""
    h = get_channel(channel).taps
    m, taps_all = _solve_all_delays(h, n_taps, 0.0)
    combined = m.T @ taps_all  # (n_taps+L-1, n_delays): column d = H^T w_d
    resid = combined - np.eye(combined.shape[0])
    costs = np.linalg.norm(resid, axis=0)
    d = int(np.argmin(costs))
    return LinearEqualizer(taps=taps_all[:, d].copy(), delay=d,
                           criterion=float(costs[d]), kind="zf")


def lmmse_equalizer(channel, n_taps: int = 31, sigma2: float = 0.0) -> LinearEqualizer:
    """Wiener solution w = (H H^T + sigma2 I)^-1 H e_d, delay by min MSE."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    h = get_channel(channel).taps
    m, taps_all = _solve_all_delays(h, n_taps, sigma2)
    # MSE(d) = 1 - p_d^T w_d for unit-energy symbols.
    mse = 1.0 - np.einsum("jd,jd->d", m, taps_all)
    d = int(np.argmin(mse))
    return LinearEqualizer(taps=taps_all[:, d].copy(), delay=d,
                           criterion=float(mse[d]), kind="lmmse")


def filter_burst(y: np.ndarray, eq: LinearEqualizer) -> np.ndarray:
    """Apply taps; output[k] estimates the symbol sent at k - eq.delay."""
    y = np.asarray(y, dtype=np.complex128)
    return np.convolve(y, np.conj(eq.taps))[: y.size]


def run_linear(y: np.ndarray, eq: LinearEqualizer, constellation) -> EqualizerOutput:
    z = filter_burst(y, eq)
    return EqualizerOutput(indices=nearest_indices(z, constellation),
                           decision_delay=eq.delay)
