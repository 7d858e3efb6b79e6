"""Receivers: spiking and ANN decision-feedback equalizers plus classical
linear, decision-feedback, and MAP references."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EqualizerOutput:
    """Decisions of one burst.

    indices[k] estimates the symbol transmitted at position k -
    decision_delay; pairs with a negative source position are transients
    and are skipped by the alignment helpers.
    """

    indices: np.ndarray
    decision_delay: int

    def aligned_pairs(self, tx_indices: np.ndarray):
        """(tx, est) index arrays restricted to validly aligned positions."""
        d = self.decision_delay
        est = self.indices[d:]
        tx = np.asarray(tx_indices)[: est.size]
        n = min(tx.size, est.size)
        return tx[:n], est[:n]


def count_bit_errors(tx_idx: np.ndarray, est_idx: np.ndarray,
                     constellation) -> tuple[int, int]:
    """Bit errors and compared bit count between aligned index arrays."""
    table = constellation.label_bits().astype(np.int64)
    diff = table[np.asarray(tx_idx, dtype=np.int64)] ^ table[
        np.asarray(est_idx, dtype=np.int64)]
    return int(diff.sum()), int(diff.size)


from .snn_dfe import (DfeArchitecture, build_snn, run_snn_dfe, snn_dfe_step,
                      train_snn_dfe)  # noqa: E402
from .ann_dfe import AnnDfe, ann_dfe_forward, run_ann_dfe, train_ann_dfe  # noqa: E402
from .linear import lmmse_equalizer, run_linear, zf_equalizer  # noqa: E402
from .classical_dfe import classical_dfe, run_classical_dfe  # noqa: E402
from .map_detector import MapInfeasibleError, map_detector  # noqa: E402

__all__ = [
    "EqualizerOutput", "count_bit_errors",
    "DfeArchitecture", "build_snn", "run_snn_dfe", "snn_dfe_step",
    "train_snn_dfe",
    "AnnDfe", "ann_dfe_forward", "run_ann_dfe", "train_ann_dfe",
    "zf_equalizer", "lmmse_equalizer", "run_linear",
    "classical_dfe", "run_classical_dfe",
    "map_detector", "MapInfeasibleError",
]
