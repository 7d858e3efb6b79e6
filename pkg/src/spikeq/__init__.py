"""Spiking-network decision-feedback equalization toolkit.

Link simulation (Gray-mapped QPSK/16-QAM over frequency-selective AWGN
channels), ternary spike encoding, a small LIF/LI network engine with
exact backpropagation through time, trained SNN/ANN receivers, classical
ZF/LMMSE/DFE/MAP references, and an experiment harness with a CLI.
"""

__version__ = "0.1.0"

from . import backends, checkpoint, encoding, engine, link, neuron, optim
from .equalizers import EqualizerOutput, count_bit_errors

__all__ = [
    "__version__", "backends", "checkpoint", "encoding", "engine", "link",
    "neuron", "optim", "EqualizerOutput", "count_bit_errors",
]
