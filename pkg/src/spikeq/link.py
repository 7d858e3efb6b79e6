"""Transmission chain: random bits, Gray-mapped QAM, FIR channel, complex AWGN.

Conventions used throughout the package:

* constellations have unit mean symbol energy,
* a symbol "index" is the integer value of its Gray bit label (MSB first),
* the channel performs a plain linear convolution with zero prehistory and
  returns as many samples as it was given,
* sigma2 is the total complex noise variance N0, split evenly between the
  real and imaginary components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Per-axis Gray labelings. Key = bit group for one axis (MSB first),
# value = unnormalized amplitude. Nearest-neighbour labels differ in one bit;
# the test suite checks the adjacency property on the assembled constellation.
_QPSK_AXIS = {(0,): 1.0, (1,): -1.0}
_QAM16_AXIS = {(0, 0): 3.0, (0, 1): 1.0, (1, 1): -1.0, (1, 0): -3.0}


@dataclass(frozen=True)
class Constellation:
    """Unit-energy symbol alphabet with Gray bit labels.

    ``points[i]`` is the symbol whose bit label is the binary expansion of
    ``i`` (MSB first), so mapping and demapping are plain array lookups.
    """

    name: str
    points: np.ndarray
    bits_per_symbol: int

    def __post_init__(self):
        m = self.points.size
        if m < 2 or m & (m - 1):
            raise ValueError("alphabet size must be a power of two")
        if m != 1 << self.bits_per_symbol:
            raise ValueError("bits_per_symbol inconsistent with alphabet size")
        energy = float(np.mean(np.abs(self.points) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"constellation energy {energy!r} is not 1")

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bit_labels(self) -> list[str]:
        return [format(i, f"0{self.bits_per_symbol}b") for i in range(self.size)]

    def label_bits(self) -> np.ndarray:
        """(size, bits_per_symbol) uint8 table of the Gray labels."""
        n = self.bits_per_symbol
        idx = np.arange(self.size)[:, None]
        return ((idx >> (n - 1 - np.arange(n))) & 1).astype(np.uint8)


def _square_qam(name: str, axis: dict, bits_per_axis: int) -> Constellation:
    levels = np.array([v for v in axis.values()], dtype=np.float64)
    scale = np.sqrt(np.mean(levels**2) * 2.0)
    n_axis = 1 << bits_per_axis
    points = np.empty(n_axis * n_axis, dtype=np.complex128)
    for bits_i, re in axis.items():
        for bits_q, im in axis.items():
            label = 0
            for b in bits_i + bits_q:
                label = (label << 1) | b
            points[label] = (re + 1j * im) / scale
    return Constellation(name, points, 2 * bits_per_axis)


_CONSTELLATIONS = {
    "qpsk": _square_qam("qpsk", _QPSK_AXIS, 1),
    "16qam": _square_qam("16qam", _QAM16_AXIS, 2),
}


def make_constellation(name: str) -> Constellation:
    try:
        return _CONSTELLATIONS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}, expected one of "
                         f"{sorted(_CONSTELLATIONS)}") from None


def generate_bits(count: int, seed) -> np.ndarray:
    """i.i.d. equiprobable bits as a uint8 array."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def bits_to_indices(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    bps = constellation.bits_per_symbol
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % bps:
        raise ValueError(f"bit count {bits.size} not a multiple of {bps}")
    groups = bits.reshape(-1, bps).astype(np.int64)
    weights = 1 << np.arange(bps - 1, -1, -1)
    return groups @ weights


def indices_to_bits(indices: np.ndarray, constellation: Constellation) -> np.ndarray:
    table = constellation.label_bits()
    return table[np.asarray(indices, dtype=np.int64)].reshape(-1)


def gray_map(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Bits -> unit-energy symbols, MSB-first Gray labels."""
    return constellation.points[bits_to_indices(bits, constellation)]


def gray_demap(symbols: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Exact symbols -> bits. Inputs must lie on constellation points."""
    idx = nearest_indices(symbols, constellation)
    if not np.allclose(constellation.points[idx], symbols, rtol=0, atol=1e-9):
        raise ValueError("gray_demap requires exact constellation points; "
                         "use nearest_indices for noisy samples")
    return indices_to_bits(idx, constellation)


def nearest_indices(samples: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Minimum-distance slicer, returns symbol indices."""
    samples = np.asarray(samples, dtype=np.complex128)
    d2 = np.abs(samples[..., None] - constellation.points) ** 2
    return np.argmin(d2, axis=-1)


@dataclass(frozen=True)
class FIRChannel:
    """Frequency-selective channel given by its impulse response taps."""

    name: str
    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("taps must be a non-empty 1-D sequence")
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self) -> int:
        return self.taps.size

    @property
    def energy(self) -> float:
        return float(np.sum(self.taps**2))


# Textbook impulse responses, used without gain normalization.
PROAKIS_A = FIRChannel("proakis-a", np.array(
    [0.04, -0.05, 0.07, -0.21, -0.5, 0.72, 0.36, 0.0, 0.21, 0.03, 0.07]))
PROAKIS_B = FIRChannel("proakis-b", np.array([0.407, 0.815, 0.407]))
PROAKIS_C = FIRChannel("proakis-c", np.array([0.227, 0.460, 0.688, 0.460, 0.227]))

_CHANNELS = {c.name: c for c in (PROAKIS_A, PROAKIS_B, PROAKIS_C)}
_CHANNELS["identity"] = FIRChannel("identity", np.array([1.0]))


def get_channel(name_or_taps) -> FIRChannel:
    if isinstance(name_or_taps, FIRChannel):
        return name_or_taps
    if isinstance(name_or_taps, str):
        try:
            return _CHANNELS[name_or_taps.lower()]
        except KeyError:
            raise ValueError(f"unknown channel {name_or_taps!r}, expected one of "
                             f"{sorted(_CHANNELS)}") from None
    return FIRChannel("custom", np.asarray(name_or_taps, dtype=np.float64))


def apply_channel(x: np.ndarray, channel: FIRChannel) -> np.ndarray:
    """Linear convolution with zero prehistory; output length == input length.

    The leading transient (first n_taps - 1 samples) is kept, the trailing
    one is cut.
    """
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("expected a 1-D symbol stream")
    if x.size == 0:
        return x.astype(np.complex128)
    return np.convolve(x, channel.taps)[: x.size]


@dataclass(frozen=True)
class NoiseSpec:
    """Complex AWGN description. sigma2 is the total complex variance N0."""

    ebn0_db: float
    sigma2: float
    rng_seed: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise ValueError("sigma2 must be finite and >= 0")

    @classmethod
    def from_ebn0(cls, ebn0_db: float, bits_per_symbol: int,
                  rng_seed: int | None = None) -> "NoiseSpec":
        # Unit symbol energy, so Eb = 1/bits_per_symbol and sigma2 = N0.
        eb = 1.0 / bits_per_symbol
        sigma2 = eb / (10.0 ** (ebn0_db / 10.0))
        return cls(ebn0_db=ebn0_db, sigma2=sigma2, rng_seed=rng_seed)


def add_awgn(y: np.ndarray, noise: NoiseSpec,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Add circular complex Gaussian noise with total variance sigma2."""
    y = np.asarray(y, dtype=np.complex128)
    if noise.sigma2 == 0.0:
        return y.copy()
    if rng is None:
        rng = np.random.default_rng(noise.rng_seed)
    scale = np.sqrt(noise.sigma2 / 2.0)
    n = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return y + scale * n
