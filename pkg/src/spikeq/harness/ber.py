"""BER/SER measurement over EbN0 sweeps with shared transmissions.

Every receiver measured at the same (seed, EbN0) point sees byte-identical
transmitted bursts and noise: both generator substreams are keyed by the
master seed and the EbN0 value only, never by the receiver choice. Each
point is self-contained, so a multi-process sweep produces the same counts
as a serial one.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..checkpoint import (expect_architecture, load_ann_checkpoint,
                          load_checkpoint)
from ..equalizers import count_bit_errors
from ..equalizers.ann_dfe import run_ann_dfe
from ..equalizers.classical_dfe import classical_dfe, run_classical_dfe
from ..equalizers.linear import lmmse_equalizer, run_linear, zf_equalizer
from ..equalizers.map_detector import map_detector
from ..equalizers.snn_dfe import run_snn_dfe
from ..link import (NoiseSpec, add_awgn, apply_channel, bits_to_indices,
                    generate_bits, get_channel, make_constellation)
from .config import resolve_config, snn_config_from
from .rng import substream

# Reference filter length for ZF/LMMSE; the classical DFE splits the same
# budget between feedforward and feedback sections.
LINEAR_TAPS = 31


@dataclass
class BerPoint:
    ebn0_db: float
    bit_errors: int
    bits: int
    symbol_errors: int
    symbols: int
    n_bursts: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def ser(self) -> float:
        return (self.symbol_errors / self.symbols if self.symbols
                else float("nan"))


def _make_runner(name: str, cfg: dict, channel, constellation, sigma2: float,
                 checkpoint):
    """Burst callable y -> EqualizerOutput for one sweep point."""
    if name == "zf":
        eq = zf_equalizer(channel, LINEAR_TAPS)
        return lambda y: run_linear(y, eq, constellation)
    if name == "lmmse":
        eq = lmmse_equalizer(channel, LINEAR_TAPS, sigma2)
        return lambda y: run_linear(y, eq, constellation)
    if name == "dfe":
        m_fb = cfg["architecture"]["m_fb"]
        design = classical_dfe(channel, n_ff=LINEAR_TAPS - m_fb, m_fb=m_fb,
                               sigma2=sigma2)
        return lambda y: run_classical_dfe(y, design, constellation)
    if name == "map":
        return lambda y: map_detector(y, channel, constellation, sigma2)
    if name == "snn_dfe":
        if checkpoint is None:
            raise ValueError("snn_dfe sweeps need a trained checkpoint")
        net, _, _ = load_checkpoint(checkpoint)
        scfg = snn_config_from(cfg)
        expect_architecture(net, scfg.architecture.input_size,
                            scfg.architecture.alphabet_size)
        return lambda y: run_snn_dfe(y, net, scfg, mode="decision")
    if name in ("ann_dfe_encoded", "ann_dfe_raw"):
        if checkpoint is None:
            raise ValueError(f"{name} sweeps need a trained checkpoint")
        model, _, _ = load_ann_checkpoint(checkpoint)
        want = name.removeprefix("ann_dfe_")
        if model.variant != want:
            raise ValueError(f"checkpoint holds the {model.variant!r} "
                             f"variant, requested {want!r}")
        scfg = snn_config_from(cfg)
        return lambda y: run_ann_dfe(y, model, scfg, constellation,
                                     mode="decision")
    raise ValueError(f"unknown equalizer {name!r}")


def run_point(cfg: dict, ebn0_db: float, equalizer: str | None = None,
              checkpoint=None) -> BerPoint:
    """Accumulate bursts at one EbN0 until the stopping rule is met.

    Stops after any burst that pushes bit_errors past sweep.min_bit_errors
    or the counted bits past sweep.max_bits, whichever comes first.
    """
    if "derived" not in cfg:
        cfg = resolve_config(cfg)
    name = equalizer or cfg["equalizer"]
    constellation = make_constellation(cfg["constellation"])
    channel = get_channel(cfg["channel"])
    bps = constellation.bits_per_symbol
    noise = NoiseSpec.from_ebn0(ebn0_db, bps)
    runner = _make_runner(name, cfg, channel, constellation, noise.sigma2,
                          checkpoint)

    # keyed by millidB so equal grid points hash equally across configs
    mdb = int(round(ebn0_db * 1000.0))
    data_rng = substream(cfg["seed"], "sweep-data", mdb)
    noise_rng = substream(cfg["seed"], "sweep-noise", mdb)

    sw = cfg["sweep"]
    burst = int(sw["burst_symbols"])
    bit_errors = bits = symbol_errors = symbols = n_bursts = 0
    while bit_errors < sw["min_bit_errors"] and bits < sw["max_bits"]:
        tx_bits = generate_bits(burst * bps, data_rng)
        tx_idx = bits_to_indices(tx_bits, constellation)
        y = add_awgn(apply_channel(constellation.points[tx_idx], channel),
                     noise, rng=noise_rng)
        out = runner(y)
        tx_al, est_al = out.aligned_pairs(tx_idx)
        if tx_al.size == 0:
            raise RuntimeError("burst_symbols smaller than decision delay")
        err, compared = count_bit_errors(tx_al, est_al, constellation)
        bit_errors += err
        bits += compared
        symbol_errors += int(np.sum(tx_al != est_al))
        symbols += tx_al.size
        n_bursts += 1
    return BerPoint(ebn0_db=float(ebn0_db), bit_errors=bit_errors, bits=bits,
                    symbol_errors=symbol_errors, symbols=symbols,
                    n_bursts=n_bursts)


def sweep(cfg: dict, equalizer: str | None = None, checkpoint=None,
          progress=None) -> list[BerPoint]:
    """Run every grid point; multi-process when sweep.workers > 1."""
    if "derived" not in cfg:
        cfg = resolve_config(cfg)
    grid = cfg["sweep"]["ebn0_db"]
    workers = int(cfg["sweep"]["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_point, cfg, p, equalizer, checkpoint)
                       for p in grid]
            points = []
            for fut in futures:
                pt = fut.result()
                if progress is not None:
                    progress(pt)
                points.append(pt)
        return points
    points = []
    for p in grid:
        pt = run_point(cfg, p, equalizer, checkpoint)
        if progress is not None:
            progress(pt)
        points.append(pt)
    return points


def wilson_interval(errors: int, trials: int, confidence: float = 0.95):
    """Two-sided Wilson score interval for an error probability."""
    from scipy.stats import norm

    if trials <= 0:
        return (0.0, 1.0)
    z = norm.ppf(0.5 + confidence / 2.0)
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / trials
                                 + z * z / (4 * trials * trials))
    return (max(0.0, center - half), min(1.0, center + half))


def lower_with_confidence(err_a: int, n_a: int, err_b: int, n_b: int,
                          confidence: float = 0.95) -> bool:
    """One-sided two-proportion z-test: is rate A below rate B?"""
    from scipy.stats import norm

    if n_a <= 0 or n_b <= 0:
        return False
    pa, pb = err_a / n_a, err_b / n_b
    pooled = (err_a + err_b) / (n_a + n_b)
    var = pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b)
    if var <= 0.0:
        return pa < pb
    z = (pb - pa) / np.sqrt(var)
    return z > norm.ppf(confidence)
