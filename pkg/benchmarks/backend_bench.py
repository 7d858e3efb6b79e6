"""Throughput comparison of the two streaming backends.

Runs the same burst through the compiled kernel and the numpy fallback,
checks that the emitted decisions are identical, and reports symbols/s.
Also times one teacher-forced training epoch for context, since training
uses the shared batched path regardless of backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spikeq import backends
from spikeq.equalizers.snn_dfe import build_snn, run_snn_dfe, train_snn_dfe
from spikeq.harness.config import preset, resolve_config, snn_config_from
from spikeq.link import (NoiseSpec, add_awgn, apply_channel, bits_to_indices,
                         generate_bits, get_channel, make_constellation)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--channel", default="proakis-b",
                    choices=("proakis-a", "proakis-b", "proakis-c"))
    ap.add_argument("--symbols", type=int, default=20000)
    ap.add_argument("--hidden", type=int, default=None,
                    help="override the preset hidden-layer size")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = preset(args.channel)
    if args.hidden:
        cfg["architecture"]["n_hidden"] = args.hidden
    cfg = resolve_config(cfg)
    scfg = snn_config_from(cfg)
    channel = get_channel(cfg["channel"])
    const = make_constellation(cfg["constellation"])
    net = build_snn(scfg, seed=args.seed)

    bps = const.bits_per_symbol
    rng = np.random.default_rng(args.seed)
    bits = generate_bits(args.symbols * bps, rng)
    idx = bits_to_indices(bits, const)
    y = add_awgn(apply_channel(const.points[idx], channel),
                 NoiseSpec.from_ebn0(cfg["training"]["ebn0_db"], bps),
                 rng=rng)

    print(f"channel {args.channel}  hidden {scfg.architecture.n_hidden}  "
          f"input {scfg.architecture.input_size}  "
          f"symbols {args.symbols}  active backend {backends.active_backend()}")

    avail = ["numpy"] + (["ext"] if backends.active_backend() == "ext"
                         or backends._ext is not None else [])
    results = {}
    outputs = {}
    for name in avail:
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = run_snn_dfe(y, net, scfg, backend=name)
            best = min(best, time.perf_counter() - t0)
        results[name] = args.symbols / best
        outputs[name] = out.indices
        print(f"  {name:6s} {results[name]:10.0f} sym/s "
              f"({best:.3f} s best of {args.repeat})")

    if len(outputs) == 2:
        same = np.array_equal(outputs["numpy"], outputs["ext"])
        print(f"  decisions identical: {same}")
        print(f"  speedup ext/numpy: {results['ext'] / results['numpy']:.2f}x")
        if not same:
            raise SystemExit("backend outputs disagree")

    t0 = time.perf_counter()
    train_snn_dfe(scfg, channel, cfg["training"]["ebn0_db"], epochs=5,
                  master_seed=args.seed)
    dt = (time.perf_counter() - t0) / 5
    print(f"  batched training epoch (burst 200): {dt * 1000:.1f} ms "
          f"(backend-independent)")


if __name__ == "__main__":
    main()
