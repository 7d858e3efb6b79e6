"""Command line entry point.

Subcommands: train (fit a receiver, write checkpoint + train_log.csv),
sweep (BER over an EbN0 grid, write curve CSV + summary.json), validate
(decision-feedback vs teacher-forced SER for a checkpoint), compare
(merge curve CSVs into a wide table plus per-point orderings).

Exit codes: 0 success, 2 configuration or input error, 3 MAP detector
infeasible for the requested channel/constellation, 4 training diverged.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys

import numpy as np

from ..checkpoint import (CheckpointError, checkpoint_kind,
                          load_ann_checkpoint, load_checkpoint,
                          save_ann_checkpoint, save_checkpoint)
from ..equalizers.ann_dfe import run_ann_dfe, train_ann_dfe
from ..equalizers.map_detector import MapInfeasibleError, map_feasible
from ..equalizers.snn_dfe import run_snn_dfe, train_snn_dfe
from ..equalizers.training import DivergenceError
from ..link import (NoiseSpec, add_awgn, apply_channel, bits_to_indices,
                    generate_bits, get_channel, make_constellation)
from .ber import sweep as run_sweep
from .ber import wilson_interval
from .config import (_BASE, EQUALIZERS, ConfigError, apply_profile,
                     config_hash, load_config, merge_config, preset,
                     resolve_config, snn_config_from)
from .io import read_curve_csv, write_curve_csv, write_json, write_train_log_csv
from .rng import substream

TRAINABLE = ("snn_dfe", "ann_dfe_encoded", "ann_dfe_raw")
PRESET_NAMES = ("proakis-a", "proakis-b", "proakis-c")


def _channel_slug(cfg: dict) -> str:
    ch = cfg["channel"]
    return ch if isinstance(ch, str) else "custom"


def _assemble(args) -> dict:
    """preset -> config file -> CLI flags -> profile -> numeric overrides."""
    file_cfg = load_config(args.config) if getattr(args, "config", None) else {}
    channel = getattr(args, "channel", None) or file_cfg.get("channel")
    if channel is None:
        raise ConfigError("channel: pass --channel or a config file that "
                          "names one")
    if isinstance(channel, str) and channel in PRESET_NAMES:
        cfg = preset(channel)
    else:
        cfg = copy.deepcopy(_BASE)
        cfg["channel"] = channel
    merge_config(cfg, file_cfg)
    if getattr(args, "channel", None):
        cfg["channel"] = args.channel
    if getattr(args, "eq", None):
        cfg["equalizer"] = args.eq
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "profile", None):
        apply_profile(cfg, args.profile)
    if getattr(args, "epochs", None) is not None:
        cfg["training"]["epochs"] = args.epochs
    if getattr(args, "workers", None) is not None:
        cfg["sweep"]["workers"] = args.workers
    ebn0 = getattr(args, "ebn0", None)
    if ebn0 is not None:
        if args.command == "sweep":
            cfg["sweep"]["ebn0_db"] = [float(v) for v in ebn0.split(",")]
        else:
            cfg["training"]["ebn0_db"] = float(ebn0)
    return resolve_config(cfg)


def cmd_train(args) -> int:
    cfg = _assemble(args)
    eq = cfg["equalizer"]
    if eq not in TRAINABLE:
        raise ConfigError(f"equalizer: {eq!r} has no trainable parameters "
                          f"(choose from {TRAINABLE})")
    os.makedirs(args.out, exist_ok=True)
    slug = _channel_slug(cfg)
    channel = get_channel(cfg["channel"])
    scfg = snn_config_from(cfg)
    t = cfg["training"]
    every = max(1, t["epochs"] // 20)

    def progress(epoch, loss, lr, val_ser):
        if epoch % every == 0 or epoch == t["epochs"] - 1 or val_ser is not None:
            line = f"epoch {epoch:5d}  loss {loss:10.6f}  lr {lr:.3e}"
            if val_ser is not None:
                line += f"  val_ser {val_ser:.4e}"
            print(line, flush=True)

    meta = {"config_hash": config_hash(cfg), "seed": cfg["seed"],
            "equalizer": eq, "channel": slug, "ebn0_db": t["ebn0_db"],
            "epochs": t["epochs"]}
    ckpt = os.path.join(args.out, f"ckpt_{eq}_{slug}.sqck")
    kwargs = dict(burst_len=t["burst_len"], lr0=t["lr0"],
                  decay_per_epoch=t["decay_per_epoch"],
                  val_every=t["val_every"], val_symbols=t["val_symbols"],
                  progress=progress)
    if eq == "snn_dfe":
        net, log = train_snn_dfe(scfg, channel, t["ebn0_db"], t["epochs"],
                                 cfg["seed"], **kwargs)
        save_checkpoint(ckpt, net, log.opt, metadata=meta)
    else:
        variant = eq.removeprefix("ann_dfe_")
        model, log = train_ann_dfe(scfg.architecture, variant, channel,
                                   t["ebn0_db"], t["epochs"], cfg["seed"],
                                   snn_cfg=scfg, **kwargs)
        save_ann_checkpoint(ckpt, model, log.opt, metadata=meta)
    write_train_log_csv(os.path.join(args.out, "train_log.csv"), log.rows, cfg)
    print(f"final loss {log.final_loss:.6f}")
    print(f"checkpoint {ckpt}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _assemble(args)
    eq = cfg["equalizer"]
    os.makedirs(args.out, exist_ok=True)
    slug = _channel_slug(cfg)
    if eq == "map":
        const = make_constellation(cfg["constellation"])
        ch = get_channel(cfg["channel"])
        if not map_feasible(ch, const.size):
            raise MapInfeasibleError(
                f"map: {const.size}^{len(ch.taps) - 1} trellis states exceed "
                f"the 4096-state budget for channel {slug!r}")

    def progress(pt):
        print(f"ebn0 {pt.ebn0_db:6.2f} dB  ber {pt.ber:.4e}  "
              f"({pt.bit_errors} errors / {pt.bits} bits)", flush=True)

    points = run_sweep(cfg, equalizer=eq, checkpoint=args.checkpoint,
                       progress=progress)
    curve = os.path.join(args.out, f"curve_{eq}_{slug}.csv")
    write_curve_csv(curve, points, cfg,
                    extra={"equalizer": eq, "channel": slug})
    summary = {
        "equalizer": eq, "channel": slug, "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "points": [{
            "ebn0_db": p.ebn0_db, "ber": p.ber, "ser": p.ser,
            "bit_errors": p.bit_errors, "bits": p.bits,
            "symbol_errors": p.symbol_errors, "symbols": p.symbols,
            "n_bursts": p.n_bursts,
            "ber_ci95": list(wilson_interval(p.bit_errors, p.bits)),
        } for p in points],
    }
    write_json(os.path.join(args.out, "summary.json"), summary)
    print(f"curve {curve}")
    return 0


def cmd_validate(args) -> int:
    cfg = _assemble(args)
    const = make_constellation(cfg["constellation"])
    channel = get_channel(cfg["channel"])
    scfg = snn_config_from(cfg)
    ebn0 = cfg["training"]["ebn0_db"]
    n = args.symbols
    bps = const.bits_per_symbol

    data_rng = substream(cfg["seed"], "validate-data")
    noise_rng = substream(cfg["seed"], "validate-noise")
    bits = generate_bits(n * bps, data_rng)
    idx = bits_to_indices(bits, const)
    y = add_awgn(apply_channel(const.points[idx], channel),
                 NoiseSpec.from_ebn0(ebn0, bps), rng=noise_rng)

    kind = checkpoint_kind(args.checkpoint)
    if kind == "snn":
        net, _, _ = load_checkpoint(args.checkpoint)
        out_df = run_snn_dfe(y, net, scfg, mode="decision")
        out_tf = run_snn_dfe(y, net, scfg, mode="teacher", true_indices=idx)
        eq_name = "snn_dfe"
    elif kind == "ann":
        model, _, _ = load_ann_checkpoint(args.checkpoint)
        out_df = run_ann_dfe(y, model, scfg, const, mode="decision")
        out_tf = run_ann_dfe(y, model, scfg, const, mode="teacher",
                             true_indices=idx)
        eq_name = f"ann_dfe_{model.variant}"
    else:
        raise CheckpointError(f"unknown checkpoint kind {kind!r}")

    def ser(out):
        tx, est = out.aligned_pairs(idx)
        return float(np.mean(tx != est)), int(tx.size)

    ser_df, counted = ser(out_df)
    ser_tf, _ = ser(out_tf)
    report = {"equalizer": eq_name, "channel": _channel_slug(cfg),
              "config_hash": config_hash(cfg), "seed": cfg["seed"],
              "ebn0_db": float(ebn0), "symbols": n,
              "symbols_counted": counted,
              "ser_decision_feedback": ser_df, "ser_teacher_forced": ser_tf}
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"validate_{eq_name}_{_channel_slug(cfg)}.json")
    write_json(path, report)
    print(f"decision-feedback SER {ser_df:.6e}")
    print(f"teacher-forced SER   {ser_tf:.6e}")
    print(f"report {path}")
    return 0


def cmd_compare(args) -> int:
    names, curves = [], []
    for path in args.curves:
        meta, rows = read_curve_csv(path)
        name = meta.get("equalizer") or os.path.splitext(
            os.path.basename(path))[0]
        while name in names:
            name += "+"
        names.append(name)
        curves.append({r["ebn0_db"]: r["ber"] for r in rows})

    grid = sorted(set().union(*[set(c) for c in curves]))
    lines = ["# sources: " + ", ".join(args.curves),
             "ebn0_db," + ",".join(f"ber_{n}" for n in names)]
    points = []
    for x in grid:
        cells = []
        here = {}
        for name, c in zip(names, curves):
            if x in c:
                cells.append(f"{c[x]:.10e}")
                here[name] = c[x]
            else:
                cells.append("")
        lines.append(f"{x:g}," + ",".join(cells))
        entry = {"ebn0_db": x, "ber": here}
        if len(here) >= 2:
            entry["order"] = sorted(here, key=lambda n: here[n])
        points.append(entry)

    os.makedirs(args.out, exist_ok=True)
    from .io import atomic_write_text
    csv_path = os.path.join(args.out, "compare.csv")
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    write_json(os.path.join(args.out, "compare.json"),
               {"files": list(args.curves), "names": names, "points": points})

    width = max(12, max(len(n) for n in names) + 2)
    print("ebn0_db  " + "".join(n.ljust(width) for n in names))
    for entry in points:
        row = f"{entry['ebn0_db']:7.2f}  "
        for n in names:
            v = entry["ber"].get(n)
            row += (f"{v:.3e}".ljust(width) if v is not None
                    else "-".ljust(width))
        print(row)
    print(f"merged table {csv_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spikeq",
        description="Spiking-network decision-feedback equalization over "
                    "frequency-selective channels: train, sweep, validate, "
                    "compare.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_eq=True):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--channel",
                        help="channel preset (proakis-a|proakis-b|proakis-c)")
        if with_eq:
            sp.add_argument("--eq", choices=EQUALIZERS, help="equalizer")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--profile", choices=("smoke", "full"),
                        help="smoke: 200 epochs, 3-point grid; full: 10000 "
                             "epochs, complete grid")
        sp.add_argument("--out", default=".", help="output directory")

    t = sub.add_parser("train", help="fit a receiver, write a checkpoint")
    common(t)
    t.add_argument("--epochs", type=int, help="override training.epochs")
    t.add_argument("--ebn0", help="training EbN0 in dB")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="measure BER over the EbN0 grid")
    common(s)
    s.add_argument("--checkpoint", help="trained receiver (snn/ann sweeps)")
    s.add_argument("--ebn0", help="comma-separated EbN0 grid override, dB")
    s.add_argument("--workers", type=int, help="processes for the sweep")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate",
                       help="decision-feedback vs teacher-forced SER")
    common(v, with_eq=False)
    v.add_argument("--checkpoint", required=True)
    v.add_argument("--ebn0", help="operating EbN0 in dB (default: the "
                                  "training point)")
    v.add_argument("--symbols", type=int, default=100_000)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("compare", help="merge curve CSVs, print orderings")
    c.add_argument("curves", nargs="+", help="curve_*.csv files")
    c.add_argument("--out", default=".", help="output directory")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (CheckpointError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except MapInfeasibleError as e:
        print(f"map infeasible: {e}", file=sys.stderr)
        return 3
    except DivergenceError as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
