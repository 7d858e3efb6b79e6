"""Output files: atomic writes, curve/train-log CSVs with config preamble.

Every emitted file embeds the resolved config hash and master seed as
comment lines, so results stay attributable. Comment lines start with '#';
the CSV body keeps the pinned column headers.
"""

from __future__ import annotations

import json
import os
import tempfile


def atomic_write_text(path, text: str):
    path = str(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".out-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_preamble(cfg: dict, extra: dict | None = None) -> str:
    from .config import config_hash

    plain = {k: v for k, v in cfg.items() if k != "derived"}
    lines = [f"# config_hash: {config_hash(cfg)}",
             f"# seed: {cfg.get('seed')}"]
    for key, val in (extra or {}).items():
        lines.append(f"# {key}: {val}")
    lines.append(f"# config: {json.dumps(plain, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def write_curve_csv(path, points, cfg: dict, extra: dict | None = None):
    """curve_<eq>_<channel>.csv body: ebn0_db,bit_errors,bits,ber."""
    rows = ["ebn0_db,bit_errors,bits,ber"]
    for p in points:
        rows.append(f"{p.ebn0_db:g},{p.bit_errors},{p.bits},{p.ber:.10e}")
    atomic_write_text(path, config_preamble(cfg, extra) + "\n".join(rows) + "\n")


def write_train_log_csv(path, log_rows, cfg: dict):
    """train_log.csv body: epoch,loss,lr,val_ser (blank when not measured)."""
    rows = ["epoch,loss,lr,val_ser"]
    for epoch, loss, lr, val_ser in log_rows:
        tail = "" if val_ser is None else f"{val_ser:.10e}"
        rows.append(f"{epoch},{loss:.10e},{lr:.10e},{tail}")
    atomic_write_text(path, config_preamble(cfg) + "\n".join(rows) + "\n")


def write_json(path, payload: dict):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True)
                      + "\n")


def read_curve_csv(path):
    """Parse a curve file -> (meta dict, list of row dicts)."""
    meta = {}
    rows = []
    header = None
    with open(str(path), "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, val = body.partition(":")
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            vals = line.split(",")
            rows.append({k: v for k, v in zip(header, vals)})
    if header != ["ebn0_db", "bit_errors", "bits", "ber"]:
        raise ValueError(f"{path}: unexpected curve header {header}")
    for r in rows:
        r["ebn0_db"] = float(r["ebn0_db"])
        r["bit_errors"] = int(r["bit_errors"])
        r["bits"] = int(r["bits"])
        r["ber"] = float(r["ber"])
    return meta, rows
