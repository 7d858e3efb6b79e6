"""Binary checkpoint container for trained receivers.

Layout: magic "SQCK", little-endian uint32 format version, uint32 header
length, UTF-8 JSON header, then the raw weight blocks (row-major,
little-endian float64) in header order, and a trailing CRC-32 (zlib) over
everything that precedes it. The header's "model" key distinguishes
spiking networks from the ANN baselines.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib

import numpy as np

from .engine import Layer, Network
from .neuron import NeuronParams, SurrogateSpec
from .optim import AdamState

MAGIC = b"SQCK"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


def _write_container(path, header: dict, blocks: list[np.ndarray]):
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += struct.pack("<II", FORMAT_VERSION, len(header_bytes))
    body += header_bytes
    for arr in blocks:
        body += np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C")
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)

    path = str(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(bytes(body))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_container(path):
    with open(str(path), "rb") as f:
        raw = f.read()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise CorruptCheckpointError("not a checkpoint file (bad magic)")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptCheckpointError("checksum mismatch, file is damaged")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version}")
    header_end = 12 + header_len
    if header_end > len(raw) - 4:
        raise CorruptCheckpointError("header overruns the file")
    try:
        header = json.loads(raw[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpointError(f"unreadable header: {e}") from e

    offset = header_end
    arrays = {}
    for spec in header.get("blocks", []):
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = count * 8
        if offset + nbytes > len(raw) - 4:
            raise CorruptCheckpointError(
                f"block {spec['name']} exceeds file size (shape "
                f"{spec['shape']} declared in header)")
        arr = np.frombuffer(raw[offset:offset + nbytes], dtype="<f8")
        arrays[spec["name"]] = arr.reshape(spec["shape"]).copy()
        offset += nbytes
    if offset != len(raw) - 4:
        raise CorruptCheckpointError("trailing bytes after declared blocks")
    return header, arrays


def _neuron_dict(p: NeuronParams) -> dict:
    return {"tau_m": p.tau_m, "tau_s": p.tau_s, "v_th": p.v_th,
            "v_rest": p.v_rest, "dt": p.dt, "integration": p.integration}


def _optimizer_header(opt: AdamState | None) -> dict | None:
    if opt is None:
        return None
    return {"step": opt.step, "beta1": opt.beta1, "beta2": opt.beta2,
            "eps": opt.eps}


def _load_optimizer(header, arrays, n_params: int) -> AdamState | None:
    oh = header.get("optimizer")
    if oh is None:
        return None
    m = [arrays[f"adam.m{j}"] for j in range(n_params)]
    v = [arrays[f"adam.v{j}"] for j in range(n_params)]
    return AdamState(m=m, v=v, step=oh["step"], beta1=oh["beta1"],
                     beta2=oh["beta2"], eps=oh["eps"])


def save_checkpoint(path, net: Network, opt: AdamState | None = None,
                    metadata: dict | None = None):
    """Write a spiking network (and optional optimizer state) atomically."""
    blocks: list[np.ndarray] = []
    spec: list[dict] = []

    def add(name, arr):
        blocks.append(arr)
        spec.append({"name": name, "shape": list(arr.shape)})

    for idx, layer in enumerate(net.layers):
        add(f"layer{idx}.w_in", layer.w_in)
        if layer.w_rec is not None:
            add(f"layer{idx}.w_rec", layer.w_rec)
    if opt is not None:
        for j, (m, v) in enumerate(zip(opt.m, opt.v)):
            add(f"adam.m{j}", m)
            add(f"adam.v{j}", v)

    header = {
        "format_version": FORMAT_VERSION,
        "model": "snn",
        "layers": [{
            "fan_in": l.fan_in, "n_neurons": l.n_neurons, "cell": l.cell,
            "has_recurrence": l.w_rec is not None, "reset": l.reset,
            "self_recurrence": l.self_recurrence,
            "neuron": _neuron_dict(l.neuron),
        } for l in net.layers],
        "surrogate": {"kind": net.surrogate.kind, "slope": net.surrogate.slope},
        "optimizer": _optimizer_header(opt),
        "metadata": metadata or {},
        "blocks": spec,
    }
    _write_container(path, header, blocks)


def load_checkpoint(path):
    """Read a spiking-network checkpoint -> (Network, AdamState|None, meta)."""
    header, arrays = _read_container(path)
    if header.get("model") != "snn":
        raise CheckpointError(f"expected an snn checkpoint, found "
                              f"{header.get('model')!r}")
    layers = []
    for idx, lh in enumerate(header["layers"]):
        w_in = arrays[f"layer{idx}.w_in"]
        if list(w_in.shape) != [lh["fan_in"], lh["n_neurons"]]:
            raise CorruptCheckpointError(f"layer {idx} w_in shape mismatch")
        w_rec = arrays.get(f"layer{idx}.w_rec") if lh["has_recurrence"] else None
        layers.append(Layer(
            w_in=w_in, w_rec=w_rec, cell=lh["cell"],
            neuron=NeuronParams(**lh["neuron"]),
            reset=lh["reset"], self_recurrence=lh["self_recurrence"]))
    net = Network(layers=layers, surrogate=SurrogateSpec(**header["surrogate"]))
    opt = _load_optimizer(header, arrays, len(net.parameters()))
    return net, opt, header.get("metadata", {})


def save_ann_checkpoint(path, model, opt: AdamState | None = None,
                        metadata: dict | None = None):
    """Write an ANN baseline (AnnDfe) in the same container format."""
    arch = model.arch
    blocks = [("w1", model.w1), ("w2", model.w2)]
    if opt is not None:
        for j, (m, v) in enumerate(zip(opt.m, opt.v)):
            blocks.append((f"adam.m{j}", m))
            blocks.append((f"adam.v{j}", v))
    header = {
        "format_version": FORMAT_VERSION,
        "model": "ann",
        "variant": model.variant,
        "architecture": {"n_ff": arch.n_ff, "m_fb": arch.m_fb,
                         "m_bits": arch.m_bits,
                         "alphabet_size": arch.alphabet_size,
                         "n_hidden": arch.n_hidden, "n_steps": arch.n_steps},
        "optimizer": _optimizer_header(opt),
        "metadata": metadata or {},
        "blocks": [{"name": n, "shape": list(a.shape)} for n, a in blocks],
    }
    _write_container(path, header, [a for _, a in blocks])


def load_ann_checkpoint(path):
    """Read an ANN checkpoint -> (AnnDfe, AdamState|None, metadata)."""
    from .equalizers.ann_dfe import AnnDfe
    from .equalizers.snn_dfe import DfeArchitecture

    header, arrays = _read_container(path)
    if header.get("model") != "ann":
        raise CheckpointError(f"expected an ann checkpoint, found "
                              f"{header.get('model')!r}")
    arch = DfeArchitecture(**header["architecture"])
    model = AnnDfe(w1=arrays["w1"], w2=arrays["w2"], arch=arch,
                   variant=header["variant"])
    opt = _load_optimizer(header, arrays, 2)
    return model, opt, header.get("metadata", {})


def checkpoint_kind(path) -> str:
    """'snn' or 'ann' from the container header."""
    header, _ = _read_container(path)
    return header.get("model", "unknown")


def expect_architecture(net: Network, input_size: int, output_size: int):
    """Raise if a loaded network does not fit the configured receiver."""
    if net.input_size != input_size or net.output_size != output_size:
        raise CheckpointError(
            f"checkpoint network is {net.input_size}->{net.output_size}, "
            f"configuration requires {input_size}->{output_size}")
