"""Checkpoint container: roundtrips, corruption detection, determinism."""

import numpy as np
import pytest

from spikeq.checkpoint import (CheckpointError, CorruptCheckpointError,
                               checkpoint_kind, expect_architecture,
                               load_ann_checkpoint, load_checkpoint,
                               save_ann_checkpoint, save_checkpoint)
from spikeq.engine import forward, init_network
from spikeq.equalizers.ann_dfe import build_ann
from spikeq.equalizers.snn_dfe import DfeArchitecture
from spikeq.neuron import LIF_HIDDEN, LI_READOUT
from spikeq.optim import AdamState, adam_update


def _net(seed=0):
    return init_network([(10, 6, "lif", True, LIF_HIDDEN),
                         (6, 4, "li", False, LI_READOUT)], seed=seed)


def _arch():
    return DfeArchitecture(n_ff=3, m_fb=2, m_bits=4, alphabet_size=4,
                           n_hidden=6, n_steps=5)


def test_snn_roundtrip_exact(tmp_path):
    net = _net(3)
    opt = AdamState.for_params(net.parameters())
    adam_update(net.parameters(), [0.1 * p for p in net.parameters()],
                opt, lr=1e-3)
    path = tmp_path / "r.sqck"
    save_checkpoint(path, net, opt, metadata={"note": "x", "epochs": 3})
    net2, opt2, meta = load_checkpoint(path)
    for a, b in zip(net.parameters(), net2.parameters()):
        assert np.array_equal(a, b)
    for a, b in zip(opt.m + opt.v, opt2.m + opt2.v):
        assert np.array_equal(a, b)
    assert opt2.step == 1 and meta == {"note": "x", "epochs": 3}
    assert net2.layers[0].neuron.tau_m == 10.0
    assert net2.layers[0].w_rec is not None
    # loaded net behaves identically
    x = np.random.default_rng(1).normal(size=(2, 10))
    assert np.array_equal(forward(net, x, 5).v_out, forward(net2, x, 5).v_out)


def test_snn_roundtrip_without_optimizer(tmp_path):
    path = tmp_path / "n.sqck"
    save_checkpoint(path, _net(), None, metadata={})
    net2, opt2, _ = load_checkpoint(path)
    assert opt2 is None and len(net2.layers) == 2


def test_ann_roundtrip(tmp_path):
    model = build_ann(_arch(), "raw", seed=5)
    path = tmp_path / "a.sqck"
    save_ann_checkpoint(path, model, metadata={"k": 1})
    m2, opt2, meta = load_ann_checkpoint(path)
    assert np.array_equal(m2.w1, model.w1) and np.array_equal(m2.w2, model.w2)
    assert m2.variant == "raw" and m2.arch == model.arch
    assert opt2 is None and meta == {"k": 1}


def test_kind_discrimination(tmp_path):
    sp = tmp_path / "s.sqck"
    ap = tmp_path / "a.sqck"
    save_checkpoint(sp, _net(), None, {})
    save_ann_checkpoint(ap, build_ann(_arch(), "encoded", seed=1))
    assert checkpoint_kind(sp) == "snn" and checkpoint_kind(ap) == "ann"
    with pytest.raises(CheckpointError):
        load_checkpoint(ap)
    with pytest.raises(CheckpointError):
        load_ann_checkpoint(sp)


def test_save_is_deterministic(tmp_path):
    net = _net(9)
    p1, p2 = tmp_path / "1.sqck", tmp_path / "2.sqck"
    save_checkpoint(p1, net, None, {"seed": 9})
    save_checkpoint(p2, net, None, {"seed": 9})
    assert p1.read_bytes() == p2.read_bytes()


def test_corrupt_payload_detected(tmp_path):
    path = tmp_path / "c.sqck"
    save_checkpoint(path, _net(), None, {})
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(path)


def test_truncated_file_detected(tmp_path):
    path = tmp_path / "t.sqck"
    save_checkpoint(path, _net(), None, {})
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 20])
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(path)


def test_bad_magic_detected(tmp_path):
    path = tmp_path / "m.sqck"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(path)


def test_expect_architecture():
    net = _net()
    expect_architecture(net, 10, 4)
    with pytest.raises(CheckpointError):
        expect_architecture(net, 12, 4)
    with pytest.raises(CheckpointError):
        expect_architecture(net, 10, 2)
