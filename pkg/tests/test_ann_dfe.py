"""Feedforward ANN decision-feedback baselines: gradient oracle, frame
layouts, streaming-vs-batched teacher equivalence, and a training smoke."""

import numpy as np
import pytest

from spikeq.encoding import TernaryEncoderConfig
from spikeq.engine import loss_softmax_ce
from spikeq.equalizers.ann_dfe import (AnnDfe, ann_dfe_backward,
                                       ann_dfe_forward, build_ann, raw_frames,
                                       run_ann_dfe, teacher_raw_frames,
                                       train_ann_dfe)
from spikeq.equalizers.snn_dfe import (DfeArchitecture, SnnDfeConfig,
                                       teacher_frames)
from spikeq.link import (NoiseSpec, add_awgn, apply_channel, bits_to_indices,
                         generate_bits, get_channel, make_constellation)


def arch_small(m_fb=2):
    return DfeArchitecture(n_ff=3, m_fb=m_fb, m_bits=3, alphabet_size=4,
                           n_hidden=12, n_steps=1)


def snn_cfg_for(arch):
    return SnnDfeConfig(architecture=arch,
                        encoder=TernaryEncoderConfig(m_bits=3, y_max=2.0))


def burst(n, seed, channel="proakis-b", ebn0_db=12.0):
    const = make_constellation("qpsk")
    bits = generate_bits(n * const.bits_per_symbol, seed)
    idx = bits_to_indices(bits, const)
    y = add_awgn(apply_channel(const.points[idx], get_channel(channel)),
                 NoiseSpec.from_ebn0(ebn0_db, const.bits_per_symbol),
                 rng=np.random.default_rng(seed + 1))
    return idx, y, const


@pytest.mark.parametrize("variant", ["encoded", "raw"])
def test_backward_matches_finite_differences(variant):
    arch = arch_small()
    model = build_ann(arch, variant, seed=3)
    rng = np.random.default_rng(7)
    frames = rng.normal(size=(20, model.input_size))
    targets = rng.integers(0, arch.alphabet_size, size=20)

    logits, tape = ann_dfe_forward(model, frames, want_tape=True)
    _, grad_logits = loss_softmax_ce(logits, targets)
    grads = ann_dfe_backward(model, tape, grad_logits)

    eps = 1e-6
    for w, g in zip(model.parameters(), grads):
        flat = w.reshape(-1)
        for pos in rng.choice(flat.size, size=25, replace=False):
            keep = flat[pos]
            flat[pos] = keep + eps
            lp, _ = loss_softmax_ce(ann_dfe_forward(model, frames), targets)
            flat[pos] = keep - eps
            lm, _ = loss_softmax_ce(ann_dfe_forward(model, frames), targets)
            flat[pos] = keep
            fd = (lp - lm) / (2 * eps)
            assert abs(g.reshape(-1)[pos] - fd) < 1e-7 * max(1.0, abs(fd))


def test_raw_frame_layout():
    arch = DfeArchitecture(n_ff=2, m_fb=1, m_bits=3, alphabet_size=4,
                           n_hidden=4, n_steps=1)
    y = np.array([1 + 2j, 3 - 4j])
    fb = np.array([[0.5 - 0.5j], [-1 + 1j]])
    rows = raw_frames(y, fb, arch)
    # row k: [Re newest, Re older | Im newest, Im older | Re fb | Im fb]
    assert rows.shape == (2, 2 * (2 + 1))
    assert np.allclose(rows[0], [1, 0, 2, 0, 0.5, -0.5])
    assert np.allclose(rows[1], [3, 1, -4, 2, -1, 1])


def test_teacher_raw_frames_prehistory_feeds_zero_point():
    arch = DfeArchitecture(n_ff=2, m_fb=2, m_bits=3, alphabet_size=4,
                           n_hidden=4, n_steps=1)
    idx, y, const = burst(6, seed=4)
    frames, targets = teacher_raw_frames(y, idx, arch, const)
    d = arch.decision_delay
    assert np.array_equal(targets[d:], idx[: 6 - d])
    # frame deciding symbol 0 has no decided predecessors: both fb slots zero
    assert np.allclose(frames[d, 2 * arch.n_ff:], 0.0)
    # frame deciding symbol 2 feeds back points of symbols 1 and 0
    row = frames[d + 2, 2 * arch.n_ff:]
    pts = const.points[[idx[1], idx[0]]]
    assert np.allclose(row, np.concatenate([pts.real, pts.imag]))


@pytest.mark.parametrize("variant", ["encoded", "raw"])
def test_stream_teacher_matches_batched(variant):
    arch = arch_small()
    cfg = snn_cfg_for(arch)
    model = build_ann(arch, variant, seed=9)
    idx, y, const = burst(100, seed=11)
    out = run_ann_dfe(y, model, snn_cfg=cfg, constellation=const,
                      mode="teacher", true_indices=idx)
    if variant == "encoded":
        frames, _ = teacher_frames(y, idx, cfg)
    else:
        frames, _ = teacher_raw_frames(y, idx, arch, const)
    batched = ann_dfe_forward(model, frames).argmax(axis=1)
    assert np.array_equal(out.indices, batched)


def test_variant_validation():
    arch = arch_small()
    with pytest.raises(ValueError):
        build_ann(arch, "mystery")
    model = build_ann(arch, "raw", seed=0)
    with pytest.raises(ValueError):
        ann_dfe_forward(model, np.zeros((2, model.input_size + 1)))
    with pytest.raises(ValueError):
        run_ann_dfe(np.zeros(4, dtype=complex), model, mode="teacher")
    enc_model = build_ann(arch, "encoded", seed=0)
    with pytest.raises(ValueError):
        run_ann_dfe(np.zeros(4, dtype=complex), enc_model)  # no snn_cfg


@pytest.mark.parametrize("variant", ["encoded", "raw"])
def test_quick_train_identity_channel(variant):
    arch = DfeArchitecture(n_ff=2, m_fb=1, m_bits=3, alphabet_size=4,
                           n_hidden=24, n_steps=1)
    cfg = snn_cfg_for(arch) if variant == "encoded" else None
    model, log = train_ann_dfe(arch, variant, get_channel("identity"),
                               ebn0_db=14.0, epochs=300, master_seed=5,
                               snn_cfg=cfg, burst_len=120, lr0=3e-3)
    assert log.final_loss < 0.3
    assert log.losses[0] > 2 * log.final_loss

    const = make_constellation("qpsk")
    bits = generate_bits(3000 * 2, 61)
    idx = bits_to_indices(bits, const)
    y = add_awgn(const.points[idx], NoiseSpec.from_ebn0(14.0, 2),
                 rng=np.random.default_rng(62))
    out = run_ann_dfe(y, model, snn_cfg=cfg, constellation=const)
    tx, est = out.aligned_pairs(idx)
    assert np.mean(tx != est) < 0.02
