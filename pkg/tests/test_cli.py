"""Command line driver, exercised in process via main(argv)."""

import hashlib
import json
import os

import pytest

from spikeq.equalizers.training import DivergenceError
from spikeq.harness import cli

TINY_YAML = """\
architecture: {n_ff: 4, m_fb: 1, n_hidden: 16, n_steps: 4}
encoder: {m_bits: 3}
training: {epochs: 12, burst_len: 80, val_every: 0}
sweep:
  ebn0_db: [6.0, 10.0]
  min_bit_errors: 20
  max_bits: 3000
  burst_symbols: 400
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    p = tmp_path / "tiny.yaml"
    p.write_text(TINY_YAML)
    return str(p)


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_exit_2_on_bad_channel(capsys):
    assert cli.main(["sweep", "--channel", "rayleigh", "--eq", "zf"]) == 2
    assert "channel" in capsys.readouterr().err


def test_exit_2_on_missing_channel(capsys):
    assert cli.main(["sweep", "--eq", "zf"]) == 2


def test_exit_2_on_bad_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("- a\n- list\n")
    assert cli.main(["train", "--config", str(bad)]) == 2


def test_exit_2_on_untrainable_equalizer(tiny_cfg, tmp_path, capsys):
    rc = cli.main(["train", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--eq", "zf", "--out", str(tmp_path)])
    assert rc == 2
    assert "trainable" in capsys.readouterr().err


def test_exit_2_on_missing_checkpoint(tiny_cfg, tmp_path, capsys):
    rc = cli.main(["validate", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--checkpoint", str(tmp_path / "nope.sqck"),
                   "--out", str(tmp_path)])
    assert rc == 2


def test_exit_3_on_infeasible_map(tmp_path, capsys):
    rc = cli.main(["sweep", "--channel", "proakis-a", "--eq", "map",
                   "--out", str(tmp_path)])
    assert rc == 3
    assert "map infeasible" in capsys.readouterr().err


def test_exit_4_on_divergence(tiny_cfg, tmp_path, monkeypatch, capsys):
    def blow_up(*a, **k):
        raise DivergenceError("loss left the finite range at epoch 3")

    monkeypatch.setattr(cli, "train_snn_dfe", blow_up)
    rc = cli.main(["train", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--eq", "snn_dfe", "--out", str(tmp_path)])
    assert rc == 4
    assert "diverged" in capsys.readouterr().err


def test_train_sweep_validate_compare_roundtrip(tiny_cfg, tmp_path, capsys):
    out = str(tmp_path / "run")
    rc = cli.main(["train", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--eq", "snn_dfe", "--seed", "7", "--out", out])
    assert rc == 0
    ckpt = os.path.join(out, "ckpt_snn_dfe_proakis-b.sqck")
    assert os.path.exists(ckpt)
    assert os.path.exists(os.path.join(out, "train_log.csv"))

    rc = cli.main(["sweep", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--eq", "snn_dfe", "--seed", "7", "--checkpoint", ckpt,
                   "--out", out])
    assert rc == 0
    snn_curve = os.path.join(out, "curve_snn_dfe_proakis-b.csv")
    assert os.path.exists(snn_curve)
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["equalizer"] == "snn_dfe"
    assert len(summary["points"]) == 2
    assert all(p["bits"] > 0 for p in summary["points"])
    assert all(len(p["ber_ci95"]) == 2 for p in summary["points"])

    rc = cli.main(["sweep", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--eq", "lmmse", "--seed", "7", "--out", out])
    assert rc == 0
    lm_curve = os.path.join(out, "curve_lmmse_proakis-b.csv")

    rc = cli.main(["validate", "--config", tiny_cfg, "--channel", "proakis-b",
                   "--seed", "7", "--checkpoint", ckpt, "--symbols", "2000",
                   "--out", out])
    assert rc == 0
    report = json.load(open(os.path.join(out,
                                         "validate_snn_dfe_proakis-b.json")))
    assert 0 <= report["ser_teacher_forced"] <= 1
    assert 0 <= report["ser_decision_feedback"] <= 1
    assert report["symbols_counted"] > 0

    capsys.readouterr()
    rc = cli.main(["compare", snn_curve, lm_curve, "--out", out])
    assert rc == 0
    table = capsys.readouterr().out
    assert "snn_dfe" in table and "lmmse" in table
    merged = json.load(open(os.path.join(out, "compare.json")))
    assert merged["names"] == ["snn_dfe", "lmmse"]
    for pt in merged["points"]:
        assert set(pt["order"]) == {"snn_dfe", "lmmse"}
    csv_head = open(os.path.join(out, "compare.csv")).read().splitlines()[1]
    assert csv_head == "ebn0_db,ber_snn_dfe,ber_lmmse"


def test_identical_commands_give_identical_bytes(tiny_cfg, tmp_path):
    outs = [str(tmp_path / d) for d in ("a", "b")]
    for out in outs:
        rc = cli.main(["train", "--config", tiny_cfg, "--channel",
                       "proakis-b", "--eq", "snn_dfe", "--seed", "42",
                       "--out", out])
        assert rc == 0
        rc = cli.main(["sweep", "--config", tiny_cfg, "--channel",
                       "proakis-b", "--eq", "zf", "--seed", "42",
                       "--out", out])
        assert rc == 0
    a, b = outs
    assert sha(os.path.join(a, "ckpt_snn_dfe_proakis-b.sqck")) == \
        sha(os.path.join(b, "ckpt_snn_dfe_proakis-b.sqck"))
    assert sha(os.path.join(a, "curve_zf_proakis-b.csv")) == \
        sha(os.path.join(b, "curve_zf_proakis-b.csv"))
    assert sha(os.path.join(a, "train_log.csv")) == \
        sha(os.path.join(b, "train_log.csv"))


def test_compare_rejects_malformed_curve(tmp_path, capsys):
    p = tmp_path / "weird.csv"
    p.write_text("snr,ber\n1,0.5\n")
    with pytest.raises(ValueError):
        cli.main(["compare", str(p), "--out", str(tmp_path)])
