"""Adam update math and the multiplicative learning-rate schedule."""

import numpy as np
import pytest

from spikeq.optim import AdamState, adam_update, lr_at


def test_first_step_is_lr_sign():
    """Bias correction makes the first step lr * g / (|g| + eps)."""
    p = np.array([1.0, -2.0, 0.5])
    g = np.array([3.0, -0.01, 1e-12])
    state = AdamState.for_params([p])
    before = p.copy()
    adam_update([p], [g], state, lr=1e-3)
    expect = before - 1e-3 * g / (np.abs(g) + 1e-8)
    assert np.allclose(p, expect, atol=1e-15)
    assert state.step == 1


def test_two_steps_frozen_scalar():
    """Hand-computed two-step trajectory for a constant gradient."""
    p = np.array([0.0])
    state = AdamState.for_params([p])
    for _ in range(2):
        adam_update([p], [np.array([2.0])], state, lr=0.1)
    # constant gradient: bias-corrected m_hat = g, v_hat = g^2 every step
    expect = -0.1 * 2.0 / (2.0 + 1e-8) * 2
    assert p[0] == pytest.approx(expect, rel=1e-9)


def test_moment_accumulators_update():
    p = np.array([0.0])
    g = np.array([4.0])
    state = AdamState.for_params([p])
    adam_update([p], [g], state, lr=1e-3)
    assert state.m[0][0] == pytest.approx(0.1 * 4.0)
    assert state.v[0][0] == pytest.approx(0.001 * 16.0)


def test_update_is_in_place():
    p = np.array([1.0, 1.0])
    state = AdamState.for_params([p])
    out = adam_update([p], [np.array([1.0, -1.0])], state, lr=1e-2)
    assert out[0] is p
    assert p[0] < 1.0 < p[1]


def test_shape_mismatch_rejected():
    p = np.array([1.0, 2.0])
    state = AdamState.for_params([p])
    with pytest.raises(ValueError):
        adam_update([p], [np.array([1.0])], state, lr=1e-3)
    with pytest.raises(ValueError):
        adam_update([p], [np.array([1.0, 1.0])], state, lr=0.0)


def test_lr_schedule_frozen():
    assert lr_at(0) == pytest.approx(1e-3, abs=1e-18)
    assert lr_at(1) == pytest.approx(1e-3 * 0.9992, abs=1e-18)
    # after the full 10000-epoch schedule (value cross-checked at 30-digit
    # precision: 1e-3 * 0.9992^10000 = 3.3439029219538e-7)
    assert lr_at(10_000) == pytest.approx(3.3439029e-07, rel=1e-6)


def test_lr_schedule_monotone_positive():
    vals = np.array([lr_at(e) for e in range(0, 10_001, 500)])
    assert np.all(np.diff(vals) < 0) and np.all(vals > 0)
