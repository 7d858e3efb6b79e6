"""Finite-difference gradient checking helpers shared by the test modules.

All checks run the engine in smooth mode, where the spike nonlinearity is
the continuous gate whose exact derivative is the surrogate; backprop
through the unrolled dynamics is then exact and must match central
differences at every parameter.
"""

import numpy as np

from spikeq.engine import backward, forward, init_network, loss_softmax_ce
from spikeq.neuron import LIF_HIDDEN, LI_READOUT


def toy_net(seed, recurrent=True, reset="zero", n_in=4, n_hidden=3, n_out=2):
    return init_network(
        [(n_in, n_hidden, "lif", recurrent, LIF_HIDDEN, {"reset": reset}),
         (n_hidden, n_out, "li", False, LI_READOUT)],
        seed=seed)


def loss_of(net, x, targets, n_steps, drive_mode):
    tape = forward(net, x, n_steps, drive_mode, smooth=True)
    return loss_softmax_ce(tape.v_out, targets)[0]


def bptt_grads(net, x, targets, n_steps, drive_mode):
    tape = forward(net, x, n_steps, drive_mode, smooth=True)
    _, gv = loss_softmax_ce(tape.v_out, targets)
    return backward(net, tape, gv)


def max_rel_error(net, x, targets, n_steps=5, drive_mode="constant",
                  eps=1e-6, floor=1e-5):
    """Worst relative disagreement between BPTT and central differences.

    The denominator is floored at `floor`: central differences of a float64
    loss carry ~1e-10 absolute noise, so gradients below the floor are
    effectively compared absolutely (at floor * tolerance) instead of
    drowning the metric in FD roundoff.
    """
    grads = bptt_grads(net, x, targets, n_steps, drive_mode)
    worst = 0.0
    for idx, layer in enumerate(net.layers):
        for name in ("w_in", "w_rec"):
            w = getattr(layer, name)
            if w is None:
                continue
            g = grads[idx][name]
            it = np.nditer(w, flags=["multi_index"])
            for _ in it:
                mi = it.multi_index
                if (name == "w_rec" and not layer.self_recurrence
                        and mi[0] == mi[1]):
                    continue  # pinned to zero, not a free parameter
                keep = w[mi]
                w[mi] = keep + eps
                up = loss_of(net, x, targets, n_steps, drive_mode)
                w[mi] = keep - eps
                dn = loss_of(net, x, targets, n_steps, drive_mode)
                w[mi] = keep
                fd = (up - dn) / (2 * eps)
                rel = abs(g[mi] - fd) / max(abs(fd), floor)
                worst = max(worst, rel)
    return worst
