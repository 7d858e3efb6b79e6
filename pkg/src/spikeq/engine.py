"""Two-layer spiking network core: forward simulation, tape, exact BPTT.

The network is a stack of layers driven for a fixed number of steps from a
zeroed state. Spiking (LIF) layers may be recurrent; the final layer is a
non-spiking leaky integrator (LI) whose membrane potentials after the last
step are the readout. All update rules are forward Euler:

    s[k]   = (v[k] > v_th)                      spiking layers only
    v[k+1] = reset(alpha * v[k] + ci * i[k], s[k])
    i[k+1] = beta * i[k] + w_in^T x[k] + w_rec^T s[k]

with hard reset to v_rest (default) or reset by subtraction of v_th.
Backpropagation through time treats the threshold with a fast-sigmoid
surrogate; the reset gate is differentiated with the same surrogate (it is
not detached). In smooth mode the threshold is replaced by soft_gate, which
makes the identical backward pass an exact gradient (used by the
finite-difference oracle in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .neuron import NeuronParams, SurrogateSpec, soft_gate, surrogate_grad


class StaleTapeError(RuntimeError):
    """Raised when backward() is handed a tape from older parameters."""


@dataclass
class Layer:
    """One layer's parameters. w_in is (fan_in, n), w_rec is (n, n) or None."""

    w_in: np.ndarray
    w_rec: np.ndarray | None
    cell: str  # "lif" | "li"
    neuron: NeuronParams
    reset: str = "zero"  # zero | subtract
    self_recurrence: bool = False

    def __post_init__(self):
        if self.cell not in ("lif", "li"):
            raise ValueError(f"unknown cell kind {self.cell!r}")
        if self.reset not in ("zero", "subtract"):
            raise ValueError(f"unknown reset mode {self.reset!r}")
        if self.cell == "li" and self.w_rec is not None:
            raise ValueError("LI layers cannot be recurrent")
        if self.w_rec is not None:
            n = self.w_in.shape[1]
            if self.w_rec.shape != (n, n):
                raise ValueError("w_rec must be square (n_neurons, n_neurons)")

    @property
    def fan_in(self) -> int:
        return self.w_in.shape[0]

    @property
    def n_neurons(self) -> int:
        return self.w_in.shape[1]

    def mask_self_recurrence(self):
        if self.w_rec is not None and not self.self_recurrence:
            np.fill_diagonal(self.w_rec, 0.0)


@dataclass
class Network:
    layers: list[Layer]
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    version: int = 0

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if self.layers[-1].cell != "li":
            raise ValueError("last layer must be a leaky integrator readout")
        for lower, upper in zip(self.layers, self.layers[1:]):
            if upper.fan_in != lower.n_neurons:
                raise ValueError("layer fan_in does not match previous layer size")

    @property
    def input_size(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_size(self) -> int:
        return self.layers[-1].n_neurons

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.w_in)
            if layer.w_rec is not None:
                out.append(layer.w_rec)
        return out

    def bump_version(self):
        self.version += 1

    def mask_self_recurrence(self):
        for layer in self.layers:
            layer.mask_self_recurrence()


def init_network(layer_specs, surrogate: SurrogateSpec | None = None,
                 seed=0) -> Network:
    """Build a network from (fan_in, n_neurons, cell, recurrent, params) specs.

    Weights are drawn uniformly from [-g, g] with gain g = 1 / sqrt(fan_in)
    (recurrent weights use the layer's own size as fan-in).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    for spec in layer_specs:
        fan_in, n, cell, recurrent, params = spec[:5]
        extra = spec[5] if len(spec) > 5 else {}
        g = 1.0 / np.sqrt(fan_in)
        w_in = rng.uniform(-g, g, size=(fan_in, n))
        w_rec = None
        if recurrent:
            gr = 1.0 / np.sqrt(n)
            w_rec = rng.uniform(-gr, gr, size=(n, n))
        layer = Layer(w_in=w_in, w_rec=w_rec, cell=cell, neuron=params, **extra)
        layer.mask_self_recurrence()
        layers.append(layer)
    net = Network(layers=layers, surrogate=surrogate or SurrogateSpec())
    return net


@dataclass
class LayerState:
    """Instantaneous state for the single-step API."""

    v: np.ndarray
    i: np.ndarray


def zero_state(layer: Layer) -> LayerState:
    n = layer.n_neurons
    return LayerState(v=np.zeros(n), i=np.zeros(n))


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite values in {name}")


def lif_step(state: LayerState, x: np.ndarray, layer: Layer):
    """One LIF update. Returns (new_state, spike_vector).

    Spikes are evaluated on the incoming membrane (strict v > v_th), then the
    membrane integrates and spiking neurons are reset.
    """
    _check_finite("x", x)
    _check_finite("state.v", state.v)
    _check_finite("state.i", state.i)
    p = layer.neuron
    s = (state.v > p.v_th).astype(np.float64)
    a = p.alpha * state.v + p.current_gain * state.i
    if layer.reset == "zero":
        v = (1.0 - s) * a + s * p.v_rest
    else:
        v = a - s * p.v_th
    i = p.beta * state.i + x @ layer.w_in
    if layer.w_rec is not None:
        i = i + s @ layer.w_rec
    return LayerState(v=v, i=i), s


def li_step(state: LayerState, x: np.ndarray, layer: Layer) -> LayerState:
    """One leaky-integrator update. Never spikes, never resets."""
    _check_finite("x", x)
    p = layer.neuron
    v = p.alpha * state.v + p.current_gain * state.i
    i = p.beta * state.i + x @ layer.w_in
    return LayerState(v=v, i=i)


@dataclass
class LayerRecord:
    """Per-step history of one layer: entries at index k are the step-k
    pre-update values (v[k], i[k]) and the spikes s[k] emitted from them."""

    v: np.ndarray  # (T, B, n)
    i: np.ndarray  # (T, B, n)
    s: np.ndarray | None  # (T, B, n), spiking layers only


@dataclass
class UnrolledTape:
    """Everything backward() needs, recorded during forward()."""

    x: np.ndarray  # (B, fan_in) input rows
    drive_mode: str
    n_steps: int
    records: list[LayerRecord]
    v_out: np.ndarray  # (B, n_out) readout membranes after the last step
    smooth: bool
    version: int


def forward(net: Network, frames: np.ndarray, n_steps: int,
            drive_mode: str = "constant", smooth: bool = False) -> UnrolledTape:
    """Simulate the network for n_steps from a zeroed state.

    frames: (B, input_size) rows, or a 1-D row for a single presentation.
    The same row drives every step ("constant") or only step 0 ("impulse").
    Pure: the network is not mutated.
    """
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != net.input_size:
        raise ValueError(f"frame width {x.shape[1]} != network input size "
                         f"{net.input_size}")
    if drive_mode not in ("constant", "impulse"):
        raise ValueError(f"unknown drive_mode {drive_mode!r}")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    b = x.shape[0]

    records = []
    # Layer 0 drive: one GEMM; upper layers are driven by recorded spikes.
    drive = x @ net.layers[0].w_in  # (B, n0)
    drive_seq = None  # upper layers get (T, B, n) sequences
    v_out = None
    for li_idx, layer in enumerate(net.layers):
        n = layer.n_neurons
        p = layer.neuron
        alpha, beta, ci = p.alpha, p.beta, p.current_gain
        v = np.zeros((b, n))
        i = np.zeros((b, n))
        rec_v = np.empty((n_steps, b, n))
        rec_i = np.empty((n_steps, b, n))
        if layer.cell == "lif":
            rec_s = np.empty((n_steps, b, n))
            for k in range(n_steps):
                rec_v[k] = v
                rec_i[k] = i
                if smooth:
                    s = soft_gate(v, p.v_th, net.surrogate)
                else:
                    s = (v > p.v_th).astype(np.float64)
                rec_s[k] = s
                a = alpha * v + ci * i
                if layer.reset == "zero":
                    v = (1.0 - s) * a + s * p.v_rest
                else:
                    v = a - s * p.v_th
                if drive_seq is not None:
                    d = drive_seq[k]
                elif drive_mode == "constant" or k == 0:
                    d = drive
                else:
                    d = 0.0
                i = beta * i + d
                if layer.w_rec is not None:
                    i = i + s @ layer.w_rec
            records.append(LayerRecord(v=rec_v, i=rec_i, s=rec_s))
            # Next layer's drive: one reshaped GEMM over all steps.
            if li_idx + 1 < len(net.layers):
                nxt = net.layers[li_idx + 1]
                drive_seq = (rec_s.reshape(n_steps * b, n) @ nxt.w_in
                             ).reshape(n_steps, b, nxt.n_neurons)
        else:  # li readout
            for k in range(n_steps):
                rec_v[k] = v
                rec_i[k] = i
                v = alpha * v + ci * i
                if drive_seq is not None:
                    d = drive_seq[k]
                elif drive_mode == "constant" or k == 0:
                    d = drive
                else:
                    d = 0.0
                i = beta * i + d
            records.append(LayerRecord(v=rec_v, i=rec_i, s=None))
            v_out = v

    return UnrolledTape(x=x, drive_mode=drive_mode, n_steps=n_steps,
                        records=records, v_out=v_out, smooth=smooth,
                        version=net.version)


def replay(net: Network, tape: UnrolledTape) -> np.ndarray:
    """Re-run the tape's input and return the readout; must equal tape.v_out."""
    fresh = forward(net, tape.x, tape.n_steps, tape.drive_mode, tape.smooth)
    return fresh.v_out


def decide(v_out: np.ndarray) -> np.ndarray:
    """Argmax readout; ties go to the lowest index."""
    v_out = np.asarray(v_out)
    if v_out.ndim == 1:
        return int(np.argmax(v_out))
    return np.argmax(v_out, axis=-1)


def loss_softmax_ce(v_out: np.ndarray, targets: np.ndarray):
    """Mean softmax cross-entropy and its gradient wrt v_out."""
    v_out = np.atleast_2d(np.asarray(v_out, dtype=np.float64))
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    b, n = v_out.shape
    if targets.shape != (b,):
        raise ValueError("one integer target per row required")
    if targets.min() < 0 or targets.max() >= n:
        raise ValueError("target index out of range")
    shifted = v_out - v_out.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(logz - shifted[np.arange(b), targets]))
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    grad = probs
    grad[np.arange(b), targets] -= 1.0
    grad /= b
    return loss, grad


def backward(net: Network, tape: UnrolledTape, grad_v_out: np.ndarray) -> dict:
    """BPTT through the tape. Returns {layer_index: {"w_in": g, "w_rec": g}}.

    The spike nonlinearity uses the surrogate derivative; the hard-reset gate
    is differentiated with the same surrogate (multiplicative pathway kept).
    Raises StaleTapeError if the network changed since the tape was recorded.
    """
    if tape.version != net.version:
        raise StaleTapeError(f"tape recorded at version {tape.version}, "
                             f"network now at {net.version}")
    grad_v_out = np.atleast_2d(np.asarray(grad_v_out, dtype=np.float64))
    t, b = tape.n_steps, tape.x.shape[0]
    grads: dict[int, dict] = {}

    # lam_x[k] = dL/d(input row of this layer at step k), produced while
    # walking layers top-down and consumed by the layer below as dL/ds[k].
    lam_x = None
    for li_idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li_idx]
        rec = tape.records[li_idx]
        p = layer.neuron
        alpha, beta, ci = p.alpha, p.beta, p.current_gain
        n = layer.n_neurons

        # gD[k] = dL/d(drive[k]) = lambda_i[k+1]; weight grads reduce over it.
        g_drive = np.empty((t, b, n))
        if layer.cell == "li":
            lv = grad_v_out.copy()
            li_ = np.zeros((b, n))
            for k in range(t - 1, -1, -1):
                g_drive[k] = li_
                li_ = ci * lv + beta * li_
                lv = alpha * lv
            new_lam_x = None  # filled below via one GEMM
        else:
            lv = np.zeros((b, n))
            li_ = np.zeros((b, n))
            s_rec, v_rec, i_rec = rec.s, rec.v, rec.i
            for k in range(t - 1, -1, -1):
                lam_s = lam_x[k].copy() if lam_x is not None else np.zeros((b, n))
                if layer.w_rec is not None:
                    lam_s += li_ @ layer.w_rec.T
                if layer.reset == "zero":
                    a = alpha * v_rec[k] + ci * i_rec[k]
                    lam_s += lv * (p.v_rest - a)
                    lam_a = lv * (1.0 - s_rec[k])
                else:
                    lam_s -= lv * p.v_th
                    lam_a = lv
                g_drive[k] = li_
                li_ = ci * lam_a + beta * li_
                lv = alpha * lam_a + surrogate_grad(v_rec[k], p.v_th,
                                                    net.surrogate) * lam_s
            new_lam_x = None

        g = {}
        flat_gd = g_drive.reshape(t * b, n)
        if layer.w_rec is not None:
            # i[k+1] consumes s[k], so pair records index-aligned with g_drive.
            flat_s = rec.s.reshape(t * b, n)
            gw_rec = flat_s.T @ flat_gd
            if not layer.self_recurrence:
                np.fill_diagonal(gw_rec, 0.0)
            g["w_rec"] = gw_rec
        if li_idx == 0:
            if tape.drive_mode == "constant":
                g["w_in"] = tape.x.T @ g_drive.sum(axis=0)
            else:
                g["w_in"] = tape.x.T @ g_drive[0]
        else:
            below = tape.records[li_idx - 1]
            flat_s = below.s.reshape(t * b, below.s.shape[2])
            g["w_in"] = flat_s.T @ flat_gd
            new_lam_x = (flat_gd @ layer.w_in.T).reshape(t, b, layer.fan_in)
        grads[li_idx] = g
        lam_x = new_lam_x

    return grads
