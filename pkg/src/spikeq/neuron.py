"""Discrete-time neuron parameters and surrogate-gradient definitions."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class NeuronParams:
    """Forward-Euler leaky integrate-and-fire / leaky-integrator parameters.

    Decay factors follow alpha = exp(-dt/tau_m), beta = exp(-dt/tau_s). The
    synaptic current couples into the membrane with gain alpha by default
    (v[k+1] = alpha * (v[k] + i[k])); integration="unit-gain" selects the
    conventional v[k+1] = alpha * v[k] + (1 - alpha) * i[k] instead.
    """

    tau_m: float
    tau_s: float
    v_th: float = 1.0
    v_rest: float = 0.0
    dt: float = 1.0
    integration: str = "shared-decay"  # shared-decay | unit-gain

    def __post_init__(self):
        if self.tau_m <= 0 or self.tau_s <= 0 or self.dt <= 0:
            raise ValueError("tau_m, tau_s and dt must be > 0")
        if self.integration not in ("shared-decay", "unit-gain"):
            raise ValueError(f"unknown integration {self.integration!r}")

    @property
    def alpha(self) -> float:
        return math.exp(-self.dt / self.tau_m)

    @property
    def beta(self) -> float:
        return math.exp(-self.dt / self.tau_s)

    @property
    def current_gain(self) -> float:
        return self.alpha if self.integration == "shared-decay" else 1.0 - self.alpha

    def with_dt(self, dt: float) -> "NeuronParams":
        return replace(self, dt=dt)


# Reference parameter sets (time constants in ms). The readout integrator's
# v_th is nominal only: LI cells never threshold, spike, or reset.
LIF_HIDDEN = NeuronParams(tau_m=10.0, tau_s=5.0, v_th=1.0, v_rest=0.0, dt=1.0)
LI_READOUT = NeuronParams(tau_m=100.0, tau_s=1.0, v_th=1000.0, v_rest=0.0, dt=1.0)


@dataclass(frozen=True)
class SurrogateSpec:
    """Derivative substitute for the spike threshold in BPTT."""

    kind: str = "fast_sigmoid"
    slope: float = 100.0

    def __post_init__(self):
        if self.kind != "fast_sigmoid":
            raise ValueError(f"unknown surrogate {self.kind!r}")
        if self.slope <= 0:
            raise ValueError("slope must be > 0")


def surrogate_grad(v, v_th: float, spec: SurrogateSpec):
    """d(spike)/dv stand-in: 1 / (slope * |v - v_th| + 1)^2."""
    import numpy as np

    u = np.abs(np.asarray(v) - v_th)
    return 1.0 / (spec.slope * u + 1.0) ** 2


def soft_gate(v, v_th: float, spec: SurrogateSpec):
    """Smooth threshold whose exact derivative is surrogate_grad.

    sigma(u) = 0.5 + u / (slope * |u| + 1); d sigma/du equals the
    fast-sigmoid surrogate exactly, so in the gradient-check mode the
    forward pass itself is differentiable and BPTT is exact.
    """
    import numpy as np

    u = np.asarray(v) - v_th
    return 0.5 + u / (spec.slope * np.abs(u) + 1.0)
