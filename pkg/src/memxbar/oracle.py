"""Floating-point reference network.

Dense weights with the bias in column 0, the same activations, output
functions and error rule as the crossbar network (including the optional
``tanh`` squashing of the back-propagated delta and the ``[-1, 1]`` error
clip), so both paths can be stepped side by side. Optional per-layer weight
bounds mirror the linear conductance range of a behavioral crossbar: an
update may not leave ``[lo, hi]``, widened to include the current weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import activate, derivative, loss, output


@dataclass
class DenseNet:
    weights: list                      # W^(k), shape (n_out, n_in + 1)
    activations: tuple = ()            # one per hidden layer
    eta: float | list = 0.1
    output_fn: str = "softmax"
    loss: str = "cross_entropy"
    bias: list | None = None           # bias input per layer
    tanh_delta: bool = True
    clip: float | None = 1.0
    bounds: list | None = None         # (lo, hi) weight limits per layer
    _etas: list = field(init=False, repr=False)

    def __post_init__(self):
        self.weights = [np.array(W, dtype=np.float64) for W in self.weights]
        n = len(self.weights)
        if len(self.activations) != n - 1:
            raise ValueError(f"{n} layers need {n - 1} hidden activations")
        for A, B in zip(self.weights, self.weights[1:]):
            if B.shape[1] != A.shape[0] + 1:
                raise ValueError(f"layer shapes {A.shape} -> {B.shape} do not chain")
        etas = list(self.eta) if np.ndim(self.eta) else [float(self.eta)] * n
        if len(etas) != n or min(etas) <= 0:
            raise ValueError("eta must be positive, one value or one per layer")
        self._etas = etas
        if self.bias is None:
            self.bias = [1.0] * n
        if self.bounds is not None and len(self.bounds) != n:
            raise ValueError("bounds need one (lo, hi) pair per layer")

    @classmethod
    def from_network(cls, net) -> "DenseNet":
        cfg = net.config
        bounds = [(cb.a * cb.R0 * (cb.G_ref - cb.char.G_lin_max),
                   cb.a * cb.R0 * (cb.G_ref - cb.char.G_lin_min)) for cb in net.crossbars]
        return cls(net.weights, cfg.activation, list(net.eta), cfg.output_fn, cfg.loss,
                   [cfg.layer_scale(k) for k in range(cfg.n_layers)], cfg.tanh_delta,
                   bounds=bounds)


def oracle_forward(net: DenseNet, x):
    """Returns ``(o, trace)``; trace holds per-layer inputs (bias first), r and sigma."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.weights[0].shape[1] - 1,):
        raise ValueError(f"input of length {x.size} for a {net.weights[0].shape[1] - 1}-input net")
    inputs, rs, sig = [], [], []
    h = x
    for k, W in enumerate(net.weights):
        u = np.concatenate(([net.bias[k]], h))
        r = W @ u
        inputs.append(u)
        rs.append(r)
        if k < len(net.weights) - 1:
            h = activate(net.activations[k], r)
            sig.append(h)
    o = output(net.output_fn, rs[-1])
    return o, {"inputs": inputs, "r": rs, "sigma": sig, "o": o}


def oracle_backprop(net: DenseNet, x, d) -> list:
    """Per-layer updates ``eta_k * y^(k) (u^(k))^T`` for one sample."""
    d = np.asarray(d, dtype=np.float64)
    o, tr = oracle_forward(net, x)
    if d.shape != o.shape:
        raise ValueError("target shape does not match the output")
    y = d - o
    dW = [None] * len(net.weights)
    for k in range(len(net.weights) - 1, -1, -1):
        if net.clip is not None:
            y = np.clip(y, -net.clip, net.clip)
        dW[k] = net._etas[k] * np.outer(y, tr["inputs"][k])
        if k > 0:
            back = (net.weights[k].T @ y)[1:]
            if net.tanh_delta:
                back = np.tanh(back)
            y = back * derivative(net.activations[k - 1], tr["sigma"][k - 1])
    return dW


def oracle_step(net: DenseNet, x, d) -> list:
    """Apply one update in place; returns the unbounded per-layer updates."""
    dW = oracle_backprop(net, x, d)
    for k, (W, g) in enumerate(zip(net.weights, dW)):
        if net.bounds is None:
            W += g
        else:
            lo, hi = net.bounds[k]
            W[...] = np.clip(W + g, np.minimum(lo, W), np.maximum(hi, W))
    return dW


def oracle_loss(net: DenseNet, x, d) -> float:
    o, _ = oracle_forward(net, x)
    return loss(o, d, net.loss)


def grad_check(net: DenseNet, x, d, eps: float = 1e-5) -> float:
    """Largest relative gap between the update rule and ``-eta * dL/dW``.

    Central differences with step ``eps``. Requires cross-entropy loss (with
    softmax or a single sigmoid the rule is then the exact negative
    gradient). Only meaningful with the squashing
    and clipping switched off; both are disabled on a private copy.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValueError(f"eps={eps} outside [1e-7, 1e-3]")
    if net.loss != "cross_entropy":
        raise ValueError("the update rule equals the gradient only for cross-entropy")
    ref = DenseNet([W.copy() for W in net.weights], net.activations, net._etas, net.output_fn,
                   net.loss, list(net.bias), tanh_delta=False, clip=None)
    analytic = [-g / e for g, e in zip(oracle_backprop(ref, x, d), ref._etas)]
    worst = 0.0
    for W, A in zip(ref.weights, analytic):
        num = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            keep = W[idx]
            W[idx] = keep + eps
            up = oracle_loss(ref, x, d)
            W[idx] = keep - eps
            down = oracle_loss(ref, x, d)
            W[idx] = keep
            num[idx] = (up - down) / (2 * eps)
        scale = max(np.abs(A).max(), np.abs(num).max(), 1e-12)
        worst = max(worst, float(np.abs(A - num).max() / scale))
    return worst
