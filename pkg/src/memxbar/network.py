"""Cascaded crossbars trained online with the analog backpropagation rule.

Per sample:

1. forward reads layer by layer, hidden activations on every layer but the
   last, softmax (or a single sigmoid) at the output;
2. output error ``y = d - o``;
3. from the last crossbar down: backward read ``delta = W^T y``, write the
   crossbar with its input and ``y``, then pass ``tanh(delta) * sigma'`` (bias
   row dropped) to the layer below. The first layer's delta is never used.

Every layer's input vector starts with its bias entry, equal to the layer's
full-scale input (0.2 for normalized features, 1 for activations).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .crossbar import (
    CrossbarState, FaultPlan, backward_read, behavioral_rate, build_crossbar, forward_read,
    inject_faults, sneak_path_audit, write_phase, write_phase_behavioral,
)
from .device import get_params
from .errors import ConfigError
from .harness.metrics import metrics
from .waveform import Timing, default_timing

ACTIVATIONS = ("sigmoid", "tanh", "linear")


def activate(kind: str, r):
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-r))
    if kind == "tanh":
        return np.tanh(r)
    if kind == "linear":
        return np.asarray(r, dtype=np.float64).copy()
    raise ConfigError(f"unknown activation {kind!r}")


def derivative(kind: str, s):
    """sigma' from the activation value itself."""
    if kind == "sigmoid":
        return s * (1.0 - s)
    if kind == "tanh":
        return 1.0 - s * s
    return np.ones_like(s)


def output(kind: str, r):
    if kind == "softmax":
        e = np.exp(r - r.max())
        return e / e.sum()
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-r))
    raise ConfigError(f"unknown output function {kind!r}")


def loss(o, d, kind: str = "cross_entropy") -> float:
    """Per-sample loss; cross-entropy is ``-log o_l`` with ``o_l`` clamped at 1e-12.

    A single sigmoid output uses the two-class form.
    """
    o = np.asarray(o, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if o.shape != d.shape:
        raise ValueError("o and d shapes differ")
    if np.any(o < 0) or np.any(o > 1) or (o.size > 1 and abs(o.sum() - 1.0) > 1e-9):
        raise ValueError("o is not a probability vector")
    if kind == "mse":
        return float(0.5 * np.sum((d - o) ** 2))
    if kind != "cross_entropy":
        raise ConfigError(f"unknown loss {kind!r}")
    if o.size == 1:
        p = o[0] if d[0] >= 0.5 else 1.0 - o[0]
        return float(-np.log(max(p, 1e-12)))
    return float(-np.log(max(o[int(np.argmax(d))], 1e-12)))


@dataclass(frozen=True)
class NetworkConfig:
    layer_sizes: tuple[int, ...]
    activation: str | tuple[str, ...] = "sigmoid"
    output_fn: str = "softmax"
    loss: str = "cross_entropy"
    model: str = "silver"
    mode: str = "device"
    timing: Timing | None = None
    a_input: float = 0.45
    a_hidden: float = 0.09
    a_err: float = 0.09
    input_scale: float = 0.2
    weight_span: float = 8.0
    step_fraction: float = 0.02
    tanh_delta: bool = True
    R0: tuple[float, ...] | None = None
    init_range: tuple[float, float] | None = None
    fault_fraction: float = 0.0
    variation: str | None = None
    variation_fraction: float = 0.0
    device_overrides: tuple = ()   # (name, value) pairs applied to the model's parameters
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigError(f"need at least two positive layer sizes, got {sizes}")
        acts = self.activation
        if isinstance(acts, str):
            acts = (acts,) * (len(sizes) - 2)
        acts = tuple(acts)
        if len(acts) != len(sizes) - 2 or any(a not in ACTIVATIONS for a in acts):
            raise ConfigError(f"activation list {acts} does not fit {len(sizes) - 2} hidden layers")
        object.__setattr__(self, "activation", acts)
        if self.output_fn not in ("softmax", "sigmoid"):
            raise ConfigError(f"unknown output function {self.output_fn!r}")
        if self.output_fn == "sigmoid" and sizes[-1] != 1:
            raise ConfigError("a sigmoid output needs exactly one output neuron")
        if self.loss not in ("cross_entropy", "mse"):
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.mode not in ("device", "behavioral"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.R0 is not None and len(self.R0) != len(sizes) - 1:
            raise ConfigError("R0 needs one value per crossbar")
        if self.timing is None:
            object.__setattr__(self, "timing", default_timing(self.model))

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def layer_scale(self, k: int) -> float:
        """Full-scale input (and bias value) of crossbar ``k``."""
        return self.input_scale if k == 0 else 1.0

    def layer_a(self, k: int) -> float:
        return self.a_input if k == 0 else self.a_hidden

    def echo(self) -> dict:
        d = asdict(self)
        d["timing"] = asdict(self.timing)
        return d


@dataclass
class ForwardTrace:
    inputs: list   # per crossbar, bias first
    r: list
    sigma: list    # hidden activations
    o: np.ndarray


@dataclass
class StepRecord:
    """What one training step saw, enough to redraw the signal traces."""

    x: np.ndarray
    d: np.ndarray
    trace: ForwardTrace
    y: list        # per crossbar, index k is the error written into crossbar k
    delta: list    # raw backward-read results (None for the first crossbar)
    loss: float


@dataclass
class AuditSummary:
    phases: int = 0
    failures: int = 0
    max_abs: float = 0.0
    worst_margin: float = np.inf

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def add(self, report):
        self.phases += report.phases
        self.failures += int(not report.passed)
        self.max_abs = max(self.max_abs, report.max_abs)
        self.worst_margin = min(self.worst_margin, report.worst_margin)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        margin = self.worst_margin if np.isfinite(self.worst_margin) else 0.0
        return (f"{status} phases={self.phases} failures={self.failures} "
                f"max|v|={self.max_abs:.4g} V min_margin={margin:.4g} V")


@dataclass
class Network:
    config: NetworkConfig
    crossbars: list
    eta: list                # behavioral learning rate per crossbar
    audit: bool = False
    audit_read: AuditSummary = field(default_factory=AuditSummary)
    audit_write: AuditSummary = field(default_factory=AuditSummary)
    energy: list | None = None   # accumulated joules per cell, per crossbar
    steps: int = 0

    @property
    def weights(self) -> list:
        return [cb.W.copy() for cb in self.crossbars]


def build_network(config: NetworkConfig, audit: bool = False) -> Network:
    """Create the crossbars for ``config``, applying variation and faults."""
    rng = np.random.default_rng(config.seed)
    params = None
    if config.device_overrides:
        params = replace(get_params(config.model), **dict(config.device_overrides))
    xbars, etas = [], []
    for k in range(config.n_layers):
        n_in, n_out = config.layer_sizes[k], config.layer_sizes[k + 1]
        variation = (config.variation, config.variation_fraction) if config.variation else None
        cb = build_crossbar(
            n_in + 1, n_out, config.model, config.layer_a(k), a_err=config.a_err,
            R0=None if config.R0 is None else config.R0[k], weight_span=config.weight_span,
            init_range=config.init_range, mode=config.mode, timing=config.timing, rng=rng,
            variation=variation, x_fullscale=config.layer_scale(k),
            step_fraction=config.step_fraction, params=params,
        )
        if config.fault_fraction > 0:
            inject_faults(cb, FaultPlan(config.fault_fraction, int(rng.integers(2**31))))
        xbars.append(cb)
        etas.append(behavioral_rate(cb, config.layer_scale(k), config.step_fraction))
    energy = [np.zeros(cb.shape) for cb in xbars] if config.mode == "device" else None
    return Network(config, xbars, etas, audit=audit, energy=energy)


def _with_bias(net: Network, k: int, v):
    return np.concatenate(([net.config.layer_scale(k)], np.asarray(v, dtype=np.float64)))


def _fold(net: Network, cb: CrossbarState, k: int, traces: list):
    if not traces:
        return
    for tr in traces:
        if net.energy is not None and tr.energy is not None:
            net.energy[k] += tr.energy
        if net.audit and tr.vmax is not None:
            target = net.audit_read if tr.kind == "read" else net.audit_write
            target.add(sneak_path_audit(cb, tr))


def infer(net: Network, x) -> tuple[np.ndarray, ForwardTrace]:
    cfg = net.config
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.layer_sizes[0],):
        raise ValueError(f"input has {x.size} features, network expects {cfg.layer_sizes[0]}")
    inputs, rs, sigmas = [], [], []
    h = x
    for k, cb in enumerate(net.crossbars):
        u = _with_bias(net, k, h)
        traces = [] if (net.audit or net.energy is not None) else None
        r = forward_read(cb, u, traces)
        _fold(net, cb, k, traces)
        inputs.append(u)
        rs.append(r)
        if k < cfg.n_layers - 1:
            h = activate(cfg.activation[k], r)
            sigmas.append(h)
    o = output(cfg.output_fn, rs[-1])
    return o, ForwardTrace(inputs, rs, sigmas, o)


def target_vector(net: Network, label: int) -> np.ndarray:
    m = net.config.layer_sizes[-1]
    if net.config.output_fn == "sigmoid":
        return np.array([float(label)])
    d = np.zeros(m)
    d[int(label)] = 1.0
    return d


def predict_label(net: Network, o) -> int:
    if net.config.output_fn == "sigmoid":
        return int(o[0] >= 0.5)
    return int(np.argmax(o))


def train_step(net: Network, x, d) -> StepRecord:
    """One online update; mutates the network's crossbars and returns what it saw."""
    cfg = net.config
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (cfg.layer_sizes[-1],):
        raise ValueError(f"target has {d.size} entries, network has {cfg.layer_sizes[-1]} outputs")
    o, tr = infer(net, x)
    L = loss(o, d, cfg.loss)
    y = d - o
    ys = [None] * cfg.n_layers
    deltas = [None] * cfg.n_layers
    for k in range(cfg.n_layers - 1, -1, -1):
        cb = net.crossbars[k]
        y = np.clip(y, -1.0, 1.0)
        ys[k] = y
        traces = [] if (net.audit or net.energy is not None) else None
        if k > 0:
            deltas[k] = backward_read(cb, y, traces)
        if cfg.mode == "device":
            write_phase(cb, tr.inputs[k], y, trace=traces)
        else:
            write_phase_behavioral(cb, tr.inputs[k], y, net.eta[k])
        _fold(net, cb, k, traces)
        if k > 0:
            back = deltas[k][1:]
            if cfg.tanh_delta:
                back = np.tanh(back)
            y = back * derivative(cfg.activation[k - 1], tr.sigma[k - 1])
    net.steps += 1
    return StepRecord(np.asarray(x, dtype=np.float64), d, tr, ys, deltas, L)


@dataclass
class TrainReport:
    config: dict
    seed: int
    epochs: int
    losses: list
    train_accuracy: float
    accuracy: float
    f1: float
    confusion: np.ndarray
    snapshots: list
    audit_read: str = ""
    audit_write: str = ""
    audit_passed: bool = True
    energy_per_synapse: float | None = None
    records: list | None = None
    weights: list | None = None

    def summary(self) -> str:
        return (f"accuracy={self.accuracy:.4f} f1={self.f1:.4f} "
                f"train_accuracy={self.train_accuracy:.4f} final_loss={self.losses[-1]:.6f}")


def evaluate(net: Network, X, labels):
    preds = []
    for x in X:
        o, _ = infer(net, x)
        preds.append(predict_label(net, o))
    return metrics(np.array(preds), np.asarray(labels), max(2, net.config.layer_sizes[-1]))


def train(net: Network, dataset, epochs: int, record: bool = False) -> TrainReport:
    """Online training over ``dataset.train`` and evaluation on ``dataset.test``.

    ``dataset`` needs ``X_train, y_train, X_test, y_test`` attributes. Sample
    order is reshuffled each epoch from the config seed. With ``record`` the
    step records of the last epoch are kept (useful for small problems).
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    Xtr, ytr = np.asarray(dataset.X_train), np.asarray(dataset.y_train)
    if len(Xtr) == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng([net.config.seed, 1])
    losses, records = [], None
    for ep in range(epochs):
        order = rng.permutation(len(Xtr))
        last = record and ep == epochs - 1
        records = [] if last else records
        total = 0.0
        for idx in order:
            rec = train_step(net, Xtr[idx], target_vector(net, ytr[idx]))
            total += rec.loss
            if last:
                records.append(rec)
        losses.append(total / len(Xtr))
    # evaluation reads are neither audited nor charged to the training energy
    audit_state, energy_acc = net.audit, net.energy
    net.audit, net.energy = False, None
    train_m = evaluate(net, Xtr, ytr)
    Xte, yte = np.asarray(dataset.X_test), np.asarray(dataset.y_test)
    test_m = evaluate(net, Xte, yte) if len(Xte) else train_m
    net.audit, net.energy = audit_state, energy_acc
    energy = None
    if net.energy is not None and net.steps:
        cells = sum(e.size for e in net.energy)
        energy = sum(float(e.sum()) for e in net.energy) / cells / net.steps
    return TrainReport(
        config=net.config.echo(), seed=net.config.seed, epochs=epochs, losses=losses,
        train_accuracy=train_m["accuracy"], accuracy=test_m["accuracy"], f1=test_m["f1"],
        confusion=test_m["confusion"], snapshots=[cb.snapshot_csv() for cb in net.crossbars],
        audit_read=str(net.audit_read) if net.audit else "",
        audit_write=str(net.audit_write) if net.audit else "",
        audit_passed=(net.audit_read.passed and net.audit_write.passed) if net.audit else True,
        energy_per_synapse=energy, records=records, weights=net.weights,
    )
