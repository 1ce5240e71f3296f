"""Seeded experiment runs: baseline, faults, variation, nonlinear init, audits."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..crossbar import CrossbarState, PhaseTrace, build_crossbar, sneak_path_audit, write_phase
from ..device import PUBLISHED
from ..errors import ConfigError, MemxbarError
from ..network import NetworkConfig, TrainReport, build_network, train
from .datasets import load_dataset

KINDS = ("baseline", "fault", "variation", "nonlinear_init", "sneak_audit")

# default network per builtin dataset
PRESETS = {
    "xor": dict(layer_sizes=(2, 2, 2), activation="tanh", output_fn="softmax", epochs=500,
                weight_span=16.0),
    "iris": dict(layer_sizes=(4, 4, 3), activation="sigmoid", output_fn="softmax", epochs=30),
    "breast_cancer": dict(layer_sizes=(30, 1), activation=(), output_fn="sigmoid", epochs=20),
    "mnist": dict(layer_sizes=(784, 397, 204, 10), activation="sigmoid", output_fn="softmax",
                  epochs=7, mode="behavioral"),
}

# nonlinear-init runs start far from a useful weight state and get a longer budget
NONLINEAR_EPOCH_FACTOR = 2

# conductance ranges (S) for re-initialisation studies
INIT_RANGES = {
    "silver": {"linear": PUBLISHED["silver"]["init_range"], "full": (0.225e-3, 8.5e-3),
               "lower": (0.225e-3, 3.18e-3), "upper": (6.38e-3, 8.5e-3)},
    "titania": {"linear": PUBLISHED["titania"]["init_range"], "full": (1e-3, 70e-3),
                "lower": (1e-3, 28e-3), "upper": (48e-3, 70e-3)},
}


def preset_config(dataset, model: str = "silver", mode: str | None = None, seed: int = 0,
                  **overrides) -> tuple[NetworkConfig, int]:
    """Network config and epoch budget for a loaded dataset."""
    p = dict(PRESETS.get(dataset.name, {}))
    if not p:
        m = dataset.n_classes
        p = dict(layer_sizes=(dataset.n_features, 1 if m == 2 else m), activation=(),
                 output_fn="sigmoid" if m == 2 else "softmax", epochs=30)
    epochs = p.pop("epochs")
    if mode is not None:
        p["mode"] = mode
    p.update(overrides)
    return NetworkConfig(model=model, seed=seed, **p), epochs


def nonlinear_init(cb: CrossbarState, range_id: str, rng: np.random.Generator) -> CrossbarState:
    """Re-draw healthy cells uniformly in a named conductance range."""
    try:
        lo, hi = INIT_RANGES[cb.model][range_id]
    except KeyError:
        raise ConfigError(f"no init range {range_id!r} for model {cb.model!r}") from None
    gmax = float((cb.params[..., 0] * cb.params[..., 2]).min())
    if lo < 0 or hi > gmax:
        raise ConfigError(f"range [{lo}, {hi}] S exceeds device bounds [0, {gmax}] S")
    cb.set_conductance(rng.uniform(lo, hi, size=cb.shape), ~cb.faults)
    return cb


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "baseline"
    dataset: str = "iris"
    model: str = "silver"
    mode: str = "device"
    seeds: tuple = (0, 1, 2, 3, 4)
    epochs: int | None = None
    fault_fraction: float = 0.0
    variation: str | None = None
    variation_fraction: float = 0.0
    init_range: str = "linear"
    workers: int = 1
    test_fraction: float = 0.3
    normalization: str | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if not self.seeds:
            raise ConfigError("an experiment needs at least one seed")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.kind == "fault" and not (0 < self.fault_fraction <= 1):
            raise ConfigError("fault experiments need 0 < fault_fraction <= 1")
        if self.kind == "variation":
            if self.variation not in ("increased", "decreased"):
                raise ConfigError("variation experiments need variation = increased | decreased")
            if not (0 < self.variation_fraction <= 1):
                raise ConfigError("variation experiments need 0 < variation_fraction <= 1")
        if self.kind == "nonlinear_init" and self.init_range not in INIT_RANGES["silver"]:
            raise ConfigError(f"init_range must be one of {sorted(INIT_RANGES['silver'])}")


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    reports: list
    accuracy_mean: float
    accuracy_std: float
    f1_mean: float
    f1_std: float
    extra: dict = field(default_factory=dict)

    def summary(self) -> str:
        return (f"{self.spec.kind} {self.spec.dataset} {self.spec.model} {self.spec.mode}: "
                f"accuracy {100 * self.accuracy_mean:.2f} +- {100 * self.accuracy_std:.2f} %, "
                f"F1 {100 * self.f1_mean:.2f} +- {100 * self.f1_std:.2f} % over {len(self.reports)} seeds")


def _config_for(spec: ExperimentSpec, dataset, seed: int):
    extra = dict(spec.overrides)
    if spec.kind == "fault":
        extra["fault_fraction"] = spec.fault_fraction
    if spec.kind == "variation":
        extra["variation"] = spec.variation
        extra["variation_fraction"] = spec.variation_fraction
    cfg, epochs = preset_config(dataset, spec.model, spec.mode, seed, **extra)
    if spec.kind == "nonlinear_init":
        epochs *= NONLINEAR_EPOCH_FACTOR
    return cfg, spec.epochs or epochs


def run_one(spec: ExperimentSpec, seed: int) -> TrainReport:
    """One fully seeded run; the crossbars are private to this call."""
    try:
        ds = load_dataset(spec.dataset, seed=seed, test_fraction=spec.test_fraction,
                          normalization=spec.normalization)
        cfg, epochs = _config_for(spec, ds, seed)
        net = build_network(cfg, audit=spec.kind == "sneak_audit")
        if spec.kind == "nonlinear_init":
            rng = np.random.default_rng([seed, 7])
            for cb in net.crossbars:
                nonlinear_init(cb, spec.init_range, rng)
        return train(net, ds, epochs, record=ds.name == "xor")
    except MemxbarError as exc:
        raise type(exc)(f"[{spec.kind} {spec.dataset} seed={seed}] {exc}") from exc


def _run_args(args):
    return run_one(*args)


def negative_control(model: str = "silver", seed: int = 0):
    """Write a 2x2 crossbar with the OFF switch as conductive as the ON one.

    Cells in the idle column then see full update voltages; the audit must fail.
    """
    cb = build_crossbar(2, 2, model, a=0.45, x_fullscale=0.2, rng=np.random.default_rng(seed))
    cb.Gs_off = cb.Gs_on
    traces: list[PhaseTrace] = []
    write_phase(cb, np.array([0.2, 0.15]), np.array([0.8, 0.0]), trace=traces)
    return sneak_path_audit(cb, traces)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every seed (in parallel up to ``spec.workers``) and aggregate."""
    jobs = [(spec, s) for s in spec.seeds]
    workers = max(1, min(spec.workers, len(jobs), os.cpu_count() or 1))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            reports = list(ex.map(_run_args, jobs))
    else:
        reports = [run_one(*j) for j in jobs]
    acc = np.array([r.accuracy for r in reports])
    f1 = np.array([r.f1 for r in reports])
    extra = {}
    if spec.kind == "sneak_audit":
        extra["negative_control"] = str(negative_control(spec.model))
        extra["all_passed"] = all(r.audit_passed for r in reports)
    return ExperimentResult(spec, reports, float(acc.mean()), float(acc.std()),
                            float(f1.mean()), float(f1.std()), extra)


def spec_echo(spec: ExperimentSpec) -> dict:
    return asdict(spec)

