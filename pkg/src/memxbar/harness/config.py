"""Flat ``key = value`` configuration with one section per module.

Example::

    [experiment]
    kind = fault
    dataset = iris
    seeds = 0, 1, 2, 3, 4
    fault_fraction = 0.1

    [device]
    model = silver

    [network]
    mode = device

    [crossbar]
    weight_span = 10

Unknown sections or keys are rejected so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from ..device import MemristorParams
from ..errors import ConfigError
from ..waveform import Timing
from .experiments import ExperimentSpec


def _floats(v):
    return tuple(float(p) for p in v.replace(";", ",").split(",") if p.strip())


def _ints(v):
    return tuple(int(p) for p in v.replace(";", ",").split(",") if p.strip())


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _names(v):
    parts = tuple(p.strip() for p in v.split(",") if p.strip())
    return parts[0] if len(parts) == 1 else parts


def _none_or_str(v):
    v = v.strip()
    return None if v.lower() in ("", "none") else v


EXPERIMENT_KEYS = {
    "kind": str, "dataset": str, "seeds": _ints, "epochs": int, "workers": int,
    "test_fraction": float, "fault_fraction": float, "variation": _none_or_str,
    "variation_fraction": float, "init_range": str, "normalization": _none_or_str,
}
NETWORK_KEYS = {
    "layers": _ints, "activation": _names, "output_fn": str, "loss": str, "mode": str,
    "tanh_delta": _bool,
}
WAVEFORM_KEYS = {
    "T_rd": float, "T_wr": float, "dt": float, "a_input": float, "a_hidden": float,
    "a_err": float, "input_scale": float, "step_fraction": float,
}
CROSSBAR_KEYS = {"weight_span": float, "R0": _floats, "init_range": _floats}
DEVICE_PARAM_KEYS = {f.name for f in fields(MemristorParams)}


def _parse(section, table, name):
    out = {}
    for key, raw in section.items():
        if key not in table:
            raise ConfigError(f"[{name}] unknown key {key!r}; known: {sorted(table)}")
        try:
            out[key] = table[key](raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from None
    return out


def read_config(path: str | Path) -> dict:
    """Parse a config file into ``{section: {key: value}}`` with typed values."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        if not cp.read(path):
            raise ConfigError(f"{path}: cannot read config file")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known = {"experiment", "network", "device", "crossbar", "waveform"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown)}")
    out = {s: {} for s in known}
    if cp.has_section("experiment"):
        out["experiment"] = _parse(cp["experiment"], EXPERIMENT_KEYS, "experiment")
    if cp.has_section("network"):
        out["network"] = _parse(cp["network"], NETWORK_KEYS, "network")
    if cp.has_section("waveform"):
        out["waveform"] = _parse(cp["waveform"], WAVEFORM_KEYS, "waveform")
    if cp.has_section("crossbar"):
        out["crossbar"] = _parse(cp["crossbar"], CROSSBAR_KEYS, "crossbar")
    if cp.has_section("device"):
        table = {"model": str, **{k: float for k in DEVICE_PARAM_KEYS}}
        out["device"] = _parse(cp["device"], table, "device")
    return out


def network_overrides(cfg: dict) -> dict:
    """NetworkConfig keyword overrides from the non-experiment sections."""
    o = {}
    net = dict(cfg.get("network", {}))
    net.pop("mode", None)
    if "layers" in net:
        o["layer_sizes"] = net.pop("layers")
    o.update(net)
    wf = dict(cfg.get("waveform", {}))
    timing = {k: wf.pop(k) for k in ("T_rd", "T_wr", "dt") if k in wf}
    if timing:
        o["timing"] = Timing(**timing)
    o.update(wf)
    xb = dict(cfg.get("crossbar", {}))
    if "init_range" in xb:
        rng = xb.pop("init_range")
        if len(rng) != 2:
            raise ConfigError("[crossbar] init_range needs two values: low, high (S)")
        o["init_range"] = rng
    o.update(xb)
    dev = {k: v for k, v in cfg.get("device", {}).items() if k != "model"}
    if dev:
        o["device_overrides"] = tuple(sorted(dev.items()))
    return o


def experiment_from_config(path: str | Path) -> ExperimentSpec:
    cfg = read_config(path)
    exp = dict(cfg["experiment"])
    model = cfg["device"].get("model", exp.pop("model", "silver"))
    mode = cfg["network"].get("mode", "device")
    try:
        return ExperimentSpec(model=model, mode=mode, overrides=network_overrides(cfg), **exp)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
