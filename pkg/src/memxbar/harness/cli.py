"""Command line entry point.

    memxbar characterize --model silver
    memxbar train --dataset iris --model silver --mode device --epochs 30 --seed 0 --out runs/iris
    memxbar experiment --spec fault.ini --out runs/fault

Exit codes: 0 success, 1 generic package error, 2 configuration, 3 dataset,
4 device/timing/read-safety, 70 unexpected internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..device import MODELS, characterize, get_params, load_params_file
from ..errors import ConfigError, MemxbarError
from ..kernel import BACKEND
from ..network import build_network, train
from .config import experiment_from_config
from .datasets import NORMALIZATIONS, load_dataset
from .experiments import preset_config, run_experiment, spec_echo
from .report import config_lines, write_run, write_waveforms

INTERNAL_ERROR = 70


def _characterize(args) -> int:
    params = load_params_file(args.params, args.model) if args.params else get_params(args.model)
    c = characterize(params, model=args.model)
    print(f"model = {args.model}")
    for name in ("v_th_pos", "v_th_neg"):
        print(f"{name}_V = {getattr(c, name)!r}")
    for name in ("G_abs_min", "G_abs_max", "G_lin_min", "G_lin_max", "G_ref"):
        print(f"{name}_mS = {1e3 * getattr(c, name):.6g}")
    print(f"c1_S_per_s = {c.c1!r}")
    print(f"c2_S_per_s = {c.c2!r}")
    lo, hi = c.write_window
    print(f"crossbar_window_V = {lo!r}, {hi!r}")
    return 0


def _train(args) -> int:
    ds = load_dataset(args.dataset, seed=args.seed, test_fraction=args.test_fraction,
                      normalization=args.normalization)
    cfg, epochs = preset_config(ds, args.model, args.mode, args.seed)
    epochs = args.epochs or epochs
    if args.trace_energy and cfg.mode != "device":
        raise ConfigError("--trace-energy needs --mode device (behavioral runs carry no currents)")
    net = build_network(cfg, audit=True)
    record = args.dump_waveforms or ds.name == "xor"
    report = train(net, ds, epochs, record=record)
    if not args.trace_energy:
        report.energy_per_synapse = None
    out = write_run(args.out, report, {"dataset": ds.name, "normalization": ds.normalization,
                                       "kernel": BACKEND})
    if args.dump_waveforms and report.records:
        write_waveforms(out / "waveforms.csv", net, report.records[0])
    print(report.summary())
    print(f"audit_read: {report.audit_read}")
    print(f"audit_write: {report.audit_write}")
    if report.energy_per_synapse is not None:
        print(f"energy_per_synapse_per_step_J = {report.energy_per_synapse:.4g}")
    print(f"outputs in {out}")
    return 0


def _experiment(args) -> int:
    spec = experiment_from_config(args.spec)
    res = run_experiment(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for rep in res.reports:
        write_run(out / f"seed_{rep.seed}", rep, {"dataset": spec.dataset, "kind": spec.kind})
    accs = [r.accuracy for r in res.reports]
    lines = ["[experiment]"] + config_lines(spec_echo(spec)) + ["", "[aggregate]"]
    lines += [f"accuracy_mean = {res.accuracy_mean!r}", f"accuracy_std = {res.accuracy_std!r}",
              f"f1_mean = {res.f1_mean!r}", f"f1_std = {res.f1_std!r}"]
    lines += [f"seed_{r.seed} = accuracy {r.accuracy!r} f1 {r.f1!r}" for r in res.reports]
    lines += [f"{k} = {v}" for k, v in sorted(res.extra.items())]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    with open(out / "seeds.csv", "w") as fh:
        fh.write("seed,accuracy,f1\n")
        for r in res.reports:
            fh.write(f"{r.seed},{r.accuracy!r},{r.f1!r}\n")
    print(res.summary())
    print(f"per-seed accuracy: {', '.join(f'{a:.4f}' for a in accs)} (mean {np.mean(accs):.4f})")
    for k, v in sorted(res.extra.items()):
        print(f"{k}: {v}")
    print(f"outputs in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memxbar", description="Memristive crossbar training simulator")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("characterize", help="extract conductance ranges and slopes of a device model")
    c.add_argument("--model", choices=sorted(MODELS), required=True)
    c.add_argument("--params", help="key = value file overriding device parameters")
    c.set_defaults(func=_characterize)

    t = sub.add_parser("train", help="train one network and write its outputs")
    t.add_argument("--dataset", required=True, help="xor, iris, breast_cancer, mnist or a CSV path")
    t.add_argument("--model", choices=sorted(MODELS), default="silver")
    t.add_argument("--mode", choices=("device", "behavioral"), default="device")
    t.add_argument("--epochs", type=int, default=None, help="defaults to the dataset preset")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--test-fraction", type=float, default=0.3)
    t.add_argument("--normalization", choices=NORMALIZATIONS, default=None,
                   help="feature map into the read window (default per dataset)")
    t.add_argument("--out", required=True)
    t.add_argument("--dump-waveforms", action="store_true",
                   help="write row, column and switch waveforms of one step")
    t.add_argument("--trace-energy", action="store_true",
                   help="report the mean energy per synapse per training step")
    t.set_defaults(func=_train)

    e = sub.add_parser("experiment", help="run a seeded experiment from a config file")
    e.add_argument("--spec", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "epochs", None) is not None and args.epochs < 1:
        print("error [config]: --epochs must be >= 1", file=sys.stderr)
        return ConfigError.exit_code
    try:
        return args.func(args)
    except MemxbarError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return MemxbarError.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
