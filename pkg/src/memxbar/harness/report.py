"""Writing run outputs to a directory.

Everything written is a pure function of the report, so identical runs give
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..crossbar import GS_OFF
from ..network import TrainReport
from ..waveform import encode_error, encode_read, encode_update, switch_schedule


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return str(v)


def config_lines(echo: dict, prefix: str = "") -> list[str]:
    lines = []
    for k in sorted(echo):
        v = echo[k]
        if isinstance(v, dict) and k == "timing":
            lines += config_lines(v, prefix + k + ".")
        else:
            lines.append(f"{prefix}{k} = {_fmt(v)}")
    return lines


def write_cost(path: Path, losses):
    with open(path, "w") as fh:
        fh.write("epoch,mean_loss\n")
        for i, v in enumerate(losses, start=1):
            fh.write(f"{i},{v!r}\n")


def write_metrics(path: Path, report: TrainReport):
    cm = np.asarray(report.confusion)
    with open(path, "w") as fh:
        fh.write(f"accuracy = {report.accuracy!r}\n")
        fh.write(f"macro_f1 = {report.f1!r}\n")
        fh.write(f"train_accuracy = {report.train_accuracy!r}\n")
        fh.write("confusion (rows true, cols predicted):\n")
        for row in cm:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def write_traces(path: Path, records):
    """Per-step signals of the recorded epoch: r, sigma, o, y and tanh(delta)."""
    with open(path, "w") as fh:
        fh.write("step,signal,index,value\n")
        for s, rec in enumerate(records):
            rows = []
            for k, r in enumerate(rec.trace.r):
                rows += [(f"r{k + 1}", i, v) for i, v in enumerate(r)]
            for k, sg in enumerate(rec.trace.sigma):
                rows += [(f"sigma{k + 1}", i, v) for i, v in enumerate(sg)]
            rows += [("o", i, v) for i, v in enumerate(rec.trace.o)]
            for k, y in enumerate(rec.y):
                rows += [(f"y{k + 1}", i, v) for i, v in enumerate(y)]
            for k, d in enumerate(rec.delta):
                if d is not None:
                    rows += [(f"tanh_delta{k + 1}", i, v) for i, v in enumerate(np.tanh(d[1:]))]
            for name, i, v in rows:
                fh.write(f"{s},{name},{i},{float(v)!r}\n")


def write_waveforms(path: Path, net, record):
    """Row, column and switch waveforms of every crossbar for one step."""
    t = net.config.timing
    with open(path, "w") as fh:
        fh.write("signal,time,value\n")
        for k, cb in enumerate(net.crossbars):
            u, y = record.trace.inputs[k], record.y[k]
            for i, xi in enumerate(u):
                fh.write(encode_read(xi, cb.enc, t, cb.window).to_csv(f"L{k + 1}_row{i}_read"))
                fh.write(encode_update(xi, cb.enc, t, cb.char).to_csv(f"L{k + 1}_row{i}_write"))
            err = type(cb.enc)(cb.a_err)
            for j, yj in enumerate(y):
                fh.write(encode_error(yj, err, t, cb.window).to_csv(f"L{k + 1}_col{j}_backward"))
                fh.write(switch_schedule(yj, cb.enc, t, cb.char).to_csv(f"L{k + 1}_col{j}_switch"))


def write_run(out: str | Path, report: TrainReport, extra: dict | None = None) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_cost(out / "cost.csv", report.losses)
    write_metrics(out / "metrics.txt", report)
    for k, snap in enumerate(report.snapshots, start=1):
        (out / f"conductance_{k}.csv").write_text(snap)
    if report.records:
        write_traces(out / "traces.csv", report.records)
    lines = ["[run]", f"seed = {report.seed}", f"epochs = {report.epochs}"]
    for k, v in sorted((extra or {}).items()):
        lines.append(f"{k} = {_fmt(v)}")
    lines += ["", "[config]"] + config_lines(report.config)
    lines += ["", "[switches]", f"Gs_off = {GS_OFF!r}"]
    lines += ["", "[result]", report.summary()]
    for k, v in enumerate(report.losses, start=1):
        lines.append(f"loss[{k}] = {v!r}")
    if report.audit_read:
        lines += [f"audit_read = {report.audit_read}", f"audit_write = {report.audit_write}"]
    if report.energy_per_synapse is not None:
        lines.append(f"energy_per_synapse_per_step_J = {report.energy_per_synapse!r}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    return out
