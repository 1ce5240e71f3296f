"""Per-synapse energy estimate from recorded phases."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from ..crossbar import PhaseTrace


def energy_estimate(trace) -> float:
    """Mean energy per cell, in joules.

    ``trace`` is a PhaseTrace, a list of them, or a mapping with sampled
    ``v`` and ``i`` arrays (time along axis 0, cells after) and a step ``dt``
    (scalar or per-sample). Behavioral phases carry no currents and are
    rejected.
    """
    if isinstance(trace, Mapping):
        v = np.asarray(trace["v"], dtype=np.float64)
        i = np.asarray(trace["i"], dtype=np.float64)
        dt = np.asarray(trace["dt"], dtype=np.float64)
        if v.shape != i.shape:
            raise ValueError("voltage and current samples differ in shape")
        if dt.ndim:
            dt = dt.reshape((-1,) + (1,) * (v.ndim - 1))
        per_cell = (v * i * dt).sum(axis=0)
        return float(np.mean(per_cell))
    traces = [trace] if isinstance(trace, PhaseTrace) else list(trace)
    if not traces:
        return 0.0
    total = None
    for tr in traces:
        if tr.energy is None:
            raise ValueError(f"{tr.kind} phase has no current record (behavioral mode?)")
        total = tr.energy.copy() if total is None else total + tr.energy
    return float(total.mean())
