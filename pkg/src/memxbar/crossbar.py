"""Memristive crossbar: conductance matrix, reads, writes and faults.

Rows are inputs (row 0 carries the bias), columns are output neurons. Cell
(i, j) realises the weight ``w_ji = a * R0 * (G_ref - G_ij)``. Cell state is
the device variable ``x``; conductance is always derived from it through the
small-signal relation ``G = a1 * b * x``.

Cells whose device polarity ``eta`` is -1 are mounted reversed, so in the
crossbar frame a positive row-to-column voltage always raises conductance.
The device sees ``eta * v_cell``.

Functions that mutate a crossbar do so in place and return it.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernel
from .device import (
    MAX_DX, PUBLISHED, DeviceCharacterization, MemristorParams, apply_variation,
    characterize, current, get_params, integrate,
)
from .errors import ConfigError, ReadSafetyError, TimingError
from .waveform import (
    EncodingConstants, Timing, check_durations, check_read_safe, default_timing, on_durations,
    update_levels,
)

GS_ON = 100.0
GS_OFF = 1e-9


@dataclass
class PhaseTrace:
    """Record of one read or write phase, for audits and energy estimates.

    ``vmax``/``vmin`` are device-frame voltage extremes per cell over the
    audited part of the phase (all cells during reads; OFF-column time
    during writes). ``energy`` is per-cell joules or ``None`` for
    behavioral phases.
    """

    kind: str
    vmax: np.ndarray | None = None
    vmin: np.ndarray | None = None
    energy: np.ndarray | None = None
    node_v: np.ndarray | None = None


@dataclass
class CrossbarState:
    x: np.ndarray                 # (rows, cols) device state
    params: np.ndarray            # (rows, cols, 12) per-cell device parameters
    char: DeviceCharacterization  # nominal characterization
    model: str
    a: float
    R0: float
    a_err: float = 0.09
    kappa: float = 0.0
    kappa_dec: float | None = None
    faults: np.ndarray | None = None
    Gs_on: float = GS_ON
    Gs_off: float = GS_OFF
    mode: str = "device"
    timing: Timing = field(default_factory=Timing)
    varied: np.ndarray | None = None

    def __post_init__(self):
        if self.faults is None:
            self.faults = np.zeros(self.x.shape, dtype=bool)
        if self.varied is None:
            self.varied = np.zeros(self.x.shape, dtype=bool)
        if self.mode not in ("device", "behavioral"):
            raise ConfigError(f"mode must be device or behavioral, got {self.mode!r}")

    @property
    def shape(self):
        return self.x.shape

    @property
    def G_ref(self) -> float:
        return self.char.G_ref

    @property
    def G(self) -> np.ndarray:
        return self.params[..., 0] * self.params[..., 2] * self.x

    @property
    def W(self) -> np.ndarray:
        """Weight matrix, shape (cols, rows)."""
        return (self.a * self.R0 * (self.G_ref - self.G)).T

    @property
    def enc(self) -> EncodingConstants:
        return EncodingConstants(self.a, self.kappa, self.kappa_dec)

    @property
    def window(self):
        return self.char.write_window

    def copy(self) -> "CrossbarState":
        out = CrossbarState(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.x = self.x.copy()
        out.params = self.params.copy()
        out.faults = self.faults.copy()
        out.varied = self.varied.copy()
        return out

    def set_conductance(self, G, mask=None):
        """Set cell states so that their small-signal conductance equals ``G``."""
        gmax = self.params[..., 0] * self.params[..., 2]
        x = np.clip(np.broadcast_to(G, self.shape) / gmax, 0.0, 1.0)
        if mask is None:
            self.x = x.copy()
        else:
            self.x = np.where(mask, x, self.x)

    def snapshot_csv(self) -> str:
        buf = io.StringIO()
        buf.write("row,col,G_S,stuck\n")
        G = self.G
        for i in range(self.shape[0]):
            for j in range(self.shape[1]):
                buf.write(f"{i},{j},{G[i, j]!r},{int(self.faults[i, j])}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class FaultPlan:
    fraction: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.fraction <= 1.0):
            raise ConfigError(f"fault fraction {self.fraction} outside [0, 1]")


def gain_for_span(char: DeviceCharacterization, a: float, weight_span: float) -> float:
    """R0 giving weights in +-weight_span over the linear conductance range."""
    return weight_span / (a * 0.5 * (char.G_lin_max - char.G_lin_min))


def build_crossbar(n_rows: int, n_cols: int, model: str = "silver", a: float = 0.45, *,
                   a_err: float = 0.09, R0: float | None = None, weight_span: float = 8.0,
                   init_range: tuple[float, float] | None = None, mode: str = "device",
                   timing: Timing | None = None, rng: np.random.Generator | None = None,
                   variation: tuple[str, float] | None = None, x_fullscale: float = 1.0,
                   step_fraction: float = 0.02, params: MemristorParams | None = None) -> CrossbarState:
    """Create an initialised crossbar with calibrated write durations.

    ``variation`` is ``(direction, fraction)``: that share of cells,
    chosen uniformly, gets the varied parameter row before initialisation.
    ``x_fullscale`` is the largest |input| the rows will carry; together with
    ``step_fraction`` it fixes the calibrated update step. Full-scale reads
    (``a * x_fullscale`` forward, ``a_err`` backward) must stay inside the
    threshold window of every cell, varied ones included.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    base = params if params is not None else get_params(model)
    char = characterize(base, model=model)
    P = np.broadcast_to(base.as_array(), (n_rows, n_cols, 12)).copy()
    varied = np.zeros((n_rows, n_cols), dtype=bool)
    if variation is not None and variation[0] not in (None, "none") and variation[1] > 0:
        direction, frac = variation
        alt = apply_variation(base, direction, model).as_array()
        k = int(np.floor(frac * n_rows * n_cols + 0.5))
        idx = rng.choice(n_rows * n_cols, size=k, replace=False)
        varied.flat[idx] = True
        P[varied] = alt
    v_read = max(a * x_fullscale, a_err)
    v_th = float(np.minimum(P[..., 5], P[..., 6]).min())
    if v_read >= v_th:
        raise ReadSafetyError(
            f"full-scale read of {v_read:.4g} V reaches the lowest cell threshold {v_th:.4g} V; "
            "lower a, a_err or the input scale"
        )
    timing = timing or default_timing(model)
    if R0 is None:
        R0 = gain_for_span(char, a, weight_span)
    gs_on = max(GS_ON, 1e3 * float((P[..., 0] * P[..., 2]).max()) * n_rows)
    cb = CrossbarState(x=np.zeros((n_rows, n_cols)), params=P, char=char, model=model, a=a,
                       R0=R0, a_err=a_err, Gs_on=gs_on, mode=mode, timing=timing, varied=varied)
    lo, hi = init_range if init_range is not None else PUBLISHED[model]["init_range"]
    cb.set_conductance(rng.uniform(lo, hi, size=cb.shape))
    cb.kappa, cb.kappa_dec = calibrate_kappa(base, char, a, x_fullscale, timing, step_fraction, cb.Gs_on)
    return cb


def weight_of(cb: CrossbarState, j: int, i: int) -> float:
    rows, cols = cb.shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"cell ({i}, {j}) outside {rows}x{cols} crossbar")
    return float(cb.a * cb.R0 * (cb.G_ref - cb.G[i, j]))


def _cell_current(cb, v_cell):
    """Crossbar-frame current through each cell for cell voltages ``v_cell``."""
    if cb.mode == "behavioral":
        return cb.G * v_cell
    eta = cb.params[..., 11]
    return eta * current(cb.x, eta * v_cell, cb.params)


def _disturb(cb, v_cell, duration):
    """Let every healthy cell integrate a read-phase voltage."""
    if cb.mode == "behavioral":
        return
    eta = cb.params[..., 11]
    new = integrate(cb.x, eta * v_cell, duration, cb.params)
    cb.x = np.where(cb.faults, cb.x, new)


def forward_read(cb: CrossbarState, x, trace: list | None = None) -> np.ndarray:
    """Row-driven read; returns ``r = W x`` from the simulated column currents.

    ``x`` has one entry per row, bias included. The column node sits at the
    virtual ground of its output amplifier; the nodal solution with the ON
    switch is recorded in the trace to show it is negligible.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cb.shape[0],):
        raise ValueError(f"input length {x.shape} does not match {cb.shape[0]} rows")
    v = cb.a * x
    check_read_safe(v, cb.window)
    v_f = -v.sum()
    v_cell = np.broadcast_to(v[:, None], cb.shape)
    I = _cell_current(cb, v_cell)
    r = -cb.R0 * (I.sum(axis=0) + cb.G_ref * v_f)
    if trace is not None:
        G = cb.G
        node = (v_f * cb.G_ref + (v[:, None] * G).sum(axis=0)) / (cb.Gs_on + cb.G_ref + G.sum(axis=0))
        vdev = cb.params[..., 11] * (v[:, None] - node[None, :])
        energy = None if cb.mode == "behavioral" else v_cell * I * cb.timing.T_rd
        trace.append(PhaseTrace("read", vdev, vdev.copy(), energy, node))
    _disturb(cb, v_cell, cb.timing.T_rd)
    return r


def backward_read(cb: CrossbarState, y, trace: list | None = None) -> np.ndarray:
    """Column-driven read; returns ``delta = W^T y``.

    Errors drive the columns at ``a_err * y``; rows sit at virtual ground,
    and the row decoder rescales by ``a / a_err``.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (cb.shape[1],):
        raise ValueError(f"error length {y.shape} does not match {cb.shape[1]} columns")
    v = cb.a_err * y
    check_read_safe(v, cb.window)
    v_b = -v.sum()
    v_cell = np.broadcast_to(-v[None, :], cb.shape)  # row minus column
    I_row = -_cell_current(cb, v_cell)                # current leaving columns into rows
    delta = -cb.R0 * (I_row.sum(axis=1) + cb.G_ref * v_b) * (cb.a / cb.a_err)
    if trace is not None:
        vdev = cb.params[..., 11] * v_cell
        energy = None if cb.mode == "behavioral" else v_cell * -I_row * cb.timing.T_rd
        trace.append(PhaseTrace("read", vdev.copy(), vdev.copy(), energy))
    _disturb(cb, v_cell, cb.timing.T_rd)
    return delta


def write_phase(cb: CrossbarState, x, y, t: Timing | None = None,
                trace: list | None = None) -> CrossbarState:
    """Co-simulate every cell through the four write quarters.

    Rows carry the update levels of ``x``, column switches follow the
    schedules of ``y``; each column node is re-solved every step from the
    current conductances with the feedback node grounded.
    """
    t = t or cb.timing
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != (cb.shape[0],) or y.shape != (cb.shape[1],):
        raise ValueError("x / y lengths do not match the crossbar")
    check_read_safe(cb.a * x, cb.window)
    row_v = np.ascontiguousarray(update_levels(x, cb.a, cb.window))
    dur = np.ascontiguousarray(on_durations(y, cb.enc, cb.char))
    check_durations(dur, t)
    xs = np.ascontiguousarray(cb.x, dtype=np.float64)
    energy = np.zeros(cb.shape)
    vmax = np.full(cb.shape, -np.inf)
    vmin = np.full(cb.shape, np.inf)
    kernel.write_phase_kernel(xs, np.ascontiguousarray(cb.params), cb.faults.astype(np.uint8),
                              row_v, dur, cb.G_ref, cb.Gs_on, cb.Gs_off, t.quarter, t.dt, MAX_DX,
                              energy, vmax, vmin)
    cb.x = xs
    if trace is not None:
        trace.append(PhaseTrace("write", vmax, vmin, energy))
    return cb


def write_phase_behavioral(cb: CrossbarState, x, y, eta_eff: float,
                           trace: list | None = None) -> CrossbarState:
    """Outer-product update applied directly in conductance space.

    The new conductance is kept inside the linear region, widened to include
    the cell's current value so a cell outside it is never pulled further out.
    """
    if not eta_eff > 0:
        raise ValueError("eta_eff must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    G = cb.G
    dG = -(eta_eff / (cb.a * cb.R0)) * np.outer(x, y)
    lo = np.minimum(cb.char.G_lin_min, G)
    hi = np.maximum(cb.char.G_lin_max, G)
    new = np.clip(G + dG, lo, hi)
    healthy = ~cb.faults & (dG != 0)
    cb.set_conductance(new, healthy)
    if trace is not None:
        trace.append(PhaseTrace("write"))
    return cb


def behavioral_rate(cb: CrossbarState, x_fullscale: float = 1.0, step_fraction: float = 0.02) -> float:
    """Learning rate whose largest step matches the calibrated device step."""
    span = cb.char.G_lin_max - cb.char.G_lin_min
    return step_fraction * span * cb.a * cb.R0 / x_fullscale


def inject_faults(cb: CrossbarState, plan: FaultPlan) -> CrossbarState:
    """Stick a uniformly chosen share of cells at their present conductance."""
    n = cb.x.size
    k = int(np.floor(plan.fraction * n + 0.5))
    idx = np.random.default_rng(plan.seed).choice(n, size=k, replace=False)
    faults = cb.faults.copy()
    faults.flat[idx] = True
    cb.faults = faults
    return cb


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    phases: int
    max_abs: float
    worst_margin: float  # most negative = largest excursion past a threshold

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} phases={self.phases} max|v|={self.max_abs:.4g} V margin={self.worst_margin:.4g} V"


def sneak_path_audit(cb: CrossbarState, phase_trace) -> AuditReport:
    """Check that audited cells never left their threshold window.

    Accepts one PhaseTrace or a list of them; behavioral traces carry no
    voltages and are skipped.
    """
    traces = [phase_trace] if isinstance(phase_trace, PhaseTrace) else list(phase_trace)
    Vp = cb.params[..., 5]
    Vn = cb.params[..., 6]
    max_abs, margin, n = 0.0, np.inf, 0
    for tr in traces:
        if tr.vmax is None:
            continue
        n += 1
        seen = np.isfinite(tr.vmax)
        if not seen.any():
            continue
        hi = np.where(seen, tr.vmax, 0.0)
        lo = np.where(seen, tr.vmin, 0.0)
        max_abs = max(max_abs, float(np.abs(hi).max()), float(np.abs(lo).max()))
        margin = min(margin, float((Vp - hi).min()), float((lo + Vn).min()))
    margin = float(margin) if np.isfinite(margin) else 0.0
    return AuditReport(margin >= 0.0, n, max_abs, margin)


@lru_cache(maxsize=128)
def calibrate_kappa(params: MemristorParams, char: DeviceCharacterization, a: float,
                    x_fullscale: float, timing: Timing, step_fraction: float = 0.02,
                    gs_on: float = GS_ON) -> tuple[float, float]:
    """Duration scales giving a full-scale step of ``step_fraction`` of the linear range.

    A single cell at G_ref is written with the largest input and |y| = 1;
    the ON time is bisected per direction, then divided by the slope that
    the switch rule multiplies it with.
    """
    target = step_fraction * (char.G_lin_max - char.G_lin_min)
    P = params.as_array()[None, None, :]
    x0 = char.G_ref / params.g_max
    window = char.write_window
    row_v = np.ascontiguousarray(update_levels(np.array([x_fullscale]), a, window))

    def dG(quarter, d):
        xs = np.array([[x0]])
        dur = np.zeros((1, 4))
        dur[0, quarter] = d
        kernel.write_phase_kernel(xs, P, np.zeros((1, 1), np.uint8), row_v, dur, char.G_ref,
                                  gs_on, GS_OFF, timing.quarter, timing.dt, MAX_DX,
                                  np.zeros((1, 1)), np.full((1, 1), -np.inf), np.full((1, 1), np.inf))
        return abs(xs[0, 0] - x0) * params.g_max

    out = []
    for quarter, slope in ((0, char.c1), (1, char.c2)):
        hi = timing.quarter
        if dG(quarter, hi) < target:
            raise TimingError(
                f"a full write quarter of {hi:.3g} s moves G by {dG(quarter, hi):.3g} S, "
                f"less than the requested step {target:.3g} S; lengthen T_wr"
            )
        lo = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if dG(quarter, mid) < target:
                lo = mid
            else:
                hi = mid
        out.append(hi / abs(slope))
    return out[0], out[1]
