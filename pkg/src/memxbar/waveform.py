"""Piecewise-constant signals for the read, backward and write phases.

Time layout of one training step::

    [0, T_rd)              forward read, rows driven with a * x
    [T_rd, 2 T_rd)         backward read, columns driven with a * y
    [2 T_rd, 2 T_rd + T_wr) write phase, four equal quarters

During the write phase a row with x >= 0 is pushed past the positive
threshold in Q1 and past the negative one in Q2, and sits exactly on the
thresholds in Q3/Q4; x < 0 mirrors this onto Q3/Q4. A column switch is ON at
the start of the quarter that should move its cells, for a time proportional
to |y|. Only the quarter where a supra-threshold row meets an ON switch moves
a cell, which gives the four sign cases of the outer-product update.

All segments are half-open ``[start, end)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ReadSafetyError, TimingError

# quarters that raise / lower the conductance of a cell whose column is ON
INCREASE_QUARTERS = (0, 3)
DECREASE_QUARTERS = (1, 2)
DEFAULT_WINDOW = (-0.15, 0.16)  # tightest built-in window (silver)


@dataclass(frozen=True)
class Timing:
    T_rd: float = 10e-6
    T_wr: float = 1e-3
    dt: float | None = None

    def __post_init__(self):
        if not (self.T_rd > 0 and self.T_wr > 0):
            raise TimingError("T_rd and T_wr must be positive")
        if self.dt is None:
            object.__setattr__(self, "dt", self.T_wr / 400)
        if not (0 < self.dt <= self.T_wr / 400 * (1 + 1e-12)):
            raise TimingError(f"dt={self.dt} must lie in (0, T_wr/400]")

    @property
    def quarter(self) -> float:
        return self.T_wr / 4

    @property
    def write_start(self) -> float:
        return 2 * self.T_rd

    @property
    def end(self) -> float:
        return 2 * self.T_rd + self.T_wr


# titania switches slowly: a 1 ms write cannot move it by a useful step
DEFAULT_TIMING = {"silver": Timing(10e-6, 1e-3), "titania": Timing(10e-6, 40e-3)}


def default_timing(model: str) -> Timing:
    return DEFAULT_TIMING.get(model, Timing())


@dataclass(frozen=True)
class EncodingConstants:
    """Feature-to-voltage and error-to-duration scales.

    ``kappa`` scales the ON time of the conductance-raising quarters (Q1/Q4)
    and, unless ``kappa_dec`` is given, of the lowering ones (Q2/Q3) too.
    """

    a: float
    kappa: float = 0.0
    kappa_dec: float | None = None

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.kappa < 0 or (self.kappa_dec is not None and self.kappa_dec < 0):
            raise ValueError("kappa must be non-negative")

    @property
    def k_inc(self) -> float:
        return self.kappa

    @property
    def k_dec(self) -> float:
        return self.kappa if self.kappa_dec is None else self.kappa_dec


@dataclass(frozen=True)
class Waveform:
    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        segs = tuple((float(s), float(e), float(v)) for s, e, v in self.segments)
        if not segs:
            raise ValueError("waveform needs at least one segment")
        for (s0, e0, _), (s1, _, _) in zip(segs, segs[1:]):
            if e0 != s1:
                raise ValueError(f"segments not contiguous at {e0} / {s1}")
        if any(e < s for s, e, _ in segs):
            raise ValueError("segment ends before it starts")
        object.__setattr__(self, "segments", segs)

    @property
    def start(self) -> float:
        return self.segments[0][0]

    @property
    def end(self) -> float:
        return self.segments[-1][1]

    def on_time(self) -> float:
        """Total time spent at a nonzero value."""
        return sum(e - s for s, e, v in self.segments if v != 0)

    def to_csv(self, name: str | None = None) -> str:
        """Two points per segment so plots render the steps."""
        buf = io.StringIO()
        prefix = "" if name is None else f"{name},"
        for s, e, v in self.segments:
            if e > s:
                buf.write(f"{prefix}{s!r},{v!r}\n{prefix}{e!r},{v!r}\n")
        return buf.getvalue()


def _merge(segs):
    """Drop empty segments and fuse equal neighbours."""
    out = []
    for s, e, v in segs:
        if e <= s:
            continue
        if out and out[-1][2] == v:
            out[-1] = (out[-1][0], e, v)
        else:
            out.append((s, e, v))
    return tuple(out)


def sample(w: Waveform, time: float) -> float:
    if not (w.start <= time < w.end):
        raise ValueError(f"time {time} outside [{w.start}, {w.end})")
    starts = [s for s, _, _ in w.segments]
    idx = np.searchsorted(starts, time, side="right") - 1
    return w.segments[idx][2]


def check_read_safe(v, window=DEFAULT_WINDOW):
    """Raise unless every voltage sits strictly inside ``window``."""
    v = np.asarray(v, dtype=np.float64)
    lo, hi = window
    bad = ~((v > lo) & (v < hi))
    if bad.any():
        worst = v[bad].flat[0]
        raise ReadSafetyError(f"read voltage {worst:.4g} V outside ({lo}, {hi})")


def encode_read(x: float, c: EncodingConstants, t: Timing, window=DEFAULT_WINDOW) -> Waveform:
    v = c.a * x
    check_read_safe(v, window)
    return Waveform(((0.0, t.T_rd, v),))


def encode_error(y: float, c: EncodingConstants, t: Timing, window=DEFAULT_WINDOW) -> Waveform:
    """Column drive for the backward read."""
    v = c.a * y
    check_read_safe(v, window)
    return Waveform(((t.T_rd, 2 * t.T_rd, v),))


def update_levels(x, a: float, window) -> np.ndarray:
    """Row voltages per write quarter, shape ``x.shape + (4,)``."""
    x = np.asarray(x, dtype=np.float64)
    v_neg, v_pos = window
    ax = a * x
    pos = x >= 0
    q1 = np.where(pos, ax + v_pos, v_pos)
    q2 = np.where(pos, -ax + v_neg, v_neg)
    q3 = np.where(pos, v_neg, ax + v_neg)
    q4 = np.where(pos, v_pos, -ax + v_pos)
    return np.stack([q1, q2, q3, q4], axis=-1)


def encode_update(x: float, c: EncodingConstants, t: Timing, model, sign_x: str | None = None) -> Waveform:
    """Row waveform over the write phase.

    ``model`` is a DeviceCharacterization; its crossbar-frame window gives
    the threshold levels. ``sign_x`` (``"nonneg"``/``"neg"``) defaults to the
    sign of ``x``.
    """
    window = model.write_window
    check_read_safe(c.a * x, window)
    if sign_x is not None and (sign_x == "neg") != (x < 0):
        raise ValueError(f"sign_x={sign_x!r} disagrees with x={x}")
    levels = update_levels(x, c.a, window)
    t0, q = t.write_start, t.quarter
    return Waveform(tuple((t0 + k * q, t0 + (k + 1) * q, float(levels[k])) for k in range(4)))


def on_durations(y, c: EncodingConstants, model) -> np.ndarray:
    """Switch ON time at the start of each write quarter, shape ``y.shape + (4,)``."""
    y = np.asarray(y, dtype=np.float64)
    inc = c.k_inc * abs(model.c1) * np.abs(y)
    dec = c.k_dec * abs(model.c2) * np.abs(y)
    zero = np.zeros_like(y)
    pos = y >= 0
    return np.stack([
        np.where(pos, zero, inc),
        np.where(pos, dec, zero),
        np.where(pos, zero, dec),
        np.where(pos, inc, zero),
    ], axis=-1)


def check_durations(durations, t: Timing):
    d = np.asarray(durations)
    if d.size and (not np.all(np.isfinite(d)) or d.max() > t.quarter * (1 + 1e-12)):
        raise TimingError(f"switch ON time {d.max():.4g} s exceeds the write quarter {t.quarter:.4g} s")


def switch_schedule(y: float, c: EncodingConstants, t: Timing, model) -> Waveform:
    """Switch state (1 = ON, 0 = OFF) over the write phase."""
    d = on_durations(y, c, model)
    check_durations(d, t)
    t0, q = t.write_start, t.quarter
    segs = []
    for k in range(4):
        s = t0 + k * q
        segs += [(s, s + d[k], 1.0), (s + d[k], s + q, 0.0)]
    return Waveform(_merge(segs))


def max_duration(c: EncodingConstants, model, y_max: float = 1.0) -> float:
    return max(c.k_inc * abs(model.c1), c.k_dec * abs(model.c2)) * y_max

