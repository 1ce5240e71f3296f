"""Voltage-threshold memristor model.

State equation (generalized threshold model)::

    I = a1 * x * sinh(b * v)              v >= 0
    I = a2 * x * sinh(b * v)              v <  0
    dx/dt = eta * g(v) * f(x)

    g(v) =  Ap * (exp(v) - exp(Vp))        v >  Vp
         = -An * (exp(-v) - exp(Vn))       v < -Vn
         =  0                              otherwise

``f`` damps the motion past ``xp`` (moving up) or below ``1 - xn`` (moving
down) with an exponential times a linear window that reaches zero at the
boundary. Integration is forward Euler with sub-steps capped at ``max_dx``.

All array helpers broadcast, so the crossbar can push whole matrices of
cells through them with per-cell parameter arrays.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import CharacterizationError, ConfigError

PARAM_NAMES = ("a1", "a2", "b", "Ap", "An", "Vp", "Vn", "xp", "xn", "alpha_p", "alpha_n", "eta")
MAX_DX = 0.05


@dataclass(frozen=True)
class MemristorParams:
    a1: float
    a2: float
    b: float
    Ap: float
    An: float
    Vp: float
    Vn: float
    xp: float
    xn: float
    alpha_p: float
    alpha_n: float
    eta: float

    def __post_init__(self):
        bad = []
        if not (self.Vp > 0 and self.Vn > 0):
            bad.append("thresholds Vp, Vn must be positive magnitudes")
        if not (0 < self.xp < 1 and 0 < self.xn < 1):
            bad.append("xp, xn must lie in (0, 1)")
        if not (self.a1 > 0 and self.a2 > 0):
            bad.append("a1, a2 must be positive")
        if self.Ap < 0 or self.An < 0:
            bad.append("Ap, An must be non-negative")
        if self.eta not in (1, -1):
            bad.append("eta must be +1 or -1")
        if bad:
            raise ConfigError("invalid memristor parameters: " + "; ".join(bad))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=np.float64)

    @property
    def g_max(self) -> float:
        """Small-signal conductance at x = 1."""
        return self.a1 * self.b

    def write_window(self) -> tuple[float, float]:
        """Inert voltage window in the crossbar frame.

        Cells are mounted so that a positive row-to-column voltage raises the
        conductance; for eta = -1 devices that means the device sits reversed
        and the window swaps ends.
        """
        if self.eta > 0:
            return -self.Vn, self.Vp
        return -self.Vp, self.Vn


MODELS: dict[str, MemristorParams] = {
    "silver": MemristorParams(
        a1=0.17, a2=0.17, b=0.05, Ap=4000.0, An=4000.0, Vp=0.16, Vn=0.15,
        xp=0.3, xn=0.5, alpha_p=1.0, alpha_n=5.0, eta=1,
    ),
    "titania": MemristorParams(
        a1=1.4, a2=1.4, b=0.05, Ap=16.0, An=11.0, Vp=0.65, Vn=0.56,
        xp=0.3, xn=0.5, alpha_p=1.1, alpha_n=6.2, eta=-1,
    ),
}

# Parameter sets giving a 10% I-V change; eta is inherited from the base model.
_VARIATION_ROWS = {
    ("silver", "decreased"): (0.153, 0.153, 0.045, 2680, 2680, 0.104848, 0.098295, 0.18462, 0.3077, 0.145, 0.725),
    ("titania", "decreased"): (1.26, 1.26, 0.045, 9.888, 6.798, 0.594165, 0.511896, 0.2139, 0.3565, 0.0, 0.0),
    ("silver", "increased"): (0.187, 0.187, 0.055, 5924, 5924, 0.217696, 0.20409, 0.42363, 0.70605, 2.115, 10.575),
    ("titania", "increased"): (1.54, 1.54, 0.055, 32.16, 22.11, 0.6994, 0.60256, 0.57903, 0.96505, 1.9855, 11.191),
}
_VARIATION_ORDER = ("a1", "a2", "b", "Ap", "An", "Vp", "Vn", "xp", "xn", "alpha_p", "alpha_n")

# Published characterization, kept for reference and reporting.
PUBLISHED = {
    "silver": dict(v_th_pos=0.16, v_th_neg=-0.15, G_abs_min=0.255e-3, G_abs_max=8.5e-3,
                   G_lin_min=3.18e-3, G_lin_max=6.38e-3, init_range=(4.4e-3, 5.0e-3)),
    "titania": dict(v_th_pos=0.65, v_th_neg=-0.56, G_abs_min=1e-3, G_abs_max=70e-3,
                    G_lin_min=28e-3, G_lin_max=48e-3, init_range=(35e-3, 41e-3)),
}


def get_params(model: str) -> MemristorParams:
    try:
        return MODELS[model]
    except KeyError:
        raise ConfigError(f"unknown device model {model!r}; choose from {sorted(MODELS)}") from None


def apply_variation(params: MemristorParams, direction: str | None, model: str) -> MemristorParams:
    """Return the tabulated 10%-variation parameter row for ``(model, direction)``.

    ``direction`` of ``None`` or ``"none"`` returns ``params`` unchanged.
    """
    if direction in (None, "none"):
        return params
    try:
        row = _VARIATION_ROWS[(model, direction)]
    except KeyError:
        raise ConfigError(f"no variation row for model={model!r}, direction={direction!r}") from None
    return replace(params, **dict(zip(_VARIATION_ORDER, map(float, row))))


def load_params_file(path: str | Path, base: MemristorParams | str = "silver") -> MemristorParams:
    """Override parameters from a flat ``key = value`` file.

    A ``[device]`` section header is optional. Unknown keys are an error.
    """
    if isinstance(base, str):
        base = get_params(base)
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[device]\n" + text
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("device"):
        return base
    known = {f.name for f in fields(MemristorParams)}
    updates = {}
    for key, value in cp.items("device"):
        if key == "model":
            base = get_params(value.strip())
            continue
        if key not in known:
            raise ConfigError(f"{path}: unknown device parameter {key!r}")
        try:
            updates[key] = float(value)
        except ValueError:
            raise ConfigError(f"{path}: {key} = {value!r} is not a number") from None
    return replace(base, **updates)


@dataclass(frozen=True)
class DeviceState:
    x: float
    params: MemristorParams

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0):
            raise ValueError(f"state x={self.x} outside [0, 1]")

    @property
    def conductance(self) -> float:
        """Small-signal conductance a1 * x * b (slope of I at v = 0)."""
        return self.params.a1 * self.x * self.params.b


def state_for_conductance(params: MemristorParams, G):
    """Invert the small-signal relation G = a1 * b * x."""
    return np.clip(np.asarray(G, dtype=np.float64) / params.g_max, 0.0, 1.0)


# -- vectorised kernels -------------------------------------------------------
# ``P`` is an array whose last axis holds the 12 parameters in PARAM_NAMES order.

def current(x, v, P):
    a1, a2, b = P[..., 0], P[..., 1], P[..., 2]
    return np.where(v >= 0, a1, a2) * x * np.sinh(b * v)


def drive(v, P):
    """Threshold drive g(v); exactly zero inside [-Vn, Vp]."""
    Ap, An, Vp, Vn = P[..., 3], P[..., 4], P[..., 5], P[..., 6]
    up = Ap * (np.exp(v) - np.exp(Vp))
    down = -An * (np.exp(-v) - np.exp(Vn))
    return np.where(v > Vp, up, np.where(v < -Vn, down, 0.0))


def window(x, rising, P):
    xp, xn, ap, an = P[..., 7], P[..., 8], P[..., 9], P[..., 10]
    f_up = np.where(x >= xp, np.exp(-ap * (x - xp)) * ((xp - x) / (1.0 - xp) + 1.0), 1.0)
    f_down = np.where(x <= 1.0 - xn, np.exp(an * (x + xn - 1.0)) * (x / (1.0 - xn)), 1.0)
    return np.where(rising, f_up, f_down)


def integrate(x, v, dt, P, max_dx=MAX_DX):
    """Advance states ``x`` under constant device voltages ``v`` for ``dt``.

    Each element gets ``ceil(|g| dt / max_dx)`` Euler sub-steps (f <= 1, so
    that bounds every sub-step's |dx|); x is clamped after every sub-step.
    Elements inside the threshold window are returned bit-identical.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), x.shape)
    P = np.broadcast_to(P, x.shape + (len(PARAM_NAMES),))
    rate = P[..., 11] * drive(v, P)
    active = rate != 0.0
    if not active.any():
        return x
    xa, ra, Pa = x[active], rate[active], P[active]
    n_sub = np.maximum(1, np.ceil(np.abs(ra) * dt / max_dx)).astype(np.int64)
    h = dt / n_sub
    rising = ra > 0
    for k in range(int(n_sub.max())):
        live = k < n_sub
        step = h * ra * window(xa, rising, Pa)
        xa = np.where(live, np.clip(xa + step, 0.0, 1.0), xa)
    x[active] = xa
    return x


# -- scalar operations ---------------------------------------------------------

def device_current(s: DeviceState, v: float) -> float:
    return float(current(s.x, v, s.params.as_array()))


def device_step(s: DeviceState, v: float, dt: float, max_dx: float = MAX_DX) -> DeviceState:
    if not (math.isfinite(v) and math.isfinite(dt)):
        raise ValueError("device_step needs finite v and dt")
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = integrate(np.array([s.x]), v, dt, s.params.as_array(), max_dx)[0]
    return DeviceState(float(x), s.params)


# -- characterization ------------------------------------------------------------

@dataclass(frozen=True)
class PulseSpec:
    """Calibration pulse train: reset, then a rising and a falling sweep.

    Amplitudes are ``amplitude`` times the relevant threshold. The linear
    window on each sweep is the longest run of pulses whose conductance step
    is at least ``rise_fraction`` (``fall_fraction``) of that sweep's largest
    step.
    """

    width: float
    n_reset: int
    n_up: int = 400
    n_down: int = 400
    amplitude: float = 1.5
    rise_fraction: float = 0.25
    fall_fraction: float = 0.42
    read_fraction: float = 0.1
    x_start: float = 0.5


DEFAULT_PULSES = {
    "silver": PulseSpec(width=25e-6, n_reset=965),
    "titania": PulseSpec(width=1.6e-3, n_reset=1130),
}


@dataclass(frozen=True)
class DeviceCharacterization:
    v_th_pos: float
    v_th_neg: float
    G_abs_min: float
    G_abs_max: float
    G_lin_min: float
    G_lin_max: float
    c1: float
    c2: float
    eta: float = 1.0

    def __post_init__(self):
        if not (self.G_abs_min < self.G_lin_min < self.G_lin_max < self.G_abs_max):
            raise CharacterizationError(
                "conductance bounds out of order: "
                f"{self.G_abs_min:.4g} < {self.G_lin_min:.4g} < {self.G_lin_max:.4g} < {self.G_abs_max:.4g}"
            )
        if not (self.c1 < 0 < self.c2):
            raise CharacterizationError(f"slopes must satisfy c1 < 0 < c2, got c1={self.c1}, c2={self.c2}")

    @property
    def G_ref(self) -> float:
        return 0.5 * (self.G_lin_min + self.G_lin_max)

    @property
    def write_window(self) -> tuple[float, float]:
        """(negative, positive) thresholds as seen from the crossbar."""
        if self.eta > 0:
            return self.v_th_neg, self.v_th_pos
        return -self.v_th_pos, -self.v_th_neg


def _linear_run(steps: np.ndarray, fraction: float) -> tuple[int, int]:
    ok = steps >= fraction * steps.max()
    best, start = (0, 0), None
    for i, flag in enumerate(np.append(ok, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return best


def _fit_slope(t, G):
    A = np.vstack([t, np.ones_like(t)]).T
    (slope, _), *_ = np.linalg.lstsq(A, G, rcond=None)
    return float(slope)


def characterize(params: MemristorParams, pulse_spec: PulseSpec | None = None,
                 model: str | None = None) -> DeviceCharacterization:
    """Drive one device through a pulse train and extract its conductance map.

    ``pulse_spec`` defaults to the built-in spec for ``model`` (or the model
    whose parameters match ``params``).
    """
    if pulse_spec is None:
        if model is None:
            model = next((k for k, p in MODELS.items() if p == params), None)
            if model is None:
                model = "silver" if params.eta > 0 else "titania"
        pulse_spec = DEFAULT_PULSES[model]
    return _characterize(params, pulse_spec)


@lru_cache(maxsize=64)
def _characterize(params: MemristorParams, spec: PulseSpec) -> DeviceCharacterization:
    P = params.as_array()
    # device-frame voltages that raise / lower x
    v_up = spec.amplitude * params.Vp if params.eta > 0 else -spec.amplitude * params.Vn
    v_down = -spec.amplitude * params.Vn if params.eta > 0 else spec.amplitude * params.Vp
    v_read = spec.read_fraction * params.Vp

    def G_of(x):
        return float(current(x, v_read, P)) / v_read

    x = spec.x_start
    for _ in range(spec.n_reset):
        x = integrate(np.array([x]), v_down, spec.width, P)[0]
    up = [x]
    for _ in range(spec.n_up):
        up.append(integrate(np.array([up[-1]]), v_up, spec.width, P)[0])
    down = [up[-1]]
    for _ in range(spec.n_down):
        down.append(integrate(np.array([down[-1]]), v_down, spec.width, P)[0])

    G_up = np.array([G_of(v) for v in up])
    G_down = np.array([G_of(v) for v in down])
    t = np.arange(len(G_up)) * spec.width

    a, b = _linear_run(np.diff(G_up), spec.rise_fraction)
    c, d = _linear_run(-np.diff(G_down), spec.fall_fraction)
    if b - a < 10 or d - c < 10:
        raise CharacterizationError("no monotone linear segment of at least 10 samples")
    # run (a, b) of steps covers samples a..b inclusive
    c2 = _fit_slope(t[a:b + 1], G_up[a:b + 1])
    c1 = _fit_slope(t[c:d + 1], G_down[c:d + 1])
    lin_lo = max(G_up[a], G_down[d])
    lin_hi = min(G_up[b], G_down[c])
    everything = np.concatenate([G_up, G_down])
    return DeviceCharacterization(
        v_th_pos=params.Vp, v_th_neg=-params.Vn,
        G_abs_min=float(everything.min()), G_abs_max=float(everything.max()),
        G_lin_min=float(lin_lo), G_lin_max=float(lin_hi),
        c1=c1, c2=c2, eta=params.eta,
    )
