"""Pure numpy write-phase kernel.

Same algorithm as the compiled ``_kernel`` extension, vectorized across
columns instead of looped. Used when the extension is not built or when
``MEMXBAR_PURE_PYTHON=1`` is set.
"""

import numpy as np

from .device import current, drive, window


def write_phase_kernel(x, P, frozen, row_v, on_dur, g_fb, gs_on, gs_off,
                       t_quarter, dt, max_dx, energy, vmax_off, vmin_off):
    """Integrate every cell of a crossbar through the four write quarters.

    ``x`` (R, m), ``energy``, ``vmax_off`` and ``vmin_off`` are updated in
    place. ``row_v`` (R, 4) holds crossbar-frame row voltages per quarter and
    ``on_dur`` (m, 4) the switch ON time at the start of each quarter.
    Within a segment of length L the step is L / ceil(L / dt); once no
    unfrozen cell of a column is outside its threshold window, the rest of
    that segment is static and is accounted for in one go.
    """
    R, m = x.shape
    eta = P[..., 11]
    gsm = P[..., 0] * P[..., 2]  # small-signal conductance per unit x
    movable = frozen == 0
    for q in range(4):
        vr = row_v[:, q][:, None]
        for is_on in (True, False):
            L = on_dur[:, q] if is_on else t_quarter - on_dur[:, q]
            L = np.where(L > 0, L, 0.0)
            n = np.where(L > 0, np.ceil(L / dt), 0).astype(np.int64)
            h = np.where(n > 0, L / np.maximum(n, 1), 0.0)
            gs = gs_on if is_on else gs_off
            live = n > 0
            k = 0
            while live.any():
                G = gsm * x
                vc = (vr * G).sum(axis=0) / (gs + g_fb + G.sum(axis=0))
                vdev = eta * (vr - vc[None, :])
                p = vdev * current(x, vdev, P)
                if not is_on:
                    np.maximum(vmax_off, np.where(live[None, :], vdev, -np.inf), out=vmax_off)
                    np.minimum(vmin_off, np.where(live[None, :], vdev, np.inf), out=vmin_off)
                rate = eta * drive(vdev, P)
                active = (rate != 0.0) & movable
                col_active = active.any(axis=0)
                static = live & ~col_active
                if static.any():
                    energy += np.where(static[None, :], p * (h * (n - k))[None, :], 0.0)
                stepping = live & col_active
                energy += np.where(stepping[None, :], p * h[None, :], 0.0)
                cells = active & stepping[None, :]
                if cells.any():
                    hc = np.broadcast_to(h[None, :], x.shape)[cells]
                    xa, ra, Pa = x[cells], rate[cells], P[cells]
                    n_sub = np.maximum(1, np.ceil(np.abs(ra) * hc / max_dx)).astype(np.int64)
                    hs = hc / n_sub
                    rising = ra > 0
                    for s in range(int(n_sub.max())):
                        step = hs * ra * window(xa, rising, Pa)
                        xa = np.where(s < n_sub, np.clip(xa + step, 0.0, 1.0), xa)
                    x[cells] = xa
                k += 1
                live = stepping & (k < n)
