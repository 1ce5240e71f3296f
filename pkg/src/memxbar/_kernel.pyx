# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled write-phase kernel (see ``_kernel_py`` for the reference)."""

from libc.math cimport exp, sinh, ceil, fabs, INFINITY


cdef inline double _current(double x, double v, const double[::1] p) nogil:
    if v >= 0:
        return p[0] * x * sinh(p[2] * v)
    return p[1] * x * sinh(p[2] * v)


cdef inline double _drive(double v, const double[::1] p) nogil:
    if v > p[5]:
        return p[3] * (exp(v) - exp(p[5]))
    if v < -p[6]:
        return -p[4] * (exp(-v) - exp(p[6]))
    return 0.0


cdef inline double _window(double x, bint rising, const double[::1] p) nogil:
    cdef double xp = p[7], xn = p[8]
    if rising:
        if x >= xp:
            return exp(-p[9] * (x - xp)) * ((xp - x) / (1.0 - xp) + 1.0)
        return 1.0
    if x <= 1.0 - xn:
        return exp(p[10] * (x + xn - 1.0)) * (x / (1.0 - xn))
    return 1.0


def write_phase_kernel(double[:, ::1] x, const double[:, :, ::1] P,
                       const unsigned char[:, ::1] frozen,
                       const double[:, ::1] row_v, const double[:, ::1] on_dur,
                       double g_fb, double gs_on, double gs_off,
                       double t_quarter, double dt, double max_dx,
                       double[:, ::1] energy, double[:, ::1] vmax_off,
                       double[:, ::1] vmin_off):
    cdef Py_ssize_t R = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t i, j, q, seg, k, n, s, n_sub
    cdef double L, h, gs, num, den, G, vc, vdev, rate, xi, hs, pw
    cdef bint is_on, any_active
    with nogil:
        for j in range(m):
            for q in range(4):
                for seg in range(2):
                    is_on = seg == 0
                    L = on_dur[j, q] if is_on else t_quarter - on_dur[j, q]
                    if L <= 0:
                        continue
                    n = <Py_ssize_t>ceil(L / dt)
                    h = L / n
                    gs = gs_on if is_on else gs_off
                    for k in range(n):
                        num = 0.0
                        den = gs + g_fb
                        for i in range(R):
                            G = P[i, j, 0] * P[i, j, 2] * x[i, j]
                            num = num + row_v[i, q] * G
                            den = den + G
                        vc = num / den
                        any_active = False
                        for i in range(R):
                            vdev = P[i, j, 11] * (row_v[i, q] - vc)
                            if not is_on:
                                if vdev > vmax_off[i, j]:
                                    vmax_off[i, j] = vdev
                                if vdev < vmin_off[i, j]:
                                    vmin_off[i, j] = vdev
                            if frozen[i, j] == 0 and _drive(vdev, P[i, j]) != 0.0:
                                any_active = True
                        if not any_active:
                            for i in range(R):
                                vdev = P[i, j, 11] * (row_v[i, q] - vc)
                                pw = vdev * _current(x[i, j], vdev, P[i, j])
                                energy[i, j] += pw * (h * (n - k))
                            break
                        for i in range(R):
                            vdev = P[i, j, 11] * (row_v[i, q] - vc)
                            xi = x[i, j]
                            energy[i, j] += vdev * _current(xi, vdev, P[i, j]) * h
                            if frozen[i, j]:
                                continue
                            rate = P[i, j, 11] * _drive(vdev, P[i, j])
                            if rate == 0.0:
                                continue
                            n_sub = <Py_ssize_t>ceil(fabs(rate) * h / max_dx)
                            if n_sub < 1:
                                n_sub = 1
                            hs = h / n_sub
                            for s in range(n_sub):
                                xi = xi + hs * rate * _window(xi, rate > 0, P[i, j])
                                if xi < 0.0:
                                    xi = 0.0
                                elif xi > 1.0:
                                    xi = 1.0
                            x[i, j] = xi
