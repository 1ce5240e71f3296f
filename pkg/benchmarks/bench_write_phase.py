"""Time the compiled write-phase kernel against the numpy fallback.

    python3 benchmarks/bench_write_phase.py [--sizes 5x4 32x32 64x64] [--repeats 5]

Both kernels integrate the same crossbar through one four-quarter write
phase; the final states are checked to agree before timings are reported.
"""

import argparse
import time

import numpy as np

from memxbar import _kernel_py
from memxbar.crossbar import build_crossbar
from memxbar.waveform import on_durations, update_levels

try:
    from memxbar import _kernel as compiled
except ImportError:
    compiled = None


def make_args(rows, cols, seed=0):
    rng = np.random.default_rng(seed)
    cb = build_crossbar(rows, cols, "silver", 0.45, a_err=0.09, x_fullscale=0.2, rng=rng)
    row_v = update_levels(rng.uniform(-0.2, 0.2, rows), cb.a, cb.char.write_window)
    dur = on_durations(rng.uniform(-1, 1, cols), cb.enc, cb.char)
    t = cb.timing
    return [cb.x.copy(), np.ascontiguousarray(cb.params), cb.faults.astype(np.uint8),
            np.ascontiguousarray(row_v), np.ascontiguousarray(dur), cb.G_ref, cb.Gs_on, cb.Gs_off,
            t.quarter, t.dt, 0.05, np.zeros((rows, cols)), np.full((rows, cols), -np.inf),
            np.full((rows, cols), np.inf)]


def fresh(args):
    return [a.copy() if isinstance(a, np.ndarray) else a for a in args]


def best_time(fn, args, repeats):
    times = []
    for _ in range(repeats):
        a = fresh(args)
        t0 = time.perf_counter()
        fn(*a)
        times.append(time.perf_counter() - t0)
    return min(times), a


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", nargs="+", default=["5x4", "16x16", "32x32", "64x64"])
    p.add_argument("--repeats", type=int, default=5)
    opts = p.parse_args(argv)
    print(f"{'size':>8} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for size in opts.sizes:
        rows, cols = (int(v) for v in size.split("x"))
        args = make_args(rows, cols)
        t_py, a_py = best_time(_kernel_py.write_phase_kernel, args, opts.repeats)
        if compiled is None:
            print(f"{size:>8} {1e3 * t_py:10.2f} {'n/a':>10} {'n/a':>8}")
            continue
        t_c, a_c = best_time(compiled.write_phase_kernel, args, opts.repeats)
        np.testing.assert_allclose(a_c[0], a_py[0], rtol=1e-10, atol=1e-15)
        print(f"{size:>8} {1e3 * t_py:10.2f} {1e3 * t_c:10.2f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
