"""Timing comparison of the numba-compiled kernels against the NumPy twins.

Run:

    python benchmarks/bench_kernels.py

Both implementations live side by side in papkit.kernels, so a single
process can warm up the compiled versions and then time each pair on the
same inputs.  If numba is unavailable (or PAPKIT_NO_NUMBA=1 was set) the
script still runs the NumPy path and says so.
"""

import time

import numpy as np

from papkit import kernels

REPEATS = 5
rng = np.random.default_rng(99)


def best_of(fn, *args, repeats=REPEATS):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def make_cases():
    t_big = rng.uniform(-1e4, 1e4, 2_000_000)
    freqs = rng.uniform(-3.0, 3.0, 4)
    amps = rng.normal(size=(4, 1)) + 1j * rng.normal(size=(4, 1))

    conv_t = rng.uniform(-50.0, 50.0, 20_000)
    s_nodes = np.linspace(-22.0, 22.0, 2001)
    s_factor = np.exp(-np.abs(s_nodes)) * 0.01
    eamp = np.array([1.0 + 0.0j])
    empty_f = np.empty(0, dtype=np.float64)
    empty_c = np.empty((0, 1), dtype=np.complex128)

    nsteps = 20_000
    h_half = rng.normal(size=(2 * nsteps + 1, 2)) + 0j
    mats = np.stack([np.diag([-1.0 + 0j, -2.0 + 0j]), 0.05j * np.ones((2, 2))])
    rk_freqs = np.array([0.0, 1.0])
    y0 = np.zeros(2, dtype=np.complex128)

    trace = rng.normal(size=(20_000, 1)) + 1j * rng.normal(size=(20_000, 1))
    shifts = np.arange(1, 10_000, dtype=np.int64)

    wparams = np.array([1.0, 2.0])
    e = np.empty(0, dtype=np.float64)
    return [
        ("weight_eval (2e6 pts)", "weight_eval", (1, wparams, e, e, t_big)),
        ("trig_eval (2e6 pts, 4 terms)", "trig_eval", (freqs, amps, t_big)),
        (
            "conv_eval (2e4 x 2e3 nodes)",
            "conv_eval",
            (conv_t, s_nodes, s_factor, empty_f, empty_c, 3, np.array([1.0]), e, e, eamp),
        ),
        (
            "rk4_sweep (2e4 steps, 2x2)",
            "rk4_sweep",
            (rk_freqs, mats, h_half, y0, 0.0, 0.01, nsteps),
        ),
        ("dev_scan (1e4 shifts x 2e4 pts)", "dev_scan", (trace, shifts)),
    ]


def main():
    have_numba = kernels.weight_eval_numba is not None
    print(f"compiled backend available: {have_numba}")
    rows = []
    for label, name, args in make_cases():
        fn_np = getattr(kernels, f"{name}_numpy")
        t_np = best_of(fn_np, *args)
        if have_numba:
            fn_nb = getattr(kernels, f"{name}_numba")
            fn_nb(*args)  # warm the JIT outside the timer
            t_nb = best_of(fn_nb, *args)
            rows.append((label, t_np, t_nb, t_np / t_nb))
        else:
            rows.append((label, t_np, None, None))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for label, t_np, t_nb, ratio in rows:
        if t_nb is None:
            print(f"{label:{width}}  {t_np * 1e3:9.2f}ms  {'-':>10}  {'-':>8}")
        else:
            print(
                f"{label:{width}}  {t_np * 1e3:9.2f}ms  {t_nb * 1e3:9.2f}ms  "
                f"{ratio:7.1f}x"
            )


if __name__ == "__main__":
    main()
