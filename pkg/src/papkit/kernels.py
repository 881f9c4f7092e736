"""Hot numeric kernels, each with a numba-compiled and a pure-NumPy twin.

Every kernel exists twice: ``<name>_numpy`` (vectorized NumPy, always
available) and ``<name>_numba`` (compiled, present when numba is usable).
The public name dispatches according to :mod:`papkit.backend`.  The twins
are required to agree to rounding; ``tests/test_kernels.py`` checks this and
``benchmarks/bench_kernels.py`` times both.

Encodings (kept flat so the compiled signatures stay monomorphic):

weights      code 0 constant [c]; 1 power [scale, N] for scale*(1+|t|)^N;
             2 polynomial [c0..cn] ascending; 3 exp-abs [c] for c*e^|t|;
             4 tabulated (grid, vals) linear interior, constant outside.
decays       code 0 zero; 1 bump [center, radius, height] (cos^2 taper);
             2 rational [c, p] for c/(1+t^2)^p; 3 gaussian [c] for c*e^{-t^2};
             4 tabulated (grid, vals) linear interior, zero outside.
conv kernel  code 0 two-sided exp [c, a] for c*e^{-a|s|}; 1 gaussian [c];
             2 compact tabulated (grid, vals) zero outside.
"""

import numpy as np

from .backend import USE_NUMBA, jit


# ---------------------------------------------------------------------------
# weight evaluation


def weight_eval_numpy(code, params, grid, vals, t):
    t = np.asarray(t, dtype=np.float64)
    if code == 0:
        return np.full(t.shape, params[0])
    if code == 1:
        return params[0] * (1.0 + np.abs(t)) ** params[1]
    if code == 2:
        out = np.zeros_like(t)
        for c in params[::-1]:
            out = out * t + c
        return out
    if code == 3:
        return params[0] * np.exp(np.abs(t))
    if code == 4:
        return np.interp(t, grid, vals)
    raise ValueError(f"unknown weight code {code}")


def weight_log_eval_numpy(code, params, grid, vals, t):
    t = np.asarray(t, dtype=np.float64)
    if code == 0:
        return np.full(t.shape, np.log(params[0]))
    if code == 1:
        return np.log(params[0]) + params[1] * np.log1p(np.abs(t))
    if code == 2:
        return np.log(weight_eval_numpy(code, params, grid, vals, t))
    if code == 3:
        return np.log(params[0]) + np.abs(t)
    if code == 4:
        return np.log(np.interp(t, grid, vals))
    raise ValueError(f"unknown weight code {code}")


def _weight_eval_loop(code, params, grid, vals, t):
    out = np.empty(t.shape[0], dtype=np.float64)
    if code == 0:
        for i in range(t.shape[0]):
            out[i] = params[0]
    elif code == 1:
        for i in range(t.shape[0]):
            out[i] = params[0] * (1.0 + abs(t[i])) ** params[1]
    elif code == 2:
        for i in range(t.shape[0]):
            acc = 0.0
            for k in range(params.shape[0] - 1, -1, -1):
                acc = acc * t[i] + params[k]
            out[i] = acc
    elif code == 3:
        for i in range(t.shape[0]):
            out[i] = params[0] * np.exp(abs(t[i]))
    else:
        out[:] = np.interp(t, grid, vals)
    return out


def _weight_log_eval_loop(code, params, grid, vals, t):
    out = np.empty(t.shape[0], dtype=np.float64)
    if code == 0:
        for i in range(t.shape[0]):
            out[i] = np.log(params[0])
    elif code == 1:
        for i in range(t.shape[0]):
            out[i] = np.log(params[0]) + params[1] * np.log1p(abs(t[i]))
    elif code == 2:
        for i in range(t.shape[0]):
            acc = 0.0
            for k in range(params.shape[0] - 1, -1, -1):
                acc = acc * t[i] + params[k]
            out[i] = np.log(acc)
    elif code == 3:
        for i in range(t.shape[0]):
            out[i] = np.log(params[0]) + abs(t[i])
    else:
        tmp = np.interp(t, grid, vals)
        for i in range(t.shape[0]):
            out[i] = np.log(tmp[i])
    return out


# ---------------------------------------------------------------------------
# trigonometric polynomial and decay-profile evaluation


def trig_eval_numpy(freqs, amps, t):
    """Sum of amps[k] * exp(i*freqs[k]*t); returns (len(t), d) complex."""
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros((t.shape[0], amps.shape[1]), dtype=np.complex128)
    for k in range(freqs.shape[0]):
        out += np.exp(1j * freqs[k] * t)[:, None] * amps[k][None, :]
    return out


def _trig_eval_loop(freqs, amps, t):
    n = t.shape[0]
    d = amps.shape[1]
    out = np.zeros((n, d), dtype=np.complex128)
    for i in range(n):
        for k in range(freqs.shape[0]):
            ph = np.exp(1j * freqs[k] * t[i])
            for j in range(d):
                out[i, j] += ph * amps[k, j]
    return out


def decay_profile_numpy(code, params, grid, vals, t):
    t = np.asarray(t, dtype=np.float64)
    if code == 0:
        return np.zeros(t.shape)
    if code == 1:
        x = (t - params[0]) / params[1]
        out = np.zeros(t.shape)
        inside = np.abs(x) < 1.0
        out[inside] = params[2] * np.cos(0.5 * np.pi * x[inside]) ** 2
        return out
    if code == 2:
        return params[0] / (1.0 + t * t) ** params[1]
    if code == 3:
        return params[0] * np.exp(-t * t)
    if code == 4:
        out = np.interp(t, grid, vals)
        out[(t < grid[0]) | (t > grid[-1])] = 0.0
        return out
    raise ValueError(f"unknown decay code {code}")


def _decay_profile_loop(code, params, grid, vals, t):
    out = np.zeros(t.shape[0], dtype=np.float64)
    if code == 0:
        pass
    elif code == 1:
        for i in range(t.shape[0]):
            x = (t[i] - params[0]) / params[1]
            if abs(x) < 1.0:
                out[i] = params[2] * np.cos(0.5 * np.pi * x) ** 2
    elif code == 2:
        for i in range(t.shape[0]):
            out[i] = params[0] / (1.0 + t[i] * t[i]) ** params[1]
    elif code == 3:
        for i in range(t.shape[0]):
            out[i] = params[0] * np.exp(-t[i] * t[i])
    else:
        tmp = np.interp(t, grid, vals)
        for i in range(t.shape[0]):
            if grid[0] <= t[i] <= grid[-1]:
                out[i] = tmp[i]
    return out


def conv_kernel_eval_numpy(code, params, grid, vals, s):
    s = np.asarray(s, dtype=np.float64)
    if code == 0:
        return params[0] * np.exp(-params[1] * np.abs(s))
    if code == 1:
        return params[0] * np.exp(-s * s)
    if code == 2:
        out = np.interp(s, grid, vals)
        out[(s < grid[0]) | (s > grid[-1])] = 0.0
        return out
    raise ValueError(f"unknown kernel code {code}")


# ---------------------------------------------------------------------------
# convolution at query points


def conv_eval_numpy(
    t_pts, s_nodes, node_factor, freqs, amps, ecode, eparams, egrid, evals, eamp
):
    """Quadrature convolution sum(node_factor[j] * f(t_i - s_j)) over j.

    ``node_factor`` carries quadrature weight times kernel value.  The signal
    is trig terms plus a scalar decay profile times the vector ``eamp``.
    """
    m = t_pts.shape[0]
    d = eamp.shape[0]
    out = np.zeros((m, d), dtype=np.complex128)
    chunk = max(1, int(2e6 // max(1, s_nodes.shape[0])))
    for lo in range(0, m, chunk):
        tt = t_pts[lo : lo + chunk]
        tau = tt[:, None] - s_nodes[None, :]
        flat = tau.ravel()
        sig = np.zeros((flat.shape[0], d), dtype=np.complex128)
        if freqs.shape[0]:
            sig += trig_eval_numpy(freqs, amps, flat)
        if ecode != 0:
            prof = decay_profile_numpy(ecode, eparams, egrid, evals, flat)
            sig += prof[:, None] * eamp[None, :]
        sig = sig.reshape(tau.shape[0], tau.shape[1], d)
        out[lo : lo + chunk] = np.einsum("j,ijd->id", node_factor, sig)
    return out


def _conv_eval_loop(
    t_pts, s_nodes, node_factor, freqs, amps, ecode, eparams, egrid, evals, eamp
):
    m = t_pts.shape[0]
    q = s_nodes.shape[0]
    d = eamp.shape[0]
    out = np.zeros((m, d), dtype=np.complex128)
    for i in range(m):
        for j in range(q):
            tau = t_pts[i] - s_nodes[j]
            w = node_factor[j]
            for k in range(freqs.shape[0]):
                ph = w * np.exp(1j * freqs[k] * tau)
                for c in range(d):
                    out[i, c] += ph * amps[k, c]
            if ecode != 0:
                if ecode == 1:
                    x = (tau - eparams[0]) / eparams[1]
                    p = eparams[2] * np.cos(0.5 * np.pi * x) ** 2 if abs(x) < 1.0 else 0.0
                elif ecode == 2:
                    p = eparams[0] / (1.0 + tau * tau) ** eparams[1]
                elif ecode == 3:
                    p = eparams[0] * np.exp(-tau * tau)
                else:
                    if egrid[0] <= tau <= egrid[-1]:
                        p = np.interp(np.array([tau]), egrid, evals)[0]
                    else:
                        p = 0.0
                if p != 0.0:
                    for c in range(d):
                        out[i, c] += w * p * eamp[c]
    return out


# ---------------------------------------------------------------------------
# RK4 sweep for linear systems y' = A(t) y + h(t)


def _rk4_sweep_impl(freqs, mats, h_half, y0, t0, dt, nsteps):
    """March y' = A(t)y + h(t) with fixed-step RK4 (dt may be negative).

    A(t) = sum_k mats[k] * exp(i*freqs[k]*t).  ``h_half`` holds the forcing
    on the half-step grid t0 + j*dt/2, j = 0..2*nsteps.  Returns the state
    at every full step, shape (nsteps+1, b).
    """
    b = y0.shape[0]
    out = np.empty((nsteps + 1, b), dtype=np.complex128)
    out[0] = y0
    y = y0.copy()
    a_mat = np.empty((b, b), dtype=np.complex128)
    for step in range(nsteps):
        t = t0 + step * dt
        k1 = _apply_a(freqs, mats, a_mat, t, y) + h_half[2 * step]
        k2 = (
            _apply_a(freqs, mats, a_mat, t + 0.5 * dt, y + 0.5 * dt * k1)
            + h_half[2 * step + 1]
        )
        k3 = (
            _apply_a(freqs, mats, a_mat, t + 0.5 * dt, y + 0.5 * dt * k2)
            + h_half[2 * step + 1]
        )
        k4 = _apply_a(freqs, mats, a_mat, t + dt, y + dt * k3) + h_half[2 * step + 2]
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[step + 1] = y
    return out


def _apply_a_impl(freqs, mats, a_mat, t, y):
    b = y.shape[0]
    a_mat[:, :] = 0.0
    for k in range(freqs.shape[0]):
        ph = np.exp(1j * freqs[k] * t)
        for i in range(b):
            for j in range(b):
                a_mat[i, j] += ph * mats[k, i, j]
    res = np.zeros(b, dtype=np.complex128)
    for i in range(b):
        for j in range(b):
            res[i] += a_mat[i, j] * y[j]
    return res


# ---------------------------------------------------------------------------
# translation-number deviation scan


def dev_scan_numpy(values, shifts):
    """dev[j] = sup over t of the 2-norm gap between the trace and its shift."""
    n = values.shape[0]
    out = np.empty(shifts.shape[0], dtype=np.float64)
    for j, s in enumerate(shifts):
        s = int(s)
        if s >= n:
            out[j] = np.inf
            continue
        diff = values[s:] - values[: n - s]
        out[j] = np.sqrt((np.abs(diff) ** 2).sum(axis=1).max()) if diff.size else np.inf
    return out


def _dev_scan_loop(values, shifts):
    n = values.shape[0]
    d = values.shape[1]
    out = np.empty(shifts.shape[0], dtype=np.float64)
    for j in range(shifts.shape[0]):
        s = int(shifts[j])
        if s >= n:
            out[j] = np.inf
            continue
        best = 0.0
        for i in range(n - s):
            acc = 0.0
            for c in range(d):
                dv = values[i + s, c] - values[i, c]
                acc += dv.real * dv.real + dv.imag * dv.imag
            if acc > best:
                best = acc
        out[j] = np.sqrt(best)
    return out


# ---------------------------------------------------------------------------
# numpy fallback for the RK4 sweep (same algorithm, interpreted)


def _apply_a_numpy(freqs, mats, a_mat, t, y):
    if freqs.shape[0]:
        a = np.tensordot(np.exp(1j * freqs * t), mats, axes=(0, 0))
    else:
        a = np.zeros((y.shape[0], y.shape[0]), dtype=np.complex128)
    return a @ y


def rk4_sweep_numpy(freqs, mats, h_half, y0, t0, dt, nsteps):
    b = y0.shape[0]
    out = np.empty((nsteps + 1, b), dtype=np.complex128)
    out[0] = y0
    y = y0.astype(np.complex128, copy=True)
    for step in range(nsteps):
        t = t0 + step * dt
        k1 = _apply_a_numpy(freqs, mats, None, t, y) + h_half[2 * step]
        k2 = (
            _apply_a_numpy(freqs, mats, None, t + 0.5 * dt, y + 0.5 * dt * k1)
            + h_half[2 * step + 1]
        )
        k3 = (
            _apply_a_numpy(freqs, mats, None, t + 0.5 * dt, y + 0.5 * dt * k2)
            + h_half[2 * step + 1]
        )
        k4 = (
            _apply_a_numpy(freqs, mats, None, t + dt, y + dt * k3)
            + h_half[2 * step + 2]
        )
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[step + 1] = y
    return out


# ---------------------------------------------------------------------------
# backend wiring

weight_eval_numba = None
weight_log_eval_numba = None
trig_eval_numba = None
decay_profile_numba = None
conv_eval_numba = None
rk4_sweep_numba = None
dev_scan_numba = None

if USE_NUMBA:
    _apply_a = jit(_apply_a_impl)
    weight_eval_numba = jit(_weight_eval_loop)
    weight_log_eval_numba = jit(_weight_log_eval_loop)
    trig_eval_numba = jit(_trig_eval_loop)
    decay_profile_numba = jit(_decay_profile_loop)
    conv_eval_numba = jit(_conv_eval_loop)
    rk4_sweep_numba = jit(_rk4_sweep_impl)
    dev_scan_numba = jit(_dev_scan_loop)

    # dispatch follows benchmarks/bench_kernels.py: the compiled path wins
    # on the sequential sweep (~60x), the convolution double loop, the
    # shift scan, and multi-term trig sums; plain elementwise evaluation is
    # faster vectorized, so those keep the NumPy implementation
    weight_eval = weight_eval_numpy
    weight_log_eval = weight_log_eval_numpy
    trig_eval = trig_eval_numba
    decay_profile = decay_profile_numpy
    conv_eval = conv_eval_numba
    rk4_sweep = rk4_sweep_numba
    dev_scan = dev_scan_numba
else:
    weight_eval = weight_eval_numpy
    weight_log_eval = weight_log_eval_numpy
    trig_eval = trig_eval_numpy
    decay_profile = decay_profile_numpy
    conv_eval = conv_eval_numpy
    rk4_sweep = rk4_sweep_numpy
    dev_scan = dev_scan_numpy
