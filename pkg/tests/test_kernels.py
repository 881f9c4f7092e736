"""The compiled and NumPy kernel twins must agree to rounding."""

import numpy as np
import pytest

from papkit import kernels

needs_numba = pytest.mark.skipif(
    kernels.weight_eval_numba is None, reason="numba backend inactive"
)

_E = np.empty(0, dtype=np.float64)


@needs_numba
@pytest.mark.parametrize(
    "code,params,grid,vals",
    [
        (0, np.array([2.0]), _E, _E),
        (1, np.array([1.5, 2.0]), _E, _E),
        (2, np.array([1.0, 0.0, 1.0]), _E, _E),
        (3, np.array([0.7]), _E, _E),
        (4, np.array([]), np.array([-2.0, 0.0, 2.0]), np.array([1.0, 3.0, 2.0])),
    ],
)
def test_weight_eval_twins(code, params, grid, vals, rng):
    t = rng.uniform(-30.0, 30.0, 257)
    a = kernels.weight_eval_numpy(code, params, grid, vals, t)
    b = kernels.weight_eval_numba(code, params, grid, vals, t)
    np.testing.assert_allclose(a, b, rtol=1e-14)
    la = kernels.weight_log_eval_numpy(code, params, grid, vals, t)
    lb = kernels.weight_log_eval_numba(code, params, grid, vals, t)
    np.testing.assert_allclose(la, lb, rtol=1e-13)


@needs_numba
def test_trig_eval_twins(rng):
    freqs = rng.uniform(-3.0, 3.0, 5)
    amps = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    t = rng.uniform(-100.0, 100.0, 401)
    a = kernels.trig_eval_numpy(freqs, amps, t)
    b = kernels.trig_eval_numba(freqs, amps, t)
    np.testing.assert_allclose(a, b, atol=1e-12)


@needs_numba
@pytest.mark.parametrize(
    "code,params,grid,vals",
    [
        (0, np.array([]), _E, _E),
        (1, np.array([0.5, 2.0, 1.5]), _E, _E),
        (2, np.array([1.0, 1.0]), _E, _E),
        (3, np.array([2.0]), _E, _E),
        (4, np.array([]), np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])),
    ],
)
def test_decay_profile_twins(code, params, grid, vals, rng):
    t = rng.uniform(-5.0, 5.0, 301)
    a = kernels.decay_profile_numpy(code, params, grid, vals, t)
    b = kernels.decay_profile_numba(code, params, grid, vals, t)
    np.testing.assert_allclose(a, b, atol=1e-14)


@needs_numba
def test_conv_eval_twins(rng):
    t_pts = rng.uniform(-10.0, 10.0, 33)
    s_nodes = np.linspace(-5.0, 5.0, 101)
    factor = rng.normal(size=101)
    freqs = np.array([1.0, -0.5])
    amps = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    eamp = np.array([1.0 + 0.5j, -0.2 + 0.0j])
    args = (3, np.array([1.0]), _E, _E, eamp)
    a = kernels.conv_eval_numpy(t_pts, s_nodes, factor, freqs, amps, *args)
    b = kernels.conv_eval_numba(t_pts, s_nodes, factor, freqs, amps, *args)
    np.testing.assert_allclose(a, b, atol=1e-11)


@needs_numba
def test_rk4_sweep_twins(rng):
    freqs = np.array([0.0, 1.0])
    mats = np.stack(
        [np.diag([-1.0 + 0j, -2.0 + 0j]), 0.1j * np.ones((2, 2), dtype=complex)]
    )
    nsteps = 200
    h = rng.normal(size=(2 * nsteps + 1, 2)) + 1j * rng.normal(size=(2 * nsteps + 1, 2))
    y0 = np.array([0.3 + 0j, -0.1 + 0.2j])
    a = kernels.rk4_sweep_numpy(freqs, mats, h, y0, 0.0, 0.01, nsteps)
    b = kernels.rk4_sweep_numba(freqs, mats, h, y0, 0.0, 0.01, nsteps)
    np.testing.assert_allclose(a, b, atol=1e-12)


@needs_numba
def test_rk4_sweep_backward_twins(rng):
    freqs = np.array([0.0])
    mats = np.array([[[1.0 + 0j]]])
    nsteps = 100
    h = rng.normal(size=(2 * nsteps + 1, 1)) + 0j
    y0 = np.zeros(1, dtype=complex)
    a = kernels.rk4_sweep_numpy(freqs, mats, h, y0, 5.0, -0.05, nsteps)
    b = kernels.rk4_sweep_numba(freqs, mats, h, y0, 5.0, -0.05, nsteps)
    np.testing.assert_allclose(a, b, atol=1e-12)


@needs_numba
def test_dev_scan_twins(rng):
    vals = rng.normal(size=(400, 2)) + 1j * rng.normal(size=(400, 2))
    shifts = np.arange(1, 200, dtype=np.int64)
    a = kernels.dev_scan_numpy(vals, shifts)
    b = kernels.dev_scan_numba(vals, shifts)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_rk4_matches_exponential():
    # y' = -y, y(0) = 1 integrated by the sweep with zero forcing
    freqs = np.array([0.0])
    mats = np.array([[[-1.0 + 0j]]])
    nsteps = 1000
    h = np.zeros((2 * nsteps + 1, 1), dtype=complex)
    out = kernels.rk4_sweep(freqs, mats, h, np.array([1.0 + 0j]), 0.0, 0.001, nsteps)
    assert abs(out[-1, 0] - np.exp(-1.0)) < 1e-12
