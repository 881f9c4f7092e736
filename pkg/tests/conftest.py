import numpy as np
import pytest

from papkit import kernels
from papkit.limits import Schedule
from papkit.weights import Weight


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure math, not compiles."""
    t = np.linspace(-1.0, 1.0, 64)
    freqs = np.array([1.0])
    amps = np.array([[1.0 + 0.0j]])
    kernels.trig_eval(freqs, amps, t)
    kernels.weight_eval(1, np.array([1.0, 2.0]), np.empty(0), np.empty(0), t)
    kernels.weight_log_eval(3, np.array([1.0]), np.empty(0), np.empty(0), t)
    kernels.decay_profile(3, np.array([1.0]), np.empty(0), np.empty(0), t)
    kernels.conv_eval(
        t[:8],
        t[:8],
        np.ones(8),
        freqs,
        amps,
        3,
        np.array([1.0]),
        np.empty(0),
        np.empty(0),
        np.array([1.0 + 0.0j]),
    )
    h = np.zeros((2 * 4 + 1, 1), dtype=np.complex128)
    kernels.rk4_sweep(
        freqs,
        np.array([[[-1.0 + 0.0j]]]),
        h,
        np.zeros(1, dtype=np.complex128),
        0.0,
        0.1,
        4,
    )
    kernels.dev_scan(np.ones((32, 1), dtype=np.complex128), np.arange(1, 8))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def short_schedule():
    return Schedule(doublings=10)


@pytest.fixture
def weight_family():
    return {
        "one": Weight.constant(1.0),
        "two": Weight.constant(2.0),
        "pow2": Weight.power(2.0),
        "pow2x5": Weight.power(2.0, scale=5.0),
        "pow3": Weight.power(3.0),
        "poly": Weight.polynomial([1.0, 0.0, 1.0]),
        "exp": Weight.exp_abs(1.0),
    }
