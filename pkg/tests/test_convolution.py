import numpy as np
import pytest

from papkit.convolution import Kernel, convolve, convolve_at, convolve_trace, verify_pap0_stability
from papkit.errors import PreconditionFailed, TailTruncationFailure
from papkit.quadrature import adaptive_integral
from papkit.signals import ErgodicPerturbation, PAPFunction, TrigPolynomial
from papkit.weights import Weight

ONE = Weight.constant(1.0)
UNIT_EXP = Kernel.two_sided_exp(0.5, 1.0)  # unit mass


class TestKernelBasics:
    def test_l1_norms_against_quadrature(self):
        for k in (UNIT_EXP, Kernel.two_sided_exp(2.0, 0.5), Kernel.gaussian(1.5)):
            s_max = k.tail_radius(1e-12)
            quad = adaptive_integral(
                lambda s: np.abs(k.eval(s)), -s_max, s_max, tol=1e-11
            )
            assert k.l1_norm() == pytest.approx(quad, rel=1e-8)

    def test_compact_l1(self):
        k = Kernel.compact([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
        assert k.l1_norm() == pytest.approx(1.0)

    def test_transform_against_quadrature(self):
        for k in (UNIT_EXP, Kernel.gaussian(1.0)):
            for lam in (0.0, 1.0, 2.5):
                s = np.linspace(-40.0, 40.0, 400001)
                direct = np.trapezoid(k.eval(s) * np.exp(-1j * lam * s), s)
                assert k.transform(lam) == pytest.approx(direct, abs=1e-8)

    def test_two_sided_exp_transform_value(self):
        # a/(a^2 + lam^2) scaled: c=1/2, a=1 at lam=1 gives 1/2
        assert UNIT_EXP.transform(1.0) == pytest.approx(0.5)

    def test_json_roundtrip(self):
        for k in (UNIT_EXP, Kernel.gaussian(2.0), Kernel.compact([-1, 0, 1], [0, 2, 0])):
            again = Kernel.from_json(k.to_json())
            s = np.linspace(-2, 2, 21)
            np.testing.assert_allclose(again.eval(s), k.eval(s))


class TestConvolve:
    def test_constant_times_unit_mass(self):
        f = PAPFunction(ap=TrigPolynomial.from_terms([(0.0, 1.0)]))
        tr = convolve(f, UNIT_EXP, -5.0, 5.0, 0.5)
        np.testing.assert_allclose(tr.values[:, 0].real, 1.0, atol=1e-8)

    def test_wave_matches_kernel_transform(self):
        f = PAPFunction(ap=TrigPolynomial.from_terms([(1.0, 1.0)]))
        ts = np.array([0.0, 0.7, 3.0])
        vals = convolve_at(f, UNIT_EXP, ts)
        expect = UNIT_EXP.transform(1.0) * np.exp(1j * ts)
        np.testing.assert_allclose(vals[:, 0], expect, atol=1e-8)

    def test_gaussian_with_box_spot_checks(self):
        f = PAPFunction(ergodic=ErgodicPerturbation.gaussian(1.0))
        box = Kernel.compact([-0.5, -0.45, 0.45, 0.5], [0.0, 1.0, 1.0, 0.0])
        for t in (0.0, 0.8, 2.0):
            got = convolve_at(f, box, np.array([t]))[0, 0]
            s = np.linspace(-0.5, 0.5, 20001)
            oracle = np.trapezoid(
                np.exp(-((t - s) ** 2)) * box.eval(s), s
            )
            assert got == pytest.approx(oracle, abs=1e-5)

    def test_young_bound(self, rng):
        for _ in range(3):
            n = int(rng.integers(1, 4))
            f = PAPFunction(
                ap=TrigPolynomial(
                    rng.uniform(-2, 2, n), rng.normal(size=(n, 1)) + 0j
                ),
                ergodic=ErgodicPerturbation.gaussian(float(rng.uniform(0.2, 1.0))),
            )
            k = Kernel.two_sided_exp(float(rng.uniform(0.2, 2.0)), 1.0)
            tr = convolve(f, k, -30.0, 30.0, 0.05)
            assert tr.sup_norm() <= f.sup_bound() * k.l1_norm() + 1e-8

    def test_linearity_pointwise(self):
        f = PAPFunction(ap=TrigPolynomial.from_terms([(1.0, 1.0)]))
        g = PAPFunction(ergodic=ErgodicPerturbation.gaussian(1.0))
        both = PAPFunction(
            ap=f.ap.scaled(2.0), ergodic=ErgodicPerturbation.gaussian(-0.5)
        )
        ts = np.linspace(-5.0, 5.0, 41)
        lhs = convolve_at(both, UNIT_EXP, ts)
        rhs = 2.0 * convolve_at(f, UNIT_EXP, ts) - 0.5 * convolve_at(g, UNIT_EXP, ts)
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)

    def test_trace_input_agrees_with_analytic(self):
        f = PAPFunction(ap=TrigPolynomial.cosine(1.0))
        base = f.sample(-60.0, 60.0, 0.01)
        tr = convolve_trace(base, UNIT_EXP)
        direct = convolve_at(f, UNIT_EXP, tr.t[::500])
        np.testing.assert_allclose(tr.values[::500], direct, atol=1e-6)

    def test_tail_truncation_guard(self):
        slow = Kernel.two_sided_exp(0.5, 0.01)
        f = PAPFunction(ap=TrigPolynomial.from_terms([(0.0, 1.0)]))
        with pytest.raises(TailTruncationFailure):
            convolve_at(f, slow, np.array([0.0]), max_window=100.0)


class TestStability:
    def test_gaussian_perturbation_stable(self):
        phi = ErgodicPerturbation.gaussian(1.0)
        rep = verify_pap0_stability(
            phi, UNIT_EXP, ONE, ONE, radii=[2.0**j for j in range(1, 14)] + [1e4]
        )
        assert rep.stable
        assert rep.mean_trace[-1][0] == pytest.approx(1e4)
        assert rep.mean_trace[-1][1] < 1e-3

    def test_zero_perturbation_trivially_stable(self):
        rep = verify_pap0_stability(
            ErgodicPerturbation.zero(1), UNIT_EXP, ONE, ONE,
            radii=[2.0**j for j in range(1, 10)],
        )
        assert rep.stable

    def test_heavy_kernel_polynomial_weights(self):
        phi = ErgodicPerturbation.gaussian(1.0)
        heavy = Kernel.two_sided_exp(5.0, 1.0)  # L1 = 10
        w = Weight.power(2.0)
        rep = verify_pap0_stability(
            phi, heavy, w, w, radii=[2.0**j for j in range(1, 14)] + [1e4]
        )
        assert rep.stable and rep.l1_norm == pytest.approx(10.0)

    def test_unbounded_mass_ratio_rejected(self):
        phi = ErgodicPerturbation.gaussian(1.0)
        with pytest.raises(PreconditionFailed) as err:
            verify_pap0_stability(phi, UNIT_EXP, ONE, Weight.power(2.0))
        assert "bounded mass ratio" in str(err.value)

    def test_rational_perturbation_stable(self):
        phi = ErgodicPerturbation.rational(1.0, 1.0)
        rep = verify_pap0_stability(
            phi, UNIT_EXP, ONE, ONE, radii=[2.0**j for j in range(1, 13)]
        )
        assert rep.stable
