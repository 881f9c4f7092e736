import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papkit.errors import DivergentRatio, InconclusiveLimit, NonPositiveT
from papkit.limits import Schedule
from papkit.quadrature import adaptive_integral
from papkit.weights import (
    Weight,
    classify_weight,
    enlarged_mass_ratio,
    equivalent_weights,
    mass_ratio_inf,
    mass_ratio_limit,
    mass_ratio_sup,
    translated_mass_ratio,
    weight_mass,
)


class TestMasses:
    def test_constant_mass(self):
        assert weight_mass(Weight.constant(1.0), 5.0) == pytest.approx(10.0)

    def test_power_closed_form(self):
        # antiderivative of (1+|t|)^2 gives 2*((1+3)^3 - 1)/3
        assert weight_mass(Weight.power(2.0), 3.0) == pytest.approx(42.0)

    def test_power_against_quadrature(self):
        w = Weight.power(2.0)
        quad = weight_mass(w, 3.0, tol=1e-10, method="quadrature")
        assert quad == pytest.approx(42.0, abs=1e-8)
        assert weight_mass(w, 3.0, method="check") == pytest.approx(42.0)

    def test_exp_abs_mass(self):
        w = Weight.exp_abs(1.0)
        expected = 2.0 * (math.e - 1.0)
        assert weight_mass(w, 1.0) == pytest.approx(expected, rel=1e-12)
        assert weight_mass(w, 1.0, method="quadrature") == pytest.approx(
            expected, rel=1e-9
        )

    def test_one_sided_exp_mass(self):
        # each half of the symmetric window carries e^T - 1
        w = Weight.exp_abs(1.0)
        assert w.interval_mass(0.0, 2.0) == pytest.approx(math.expm1(2.0), rel=1e-12)

    def test_polynomial_mass(self):
        w = Weight.polynomial([1.0, 0.0, 1.0])
        # int of 1 + t^2 over [-2, 2] = 4 + 16/3
        assert weight_mass(w, 2.0) == pytest.approx(4.0 + 16.0 / 3.0)

    def test_tabulated_mass_piecewise(self):
        w = Weight.tabulated([-1.0, 0.0, 1.0], [1.0, 3.0, 1.0])
        assert weight_mass(w, 1.0) == pytest.approx(4.0)
        # constant extrapolation beyond the grid
        assert weight_mass(w, 2.0) == pytest.approx(4.0 + 2.0)

    def test_nonpositive_radius(self):
        with pytest.raises(NonPositiveT):
            weight_mass(Weight.constant(1.0), 0.0)
        with pytest.raises(NonPositiveT):
            Weight.constant(1.0).mass(-3.0)

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            weight_mass(Weight.constant(1.0), 1.0, tol=0.0)

    def test_log_mass_matches_plain(self):
        for w in (Weight.constant(2.0), Weight.power(3.0), Weight.exp_abs(0.5)):
            assert w.log_mass(4.0) == pytest.approx(math.log(w.mass(4.0)), rel=1e-12)

    def test_log_mass_beyond_overflow(self):
        w = Weight.exp_abs(1.0)
        assert w.log_mass(2000.0) == pytest.approx(2000.0 + math.log(2.0), rel=1e-12)

    @given(
        t1=st.floats(0.1, 50.0),
        factor=st.floats(1.01, 4.0),
        exponent=st.floats(0.0, 4.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_mass_monotone(self, t1, factor, exponent):
        w = Weight.power(exponent)
        assert w.mass(t1 * factor) > w.mass(t1)

    def test_mass_monotone_family(self, weight_family, rng):
        for w in weight_family.values():
            ts = np.sort(rng.uniform(0.1, 40.0, size=6))
            masses = [w.mass(t) for t in ts]
            assert all(b > a for a, b in zip(masses, masses[1:]))


class TestValidation:
    def test_positive_checks(self):
        with pytest.raises(ValueError):
            Weight.constant(0.0)
        with pytest.raises(ValueError):
            Weight.power(-1.0)
        with pytest.raises(ValueError):
            Weight.polynomial([-1.0, 0.0, 1.0])  # roots at +-1
        with pytest.raises(ValueError):
            Weight.tabulated([0.0, 1.0], [1.0, 0.0])

    def test_json_roundtrip(self, weight_family):
        for w in weight_family.values():
            again = Weight.from_json(w.to_json())
            ts = np.linspace(-3.0, 3.0, 11)
            np.testing.assert_allclose(again.eval(ts), w.eval(ts))


class TestClassification:
    def test_constant_all_classes(self):
        r = classify_weight(Weight.constant(1.0), schedule=Schedule(doublings=16))
        assert r.unbounded_mass and r.bounded and r.translation_compatible
        assert r.continuous_translation_compatible and r.mass_ratio_limited
        assert r.inf_estimate == pytest.approx(1.0)
        assert r.sup_estimate == pytest.approx(1.0)

    def test_polynomial_square_plus_one(self):
        # x^2 + 1: admissible, unbounded, continuous translation class
        r = classify_weight(
            Weight.polynomial([1.0, 0.0, 1.0]), schedule=Schedule(doublings=16)
        )
        assert r.unbounded_mass
        assert not r.bounded
        assert r.continuous_translation_compatible

    def test_exp_abs_pointwise_limit(self):
        r = classify_weight(Weight.exp_abs(1.0), schedule=Schedule(doublings=16))
        assert r.continuous_translation_compatible
        ev = r.evidence["pointwise_ratio"][repr(1.0)]
        assert ev["plus"]["limit"] == pytest.approx(math.e, rel=1e-6)
        assert ev["minus"]["limit"] == pytest.approx(1.0 / math.e, rel=1e-6)

    def test_class_inclusions_on_reports(self, weight_family):
        for w in weight_family.values():
            r = classify_weight(w, schedule=Schedule(doublings=16))
            if r.bounded:
                assert r.unbounded_mass
            if r.continuous_translation_compatible:
                assert r.translation_compatible

    def test_tabulated_short_grid_inconclusive(self):
        w = Weight.tabulated([-2.0, 0.0, 2.0], [1.0, 2.0, 1.0])
        with pytest.raises(InconclusiveLimit):
            classify_weight(w, schedule=Schedule(doublings=12))

    def test_tabulated_growth_not_translation_compatible(self):
        # e^{x^2/20} sampled densely: pointwise ratios blow up with x
        g = np.linspace(-40.0, 40.0, 16001)
        w = Weight.tabulated(g, np.exp(g * g / 20.0))
        r = classify_weight(
            w, tau_grid=(5.0,), schedule=Schedule(t0=1.0, doublings=5, window=3)
        )
        assert not r.continuous_translation_compatible
        assert not r.translation_compatible

    def test_product_closure_of_smooth_translation_class(self):
        # product of two admissible translation-compatible weights stays one
        mu, nu = Weight.power(2.0), Weight.power(3.0)
        half = np.geomspace(1e-3, 2.0**13.5, 4001)
        grid = np.concatenate([-half[::-1], [0.0], half])
        vals = mu.eval(grid) * nu.eval(grid)
        prod = Weight.tabulated(grid, vals)
        r = classify_weight(
            prod, tau_grid=(0.5, 1.0, -0.5), schedule=Schedule(doublings=12)
        )
        assert r.continuous_translation_compatible

    def test_sum_of_equivalent_weights_stays_translation_compatible(self):
        mu, nu = Weight.power(2.0), Weight.power(2.0, scale=5.0)
        assert equivalent_weights(mu, nu)
        half = np.geomspace(1e-3, 2.0**13.5, 4001)
        grid = np.concatenate([-half[::-1], [0.0], half])
        sigma = Weight.tabulated(grid, mu.eval(grid) + nu.eval(grid))
        r = classify_weight(
            sigma, tau_grid=(0.5, 1.0, -0.5), schedule=Schedule(doublings=12)
        )
        assert r.translation_compatible


class TestEquivalence:
    def test_constants_equivalent(self):
        assert equivalent_weights(Weight.constant(2.0), Weight.constant(3.0))

    def test_scaled_powers_equivalent(self):
        assert equivalent_weights(Weight.power(2.0), Weight.power(2.0, scale=5.0))

    def test_power_vs_exponential(self):
        # the ratio (1+|t|)^2 / e^{|t|} collapses: at t = 50 it is ~5e-19
        assert not equivalent_weights(Weight.power(2.0), Weight.exp_abs(1.0))

    def test_reflexive_symmetric(self, weight_family):
        for w in weight_family.values():
            assert equivalent_weights(w, w)
        pairs = [("one", "two"), ("pow2", "pow2x5")]
        for a, b in pairs:
            ab = equivalent_weights(weight_family[a], weight_family[b])
            ba = equivalent_weights(weight_family[b], weight_family[a])
            assert ab == ba

    def test_transitive_on_firm_triple(self):
        a, b, c = Weight.constant(1.0), Weight.constant(2.0), Weight.constant(5.0)
        assert equivalent_weights(a, b) and equivalent_weights(b, c)
        assert equivalent_weights(a, c)

    def test_polynomial_equivalent_to_power(self):
        # x^2 + 1 vs (1+|t|)^2: ratio bounded in [1/2, 1]
        assert equivalent_weights(
            Weight.polynomial([1.0, 0.0, 1.0]), Weight.power(2.0)
        )


class TestMassRatios:
    def test_equal_weights_ratio_one(self):
        est = mass_ratio_limit(Weight.constant(1.0), Weight.constant(1.0))
        assert est.converged and est.value == pytest.approx(1.0)

    def test_constant_ratio_half(self):
        est = mass_ratio_limit(Weight.constant(2.0), Weight.constant(1.0))
        assert est.converged and est.value == pytest.approx(0.5)

    def test_exp_vs_power_vanishes(self):
        # polynomial masses against e^T: the ratio dies out fast
        for n in (2.0, 3.0):
            est = mass_ratio_limit(
                Weight.exp_abs(1.0), Weight.power(n), Schedule(doublings=10)
            )
            assert est.converged
            assert est.value < 1e-20

    def test_divergent_ratio(self):
        with pytest.raises(DivergentRatio):
            mass_ratio_limit(Weight.power(2.0), Weight.exp_abs(1.0))

    def test_scaled_power_ratio(self):
        est = mass_ratio_limit(Weight.power(2.0), Weight.power(2.0, scale=5.0))
        assert est.converged and est.value == pytest.approx(5.0, rel=1e-6)

    def test_enlarged_window_ratio_exp(self):
        est = enlarged_mass_ratio(Weight.exp_abs(1.0), 1.0, Schedule(doublings=10))
        assert est.converged and est.value == pytest.approx(math.e, rel=1e-9)

    def test_enlarged_window_ratio_power(self):
        est = enlarged_mass_ratio(Weight.power(2.0), 1.0, Schedule(doublings=20))
        assert est.converged and est.value == pytest.approx(1.0, rel=1e-3)

    def test_translated_window_ratio_exp(self):
        # shifted-window mass of e^{|t|} converges to cosh(tau)
        est = translated_mass_ratio(Weight.exp_abs(1.0), 1.0, Schedule(doublings=10))
        assert est.converged and est.value == pytest.approx(math.cosh(1.0), rel=1e-9)

    def test_mass_ratio_sup_inf(self):
        ok, sup, _ = mass_ratio_sup(Weight.exp_abs(1.0), Weight.power(2.0))
        assert ok and math.isfinite(sup)
        ok2, _, _ = mass_ratio_sup(Weight.constant(1.0), Weight.power(2.0), Schedule(doublings=16))
        assert not ok2
        pos, inf_v, _ = mass_ratio_inf(Weight.constant(2.0), Weight.constant(1.0))
        assert pos and inf_v == pytest.approx(0.5)
        pos2, _, _ = mass_ratio_inf(
            Weight.exp_abs(1.0), Weight.power(2.0), Schedule(doublings=12)
        )
        assert not pos2


class TestConcurrency:
    def test_shared_weight_across_threads(self):
        from concurrent.futures import ThreadPoolExecutor

        w = Weight.tabulated(np.linspace(-50, 50, 5001), 2.0 + np.cos(np.linspace(-50, 50, 5001)))
        ts = np.linspace(-40.0, 40.0, 2001)

        def work(i):
            vals = w.eval(ts + 0.001 * i)
            return float(vals.sum()) + w.mass(10.0 + i)

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(work, range(32)))
        baseline = [work(i) for i in range(32)]
        assert results == baseline


class TestQuadrature:
    def test_adaptive_against_erf(self):
        import scipy.special as sp

        val = adaptive_integral(lambda t: np.exp(-t * t), 0.0, 2.0, tol=1e-12)
        assert val == pytest.approx(math.sqrt(math.pi) / 2.0 * sp.erf(2.0), abs=1e-11)

    def test_refinement_limit(self):
        from papkit.errors import QuadratureFailure

        with pytest.raises(QuadratureFailure):
            adaptive_integral(
                lambda t: np.abs(t) ** -0.5 if np.ndim(t) == 0 else np.abs(t) ** -0.5,
                1e-30,
                1.0,
                tol=1e-14,
                max_depth=3,
            )
