import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from warpeig import spectral
from warpeig.errors import ClosedManifold, DomainError
from warpeig.geometry import capacity_integral
from warpeig.spectral import (
    RadialProfile,
    apply_T,
    bcg_lower_bound,
    bounds_report,
    cheng_upper_bound,
    first_eigenvalue,
    first_eigenvalue_picard,
    fundamental_tone,
    fundamental_tone_lower_bound,
    picard_radial_solution,
    profile_on_grid,
    shooting_profile,
)
from warpeig.warping import make_manifold, warping_from_string

J01 = special.jn_zeros(0, 1)[0]


def M(metric, n, extent=None):
    return make_manifold(warping_from_string(metric, extent), n)


# --- bounds -----------------------------------------------------------------

class TestLowerBound:
    @pytest.mark.parametrize("n", [2, 3, 6])
    @pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
    def test_euclidean(self, n, r):
        assert bcg_lower_bound(M("euclidean", n), r) == pytest.approx(2 * n / r**2, rel=1e-10)

    def test_sphere_quarter(self):
        assert bcg_lower_bound(M("sphere", 2), math.pi / 2) == pytest.approx(1 / math.log(2), rel=1e-12)

    def test_whole_sphere_refused(self):
        with pytest.raises(ClosedManifold):
            bcg_lower_bound(M("sphere", 2), math.pi)


class TestChengBound:
    def test_sphere(self):
        b = cheng_upper_bound(M("sphere", 2), math.pi / 2)
        assert b.value == pytest.approx((J01 / (math.pi / 2)) ** 2, rel=1e-12)
        assert b.value == pytest.approx(2.3438, abs=1e-4)

    def test_hyperbolic_absent(self):
        b = cheng_upper_bound(M("hyperbolic", 2), 1.0)
        assert b.value is None
        assert b.certificate.status == "violated"

    def test_euclidean(self):
        assert cheng_upper_bound(M("euclidean", 3), 1.0).value == pytest.approx(math.pi**2, rel=1e-12)

    def test_whole_sphere_refused(self):
        with pytest.raises(ClosedManifold):
            cheng_upper_bound(M("sphere", 3), math.pi)


# --- shooting ---------------------------------------------------------------

class TestShooting:
    @pytest.mark.parametrize("n", [2, 5])
    def test_sphere_hemisphere(self, n):
        assert first_eigenvalue(M("sphere", n), math.pi / 2) == pytest.approx(n, abs=1e-6)

    def test_euclidean_three(self):
        assert first_eigenvalue(M("euclidean", 3), 1.0) == pytest.approx(math.pi**2, abs=1e-6)

    def test_sphere_closed_form_any_radius(self):
        # n = 3: lambda_1(r) = (pi/r)^2 - 1
        for r in [0.5, 1.0, 2.0, 3.0]:
            assert first_eigenvalue(M("sphere", 3), r) == pytest.approx((math.pi / r) ** 2 - 1, rel=1e-9)

    def test_hyperbolic_three_closed_form(self):
        # n = 3: lambda_1(r) = 1 + (pi/r)^2
        for r in [0.5, 2.0, 6.0]:
            assert first_eigenvalue(M("hyperbolic", 3), r) == pytest.approx(1 + (math.pi / r) ** 2, rel=1e-9)

    def test_scaling_law(self):
        for n in (2, 3, 4):
            m = M("euclidean", n)
            products = [first_eigenvalue(m, r) * r * r for r in (0.25, 0.5, 1.0, 2.0, 4.0)]
            assert max(products) / min(products) - 1 <= 1e-8
            assert products[0] == pytest.approx(spectral.bessel_constant(n) ** 2, rel=1e-8)

    @pytest.mark.parametrize("metric", ["sphere", "euclidean", "hyperbolic", "expr:sinh(t)*exp(t^3)"])
    def test_domain_monotonicity(self, metric):
        top = 3.0 if metric == "sphere" else (2.0 if "exp" in metric else 6.0)
        m = M(metric, 3)
        values = [first_eigenvalue(m, r, tol=1e-8) for r in np.linspace(0.3, top, 10)]
        assert all(b < a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("metric,n,r", [
        ("sphere", 2, 1.2), ("hyperbolic", 4, 2.0), ("expr:t + t^3", 3, 1.0), ("euclidean", 2, 1.0),
    ])
    def test_eigenfunction_positive(self, metric, n, r):
        m = M(metric, n)
        lam = first_eigenvalue(m, r)
        prof = shooting_profile(m, r, lam)
        assert prof.u[0] == pytest.approx(1.0, abs=1e-10)
        assert np.all(prof.u[:-1] > 0)
        assert abs(prof.u[-1]) < 1e-6

    def test_whole_sphere_refused(self):
        with pytest.raises(ClosedManifold):
            first_eigenvalue(M("sphere", 2), math.pi)

    def test_custom_endpoint_refused(self):
        with pytest.raises(DomainError):
            first_eigenvalue(M("expr:t - t^3/6", 2, extent=2.0), 2.0)


# --- the fixed-point operator ----------------------------------------------

class TestApplyT:
    def _grid_profile(self, m, r, g, mu):
        return profile_on_grid(m, r, g, mu)

    def test_zero_input(self):
        m = M("hyperbolic", 3)
        u = self._grid_profile(m, 1.0, lambda t: 0 * t, 2.0)
        out = apply_T(m, 1.0, u, 2.0, 1.5)
        np.testing.assert_array_equal(out.u, 1.5)

    def test_zero_mu(self):
        m = M("sphere", 2)
        u = self._grid_profile(m, 1.0, np.cos, 0.0)
        np.testing.assert_array_equal(apply_T(m, 1.0, u, 0.0, 2.0).u, 2.0)

    def test_euclidean_constant_input(self):
        m, mu, theta = M("euclidean", 2), 3.0, 1.0
        u = self._grid_profile(m, 1.0, lambda t: theta + 0 * t, mu)
        out = apply_T(m, 1.0, u, mu, theta)
        np.testing.assert_allclose(out.u, theta * (1 - mu * out.t**2 / 4), atol=1e-13)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_constant_input_gives_capacity(self, n):
        # T(theta)(t) = theta * (1 - mu * C(t))
        m, mu = M("hyperbolic", n), 0.7
        u = self._grid_profile(m, 2.0, lambda t: 1.0 + 0 * t, mu)
        out = apply_T(m, 2.0, u, mu, 1.0)
        for i in range(5, out.t.size, 97):
            assert out.u[i] == pytest.approx(1 - mu * capacity_integral(m, out.t[i]), abs=1e-12)

    def test_rejects_plain_samples(self):
        m = M("euclidean", 2)
        t = np.linspace(0, 1, 11)
        with pytest.raises(DomainError):
            apply_T(m, 1.0, RadialProfile(1.0, t, np.ones_like(t), 1.0), 1.0, 1.0)

    @settings(max_examples=60, deadline=None)
    @given(
        metric=st.sampled_from(["sphere", "euclidean", "hyperbolic", "expr:sinh(t)*exp(t^3)"]),
        n=st.integers(2, 5),
        r=st.floats(0.2, 2.5),
        frac=st.floats(0.0, 0.999),
        theta=st.floats(0.1, 10.0),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_maps_order_interval_into_itself(self, metric, n, r, frac, theta, seed):
        m = M(metric, n)
        mu = frac / capacity_integral(m, r)
        u = random_piecewise_linear(m, r, mu, theta, np.random.default_rng(seed))
        out = apply_T(m, r, u, mu, theta)
        assert np.all(out.u >= -1e-10 * theta)
        assert np.all(out.u <= theta * (1 + 1e-10))


def random_piecewise_linear(m, r, mu, theta, rng):
    """Random 0 <= u <= theta, linear between panel boundaries of the Picard grid."""
    panels = spectral.picard_panels(r, mu)
    knots = np.linspace(0.0, r, panels + 1)
    values = rng.uniform(0.0, theta, panels + 1)
    return profile_on_grid(m, r, lambda t: np.clip(np.interp(t, knots, values), 0.0, theta), mu, theta, panels)


class TestPicard:
    def test_zero_mu(self):
        prof = picard_radial_solution(M("hyperbolic", 3), 2.0, 0.0, theta=2.5)
        np.testing.assert_array_equal(prof.u, 2.5)

    def test_euclidean_sinc(self):
        prof = picard_radial_solution(M("euclidean", 3), 1.0, math.pi**2)
        t = prof.t[1:]
        np.testing.assert_allclose(prof.u[1:], np.sin(math.pi * t) / (math.pi * t), atol=1e-6)
        assert prof.u[0] == 1.0
        assert abs(prof.u[-1]) < 1e-6

    def test_sphere_cosine(self):
        prof = picard_radial_solution(M("sphere", 2), math.pi / 2, 2.0)
        np.testing.assert_allclose(prof.u, np.cos(prof.t), atol=1e-6)

    @pytest.mark.parametrize("metric,n,r,mu", [
        ("hyperbolic", 2, 3.0, 1.5), ("expr:sinh(t)*exp(t^3)", 3, 1.0, 8.0), ("sphere", 4, 2.0, 4.0),
    ])
    def test_matches_shooting(self, metric, n, r, mu):
        m = M(metric, n)
        prof = picard_radial_solution(m, r, mu)
        ref = shooting_profile(m, r, mu, t=prof.t).u
        np.testing.assert_allclose(prof.u, ref, atol=1e-8)

    def test_linear_in_theta(self):
        m = M("hyperbolic", 3)
        one = picard_radial_solution(m, 2.0, 3.0, theta=1.0)
        three = picard_radial_solution(m, 2.0, 3.0, theta=3.0)
        np.testing.assert_allclose(three.u, 3.0 * one.u, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("metric,n,r,mu", [
        ("euclidean", 2, 1.0, 5.0), ("hyperbolic", 3, 4.0, 2.0), ("sphere", 5, 1.5, 6.0),
    ])
    def test_residuals_contract_geometrically(self, metric, n, r, mu):
        res = picard_radial_solution(M(metric, n), r, mu).residuals
        tail = [x for x in res[5:] if x > 1e-13]
        assert len(tail) >= 2
        ratios = [b / a for a, b in zip(tail, tail[1:])]
        assert max(ratios) < 1.0

    def test_sphere_eigenvalue(self):
        assert first_eigenvalue_picard(M("sphere", 2), math.pi / 2) == pytest.approx(2.0, abs=1e-5)

    def test_euclidean_eigenvalue(self):
        assert first_eigenvalue_picard(M("euclidean", 2), 1.0) == pytest.approx(J01**2, rel=1e-8)

    @pytest.mark.parametrize("metric,n,r", [
        ("hyperbolic", 2, 2.0), ("expr:sinh(t)*exp(t^3)", 2, 0.8), ("sphere", 3, 2.5),
    ])
    def test_agrees_with_shooting(self, metric, n, r):
        m = M(metric, n)
        a, b = first_eigenvalue(m, r), first_eigenvalue_picard(m, r)
        assert abs(a - b) <= 1e-5 * a


# --- reports and the fundamental tone ---------------------------------------

class TestBoundsReport:
    def test_sphere(self):
        rep = bounds_report(M("sphere", 2), 1.5707963)
        assert rep.lower == pytest.approx(1.4427, abs=1e-4)
        assert rep.cheng_upper == pytest.approx(2.3438, abs=1e-4)
        assert rep.lambda1 == pytest.approx(2.0, abs=1e-6)
        assert rep.sandwich_ok

    def test_hyperbolic_no_cheng(self):
        rep = bounds_report(M("hyperbolic", 2), 1.0, picard=False)
        assert rep.cheng_upper is None and rep.lambda1_picard is None
        assert rep.sandwich_ok
        assert "Ricci violated" in rep.diagnostics

    @pytest.mark.parametrize("metric", ["sphere", "euclidean"])
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_sandwich_over_radii(self, metric, n):
        m = M(metric, n)
        top = 3.0 if metric == "sphere" else 10.0
        for r in np.linspace(0.1, top, 20):
            lower, lam = bcg_lower_bound(m, r), first_eigenvalue(m, r, tol=1e-8)
            upper = cheng_upper_bound(m, r).value
            assert lower <= lam * (1 + 1e-6)
            assert lam <= upper * (1 + 1e-6)

    @pytest.mark.parametrize("metric", ["hyperbolic", "expr:sinh(t)*exp(t^3)", "expr:t + t^3"])
    def test_lower_bound_without_ricci(self, metric):
        m = M(metric, 3)
        for r in np.linspace(0.1, 2.0, 8):
            assert bcg_lower_bound(m, r) <= first_eigenvalue(m, r, tol=1e-8) * (1 + 1e-6)


class TestFundamentalTone:
    def test_euclidean_tends_to_zero(self):
        est = fundamental_tone(M("euclidean", 2), tol=1e-2)
        assert est.converged
        assert est.value < 1e-2
        # eigenvalue tolerance is absolute (1e-10)
        np.testing.assert_allclose(est.values, [J01**2 / r**2 for r in est.radii], rtol=0, atol=1e-9)

    def test_not_converged_at_cap(self):
        est = fundamental_tone(M("euclidean", 2), tol=1e-9, r_max=4.0)
        assert not est.converged
        assert est.radii == [1.0, 2.0, 4.0]

    def test_workers_do_not_change_result(self):
        m = M("hyperbolic", 2)
        a = fundamental_tone(m, tol=5e-2, r_max=16.0)
        b = fundamental_tone(m, tol=5e-2, r_max=16.0, workers=3)
        assert (a.value, a.converged, a.radii) == (b.value, b.converged, b.radii)

    def test_finite_extent_refused(self):
        with pytest.raises(DomainError):
            fundamental_tone(M("sphere", 2))

    @pytest.mark.parametrize("metric", ["euclidean", "hyperbolic"])
    def test_lower_bound_trivial_when_divergent(self, metric):
        b = fundamental_tone_lower_bound(M(metric, 2))
        assert b.divergent and b.value == 0.0

    def test_lower_bound_positive_for_incomplete(self):
        b = fundamental_tone_lower_bound(M("expr:sinh(t)*exp(t^3)", 2))
        assert not b.divergent and b.value > 0
        # independent oracle: direct quadrature of V/S far beyond the horizon
        m = M("expr:sinh(t)*exp(t^3)", 2)
        total = capacity_integral(m, 64.0)
        tail = 1 / (3 * 64.0)  # V/S ~ 1/(3 t^2) beyond 64
        assert 1 / b.value == pytest.approx(total + tail, rel=1e-4)
        # and it bounds the computed tone from below
        assert b.value <= first_eigenvalue(m, 4.0)
