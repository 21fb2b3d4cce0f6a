import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from coulomblab.bogoliubov import (
    CondensateProfile,
    PairExcitationSpec,
    bogoliubov_dispersion_min,
    build_gaussian_polynomial_basis,
    compute_I0,
    coulomb_expectation_finite_basis,
    dyson_pipeline,
    dyson_variational_solve,
    fock_oracle,
    gamma_from_spec,
    gaussian_condensate,
    semiclassical_p_integral,
    total_energy_expectation,
    working_i0,
)
from coulomblab.errors import TruncationError
from coulomblab.numerics import PsdMatrix, RadialGridFunction, psd_sqrt


class TestGammaFromSpec:
    def test_zero_lambdas(self):
        g = gamma_from_spec(PairExcitationSpec((0.0, 0.0), 1.0))
        assert np.allclose(g.entries, 0.0)

    def test_half(self):
        g = gamma_from_spec(PairExcitationSpec((0.5,), 0.0))
        assert g.entries[0, 0] == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_near_one_rejected(self):
        with pytest.raises(ValueError):
            PairExcitationSpec((1.0 - 1e-9,), 0.0)


class TestFockOracle:
    def test_pure_condensate_statistics(self):
        rep = fock_oracle(PairExcitationSpec((0.0,), condensate_amplitude=2.0))
        assert rep.condensate_number_mean == pytest.approx(4.0, abs=1e-9)
        assert rep.condensate_number_variance == pytest.approx(4.0, abs=1e-9)
        assert rep.max_error < 1e-9

    def test_single_mode_half(self):
        rep = fock_oracle(PairExcitationSpec((0.5,), condensate_amplitude=0.0))
        assert rep.centered_two_point[1, 1] == pytest.approx(1.0 / 3.0, abs=1e-9)
        expected_pairing = -math.sqrt((1.0 / 3.0) * (4.0 / 3.0))
        assert rep.centered_pairing[1, 1] == pytest.approx(expected_pairing, abs=1e-9)

    def test_four_point_closed_form(self):
        rep = fock_oracle(PairExcitationSpec((0.3,), condensate_amplitude=math.sqrt(2)))
        gam = 0.09 / 0.91
        expected = gam * (gam + 1.0) + 2.0 * gam**2
        assert rep.centered_four_point[1, 1] == pytest.approx(expected, abs=1e-8)

    def test_seeded_sweep(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            n_modes = int(rng.integers(1, 3))
            spec = PairExcitationSpec(
                tuple(rng.uniform(0.0, 0.55, size=n_modes)),
                condensate_amplitude=float(np.sqrt(rng.uniform(0.0, 8.0))),
            )
            rep = fock_oracle(spec, truncation=40)
            assert rep.norm_deficit < 1e-8
            assert rep.max_error < 1e-7

    def test_truncation_error(self):
        with pytest.raises(TruncationError):
            fock_oracle(
                PairExcitationSpec((0.9,), condensate_amplitude=5.0), truncation=30
            )

    def test_mode_limit(self):
        with pytest.raises(ValueError):
            fock_oracle(PairExcitationSpec((0.1,) * 4, 1.0))


class TestCoulombExpectation:
    def setup_method(self):
        self.profile = gaussian_condensate(1.0, big_n=10.0, n_nodes=1200, r_max=12.0)
        self.basis = build_gaussian_polynomial_basis(self.profile, 6)

    def test_zero_gamma(self):
        val = coulomb_expectation_finite_basis(
            self.profile, PsdMatrix(np.zeros((6, 6))), self.basis
        )
        assert val == 0.0

    def test_rank_one_sign(self):
        u = np.zeros(6)
        u[0] = 1.0
        t = 0.7
        g = PsdMatrix(t * np.outer(u, u))
        val = coulomb_expectation_finite_basis(self.profile, g, self.basis)
        assert val < 0.0
        # trace reduces to (t - sqrt(t(t+1))) <u|K|u>
        factor = t - math.sqrt(t * (t + 1.0))
        assert val / factor > 0.0

    def test_eigendecomposition_route(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6))
        g = PsdMatrix(a.T @ a)
        main = coulomb_expectation_finite_basis(self.profile, g, self.basis)

        # independent route: scalar function through the eigenbasis
        from coulomblab.bogoliubov import _coulomb_kernel_matrix

        kmat = _coulomb_kernel_matrix(self.profile, self.basis)
        w, u = np.linalg.eigh(g.entries)
        func = (u * (w - np.sqrt(w * (w + 1.0)))) @ u.T
        oracle = self.profile.N * float(np.trace(kmat @ func))
        assert main == pytest.approx(oracle, abs=1e-10 * (1.0 + abs(oracle)))


class TestTotalEnergy:
    def test_pure_condensate_term(self):
        profile = gaussian_condensate(1.5, big_n=20.0, n_nodes=3000, r_max=18.0)
        basis = build_gaussian_polynomial_basis(profile, 4)
        rep = total_energy_expectation(profile, PsdMatrix(np.zeros((4, 4))), basis)
        assert rep.terms["pair_kinetic"] == 0.0
        assert rep.terms["pair_coulomb"] == 0.0
        # Gaussian of width w: int |grad xi0|^2 = 3 / (2 w^2)
        expected = 0.5 * 20.0 * 1.5 / (1.5**2 * 2.0) * 2.0
        assert rep.terms["condensate_kinetic"] == pytest.approx(
            0.5 * 20.0 * 3.0 / (2.0 * 1.5**2), rel=1e-5
        )
        assert rep.terms["condensate_kinetic"] == pytest.approx(expected, rel=1e-5)

    def test_term_signs(self):
        profile = gaussian_condensate(1.0, big_n=5.0, n_nodes=1200, r_max=12.0)
        basis = build_gaussian_polynomial_basis(profile, 5)
        rng = np.random.default_rng(12)
        a = rng.standard_normal((5, 5))
        rep = total_energy_expectation(profile, PsdMatrix(0.1 * a.T @ a), basis)
        assert rep.terms["pair_kinetic"] >= 0.0
        assert rep.terms["pair_coulomb"] <= 0.0
        assert rep.total == pytest.approx(sum(rep.terms.values()))


class TestDispersionMin:
    def test_zero_coupling(self):
        assert bogoliubov_dispersion_min(1.7, 0.0) == (0.0, 0.0)

    def test_degenerate(self):
        assert bogoliubov_dispersion_min(0.0, 0.0) == (0.0, 0.0)

    def test_zero_tau_infimum(self):
        f_star, e_min = bogoliubov_dispersion_min(0.0, 3.0)
        assert math.isinf(f_star)
        assert e_min == -1.5

    def test_against_golden_scan(self):
        taus = np.geomspace(1e-2, 1e2, 12)
        gs = np.geomspace(1e-2, 1e2, 12)
        for tau in taus:
            for g in gs:
                f_star, e_min = bogoliubov_dispersion_min(tau, g)

                def h(f):
                    return tau * f + g * (f - math.sqrt(f * (f + 1.0)))

                res = minimize_scalar(
                    h,
                    bounds=(0.0, max(10.0 * f_star, 1.0)),
                    method="bounded",
                    options={"xatol": 1e-15},
                )
                assert e_min == pytest.approx(
                    min(res.fun, h(0.0)), abs=1e-10 * (1.0 + abs(e_min))
                )

    def test_perturbative_regime(self):
        for ratio in (1e2, 1e3):
            tau, g = ratio, 1.0
            _, e_min = bogoliubov_dispersion_min(tau, g)
            assert e_min == pytest.approx(-(g**2) / (4.0 * tau), rel=2.0 / ratio)

    def test_monotone_in_g(self):
        tau = 0.8
        vals = [bogoliubov_dispersion_min(tau, g)[1] for g in np.linspace(0, 5, 40)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
        assert all(v <= 0 for v in vals)


class TestI0:
    def test_integrand_endpoints(self):
        from coulomblab.bogoliubov import _i0_integrand

        assert _i0_integrand(np.array([0.0]))[0] == 1.0
        # large-x decay like 1/(2 x^4)
        x = np.array([50.0])
        assert _i0_integrand(x)[0] == pytest.approx(0.5 / x[0] ** 4, rel=1e-3)

    def test_quadrature_matches_consistent_gamma_form(self):
        quadrature, stated = compute_I0()
        from coulomblab.numerics import gamma_fn

        consistent = (
            4.0**0.75 * gamma_fn(0.75) / (5.0 * math.pi**0.25 * gamma_fn(1.25))
        )
        assert quadrature == pytest.approx(consistent, rel=1e-10)
        # the stated closed form sits exactly a factor 2 above the integral
        assert stated == pytest.approx(2.0 * quadrature, rel=1e-10)

    def test_semiclassical_ratio_constant(self):
        i0 = working_i0()
        ratios = []
        for a in (1e-2, 1.0, 1e2):
            v = semiclassical_p_integral(a, 1.0)
            ratios.append(-v / a**1.25)
        for r in ratios:
            assert r == pytest.approx(i0, rel=1e-6)
        assert max(ratios) - min(ratios) < 1e-6 * i0

    def test_density_factorization(self):
        v1 = semiclassical_p_integral(2.0, 3.0)
        v2 = semiclassical_p_integral(3.0, 2.0)
        assert v1 == pytest.approx(v2, rel=1e-9)


@pytest.fixture(scope="module")
def solved_state():
    return dyson_variational_solve(grid_n=1500, r_max=40.0)


class TestDysonSolver:
    def test_dilation_identity_for_any_profile(self):
        # E(sigma) = sigma^2 K/2 - sigma^(3/4) I0 P is exact bookkeeping
        from coulomblab.bogoliubov import _dyson_quantities

        r = np.linspace(0.0, 30.0, 1200)
        h = r[1] - r[0]
        u = r * np.exp(-((r - 3.0) ** 2))
        k0, p0, n0 = _dyson_quantities(u, r, h, 1.0)
        sigma = 1.8
        rs = r / sigma
        us = sigma ** (3.0 / 2.0) * u / sigma  # sigma^(3/2) phi(sigma r) times r/sigma
        k1, p1, n1 = _dyson_quantities(us, rs, h / sigma, 1.0)
        assert n1 == pytest.approx(n0, rel=1e-12)
        assert k1 == pytest.approx(sigma**2 * k0, rel=1e-12)
        assert p1 == pytest.approx(sigma**0.75 * p0, rel=1e-12)

    def test_virial_and_energy(self, solved_state):
        st = solved_state
        assert st.energy < 0.0
        assert st.virial_residual < 1e-3
        # E* = -(5/3) * (K/2) through the virial relation
        assert st.energy == pytest.approx(-(5.0 / 6.0) * st.kinetic, rel=5e-3)

    def test_grid_refinement_stability(self, solved_state):
        finer = dyson_variational_solve(grid_n=3000, r_max=40.0)
        assert abs(finer.energy - solved_state.energy) < 1e-3 * abs(
            solved_state.energy
        )

    def test_custom_init_same_minimum(self, solved_state):
        r = np.linspace(0.0, 40.0, 801)
        init = RadialGridFunction(r, np.exp(-r / 2.0))
        st = dyson_variational_solve(grid_n=1500, r_max=40.0, init=init)
        assert st.energy == pytest.approx(solved_state.energy, rel=1e-4)


class TestDysonPipeline:
    def test_spread_and_scale(self, solved_state):
        rep = dyson_pipeline(n_list=(10.0, 1e3, 1e6), state=solved_state)
        assert rep.max_relative_spread < 1e-10
        for row in rep.rows:
            assert row.e_over_n75 == pytest.approx(solved_state.energy, rel=1e-10)
            assert row.length_scale == pytest.approx(row.N ** -0.2, rel=1e-14)

    def test_rejects_bad_n(self, solved_state):
        with pytest.raises(ValueError):
            dyson_pipeline(n_list=(0.0,), state=solved_state)


class TestCondensateProfile:
    def test_norm_enforced(self):
        r = np.linspace(0.0, 10.0, 500)
        with pytest.raises(ValueError):
            CondensateProfile(RadialGridFunction(r, np.exp(-r)), N=5.0)

    def test_gaussian_constructor_normalized(self):
        prof = gaussian_condensate(2.0, big_n=3.0)
        assert prof.norm_squared() == pytest.approx(1.0, abs=1e-12)

    def test_negative_profile_rejected(self):
        r = np.linspace(0.0, 10.0, 500)
        vals = np.exp(-r)
        vals[5] = -0.2
        with pytest.raises(ValueError):
            CondensateProfile(RadialGridFunction(r, vals), N=2.0)


class TestPsdRoutes:
    def test_sqrt_product_route_matches_eig(self):
        rng = np.random.default_rng(77)
        a = rng.standard_normal((6, 6))
        g = PsdMatrix(a.T @ a)
        w, u = np.linalg.eigh(g.entries)
        oracle = (u * np.sqrt(w * (w + 1.0))) @ u.T
        via_product = psd_sqrt(PsdMatrix(g.entries @ (g.entries + np.eye(6))))
        assert np.abs(via_product.entries - oracle).max() < 1e-10
