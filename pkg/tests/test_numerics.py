import math

import numpy as np
import pytest

from coulomblab.errors import ConvexityError, NotPsdError, SlopeRangeError, TailError
from coulomblab.numerics import (
    KineticProfile,
    PsdMatrix,
    RadialGridFunction,
    gamma_fn,
    geometric_radial_grid,
    legendre_transform,
    psd_sqrt,
    radial_fourier_transform,
)


def momentum_grid(n=2001, span=3.0):
    return np.linspace(-span, span, n)


class TestLegendreTransform:
    def test_quadratic_kinetic(self):
        # T(p) = p^2/2 has dual v^2/2; the parabola refinement is exact
        p = momentum_grid()
        t = KineticProfile("nonrelativistic", 1.0)(p)
        assert legendre_transform(p, t, 0.6) == pytest.approx(0.18, abs=1e-12)

    def test_relativistic_kinetic(self):
        p = momentum_grid()
        t = KineticProfile("relativistic", 1.0)(p)
        expected = 1.0 - math.sqrt(1.0 - 0.36)
        assert legendre_transform(p, t, 0.6) == pytest.approx(expected, abs=1e-8)

    def test_mass_scaling(self):
        p = momentum_grid()
        t = KineticProfile("nonrelativistic", 2.5)(p)
        assert legendre_transform(p, t, 0.4) == pytest.approx(0.5 * 2.5 * 0.16, abs=1e-12)

    def test_double_transform_recovers_function(self):
        p = np.linspace(-3.0, 3.0, 1501)
        t = KineticProfile("relativistic", 1.0)(p)
        slopes = np.diff(t) / np.diff(p)
        v_grid = np.linspace(slopes[0], slopes[-1], 1201)
        t_star = np.array([legendre_transform(p, t, v) for v in v_grid])
        inner = np.linspace(-2.0, 2.0, 41)
        t_recovered = np.array(
            [legendre_transform(v_grid, t_star, q) for q in inner]
        )
        expected = KineticProfile("relativistic", 1.0)(inner)
        assert np.abs(t_recovered - expected).max() < 1e-6

    def test_output_convex_in_v(self):
        p = momentum_grid()
        t = KineticProfile("relativistic", 1.0)(p)
        vs = np.linspace(-0.8, 0.8, 81)
        vals = np.array([legendre_transform(p, t, v) for v in vs])
        second = np.diff(vals, 2)
        assert second.min() > -1e-10

    def test_nonconvex_rejected(self):
        p = np.linspace(0.0, 2.0, 101)
        with pytest.raises(ConvexityError):
            legendre_transform(p, np.sin(4 * p), 0.1)

    def test_slope_out_of_range(self):
        p = momentum_grid()
        t = KineticProfile("relativistic", 1.0)(p)
        # relativistic slopes saturate below 1
        with pytest.raises(SlopeRangeError):
            legendre_transform(p, t, 1.5)


class TestRadialFourierTransform:
    def test_gaussian_closed_form(self):
        r = np.concatenate([[0.0], geometric_radial_grid(1e-4, 12.0, 1800)])
        f = RadialGridFunction(r, np.exp(-(r**2) / 2.0))
        for k in (0.4, 1.0, 2.3):
            expected = (2.0 * math.pi) ** 1.5 * math.exp(-(k**2) / 2.0)
            assert radial_fourier_transform(f, k) == pytest.approx(
                expected, rel=1e-6
            )

    def test_yukawa_approaches_coulomb(self):
        k = 1.3
        errors = []
        for eps in (1e-2, 1e-3):
            r = geometric_radial_grid(1e-6, 50.0, 2500)
            f = RadialGridFunction(r, np.exp(-eps * r) / r, tail_exponent=-1.0)
            got = radial_fourier_transform(f, k)
            assert got == pytest.approx(4.0 * math.pi / (k**2 + eps**2), rel=5e-3)
            errors.append(abs(got - 4.0 * math.pi / k**2))
        assert errors[1] < errors[0]

    def test_zero_function(self):
        r = np.linspace(0.0, 5.0, 50)
        f = RadialGridFunction(r, np.zeros_like(r))
        for k in (0.5, 2.0, 7.0):
            assert radial_fourier_transform(f, k) == pytest.approx(0.0, abs=1e-14)

    def test_linearity(self):
        rng = np.random.default_rng(11)
        r = np.concatenate([[0.0], geometric_radial_grid(1e-3, 10.0, 900)])
        va = np.exp(-(r**2) / 2.0)
        vb = np.exp(-r) * r
        a, b = rng.uniform(-2, 2, size=2)
        fa = RadialGridFunction(r, va)
        fb = RadialGridFunction(r, vb)
        fab = RadialGridFunction(r, a * va + b * vb)
        k = 1.7
        combo = a * radial_fourier_transform(fa, k) + b * radial_fourier_transform(fb, k)
        assert radial_fourier_transform(fab, k) == pytest.approx(combo, rel=1e-8)

    def test_growing_tail_rejected(self):
        r = geometric_radial_grid(1e-2, 5.0, 100)
        f = RadialGridFunction(r, 1.0 / r, tail_exponent=-0.5)
        with pytest.raises(TailError):
            radial_fourier_transform(f, 1.0)


class TestRadialGridFunction:
    def test_requires_increasing_nodes(self):
        with pytest.raises(ValueError):
            RadialGridFunction(np.array([0.0, 1.0, 1.0]), np.zeros(3))

    def test_requires_nonnegative_start(self):
        with pytest.raises(ValueError):
            RadialGridFunction(np.array([-0.5, 1.0]), np.zeros(2))

    def test_tail_evaluation(self):
        r = np.linspace(1.0, 4.0, 31)
        f = RadialGridFunction(r, 1.0 / r**3, tail_exponent=-3.0)
        assert f(8.0) == pytest.approx(8.0**-3, rel=1e-12)
        g = RadialGridFunction(r, 1.0 / r**3)
        assert g(8.0) == 0.0


class TestPsdSqrt:
    def test_identity(self):
        s = psd_sqrt(PsdMatrix(np.eye(4)))
        assert np.allclose(s.entries, np.eye(4))

    def test_diagonal(self):
        s = psd_sqrt(PsdMatrix(np.diag([4.0, 9.0])))
        assert np.allclose(s.entries, np.diag([2.0, 3.0]))

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((8, 8))
        m = PsdMatrix(a.T @ a)
        s = psd_sqrt(m)
        assert np.linalg.norm(s.entries @ s.entries - m.entries) < 1e-10

    def test_commutes_with_argument(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((7, 7))
        m = PsdMatrix(a.T @ a)
        s = psd_sqrt(m)
        comm = s.entries @ m.entries - m.entries @ s.entries
        bound = 7 * np.finfo(float).eps * np.linalg.norm(m.entries) ** 2
        assert np.linalg.norm(comm) < max(bound, 1e-10)

    def test_small_negative_clamped(self):
        m = PsdMatrix(np.diag([1.0, -1e-14]))
        s = psd_sqrt(m)
        assert s.entries[1, 1] == 0.0

    def test_genuinely_negative_rejected(self):
        with pytest.raises(NotPsdError):
            PsdMatrix(np.diag([1.0, -0.5]))


class TestGammaFn:
    @pytest.mark.parametrize(
        "x,expected",
        [(1.0, 1.0), (0.5, math.sqrt(math.pi)), (5.0, 24.0)],
    )
    def test_known_values(self, x, expected):
        assert gamma_fn(x) == pytest.approx(expected, rel=1e-13)

    def test_recurrence(self):
        for x in np.linspace(0.1, 10.0, 67):
            assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-11)

    def test_domain(self):
        with pytest.raises(ValueError):
            gamma_fn(0.0)
        with pytest.raises(ValueError):
            gamma_fn(-2.5)
