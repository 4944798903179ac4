import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_diff, fd_hessian, helmholtz_3d, oseen_tensor_3d, stokeslet_2d
from tpstokes import (ConfigError, DomainError, Params, TruncationWarning, helmholtz_kernel,
                      helmholtz_kernel_gradient, helmholtz_symbol, laplace_fund, laplace_hessian,
                      mode_stokeslet, projection_symbol, psi_conv_helmholtz_hessian, remainder_kernel,
                      steady_stokeslet_pressure, steady_stokeslet_velocity, tp_fundamental_solution,
                      tp_multiplier)
from tpstokes.kernels import (_difference_profile, conv_second_derivative_oracle, estimate_mode_cutoff,
                              helmholtz_profile, remainder_profile, remainder_profile_uniform, sawtooth)


def unit(n, seed=0):
    v = np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


def fd_laplacian(f, x, h):
    """Fourth-order central Laplacian of a (possibly matrix-valued) function."""
    E = np.eye(x.size) * h
    return sum((-f(x + 2 * e) + 16 * f(x + e) - 30 * f(x) + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h)
               for e in E)


def fd_partial(f, x, i, h):
    e = np.eye(x.size)[i] * h
    return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)


class TestParams:
    def test_defaults(self):
        p = Params()
        assert p.n == 3 and p.T == pytest.approx(2 * math.pi) and p.perf == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [{"n": 1}, {"n": 4}, {"T": 0.0}, {"T": -1.0}, {"T": math.inf}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            Params(**kw)

    def test_kappa(self, params):
        k = np.array([-3, -1, 1, 2, 64])
        kap = params.kappa(k)
        assert np.all(kap.imag > 0)
        np.testing.assert_allclose(kap**2, -1j * params.perf * k, rtol=1e-14)
        with pytest.raises(DomainError):
            params.kappa(0)


class TestSteadyStokeslet:
    def test_3d_closed_form(self, p3):
        for seed in range(5):
            x = unit(3, seed) * (0.3 + seed)
            np.testing.assert_allclose(steady_stokeslet_velocity(p3, x), oseen_tensor_3d(x), rtol=1e-14)

    def test_2d_closed_form(self, p2):
        for seed in range(5):
            x = unit(2, seed) * (0.3 + seed)
            np.testing.assert_allclose(steady_stokeslet_velocity(p2, x), stokeslet_2d(x), rtol=1e-13, atol=1e-16)

    def test_pressure(self, params):
        x = unit(params.n, 4) * 1.7
        np.testing.assert_allclose(steady_stokeslet_pressure(params, x),
                                   x / (params.omega_n * 1.7**params.n), rtol=1e-14)

    def test_stokes_equations(self, params):
        # -Delta S_ij + d_i p_j = 0 and d_i S_ij = 0 away from the origin
        x = unit(params.n, 1) * 1.3
        h = 1e-3
        S = lambda y: steady_stokeslet_velocity(params, y)
        P = lambda y: steady_stokeslet_pressure(params, y)
        lap = fd_laplacian(S, x, h)
        gradp = np.stack([fd_partial(P, x, i, h) for i in range(params.n)])
        np.testing.assert_allclose(-lap + gradp, 0, atol=1e-8)
        div = sum(fd_partial(lambda y: S(y)[i], x, i, h) for i in range(params.n))
        np.testing.assert_allclose(div, 0, atol=1e-9)

    def test_origin(self, params):
        with pytest.raises(DomainError):
            steady_stokeslet_velocity(params, np.zeros(params.n))


class TestLaplace:
    def test_hessian_fd(self, params):
        x = unit(params.n, 2) * 0.9
        H = fd_hessian(lambda y: laplace_fund(params, y), x, 1e-4)
        np.testing.assert_allclose(laplace_hessian(params, x), H.real, atol=1e-6)

    def test_harmonic(self, params):
        x = unit(params.n, 3) * 2.1
        assert np.trace(laplace_hessian(params, x)) == pytest.approx(0, abs=1e-15)

    def test_values(self, p2, p3):
        assert laplace_fund(p3, [2.0, 0, 0]) == pytest.approx(1 / (8 * math.pi))
        assert laplace_fund(p2, [math.e, 0]) == pytest.approx(-1 / (2 * math.pi))


class TestHelmholtz:
    @pytest.mark.parametrize("k", [1, -1, 2, 8, 64])
    def test_3d_oracle(self, p3, k):
        for r in (0.01, 0.5, 3.0, 10.0):
            x = np.array([r, 0, 0])
            assert helmholtz_kernel(p3, k, x) == pytest.approx(helmholtz_3d(k, r), rel=1e-13)

    @pytest.mark.parametrize("k", [1, 2, 8, -5])
    def test_closed_vs_hankel(self, p3, k):
        x = np.outer(np.geomspace(1e-3, 20, 40), unit(3, k % 7))
        a = helmholtz_kernel(p3, k, x, form="closed")
        b = helmholtz_kernel(p3, k, x, form="hankel")
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_closed_form_needs_3d(self, p2):
        with pytest.raises(DomainError):
            helmholtz_kernel(p2, 1, [1.0, 0.0], form="closed")

    @pytest.mark.parametrize("k", [1, 2, 8])
    def test_radial_pde_3d(self, p3, k):
        r = np.linspace(0.2, 6, 30)
        g, g1, g2 = helmholtz_profile(p3, k, r)
        res = -(g2 + 2 * g1 / r) + 1j * p3.perf * k * g
        assert np.max(np.abs(res) / np.abs(g)) <= 1e-8

    @pytest.mark.parametrize("k", [1, 2, 8])
    def test_radial_pde_2d_differences(self, p2, k):
        f = lambda r: helmholtz_kernel(p2, k, np.array([r, 0.0]))
        for r in (0.3, 1.0, 2.5):
            h = 1e-3
            d1 = central_diff(f, r, h)
            d2 = central_diff(f, r, h, order=2)
            res = -(d2 + d1 / r) + 1j * p2.perf * k * f(r)
            assert abs(res) <= 1e-6 * abs(f(r))

    def test_profile_matches_kernel_2d(self, p2):
        r = np.linspace(0.1, 10, 17)
        g, g1, _ = helmholtz_profile(p2, 3, r)
        x = np.c_[r, np.zeros_like(r)]
        np.testing.assert_allclose(g, helmholtz_kernel(p2, 3, x), rtol=1e-14)
        np.testing.assert_allclose(g1, helmholtz_kernel_gradient(p2, 3, x)[:, 0], rtol=1e-13)

    def test_gradient_fd(self, params):
        x = unit(params.n, 5) * 1.1
        grad = helmholtz_kernel_gradient(params, 2, x)
        fd = np.array([fd_partial(lambda y: helmholtz_kernel(params, 2, y), x, i, 1e-3)
                       for i in range(params.n)])
        np.testing.assert_allclose(grad, fd, rtol=1e-8)

    def test_symbol_and_multiplier(self, params):
        xi = np.array([[0.0] * params.n, [1.0] + [0.0] * (params.n - 1), [0.5] * params.n])
        np.testing.assert_allclose(helmholtz_symbol(params, xi, 2),
                                   1 / (np.sum(xi**2, axis=1) + 2j), rtol=1e-15)
        assert np.all(tp_multiplier(params, xi, 0) == 0)
        with pytest.raises(DomainError):
            helmholtz_symbol(params, xi[0], 0)

    def test_multiplier_modulus(self, params):
        rng = np.random.default_rng(1)
        xi = rng.normal(size=(200, params.n))
        k = rng.integers(-20, 21, 200)
        k[k == 0] = 1
        assert np.max(np.abs(tp_multiplier(params, xi, k))) <= params.T / (2 * math.pi)


class TestProjection:
    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3))
    def test_idempotent_and_annihilates(self, v):
        xi = np.array(v)
        P = projection_symbol(xi)
        np.testing.assert_allclose(P @ P, P, atol=1e-13)
        np.testing.assert_allclose(P @ xi, 0, atol=1e-12)
        np.testing.assert_allclose(P, P.T, atol=0)

    def test_origin(self):
        with pytest.raises(DomainError):
            projection_symbol(np.zeros(3))


class TestModeStokeslet:
    @pytest.mark.parametrize("k", [1, 3])
    def test_conjugate_modes(self, params, k):
        x = np.outer(np.geomspace(0.05, 10, 25), unit(params.n, 6))
        a = mode_stokeslet(params, k, x)
        b = mode_stokeslet(params, -k, x)
        assert np.max(np.abs(b - np.conj(a))) <= 1e-13 * np.max(np.abs(a))

    def test_symmetric(self, params):
        x = np.outer(np.linspace(0.2, 5, 9), unit(params.n, 7))
        G = mode_stokeslet(params, 2, x)
        np.testing.assert_allclose(G, np.swapaxes(G, -1, -2), atol=0)

    @pytest.mark.parametrize("k", [1, -2])
    def test_unsteady_stokes_equations(self, params, k):
        # (lam - Delta) G_ij + d_i p_j = 0 and d_i G_ij = 0 off the origin, p the steady pressure
        x = unit(params.n, 8) * 1.4
        h = 2e-3
        G = lambda y: mode_stokeslet(params, k, y)
        P = lambda y: steady_stokeslet_pressure(params, y)
        lam = params.lam(k)
        res = lam * G(x) - fd_laplacian(G, x, h) + np.stack([fd_partial(P, x, i, h) for i in range(params.n)])
        assert np.max(np.abs(res)) <= 1e-7 * np.max(np.abs(G(x)))
        div = sum(fd_partial(lambda y: G(y)[i], x, i, h) for i in range(params.n))
        assert np.max(np.abs(div)) <= 1e-8 * np.max(np.abs(G(x)))

    @given(st.integers(0, 10**6))
    def test_rotation_covariance(self, seed):
        p = Params(n=3)
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        x = rng.normal(size=3)
        x *= (0.1 + 4 * rng.random()) / np.linalg.norm(x)
        np.testing.assert_allclose(mode_stokeslet(p, 2, Q @ x), Q @ mode_stokeslet(p, 2, x) @ Q.T,
                                   atol=1e-14 * np.max(np.abs(mode_stokeslet(p, 2, x))))

    def test_zero_mode(self, params):
        with pytest.raises(DomainError):
            mode_stokeslet(params, 0, np.ones(params.n))


class TestSmallArgumentSeries:
    """The n=3 difference profile switches to a series at |i kappa r| = 0.5."""

    @staticmethod
    def reference(k, r):
        kap = complex(mpmath.sqrt(mpmath.mpc(0, -k)))
        kap = kap if kap.imag > 0 else -kap
        with mpmath.workdps(50):
            rr = mpmath.mpf(r)
            z = mpmath.mpc(kap.real, kap.imag) * rr
            e = mpmath.exp(1j * z) / (4 * mpmath.pi)
            p1 = -1 / (4 * mpmath.pi * rr**2)
            p2 = 2 / (4 * mpmath.pi * rr**3)
            g1 = e * (1j * z - 1) / rr**2
            g2 = e * (2 - 2j * z - z * z) / rr**3
            return complex(p1 - g1), complex(p2 - g2)

    @pytest.mark.parametrize("k", [1, 4])
    def test_continuity_across_switch(self, p3, k):
        r_switch = 0.5 / math.sqrt(k)
        for r in (1e-4, 0.3 * r_switch, r_switch * (1 - 1e-9), r_switch * (1 + 1e-9), 2 * r_switch):
            d1, d2 = _difference_profile(p3, k, np.array([r]))
            e1, e2 = self.reference(k, r)
            assert d1[0] == pytest.approx(e1, rel=1e-12)
            assert d2[0] == pytest.approx(e2, rel=1e-12)


class TestConvolutionOracle:
    @pytest.mark.parametrize("n,k", [(3, 1), (2, 1), (3, 4)])
    def test_closed_form_vs_quadrature(self, n, k):
        p = Params(n=n)
        x = unit(n, 9) * 1.5
        H = psi_conv_helmholtz_hessian(p, k, x)
        for i, j in ((0, 0), (0, 1)):
            ref = conv_second_derivative_oracle(p, k, x, i, j, tol=1e-9)
            assert abs(H[i, j] - ref) <= 1e-7 * np.max(np.abs(H))


class TestRemainder:
    def test_sawtooth(self):
        p = Params()
        t = np.array([0.0, 1.0, math.pi, 2 * math.pi, -1.0])
        np.testing.assert_allclose(sawtooth(p, t), [0.0, math.pi - 1, 0.0, 0.0, 1 - math.pi], atol=1e-15)

    def test_structure(self, params):
        x = np.outer(np.linspace(1.5, 5, 6), unit(params.n, 10))
        t = np.linspace(0.1, 6.0, 7)
        G = remainder_kernel(params, x, t)
        assert G.shape == (6, 7, params.n, params.n)
        assert np.isrealobj(G)
        np.testing.assert_array_equal(G, np.swapaxes(G, -1, -2))
        np.testing.assert_array_equal(G, remainder_kernel(params, -x, t))

    def test_zero_time_mean(self, params):
        r = np.array([3.0, 4.0])
        K = int(estimate_mode_cutoff(params, r.min()))
        a, b, _ = remainder_profile_uniform(params, r, 2 * K + 1, K)
        assert np.max(np.abs(a.mean(axis=1))) <= 1e-12 * np.max(np.abs(a))
        assert np.max(np.abs(b.mean(axis=1))) <= 1e-12 * np.max(np.abs(b))

    def test_uniform_matches_direct(self, params):
        r = np.array([2.0, 3.5])
        K = int(estimate_mode_cutoff(params, r.min()))
        a, b, t = remainder_profile_uniform(params, r, 2 * K + 1, K)
        a2, b2 = remainder_profile(params, r, t[::37], K=K, adaptive=False)
        np.testing.assert_allclose(a[:, ::37], a2, atol=1e-13 * np.max(np.abs(a)))
        np.testing.assert_allclose(b[:, ::37], b2, atol=1e-13 * np.max(np.abs(b)))

    def test_truncated_tail_is_mode_sum(self, params):
        # with tail="truncate" the kernel is exactly the mode sum of G_k over 0 < |k| <= K
        x = unit(params.n, 11) * 2.0
        t = np.array([0.3, 2.0])
        K = 12
        G = remainder_kernel(params, x, t, K=K, adaptive=False, tail="truncate")
        ref = sum(mode_stokeslet(params, k, x)[None] * np.exp(1j * params.perf * k * t)[:, None, None]
                  for k in range(-K, K + 1) if k != 0)
        np.testing.assert_allclose(G, ref.real, atol=1e-13 * np.max(np.abs(ref)))

    def test_truncated_tail_converges(self, p3):
        x = np.array([2.0, 0, 0])
        t = np.array([1.0])
        exact = remainder_kernel(p3, x, t)
        errs = [np.max(np.abs(remainder_kernel(p3, x, t, K=K, tail="truncate", adaptive=False) - exact))
                for K in (50, 400)]
        assert errs[1] < errs[0] / 4

    def test_truncation_warning(self, params):
        with pytest.warns(TruncationWarning):
            remainder_kernel(params, np.eye(params.n)[0] * 0.2, 0.5, K=16)

    def test_no_warning_far_field(self, params):
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            remainder_kernel(params, np.eye(params.n)[0] * 3.0, 0.5)

    def test_bad_tail(self, params):
        with pytest.raises(ConfigError):
            remainder_kernel(params, np.ones(params.n), 0.0, tail="nope")

    def test_origin(self, params):
        with pytest.raises(DomainError):
            remainder_kernel(params, np.zeros(params.n), 0.0)


class TestFundamentalSolution:
    def test_decomposition(self, params):
        x = np.eye(params.n)[0] * 2.5
        t = np.array([0.4, 1.7])
        s = tp_fundamental_solution(params, x, t)
        ref = steady_stokeslet_velocity(params, x)[None] + remainder_kernel(params, x, t)
        np.testing.assert_allclose(s.velocity, ref, rtol=1e-15)
        np.testing.assert_allclose(s.pressure, steady_stokeslet_pressure(params, x))
        with pytest.raises(TypeError):
            s.pressure_at(0.4)
