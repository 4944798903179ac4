import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_diff, geometric_sum_mp
from tpstokes import DomainError, FitError, Params, QuadratureError
from tpstokes import spectral as sp
from tpstokes import verify as vf
from tpstokes.kernels import _laplace_profile
from tpstokes.report import Criterion, VerificationReport


class TestDecayFit:
    def test_exact_power(self):
        r = np.linspace(1, 8, 12)
        fit = vf.fit_decay_exponent(r, r**-3.0)
        assert fit.slope == pytest.approx(-3, abs=1e-12)
        assert fit.max_rel_dev <= 1e-12

    def test_perturbed_power(self):
        r = np.linspace(1, 8, 40)
        fit = vf.fit_decay_exponent(list(zip(r, 5 * r**-2 * (1 + 0.01 * np.sin(r)))))
        assert fit.slope == pytest.approx(-2, abs=0.02)
        assert fit.intercept == pytest.approx(math.log(5), abs=0.05)

    @pytest.mark.parametrize("r,v", [
        ([1.0], [1.0]),
        (np.linspace(1, 2, 5), np.ones(5)),
        (np.linspace(1, 2, 8), -np.ones(8)),
        (np.linspace(2, 1, 8), np.ones(8)),
        (np.r_[0.0, np.linspace(1, 2, 7)], np.ones(8)),
    ])
    def test_rejects(self, r, v):
        with pytest.raises(FitError):
            vf.fit_decay_exponent(r, v)

    @given(st.floats(-5, 5), st.floats(0.1, 10))
    def test_recovers_any_power(self, p, c):
        r = np.geomspace(0.5, 20, 10)
        assert vf.fit_decay_exponent(r, c * r**p).slope == pytest.approx(p, abs=1e-10)

    def test_exponential_rate(self):
        r = np.linspace(1, 6, 20)
        assert vf.fit_exponential_rate(r, np.exp(-0.7 * r), power=0.0)["rate"] == pytest.approx(0.7, rel=0.02)
        joint = vf.fit_exponential_rate(r, 3 * r**-1.5 * np.exp(-0.4 * r))
        assert joint["rate"] == pytest.approx(0.4, rel=1e-10)
        assert joint["power"] == pytest.approx(-1.5, abs=1e-10)


class TestGeometricSum:
    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("q", [0.05, 0.5, 0.9])
    def test_against_mpmath(self, n, q):
        s, tail = vf.geometric_sum(n, q)
        assert s == pytest.approx(geometric_sum_mp(n, q), rel=1e-13)
        assert tail <= 1e-15 * s

    @pytest.mark.parametrize("n", [2, 3])
    def test_small_q(self, n):
        q = 1e-10
        assert vf.geometric_sum(n, q)[0] / q == pytest.approx(1, abs=1e-3)

    def test_domain(self):
        for q in (0.0, 1.0, -0.2):
            with pytest.raises(DomainError):
                vf.geometric_sum(3, q)

    def test_check_reports_constants(self, params):
        rep = vf.check_geometric_sum(params, q_grid=np.linspace(0.1, 0.9, 17))
        assert rep.passed
        assert rep.constants["closing_constant"] == math.factorial(params.n - 2)
        assert rep.constants["limit_q_to_1"] == 2 * math.factorial(params.n - 2)
        i = int(np.argmin(np.abs(np.array(rep.samples["q"]) - 0.5)))
        S = rep.fits["S"][i]
        assert rep.fits["bound"][i] == pytest.approx(S * 0.5 ** (params.n - 1) / 0.5)

    def test_bound_approaches_limit(self):
        # S (1-q)^(n-1)/q tends to 2 (n-2)! as q -> 1
        for n in (2, 3):
            s, _ = vf.geometric_sum(n, 0.99)
            assert s * 0.01 ** (n - 1) / 0.99 == pytest.approx(2 * math.factorial(n - 2), rel=0.02)

    def test_grid_domain(self, p3):
        with pytest.raises(DomainError):
            vf.check_geometric_sum(p3, q_grid=[0.5, 0.97])


class TestRegularizers:
    def test_smoothed_laplace_derivatives(self, params):
        r = np.linspace(0.3, 5, 9)
        phi = lambda s: vf.smoothed_laplace_profile(params, s, 0.8)[0]
        _, d1, d2 = vf.smoothed_laplace_profile(params, r, 0.8)
        np.testing.assert_allclose(d1, central_diff(phi, r, 1e-3), rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(d2, central_diff(phi, r, 1e-3, order=2), rtol=1e-6, atol=1e-10)

    def test_smoothed_laplace_poisson(self, params):
        # Delta (Psi * G_sigma) = -G_sigma
        sigma = 0.7
        r = np.linspace(0.1, 4, 11)
        _, d1, d2 = vf.smoothed_laplace_profile(params, r, sigma)
        gauss = np.exp(-r * r / (2 * sigma**2)) / (2 * math.pi * sigma**2) ** (params.n / 2)
        np.testing.assert_allclose(d2 + (params.n - 1) * d1 / r, -gauss, atol=1e-15)

    def test_far_field_limits(self, params):
        r = np.array([12.0, 15.0])
        phi, d1, d2 = vf.smoothed_laplace_profile(params, r, 1.0)
        P, P1, P2 = _laplace_profile(params, r)
        np.testing.assert_allclose([phi, d1, d2], [P, P1, P2], rtol=1e-12)
        # smoothing the biharmonic gauge part adds -sigma^2/2 Hess Psi outside the core
        sigma = 1.0
        sa, sb = vf.smoothed_stokeslet_profile(params, r, sigma)
        Sa, Sb = vf.stokeslet_profile(params, r)
        np.testing.assert_allclose(sa, Sa - sigma**2 / 2 * P1 / r, rtol=1e-10)
        np.testing.assert_allclose(sb, Sb - sigma**2 / 2 * (P2 - P1 / r), rtol=1e-10)

    def test_octant_dft_matches_direct(self):
        M, L = 6, 3.0
        x = (np.arange(M) + 0.5) * L / M
        full = np.r_[-x[::-1], x]
        X, Y, Z = np.meshgrid(full, full, full, indexing="ij")
        f = X * Z * np.exp(-(X**2 + Y**2 + Z**2)) * (1 + Y**2)
        xi = np.pi / L * np.arange(M + 1)
        A, B, C = np.meshgrid(xi, xi, xi, indexing="ij")
        ref = np.array([np.sum(f * np.exp(-1j * (a * X + b * Y + c * Z)))
                        for a, b, c in zip(A.ravel(), B.ravel(), C.ravel())]).reshape(A.shape)
        got = vf.octant_dft(f[M:, M:, M:], [True, False, True])
        np.testing.assert_allclose(got, ref, atol=1e-13)

    def test_octant_dft_matches_fftn(self):
        # the full grid is cell-centred, so shifting by half a cell gives the FFT
        M, L = 8, 4.0
        h = L / M
        x = (np.arange(M) + 0.5) * h
        full = np.r_[-x[::-1], x]
        X, Y = np.meshgrid(full, full, indexing="ij")
        f = np.exp(-(X**2) - 2 * Y**2)
        F = np.fft.fftn(f)
        m = np.arange(M + 1)
        shift = np.exp(1j * np.pi * m * (1 - 1 / (2 * M)))
        ref = F[np.ix_(m % (2 * M), m % (2 * M))] * shift[:, None] * shift[None, :]
        np.testing.assert_allclose(vf.octant_dft(f[M:, M:], [False, False]), ref, atol=1e-13)


class TestW21q:
    @pytest.fixture
    def grid(self):
        return sp.make_grid(math.pi, 16, 5, Params(n=2))

    def test_homogeneous(self, grid):
        f = sp.band_limited_forcing(grid, np.random.default_rng(0), 2, 2, solenoidal=False)
        for q in (1.5, 3.0):
            a = vf.w21q_ratio(grid, f, q)
            b = vf.w21q_ratio(grid, sp.GridField(grid, 7.5 * f.values), q)
            assert a == pytest.approx(b, rel=1e-12)

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_single_mode_closed_form(self, grid, q):
        amp = np.array([1.0, -0.5 + 0.25j])
        for m, k in (([1, 2], 1), ([3, 0], -2), ([0, 1], 2)):
            direct = vf.w21q_ratio(grid, vf.single_mode_field(grid, m, k, amp), q)
            assert direct == pytest.approx(vf.single_mode_ratio(grid, m, k, amp, q), rel=1e-10)

    def test_parseval(self, grid):
        f = sp.band_limited_forcing(grid, np.random.default_rng(4), 2, 2, solenoidal=False)
        assert vf.w21q_ratio(grid, f, 2.0) == pytest.approx(vf.w21q_ratio_parseval(grid, f), rel=1e-12)

    def test_norm_of_constant_derivatives(self, grid):
        # u = cos(x1): |alpha| <= 2 terms are cos, -sin, -cos
        X = grid.coords()
        u = np.zeros(grid.shape(2))
        u[0] = np.cos(X[0])
        val = vf.w21q_norm(grid, sp.GridField(grid, u), 2.0)
        # |cos|^2 mean 1/2 on the box (2L)^2, three nonzero derivative terms
        assert val == pytest.approx(math.sqrt(3 * 0.5 * (2 * math.pi) ** 2), rel=1e-12)

    def test_q_domain(self, grid):
        with pytest.raises(DomainError):
            vf.check_w21q_ratio(grid, 1.0, trial_count=2)

    def test_single_mode_domain(self, grid):
        with pytest.raises(DomainError):
            vf.single_mode_ratio(grid, [1, 1], 0, np.ones(2), 2.0)

    def test_check_small(self, grid):
        rep = vf.check_w21q_ratio(grid, 2.0, trial_count=3)
        assert rep.passed
        assert rep.constants["parseval_max_rel_diff"] <= 1e-12


class TestMultiplierDerivatives:
    def test_against_differences(self, params):
        rng = np.random.default_rng(0)
        xi = rng.normal(size=params.n)
        for k in (1, -3):
            M, g, H = vf.multiplier_derivatives(params, xi, k)
            E = np.eye(params.n) * 1e-4
            fd_g = [(vf.multiplier_derivatives(params, xi + e, k)[0] -
                     vf.multiplier_derivatives(params, xi - e, k)[0]) / 2e-4 for e in E]
            np.testing.assert_allclose(g, fd_g, rtol=1e-7)
            fd_H = [(vf.multiplier_derivatives(params, xi + e, k)[1] -
                     vf.multiplier_derivatives(params, xi - e, k)[1]) / 2e-4 for e in E]
            np.testing.assert_allclose(H, fd_H, rtol=1e-6, atol=1e-10)

    def test_check(self, params):
        rep = vf.check_multiplier_derivative_bounds(params)
        assert rep.passed
        assert rep.constants["fine"]["M"] == pytest.approx(params.T / (2 * math.pi))


class TestReport:
    def test_round_trip_rejudges(self):
        rep = VerificationReport(check="demo", params={"n": 3})
        rep.require("a", 0.1, "<=", 0.2)
        rep.require("b", np.float64(3.0), "between", [1, 5])
        rep.fits["arr"] = np.arange(3.0)
        again = VerificationReport.from_json(rep.to_json())
        assert again.passed and again.to_dict() == rep.to_dict()
        again.criteria[0].threshold = 0.05
        assert not again.passed

    def test_non_finite_fails(self):
        rep = VerificationReport(check="demo")
        rep.require("nan", float("nan"), "<", 1.0)
        assert not rep.passed
        assert "nan" in rep.summary()
        assert rep.to_dict()["criteria"][0]["value"] is None

    def test_empty_report_fails(self):
        assert not VerificationReport(check="demo").passed

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            Criterion("x", 1.0, "~", 1.0).holds()


class TestChecks:
    def test_remainder_far_field_oracle(self, params):
        # at large |x| the remainder is the Laplace Hessian times the sawtooth
        r = np.array([12.0])
        v = vf.remainder_time_norms(params, r, 2)[0]
        frob = math.sqrt(6) / (4 * math.pi) if params.n == 3 else math.sqrt(2) / (2 * math.pi)
        assert v * r[0] ** params.n == pytest.approx(frob * params.T / math.sqrt(12), rel=5e-3)

    def test_time_norm_ordering(self, p3):
        r = np.array([2.0, 3.0])
        n1, n2, ninf = (vf.remainder_time_norms(p3, r, q) for q in (1, 2, "inf"))
        assert np.all(n1 <= n2) and np.all(n2 <= ninf)

    def test_remainder_decay(self, p3):
        rep = vf.check_remainder_decay(p3, 2, radii=np.linspace(2, 8, 13))
        assert rep.passed
        assert rep.fits["slope"]["slope"] == pytest.approx(-3, abs=0.2)

    def test_remainder_decay_domain(self, p3):
        with pytest.raises(DomainError):
            vf.check_remainder_decay(p3, 2, radii=np.linspace(1, 8, 13))

    def test_lq_domain(self, params):
        with pytest.raises(DomainError):
            vf.check_lq_summability(params, 1.0)
        with pytest.raises(DomainError):
            vf.check_lq_summability(params, params.n / (params.n - 1))

    def test_pointwise_domain(self, p3):
        with pytest.raises(DomainError):
            vf.check_pointwise_mode_bound(p3, k_range=[1, 128])
        with pytest.raises(DomainError):
            vf.check_pointwise_mode_bound(p3, radii=np.linspace(0.2, 2, 8))

    def test_pointwise_halving(self, p3):
        rep = vf.check_pointwise_mode_bound(p3, k_range=[8, 16, 32, 64], radii=np.linspace(1, 8, 29))
        kC = [int(k) * c for k, c in rep.constants["C_k"].items()]
        assert max(kC) / min(kC) < 1.5
        diag, off = rep.fits["C_diag_offdiag"]["8"]
        assert diag > 0 and off > 0

    def test_mode_sum_domain(self, p3):
        with pytest.raises(DomainError):
            vf.check_mode_sum_estimate(p3, radii=np.linspace(0.2, 3, 10))

    def test_mode_sum_values_match_direct(self, p3):
        from tpstokes import helmholtz_kernel
        v, _ = vf.mode_sum_values(p3, np.array([2.0]))
        ks = [k for k in range(-3000, 3001) if k]
        ref = math.sqrt(sum(abs(helmholtz_kernel(p3, k, np.array([2.0, 0, 0]))) ** 2 for k in ks))
        assert v[0] == pytest.approx(ref, rel=1e-10)

    def test_solver_and_representation(self, params):
        assert vf.check_solver_exactness(params, N=16, Nt=5).passed
        assert vf.check_representation(params, N=32 if params.n == 2 else 16).passed

    def test_convolution_needs_time_samples(self, p2):
        with pytest.raises(QuadratureError):
            vf.check_remainder_convolution(p2, M=64)

    def test_deterministic(self, p3):
        a = vf.check_remainder_decay(p3, 2).to_dict()
        b = vf.check_remainder_decay(p3, 2).to_dict()
        a.pop("runtime_s"), b.pop("runtime_s")
        assert a == b

    def test_registry(self):
        assert set(vf.CHECKS) >= {"symbol-oracle", "remainder-decay", "mode-sum", "geometric-sum",
                                  "pointwise-mode-bound", "lq-summability", "w21q-ratio",
                                  "multiplier-derivatives", "solver-exactness", "representation"}
        with pytest.raises(KeyError):
            vf.run_check("nope")

    def test_symbol_oracle_small(self, p2):
        rep = vf.check_symbol_oracle(p2, 1, N_list=(64, 128))
        errs = rep.fits["rel_l2_error"]
        assert errs[1] < errs[0]
        assert rep.constants["residual_boundary_max"] < 1e-10
