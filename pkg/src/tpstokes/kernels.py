"""Pointwise kernels of the time-periodic Stokes fundamental solution.

All kernels here are radial tensors, ``K(x) = alpha(r) I + beta(r) xhat xhat^T``,
and are evaluated through their radial profiles.  Points are arrays whose
last axis has length ``n``; results carry two trailing ``(n, n)`` axes.

Conventions
-----------
* ``lam_k = i (2 pi / T) k`` and ``kappa_k = sqrt_upper(-lam_k)``, so that the
  Helmholtz kernel solves ``(-Delta + lam_k) Gamma_k = delta``.
* ``Psi`` is the Laplace kernel ``-log|x| / (2 pi)`` (n=2), ``|x|^(2-n) / ((n-2) w_n)``
  (n>=3), i.e. ``-Delta Psi = delta`` and its transform is ``1/|xi|^2``.
* With these, ``Psi * Gamma_k = (Psi - Gamma_k) / lam_k`` and the projected
  mode kernel is ``G_k = delta_ij Gamma_k + d_i d_j (Psi - Gamma_k) / lam_k``,
  whose transform is ``(I - xi xi^T/|xi|^2) / (|xi|^2 + lam_k)``.
* Time averages use the normalized measure ``(1/T) int_0^T``.

General-n formulas (not implemented, n is restricted to 2 and 3):
``Gamma_k = (i/4) (kappa / (2 pi r))^(n/2-1) H^(1)_(n/2-1)(kappa r)``,
``Psi = r^(2-n) / ((n-2) w_n)``.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError, QuadratureError, TruncationWarning
from .specfun import hankel1, hankel1_derivative, sqrt_upper

EPS_MIN = 1e-8
DEFAULT_K = 256
ADAPTIVE_FLOOR = 1e-13


@dataclass(frozen=True)
class Params:
    """Problem parameters: spatial dimension and time period."""

    n: int = 3
    T: float = 2 * math.pi

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ConfigError(f"dimension n must be 2 or 3, got {self.n}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"period T must be positive and finite, got {self.T}")

    @property
    def omega_n(self):
        """Surface area of the unit (n-1)-sphere."""
        return 2 * math.pi if self.n == 2 else 4 * math.pi

    @property
    def perf(self):
        """Angular frequency 2 pi / T."""
        return 2 * math.pi / self.T

    def lam(self, k):
        return 1j * self.perf * np.asarray(k, dtype=float)

    def kappa(self, k):
        k = np.asarray(k)
        if np.any(k == 0):
            raise DomainError("mode kernels are defined for k != 0 only")
        return sqrt_upper(-1j * self.perf * k.astype(float))

    def to_dict(self):
        return {"n": self.n, "T": self.T}


@dataclass(frozen=True)
class Mode:
    """A dual-group point (xi, k)."""

    xi: tuple
    k: int
    params: Params = field(default_factory=Params)

    @property
    def lambda_k(self):
        return 1j * self.params.perf * self.k


@dataclass
class KernelSample:
    """(n+1) x n value of a fundamental solution at one spacetime point.

    ``pressure`` is the spatial factor of the pressure row.  For the
    time-periodic kernel the time factor is a Dirac delta on the torus,
    which acts by per-slice spatial convolution and has no pointwise value.
    """

    velocity: np.ndarray
    pressure: np.ndarray
    pressure_time: str = "function"

    def pressure_at(self, t):
        if self.pressure_time == "dirac":
            raise TypeError("pressure carries a Dirac delta in time; it cannot be evaluated pointwise")
        return self.pressure

    @property
    def matrix(self):
        return np.concatenate([self.velocity, self.pressure[..., None, :]], axis=-2)


# ---------------------------------------------------------------------------
# geometry helpers

def _points(params, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n:
        raise DomainError(f"points must have last axis of length n={params.n}, got shape {x.shape}")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r < EPS_MIN):
        raise DomainError(f"kernel is singular at the origin (|x| < {EPS_MIN:g})")
    return x, r


def _radial_tensor(alpha, beta, xhat):
    """alpha I + beta xhat xhat^T, broadcasting alpha/beta over leading axes."""
    n = xhat.shape[-1]
    outer = xhat[..., :, None] * xhat[..., None, :]
    return alpha[..., None, None] * np.eye(n) + beta[..., None, None] * outer


def _hessian_parts(d1, d2, r):
    """Radial Hessian d_i d_j f = (f'/r) I + (f'' - f'/r) xhat xhat^T."""
    return d1 / r, d2 - d1 / r


# ---------------------------------------------------------------------------
# steady kernels

def _laplace_profile(params, r):
    """Psi, Psi', Psi'' as functions of r."""
    n, w = params.n, params.omega_n
    if n == 2:
        psi = -np.log(r) / (2 * np.pi)
    else:
        psi = r ** (2 - n) / ((n - 2) * w)
    d1 = -(r ** (1 - n)) / w
    d2 = (n - 1) * r ** (-n) / w
    return psi, d1, d2


def laplace_fund(params, x):
    """Laplace fundamental solution Psi(x)."""
    _, r = _points(params, x)
    return _laplace_profile(params, r)[0]


def laplace_hessian(params, x):
    """d_i d_j Psi(x), an (n, n) matrix per point."""
    x, r = _points(params, x)
    _, d1, d2 = _laplace_profile(params, r)
    a, b = _hessian_parts(d1, d2, r)
    return _radial_tensor(a, b, x / r[..., None])


def steady_stokeslet_velocity(params, x):
    """Velocity block of the steady Stokes fundamental solution."""
    x, r = _points(params, x)
    n, w = params.n, params.omega_n
    xhat = x / r[..., None]
    if n == 2:
        alpha = np.log(1.0 / r) / (2 * w)
        beta = np.full_like(r, 1.0 / (2 * w))
    else:
        alpha = r ** (2 - n) / ((n - 2) * 2 * w)
        beta = r ** (2 - n) / (2 * w)
    return _radial_tensor(alpha, beta, xhat)


def steady_stokeslet_pressure(params, x):
    """Pressure row x_i / (w_n |x|^n) of the steady Stokes fundamental solution."""
    x, r = _points(params, x)
    return x / (params.omega_n * r[..., None] ** params.n)


# ---------------------------------------------------------------------------
# Helmholtz mode kernels

def _series_n3(s, terms):
    """Stable evaluation of the n=3 differences for small |s| = |i kappa r|.

    Returns (1 + e^s (s - 1)) and (2 - e^s (2 - 2s + s^2)) up to sign, i.e.
    sum_{m>=2} (m-1) s^m / m!  and  sum_{m>=3} (m-1)(m-2) s^m / m!.
    """
    p1 = np.zeros_like(s)
    p2 = np.zeros_like(s)
    term = np.ones_like(s)
    for m in range(1, terms):
        term = term * s / m
        p1 = p1 + (m - 1) * term
        p2 = p2 + (m - 1) * (m - 2) * term
    return p1, p2


def helmholtz_profile(params, k, r):
    """g, g', g'' of Gamma_k along the radius (complex arrays broadcast over k and r)."""
    kap = params.kappa(k)
    z = kap * r
    if params.n == 3:
        e = np.exp(1j * z) / (4 * np.pi)
        g = e / r
        g1 = e * (1j * z - 1) / r**2
        g2 = e * (2 - 2j * z - z * z) / r**3
    else:
        h0 = hankel1(0, z)
        h1 = hankel1(1, z)
        g = 0.25j * h0
        g1 = -0.25j * kap * h1
        g2 = -0.25j * kap * kap * (h0 - h1 / z)
    return g, g1, g2


def _difference_profile(params, k, r):
    """(Psi' - g') and (Psi'' - g'') with the small-|kappa r| cancellation handled for n=3."""
    _, p1, p2 = _laplace_profile(params, r)
    _, g1, g2 = helmholtz_profile(params, k, r)
    d1 = p1 - g1
    d2 = p2 - g2
    if params.n == 3:
        s = 1j * params.kappa(k) * r
        small = np.abs(s) < 0.5
        if np.any(small):
            s_b, r_b = np.broadcast_arrays(s, r)
            a1, a2 = _series_n3(s_b[small], 24)
            d1 = np.array(np.broadcast_to(d1, s_b.shape))
            d2 = np.array(np.broadcast_to(d2, s_b.shape))
            rs = r_b[small]
            d1[small] = -a1 / (4 * np.pi * rs**2)
            d2[small] = -a2 / (4 * np.pi * rs**3)
    return d1, d2


def helmholtz_kernel(params, k, x, form=None):
    """Gamma_k(x), fundamental solution of (-Delta + i (2 pi/T) k).

    ``form`` selects ``"hankel"`` (generic Hankel expression) or ``"closed"``
    (exp(i kappa r)/(4 pi r), n=3 only).  Default: closed for n=3.
    """
    _, r = _points(params, x)
    if k == 0:
        raise DomainError("Gamma_k is defined for k != 0 only")
    if form is None:
        form = "closed" if params.n == 3 else "hankel"
    kap = params.kappa(k)
    if form == "closed":
        if params.n != 3:
            raise DomainError("closed exponential form exists for n=3 only")
        return np.exp(1j * kap * r) / (4 * np.pi * r)
    mu = params.n / 2 - 1
    return 0.25j * (kap / (2 * np.pi * r)) ** mu * hankel1(mu, kap * r)


def helmholtz_kernel_gradient(params, k, x):
    """d_j Gamma_k(x) via the Hankel derivative recurrence (both n)."""
    x, r = _points(params, x)
    kap = params.kappa(k)
    mu = params.n / 2 - 1
    z = kap * r
    c = 0.25j * (kap / (2 * np.pi)) ** mu
    # d/dr [r^-mu H_mu(kappa r)]
    dg = c * (-mu * r ** (-mu - 1) * hankel1(mu, z) + r ** (-mu) * kap * hankel1_derivative(mu, z))
    return dg[..., None] * x / r[..., None]


def helmholtz_symbol(params, xi, k):
    """1 / (|xi|^2 + i (2 pi/T) k)."""
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi * xi, axis=-1)
    k = np.asarray(k)
    if np.any((s == 0) & (k == 0)):
        raise DomainError("Helmholtz symbol is singular at (xi, k) = (0, 0)")
    return 1.0 / (s + 1j * params.perf * k)


def tp_multiplier(params, xi, k):
    """M(xi, k) = (1 - delta(k)) / (|xi|^2 + i (2 pi/T) k); exactly 0 on k = 0."""
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi * xi, axis=-1)
    k = np.asarray(k)
    s, kk = np.broadcast_arrays(s, k)
    out = np.zeros(s.shape, dtype=complex)
    nz = kk != 0
    out[nz] = 1.0 / (s[nz] + 1j * params.perf * kk[nz])
    return out if out.ndim else complex(out)


def projection_symbol(xi):
    """Helmholtz projection I - xi xi^T / |xi|^2."""
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi * xi, axis=-1)
    if np.any(s == 0):
        raise DomainError("projection symbol is undefined at xi = 0")
    n = xi.shape[-1]
    return np.eye(n) - xi[..., :, None] * xi[..., None, :] / s[..., None, None]


def _mode_profiles(params, k, r):
    """Radial coefficients of G_k split into a decaying part and the Laplace part.

    Returns (alpha_A, beta_A, alpha_P, beta_P) with
        G_k = (alpha_A I + beta_A xx) + (alpha_P I + beta_P xx),
    where the A-part is delta_ij Gamma_k - d_i d_j Gamma_k / lam_k (exponentially
    decaying in |k|^(1/2) r) and the P-part is d_i d_j Psi / lam_k.
    """
    lam = params.lam(k)
    g, g1, g2 = helmholtz_profile(params, k, r)
    _, p1, p2 = _laplace_profile(params, r)
    aA = g - (g1 / r) / lam
    bA = -(g2 - g1 / r) / lam
    aP = (p1 / r) / lam
    bP = (p2 - p1 / r) / lam
    return aA, bA, aP, bP


def mode_stokeslet(params, k, x):
    """Projected per-mode kernel G_k(x), complex (n, n) per point.

    G_k = delta_ij Gamma_k + d_i d_j (Psi - Gamma_k) / lam_k, whose spatial
    transform is P(xi) / (|xi|^2 + lam_k).
    """
    if k == 0:
        raise DomainError("G_k is defined for k != 0 only")
    x, r = _points(params, x)
    lam = params.lam(k)
    g = helmholtz_profile(params, k, r)[0]
    d1, d2 = _difference_profile(params, k, r)
    alpha = g + (d1 / r) / lam
    beta = (d2 - d1 / r) / lam
    return _radial_tensor(alpha, beta, x / r[..., None])


def psi_conv_helmholtz_hessian(params, k, x):
    """d_i d_j (Psi * Gamma_k)(x) = d_i d_j (Psi - Gamma_k)(x) / lam_k, closed form."""
    if k == 0:
        raise DomainError("defined for k != 0 only")
    x, r = _points(params, x)
    lam = params.lam(k)
    d1, d2 = _difference_profile(params, k, r)
    return _radial_tensor((d1 / r) / lam, (d2 - d1 / r) / lam, x / r[..., None])


# ---------------------------------------------------------------------------
# quadrature oracle

def _quad_complex(f, a, b, **kw):
    re, ea = integrate.quad(lambda s: f(s).real, a, b, **kw)
    im, eb = integrate.quad(lambda s: f(s).imag, a, b, **kw)
    return re + 1j * im, math.hypot(ea, eb)


def _conv_hessian_radial(params, k, r, tol):
    """Diagonal entries (transverse, longitudinal) of the convolution integral at x = r e."""
    kap = complex(params.kappa(k))
    n = params.n
    inner_kw = dict(epsabs=1e-15, epsrel=1e-12, limit=400)

    def gprime(rho):
        return complex(helmholtz_profile(params, k, np.array(rho))[1])

    if n == 3:
        # y = rho (sin th cos ph, sin th sin ph, cos th), x = r e3, u = cos th
        def inner_t(rho):
            f = lambda u: (1 - u * u) / (4 * (r * r + rho * rho - 2 * r * rho * u) ** 1.5)
            return integrate.quad(f, -1, 1, points=[1.0], **inner_kw)[0]

        def inner_l(rho):
            f = lambda u: -(r - rho * u) * u / (2 * (r * r + rho * rho - 2 * r * rho * u) ** 1.5)
            return integrate.quad(f, -1, 1, points=[1.0], **inner_kw)[0]

        ft = lambda rho: rho**3 * gprime(rho) * inner_t(rho)
        fl = lambda rho: rho**2 * gprime(rho) * inner_l(rho)
    else:
        # y = rho (cos ph, sin ph), x = r e1; integrate ph over [0, pi] and double
        def inner_t(rho):
            f = lambda p: rho * math.sin(p) ** 2 / (math.pi * (r * r + rho * rho - 2 * r * rho * math.cos(p)))
            return integrate.quad(f, 0, math.pi, **inner_kw)[0]

        def inner_l(rho):
            f = lambda p: -(r - rho * math.cos(p)) * math.cos(p) / (
                math.pi * (r * r + rho * rho - 2 * r * rho * math.cos(p)))
            return integrate.quad(f, 0, math.pi, **inner_kw)[0]

        ft = lambda rho: rho * gprime(rho) * inner_t(rho)
        fl = lambda rho: rho * gprime(rho) * inner_l(rho)

    rho_max = r + 40.0 / kap.imag
    out = []
    for f in (ft, fl):
        total, err = 0j, 0.0
        for a, b in ((0.0, r), (r, rho_max)):
            v, e = _quad_complex(f, a, b, epsabs=1e-14, epsrel=1e-10, limit=400)
            total += v
            err += e
        if err > tol * max(abs(total), 1e-300):
            raise QuadratureError(f"convolution quadrature error {err:.3g} exceeds tolerance")
        out.append(total)
    return out


def conv_second_derivative_oracle(params, k, x, i, j, tol=1e-6):
    """Quadrature of int d_i Psi(x - y) d_j Gamma_k(y) dy (slow oracle).

    Integrates in polar/spherical coordinates about the origin with the
    polar axis along x; the azimuthal integral is done exactly, which
    leaves the transverse and longitudinal entries of the (radial) tensor.
    """
    if k == 0:
        raise DomainError("defined for k != 0 only")
    x, r = _points(params, x)
    if x.ndim != 1:
        raise DomainError("oracle evaluates one point at a time")
    a, c = _conv_hessian_radial(params, k, float(r), tol)
    xhat = x / r
    return a * (i == j) + (c - a) * xhat[i] * xhat[j]


# ---------------------------------------------------------------------------
# remainder kernel and the full TP fundamental solution

def sawtooth(params, t):
    """sum_{k != 0} exp(i k w t) / (i k w) = T/2 - (t mod T), with value 0 at t = 0 mod T."""
    t = np.asarray(t, dtype=float)
    tau = np.mod(t, params.T)
    return np.where(tau == 0, 0.0, 0.5 * params.T - tau)


def estimate_mode_cutoff(params, r, floor=ADAPTIVE_FLOOR):
    """Mode index beyond which the decaying part falls below ``floor`` relative.

    Uses |A_k| ~ exp(-sqrt(pi |k| / T) r) with a safety factor for the
    algebraic prefactor.
    """
    rate = math.sqrt(math.pi / params.T) * np.asarray(r, dtype=float)
    need = (math.log(1.0 / floor) + 8.0) / rate
    return np.ceil(need**2).astype(int)


def _decaying_mode_sum(params, r, t, K, adaptive):
    """Sum over 0 < |k| <= K of the decaying radial coefficients times exp(i k w t).

    Returns (a, b, imag_residue, k_used, converged) with a, b of shape
    r.shape + t.shape.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    kk = np.arange(1, K + 1)
    aA, bA, aP, bP = _mode_profiles(params, kk[None, :], r.reshape(-1, 1))
    aAm, bAm, _, _ = _mode_profiles(params, -kk[None, :], r.reshape(-1, 1))

    norm = np.abs(aA) + np.abs(bA)
    lap = (np.abs(aP[:, :1]) + np.abs(bP[:, :1])) * params.perf * 0.5 * params.T
    acc = np.cumsum(2 * norm, axis=1) + lap
    ok = norm < ADAPTIVE_FLOOR * acc
    converged = ok.any(axis=1)
    k_used = np.where(converged, np.argmax(ok, axis=1) + 1, K)
    if adaptive:
        mask = kk[None, :] <= k_used[:, None]
        aA, bA = aA * mask, bA * mask
        aAm, bAm = aAm * mask, bAm * mask

    ph = np.exp(1j * params.perf * np.multiply.outer(kk, t.ravel()))
    a = aA @ ph + aAm @ np.conj(ph)
    b = bA @ ph + bAm @ np.conj(ph)
    scale = np.maximum(np.abs(a), np.abs(b)) + np.abs(aP[:, :1]) + np.abs(bP[:, :1])
    resid = np.max(np.maximum(np.abs(a.imag), np.abs(b.imag)) / scale) if a.size else 0.0
    shape = r.shape + t.shape
    return a.real.reshape(shape), b.real.reshape(shape), float(resid), k_used.reshape(r.shape), converged


def remainder_profile(params, r, t, K=DEFAULT_K, adaptive=True, tail="exact", check_real=True):
    """Radial coefficients (a, b) of the remainder kernel: a I + b xhat xhat^T.

    ``tail="exact"`` sums the slowly decaying Laplace part of every mode in
    closed form (a sawtooth in t); ``tail="truncate"`` keeps only modes
    |k| <= K for that part too.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if K < 1:
        raise ConfigError("truncation K must be >= 1")
    a, b, resid, k_used, converged = _decaying_mode_sum(params, r, t, K, adaptive)
    if check_real and resid > 1e-12:
        raise ArithmeticError(f"conjugate-mode pairing left imaginary residue {resid:.3g}")
    if adaptive and not np.all(converged):
        warnings.warn(f"mode sum not converged to {ADAPTIVE_FLOOR:g} within K={K} "
                      f"at radius {float(np.min(r.ravel()[~converged])):.4g}", TruncationWarning, stacklevel=3)
    _, p1, p2 = _laplace_profile(params, r)
    pa, pb = p1 / r, p2 - p1 / r
    if tail == "exact":
        s = sawtooth(params, t)
    elif tail == "truncate":
        kk = np.arange(1, K + 1)
        s = np.sum(2 * np.sin(params.perf * np.multiply.outer(t, kk)) / (params.perf * kk), axis=-1)
    else:
        raise ConfigError(f"unknown tail mode {tail!r}")
    a = a + np.multiply.outer(pa, s)
    b = b + np.multiply.outer(pb, s)
    return a, b


def remainder_kernel(params, x, t, K=DEFAULT_K, adaptive=True, tail="exact"):
    """Remainder kernel Gamma_perp(x, t) = sum_{k != 0} G_k(x) exp(i (2 pi/T) k t).

    ``x`` has shape (..., n); ``t`` is a scalar or 1-D array.  The result has
    shape x.shape[:-1] + t.shape + (n, n) and is real; the imaginary residue
    of the +-k pairing is checked on every call.
    """
    x, r = _points(params, x)
    t = np.asarray(t, dtype=float)
    a, b = remainder_profile(params, r, t, K, adaptive, tail)
    xhat = (x / r[..., None]).reshape(r.shape + (1,) * t.ndim + (params.n,))
    return _radial_tensor(a, b, xhat)


def remainder_profile_uniform(params, r, M, K=None, offset=0.5):
    """Remainder coefficients on the uniform grid t_j = (j + offset) T / M via FFT.

    Cheap path for many time samples; requires M >= 2K + 1.  ``K`` defaults
    to the adaptive cutoff for the smallest radius.  Returns (a, b, t) with
    a, b of shape (len(r), M).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if K is None:
        K = int(estimate_mode_cutoff(params, np.min(r)))
    if M < 2 * K + 1:
        raise ConfigError(f"need M >= 2K+1 time samples (M={M}, K={K})")
    kk = np.arange(1, K + 1)
    aA, bA, _, _ = _mode_profiles(params, kk[None, :], r[:, None])
    aAm, bAm, _, _ = _mode_profiles(params, -kk[None, :], r[:, None])
    t = (np.arange(M) + offset) * params.T / M
    out = []
    for cp, cm in ((aA, aAm), (bA, bAm)):
        spec = np.zeros((r.size, M), dtype=complex)
        shift = np.exp(2j * np.pi * kk * offset / M)
        spec[:, kk] = cp * shift
        spec[:, M - kk] = cm * np.conj(shift)
        out.append(np.fft.ifft(spec, axis=1, norm="forward").real)
    _, p1, p2 = _laplace_profile(params, r)
    s = sawtooth(params, t)
    a = out[0] + np.multiply.outer(p1 / r, s)
    b = out[1] + np.multiply.outer(p2 - p1 / r, s)
    return a, b, t


def tp_fundamental_solution(params, x, t, K=DEFAULT_K):
    """Full time-periodic fundamental solution at (x, t).

    Velocity: steady Stokeslet plus remainder kernel.  Pressure: the steady
    Stokeslet pressure row, acting through a Dirac delta in time.
    """
    vel = steady_stokeslet_velocity(params, x)
    rem = remainder_kernel(params, x, t, K)
    t = np.asarray(t)
    vel = np.expand_dims(vel, tuple(range(vel.ndim - 2, vel.ndim - 2 + t.ndim))) + rem
    return KernelSample(velocity=vel, pressure=steady_stokeslet_pressure(params, x), pressure_time="dirac")
