"""Complex-argument Hankel functions of the first kind and the upper square root.

Only integer and half-integer orders with ``|nu| <= MAX_ORDER`` are
supported.  Orders 0 and 1 come from the backend kernel (compiled or numpy),
half-integer orders from their elementary closed forms, and every other
supported order from the three-term recurrence.  Arguments must lie in the
closed upper half-plane, which is all the mode kernels ever need.
"""

import time
from fractions import Fraction

import numpy as np

from . import _backend
from .errors import ConvergenceError, DomainError
from .report import VerificationReport

MAX_ORDER = 4

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def sqrt_upper(z):
    """Square root with strictly positive imaginary part.

    Defined for every complex ``z`` off the closed positive real axis; raises
    :class:`DomainError` for ``z == 0`` and ``z > 0``.  Works elementwise on
    arrays.
    """
    arr = np.asarray(z, dtype=np.complex128)
    bad = (arr.imag == 0) & (arr.real >= 0)
    if np.any(bad):
        raise DomainError("sqrt_upper is undefined on [0, inf): no root with Im > 0")
    if not np.all(np.isfinite(arr)):
        raise DomainError("sqrt_upper needs a finite argument")
    w = np.sqrt(arr)
    # principal root has Im w < 0 for Im z < 0 (and for -x - 0j)
    w = np.where(w.imag < 0, -w, w)
    return complex(w) if w.ndim == 0 else w


def _order(nu):
    f = Fraction(nu).limit_denominator(4)
    if abs(float(f) - float(nu)) > 1e-12 or f.denominator not in (1, 2):
        raise DomainError(f"unsupported Hankel order {nu!r}: only integer and half-integer orders")
    if abs(f) > MAX_ORDER:
        raise DomainError(f"unsupported Hankel order {nu!r}: |nu| must be <= {MAX_ORDER}")
    return f


def _check_argument(z):
    if not np.all(np.isfinite(z)):
        raise DomainError("Hankel argument must be finite")
    if np.any(z == 0):
        raise DomainError("H^(1)_nu is singular at z = 0")
    if np.any(z.imag < 0):
        raise DomainError("Hankel argument must satisfy Im z >= 0")


def _integer_orders(m, z):
    h0, h1 = _backend.hankel01(z)
    k = abs(m)
    if k == 0:
        return h0
    prev, cur = h0, h1
    for j in range(1, k):
        prev, cur = cur, (2.0 * j / z) * cur - prev
    return cur if m > 0 or k % 2 == 0 else -cur


def _half_orders(f, z):
    e = _SQRT_2_OVER_PI * np.exp(1j * z) / np.sqrt(z)
    lo, hi = e, -1j * e  # orders -1/2 and +1/2
    if f == Fraction(-1, 2):
        return lo
    if f == Fraction(1, 2):
        return hi
    if f > 0:
        nu = Fraction(1, 2)
        while nu < f:
            lo, hi = hi, (2.0 * float(nu) / z) * hi - lo
            nu += 1
        return hi
    nu = Fraction(-1, 2)
    while nu > f:
        lo, hi = (2.0 * float(nu) / z) * lo - hi, lo
        nu -= 1
    return lo


def hankel1(nu, z):
    """H^(1)_nu(z) for a supported order and Im z >= 0 (scalar or array)."""
    f = _order(nu)
    arr = np.asarray(z, dtype=np.complex128)
    _check_argument(arr)
    if f.denominator == 1:
        out = _integer_orders(int(f), arr)
    else:
        out = _half_orders(f, arr)
    if not np.all(np.isfinite(out)):
        raise ConvergenceError(f"H^(1)_{nu} evaluation overflowed for some arguments")
    return complex(out) if out.ndim == 0 else out


def hankel1_derivative(nu, z):
    """d/dz H^(1)_nu(z) = H^(1)_{nu-1}(z) - (nu/z) H^(1)_nu(z)."""
    f = _order(nu)
    _order(f - 1)
    arr = np.asarray(z, dtype=np.complex128)
    out = hankel1(f - 1, arr) - (float(f) / arr) * hankel1(f, arr)
    return complex(out) if np.ndim(out) == 0 else out


def _bound_samples(region, count, offset=0.0):
    """Sample points for the Hankel bound check; ``offset`` shifts the radial lattice."""
    lo, hi = region["radii"]
    t = (np.arange(count) + 0.5 + offset) / count
    radii = np.exp(np.log(lo) + t * (np.log(hi) - np.log(lo)))
    radii = np.concatenate([[lo], radii, [hi]])
    angles = np.asarray(region["angles"], dtype=float)
    return (radii[:, None] * np.exp(1j * angles[None, :])).ravel()


DEFAULT_BOUND_SAMPLES = {
    "large": {"radii": (1.0, 30.0), "angles": (np.pi / 4, 3 * np.pi / 4), "count": 200},
    "small": {"radii": (1e-6, 0.5), "angles": (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi),
              "count": 200},
}


def _bound_constants(nu, samples, refine):
    f = abs(float(_order(nu)))
    zl = _bound_samples(samples["large"], samples["large"]["count"] * refine, 0.25 * (refine - 1))
    zs = _bound_samples(samples["small"], samples["small"]["count"] * refine, 0.25 * (refine - 1))
    hl = np.abs(hankel1(nu, zl))
    hs = np.abs(hankel1(nu, zs))
    c_large = np.max(hl * np.sqrt(np.abs(zl)) * np.exp(zl.imag))
    if f == 0:
        c_small = np.max(hs / np.abs(np.log(np.abs(zs))))
    else:
        c_small = np.max(hs * np.abs(zs) ** f)
    return float(c_large), float(c_small)


def check_hankel_bounds(nu, sample_set=None, drift_tol=0.10):
    """Fit the constants of the large- and small-argument Hankel bounds.

    Large |z|:  |H| <= C |z|^(-1/2) exp(-Im z).
    Small |z|:  |H| <= C |z|^(-|nu|)   (nu != 0),   |H| <= C |log|z||   (nu = 0).

    Each constant is the sup of the corresponding ratio over the sample set;
    the check passes when doubling the sample density moves no constant by
    more than ``drift_tol`` (relative).
    """
    start = time.perf_counter()
    samples = sample_set or DEFAULT_BOUND_SAMPLES
    c1 = _bound_constants(nu, samples, 1)
    c2 = _bound_constants(nu, samples, 2)
    rep = VerificationReport(
        check="hankel-bounds",
        params={"nu": float(nu)},
        samples={k: {"radii": list(v["radii"]), "angles": list(v["angles"]), "count": v["count"]}
                 for k, v in samples.items()},
        constants={"large": c1[0], "small": c1[1], "large_refined": c2[0], "small_refined": c2[1]},
    )
    for name, a, b in (("large", c1[0], c2[0]), ("small", c1[1], c2[1])):
        rep.require(f"{name}-|z| constant finite", a, "<", 1e300)
        rep.require(f"{name}-|z| constant drift under refinement", abs(b - a) / a, "<", drift_tol)
    rep.runtime_s = time.perf_counter() - start
    return rep
