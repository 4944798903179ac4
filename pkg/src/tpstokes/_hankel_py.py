"""Pure numpy implementation of H0^(1) and H1^(1) on the closed upper half-plane.

This is the fallback for the compiled ``_hankel_ext`` module; both must agree
to rounding.  Callers validate arguments (z != 0, Im z >= 0, finite).

Three regimes, all evaluated in the right half-plane (Re z >= 0); the left
half is reached through H_nu(-conj(w)) = -exp(-i nu pi) conj(H_nu(w)):

* ``|z| < SERIES_RADIUS``: ascending series for J and Y.
* ``SERIES_RADIUS <= |z| < ASYMPTOTIC_RADIUS``: the Laplace-type integral
  for K_nu(-iz), i.e. the Hankel expansion in convergent form, summed with
  the trapezoidal rule in u = sqrt(s).
* ``|z| >= ASYMPTOTIC_RADIUS``: the Hankel asymptotic expansion.
"""

import math

import numpy as np

SERIES_RADIUS = 1.5
ASYMPTOTIC_RADIUS = 20.0

EULER_GAMMA = 0.57721566490153286061
SERIES_TERMS = 30
ASYMPTOTIC_TERMS = 30

# trapezoid nodes on u >= 0 for  int_R exp(-u^2) |u|^(2nu) (1 + u^2/(2w))^(nu-1/2) du
QUAD_STEP = 0.1
QUAD_NODES = np.arange(0, 66) * QUAD_STEP
QUAD_WEIGHTS = np.full(QUAD_NODES.shape, 2.0 * QUAD_STEP)
QUAD_WEIGHTS[0] = QUAD_STEP
_QG = QUAD_WEIGHTS * np.exp(-QUAD_NODES ** 2)


def _harmonic(m):
    return sum(1.0 / j for j in range(1, m + 1))


# series coefficients, shared with the compiled path
_J0C = np.array([(-1.0) ** m / math.factorial(m) ** 2 for m in range(SERIES_TERMS)])
_Y0C = np.array([0.0] + [(-1.0) ** (m + 1) * _harmonic(m) / math.factorial(m) ** 2
                         for m in range(1, SERIES_TERMS)])
_J1C = np.array([(-1.0) ** m / (math.factorial(m) * math.factorial(m + 1))
                 for m in range(SERIES_TERMS)])
_Y1C = np.array([(-1.0) ** m * (2.0 * _harmonic(m) + 1.0 / (m + 1) - 2.0 * EULER_GAMMA)
                 / (math.factorial(m) * math.factorial(m + 1)) for m in range(SERIES_TERMS)])


def _asymptotic_coefficients(nu):
    mu = 4.0 * nu * nu
    out = [1.0]
    for k in range(1, ASYMPTOTIC_TERMS):
        out.append(out[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return np.array(out)


_A0 = _asymptotic_coefficients(0.0)
_A1 = _asymptotic_coefficients(1.0)


def _horner(coeffs, x):
    acc = np.zeros_like(x)
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _series(z):
    q = 0.25 * z * z
    j0 = _horner(_J0C, q)
    s0 = _horner(_Y0C, q)
    j1 = 0.5 * z * _horner(_J1C, q)
    s1 = _horner(_Y1C, q)
    lg = np.log(0.5 * z)
    y0 = (2.0 / np.pi) * ((lg + EULER_GAMMA) * j0 + s0)
    y1 = (2.0 / np.pi) * lg * j1 - 2.0 / (np.pi * z) - (0.5 / np.pi) * z * s1
    return j0 + 1j * y0, j1 + 1j * y1


def _laplace(z):
    w = -1j * z
    u2 = (QUAD_NODES ** 2)[None, :]
    base = 1.0 + u2 / (2.0 * w[:, None])
    g = _QG[None, :]
    i0 = np.sum(g / np.sqrt(base), axis=1)
    i1 = np.sum(g * u2 * np.sqrt(base), axis=1)
    pref = (2.0 / (np.pi * 1j)) * np.sqrt(np.pi / (2.0 * w)) * np.exp(1j * z)
    h0 = pref * i0 / math.sqrt(math.pi)
    # exp(-i pi/2) = -i ; Gamma(3/2) = sqrt(pi)/2
    h1 = -1j * pref * i1 / (0.5 * math.sqrt(math.pi))
    return h0, h1


def _asymptotic(z):
    x = 1j / z
    s0 = _horner(_A0, x)
    s1 = _horner(_A1, x)
    pref = np.sqrt(2.0 / (np.pi * z))
    h0 = pref * np.exp(1j * (z - 0.25 * np.pi)) * s0
    h1 = pref * np.exp(1j * (z - 0.75 * np.pi)) * s1
    return h0, h1


def hankel01(z):
    """Return (H0^(1)(z), H1^(1)(z)) for a complex array ``z``."""
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    z = z.ravel()
    left = z.real < 0
    w = np.where(left, -np.conj(z), z)
    a = np.abs(w)
    h0 = np.empty_like(w)
    h1 = np.empty_like(w)
    for mask, fn in ((a < SERIES_RADIUS, _series),
                     ((a >= SERIES_RADIUS) & (a < ASYMPTOTIC_RADIUS), _laplace),
                     (a >= ASYMPTOTIC_RADIUS, _asymptotic)):
        if mask.any():
            h0[mask], h1[mask] = fn(w[mask])
    h0 = np.where(left, -np.conj(h0), h0)
    h1 = np.where(left, np.conj(h1), h1)
    return h0.reshape(shape), h1.reshape(shape)
