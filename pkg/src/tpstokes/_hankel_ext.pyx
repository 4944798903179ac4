# cython: language_level=3, cpow=True, boundscheck=False, wraparound=False, cdivision=True
"""Compiled H0^(1), H1^(1) kernel; mirrors ``_hankel_py`` element by element."""

import numpy as np
cimport numpy as cnp

from tpstokes import _hankel_py as _ref

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double complex csqrt(double complex)
    double complex conj(double complex)
    double cabs(double complex)
    double creal(double complex)

cdef extern from "math.h" nogil:
    double sqrt(double)

cdef double PI = 3.14159265358979323846
cdef double EG = _ref.EULER_GAMMA
cdef double R_SER = _ref.SERIES_RADIUS
cdef double R_ASY = _ref.ASYMPTOTIC_RADIUS

DEF NSER = 30
DEF NASY = 30
DEF NQ = 66

cdef double J0C[NSER]
cdef double Y0C[NSER]
cdef double J1C[NSER]
cdef double Y1C[NSER]
cdef double A0[NASY]
cdef double A1[NASY]
cdef double QN[NQ]
cdef double QG[NQ]


cdef void _fill(double* dst, src, Py_ssize_t count):
    cdef Py_ssize_t k
    if len(src) != count:
        raise ValueError("coefficient table length mismatch with the numpy backend")
    for k in range(count):
        dst[k] = src[k]


_fill(J0C, _ref._J0C, NSER)
_fill(Y0C, _ref._Y0C, NSER)
_fill(J1C, _ref._J1C, NSER)
_fill(Y1C, _ref._Y1C, NSER)
_fill(A0, _ref._A0, NASY)
_fill(A1, _ref._A1, NASY)
_fill(QN, _ref.QUAD_NODES, NQ)
_fill(QG, _ref._QG, NQ)


cdef inline double complex horner(const double* c, Py_ssize_t count, double complex x) noexcept nogil:
    cdef Py_ssize_t k
    cdef double complex acc = 0
    for k in range(count - 1, -1, -1):
        acc = acc * x + c[k]
    return acc


cdef void series(double complex z, double complex* h0, double complex* h1) noexcept nogil:
    cdef double complex q = 0.25 * z * z
    cdef double complex j0 = horner(J0C, NSER, q)
    cdef double complex s0 = horner(Y0C, NSER, q)
    cdef double complex j1 = 0.5 * z * horner(J1C, NSER, q)
    cdef double complex s1 = horner(Y1C, NSER, q)
    cdef double complex lg = clog(0.5 * z)
    cdef double complex y0 = (2.0 / PI) * ((lg + EG) * j0 + s0)
    cdef double complex y1 = (2.0 / PI) * lg * j1 - 2.0 / (PI * z) - (0.5 / PI) * z * s1
    h0[0] = j0 + 1j * y0
    h1[0] = j1 + 1j * y1


cdef void laplace(double complex z, double complex* h0, double complex* h1) noexcept nogil:
    cdef double complex w = -1j * z
    cdef double complex i0 = 0, i1 = 0, base, sb
    cdef double u2, g
    cdef Py_ssize_t k
    for k in range(NQ):
        u2 = QN[k] * QN[k]
        g = QG[k]
        base = 1.0 + u2 / (2.0 * w)
        sb = csqrt(base)
        i0 = i0 + g / sb
        i1 = i1 + g * u2 * sb
    cdef double complex pref = (2.0 / (PI * 1j)) * csqrt(PI / (2.0 * w)) * cexp(1j * z)
    h0[0] = pref * i0 / sqrt(PI)
    h1[0] = -1j * pref * i1 / (0.5 * sqrt(PI))


cdef void asymptotic(double complex z, double complex* h0, double complex* h1) noexcept nogil:
    cdef double complex x = 1j / z
    cdef double complex pref = csqrt(2.0 / (PI * z))
    h0[0] = pref * cexp(1j * (z - 0.25 * PI)) * horner(A0, NASY, x)
    h1[0] = pref * cexp(1j * (z - 0.75 * PI)) * horner(A1, NASY, x)


def hankel01(z):
    """Return (H0^(1)(z), H1^(1)(z)) for a complex array ``z``."""
    arr = np.asarray(z, dtype=np.complex128)
    shape = arr.shape
    cdef double complex[::1] zz = np.ascontiguousarray(arr.ravel())
    cdef Py_ssize_t n = zz.shape[0], i
    out0 = np.empty(n, dtype=np.complex128)
    out1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o0 = out0
    cdef double complex[::1] o1 = out1
    cdef double complex w, a, b
    cdef double r
    cdef bint left
    with nogil:
        for i in range(n):
            w = zz[i]
            left = creal(w) < 0
            if left:
                w = -conj(w)
            r = cabs(w)
            if r < R_SER:
                series(w, &a, &b)
            elif r < R_ASY:
                laplace(w, &a, &b)
            else:
                asymptotic(w, &a, &b)
            if left:
                a = -conj(a)
                b = conj(b)
            o0[i] = a
            o1[i] = b
    return out0.reshape(shape), out1.reshape(shape)
