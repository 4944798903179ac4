"""Discrete R^n x T: grids, transforms, the multiplier solver and kernel convolution.

Conventions
-----------
* Space: the box [-L, L)^n with nodes x_j = -L + j h, h = 2L/N, so the origin
  sits at index N/2 on every axis.  Spatial frequencies are xi = (pi/L) m
  for m in [-N/2, N/2).
* Time: t_j = j T / Nt with Nt odd, time modes k in [-(Nt-1)/2, (Nt-1)/2].
* Field arrays have shape (ncomp, Nt, N, ..., N): component, time, space.
* Forward transform: spatial DFT about the origin, unitary (norm="ortho"),
  and the normalized time average ``(1/Nt) sum_j f(t_j) exp(-i w k t_j)``.
  The time coefficients are therefore the Fourier coefficients with respect
  to the normalized Haar measure: ``exp(i w t)`` has coefficient exactly 1.
  Parseval reads  ``sum |f|^2 / Nt = sum |f_hat|^2``.
* Odd-order derivative symbols zero the spatial Nyquist frequency so that
  real fields stay real; the Laplacian uses the full |xi|^2.
"""

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityError, ConfigError, ShapeError
from .kernels import Params

MAGIC = b"TPSG"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sI5d")

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class GridSpec:
    """Periodic box [-L, L)^n with N points per axis and Nt samples per period."""

    L: float
    N: int
    Nt: int
    params: Params

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigError(f"box half-length L must be positive, got {self.L}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ConfigError(f"N must be a power of two >= 8, got {self.N}")
        if self.Nt < 3 or self.Nt % 2 == 0:
            raise ConfigError(f"Nt must be odd and >= 3, got {self.Nt}")

    @property
    def n(self):
        return self.params.n

    @property
    def h(self):
        return 2 * self.L / self.N

    @property
    def K(self):
        return (self.Nt - 1) // 2

    @property
    def space_shape(self):
        return (self.N,) * self.n

    def shape(self, ncomp):
        return (ncomp, self.Nt) + self.space_shape

    @property
    def x1(self):
        return -self.L + self.h * np.arange(self.N)

    @property
    def t(self):
        return self.params.T * np.arange(self.Nt) / self.Nt

    @property
    def xi1(self):
        """Spatial frequencies along one axis in FFT order."""
        return (np.pi / self.L) * np.fft.fftfreq(self.N, 1.0 / self.N)

    @property
    def xi1_odd(self):
        """Frequencies for odd-order derivatives: Nyquist set to zero."""
        xi = self.xi1.copy()
        xi[self.N // 2] = 0.0
        return xi

    @property
    def k(self):
        return np.rint(np.fft.fftfreq(self.Nt, 1.0 / self.Nt)).astype(int)

    def coords(self):
        """Broadcastable coordinate arrays (x_1, ..., x_n) of shape (N,)*n."""
        return [self._axis(self.x1, d) for d in range(self.n)]

    def xi(self, odd=False):
        base = self.xi1_odd if odd else self.xi1
        return [self._axis(base, d) for d in range(self.n)]

    def xi_squared(self):
        return sum(x * x for x in self.xi())

    def kt(self):
        """Time-mode indices shaped to broadcast against (Nt, N, ..., N)."""
        return self.k.reshape((-1,) + (1,) * self.n)

    def _axis(self, v, d):
        shape = [1] * self.n
        shape[d] = -1
        return v.reshape(shape)

    def xi_index(self, m):
        """Array index of the spatial frequency (pi/L) m along one axis."""
        if not -self.N // 2 <= m < self.N // 2:
            raise ConfigError(f"frequency index {m} outside [-N/2, N/2)")
        return m % self.N

    def k_index(self, k):
        if abs(k) > self.K:
            raise ConfigError(f"time mode {k} outside [-{self.K}, {self.K}]")
        return k % self.Nt

    def to_dict(self):
        return {"L": self.L, "N": self.N, "Nt": self.Nt, "n": self.n, "T": self.params.T}


def make_grid(L, N, Nt, params=None):
    """Build and validate a :class:`GridSpec`."""
    return GridSpec(float(L), int(N), int(Nt), params or Params())


@dataclass
class GridField:
    """Values of shape (ncomp, Nt, N, ..., N) with a representation tag."""

    grid: GridSpec
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != self.grid.n + 2 or v.shape[1:] != self.grid.shape(1)[1:]:
            raise ShapeError(f"field shape {v.shape} does not match grid {self.grid.shape('c')}")
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ShapeError(f"unknown representation {self.representation!r}")
        self.values = v

    @property
    def ncomp(self):
        return self.values.shape[0]

    def norm(self):
        """Discrete L^2(box x T) norm with measure h^n dt/T."""
        if self.representation == PHYSICAL:
            return math.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.h**self.grid.n / self.grid.Nt)
        return math.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.h**self.grid.n)


def _space_axes(grid):
    return tuple(range(2, 2 + grid.n))


def transform_forward(field):
    """Physical -> spectral (see module docstring for the normalization)."""
    if field.representation != PHYSICAL:
        raise ShapeError("forward transform expects a physical field")
    ax = _space_axes(field.grid)
    v = np.fft.ifftshift(field.values, axes=ax)
    v = np.fft.fftn(v, axes=ax, norm="ortho")
    v = np.fft.fft(v, axis=1, norm="forward")
    return GridField(field.grid, v, SPECTRAL)


def transform_inverse(field, real=None, scale=None):
    """Spectral -> physical.

    ``real=True`` drops the imaginary residue after checking it is at most
    1e-12 relative to ``max(scale, max |result|)``; pass ``scale`` when the
    result may legitimately vanish.
    """
    if field.representation != SPECTRAL:
        raise ShapeError("inverse transform expects a spectral field")
    ax = _space_axes(field.grid)
    v = np.fft.ifft(field.values, axis=1, norm="forward")
    v = np.fft.ifftn(v, axes=ax, norm="ortho")
    v = np.fft.fftshift(v, axes=ax)
    if real:
        ref = max(np.max(np.abs(v)), scale or 0.0, 1e-300)
        resid = np.max(np.abs(v.imag)) / ref
        if resid > 1e-12:
            raise ArithmeticError(f"inverse transform left imaginary residue {resid:.3g}")
        v = v.real
    return GridField(field.grid, v, PHYSICAL)


def _physical(grid, f, ncomp=None):
    if isinstance(f, GridField):
        if f.grid != grid:
            raise ShapeError("field lives on a different grid")
        if f.representation != PHYSICAL:
            raise ShapeError("expected a physical field")
        f = f.values
    f = np.asarray(f)
    if f.shape[1:] != grid.shape(1)[1:] or (ncomp is not None and f.shape[0] != ncomp):
        raise ShapeError(f"field shape {f.shape} does not match grid {grid.shape(ncomp or 'c')}")
    return GridField(grid, f, PHYSICAL)


def _projected(grid, fh):
    """P(xi_odd) f_hat; identity where the odd-derivative frequency vanishes."""
    xe = grid.xi(odd=True)
    s = sum(x * x for x in xe)
    safe = np.where(s > 0, s, 1.0)
    dot = sum(xe[i] * fh[i] for i in range(grid.n))
    coef = np.where(s > 0, dot / safe, 0.0)
    return np.stack([fh[i] - xe[i] * coef for i in range(grid.n)]), dot, s


def _pressure_hat(grid, dot, s):
    return np.where(s > 0, -1j * dot / np.where(s > 0, s, 1.0), 0.0)


def _check_compatible(grid, fh):
    mean = np.abs(fh[(slice(None), 0) + (0,) * grid.n])
    total = math.sqrt(np.sum(np.abs(fh) ** 2))
    if np.max(mean) > 1e-12 * total:
        raise CompatibilityError(
            f"forcing has a nonzero space-time mean ({np.max(mean):.3g}); "
            "the (xi, k) = (0, 0) mode has no solution")


def solve_tp_stokes(grid, f):
    """Solve  d_t u - Delta u + grad p = f,  div u = 0  on the grid.

    Per mode: u_hat = P f_hat / (|xi|^2 + i w k) for xi != 0 (k = 0 is the
    steady Stokes solve), u_hat = f_hat / (i w k) for xi = 0, k != 0, and
    u_hat = 0 at (0, 0), which requires f_hat(0, 0) = 0.  The pressure is
    p_hat = -i xi . f_hat / |xi|^2 with p_hat = 0 where xi = 0.
    """
    f = _physical(grid, f, grid.n)
    fh = transform_forward(f).values
    _check_compatible(grid, fh)
    pf, dot, s_odd = _projected(grid, fh)
    den = grid.xi_squared()[None] + 1j * grid.params.perf * grid.kt()
    den = np.where(den == 0, 1.0, den)
    uh = pf / den[None]
    uh[(slice(None), 0) + (0,) * grid.n] = 0.0
    ph = _pressure_hat(grid, dot, s_odd)[None]
    ref = float(np.max(np.abs(f.values)))
    u = transform_inverse(GridField(grid, uh, SPECTRAL), real=True, scale=ref)
    p = transform_inverse(GridField(grid, ph, SPECTRAL), real=True, scale=ref)
    return u, p


def apply_tp_stokes_operator(grid, u, p):
    """Spectral application of  d_t u - Delta u + grad p."""
    u = _physical(grid, u, grid.n)
    p = _physical(grid, p, 1)
    uh = transform_forward(u).values
    ph = transform_forward(p).values[0]
    sym = 1j * grid.params.perf * grid.kt() + grid.xi_squared()[None]
    xe = grid.xi(odd=True)
    fh = np.stack([sym * uh[i] + 1j * xe[i][None] * ph for i in range(grid.n)])
    ref = max(float(np.max(np.abs(u.values))), float(np.max(np.abs(p.values))))
    return transform_inverse(GridField(grid, fh, SPECTRAL), real=True, scale=ref)


def divergence(grid, u):
    """Spectral divergence of a vector field (Nyquist-free)."""
    uh = transform_forward(_physical(grid, u, grid.n)).values
    xe = grid.xi(odd=True)
    dh = sum(1j * xe[i][None] * uh[i] for i in range(grid.n))[None]
    ref = float(np.max(np.abs(u.values))) if isinstance(u, GridField) else float(np.max(np.abs(u)))
    return transform_inverse(GridField(grid, dh, SPECTRAL), real=True, scale=ref)


def gradient_norm(grid, u):
    """Discrete L^2 norm of the full spatial gradient of u."""
    uh = transform_forward(_physical(grid, u)).values
    xe = grid.xi(odd=True)
    total = sum(np.sum(np.abs(x[None, None] * uh) ** 2) for x in xe)
    return math.sqrt(total * grid.h**grid.n)


def convolve_remainder(grid, f, K=None):
    """Convolution with the remainder kernel: u2_hat = M(xi, k) P f_hat for k != 0.

    ``K`` optionally truncates to time modes |k| <= K.  The zero spatial
    mode uses the same convention as :func:`solve_tp_stokes` (P = I).
    """
    f = _physical(grid, f, grid.n)
    fh = transform_forward(f).values
    pf, _, _ = _projected(grid, fh)
    kt = grid.kt()
    den = grid.xi_squared()[None] + 1j * grid.params.perf * kt
    keep = kt != 0
    if K is not None:
        keep = keep & (np.abs(kt) <= K)
    mult = np.where(keep, 1.0 / np.where(keep, den, 1.0), 0.0)
    ref = float(np.max(np.abs(f.values)))
    return transform_inverse(GridField(grid, mult[None] * pf, SPECTRAL), real=True, scale=ref)


def time_average(grid, f):
    f = _physical(grid, f)
    return GridField(grid, np.broadcast_to(f.values.mean(axis=1, keepdims=True), f.values.shape).copy())


def solve_by_representation(grid, f, K=None):
    """u = u1 + u2 with u1 the steady Stokeslet acting on the time average of f
    and u2 the remainder-kernel convolution; p per time slice with the
    Stokeslet pressure symbol -i xi / |xi|^2.
    """
    f = _physical(grid, f, grid.n)
    fh = transform_forward(f).values
    _check_compatible(grid, fh)
    fbar = np.zeros_like(fh)
    fbar[:, 0] = fh[:, 0]
    pbar, _, _ = _projected(grid, fbar)
    s = grid.xi_squared()[None]
    u1h = np.where(s > 0, pbar / np.where(s > 0, s, 1.0)[None], 0.0)
    ref = float(np.max(np.abs(f.values)))
    u1 = transform_inverse(GridField(grid, u1h, SPECTRAL), real=True, scale=ref)
    u2 = convolve_remainder(grid, f, K)
    _, dot, s_odd = _projected(grid, fh)
    p = transform_inverse(GridField(grid, _pressure_hat(grid, dot, s_odd)[None], SPECTRAL), real=True, scale=ref)
    return GridField(grid, u1.values + u2.values), p


# ---------------------------------------------------------------------------
# built-in forcings

def manufactured_mode(grid, m=None, k=1, amplitude=None):
    """Real single-mode forcing Re[a exp(i(xi0.x + w k t))] with a . xi0 = 0.

    Returns (f, u_exact) as physical fields; ``u_exact`` is the closed-form
    solution, and the pressure vanishes.
    """
    n = grid.n
    m = np.array(m if m is not None else [1, 2, 0][:n])
    xi0 = (np.pi / grid.L) * m
    if amplitude is None:
        a = np.zeros(n)
        a[0], a[1] = -xi0[1], xi0[0]
        if not np.any(a):
            a[0] = 1.0
    else:
        a = np.asarray(amplitude, dtype=complex)
    if abs(np.dot(a, xi0)) > 1e-12 * np.linalg.norm(a) * max(np.linalg.norm(xi0), 1):
        raise ConfigError("amplitude must be orthogonal to the wave vector")
    X = grid.coords()
    phase = sum(xi0[d] * X[d] for d in range(n))[None] + grid.params.perf * k * grid.t.reshape(
        (-1,) + (1,) * n)
    e = np.exp(1j * phase)
    denom = xi0 @ xi0 + 1j * grid.params.perf * k
    f = np.stack([np.real(a[i] * e) for i in range(n)])
    u = np.stack([np.real(a[i] * e / denom) for i in range(n)])
    return GridField(grid, f), GridField(grid, u)


def band_limited_forcing(grid, rng, band=3, kmax=None, solenoidal=True):
    """Random real forcing with modes |m_d| <= band, |k| <= kmax and no (0, 0) mode.

    Defined through its Fourier coefficients, so the same seed and band give
    the same continuous field on every grid that resolves the band.
    """
    n = grid.n
    kmax = grid.K if kmax is None else kmax
    if band >= grid.N // 2 or kmax > grid.K:
        raise ConfigError("band exceeds grid resolution")
    ms = np.stack(np.meshgrid(*([np.arange(-band, band + 1)] * n), np.arange(-kmax, kmax + 1),
                              indexing="ij"), -1).reshape(-1, n + 1)
    coef = rng.standard_normal((len(ms), n)) + 1j * rng.standard_normal((len(ms), n))
    xi = (np.pi / grid.L) * ms[:, :n]
    if solenoidal:
        s = np.sum(xi * xi, axis=1)
        nz = s > 0
        coef[nz] -= xi[nz] * (np.sum(xi[nz] * coef[nz], axis=1) / s[nz])[:, None]
    coef[np.all(ms == 0, axis=1)] = 0.0
    # Re[c e^{i theta}] = (c e^{i theta} + conj(c) e^{-i theta}) / 2, placed on the FFT lattice;
    # x = -L + j h contributes the sign (-1)^m per axis
    spec = np.zeros((n, grid.Nt) + (grid.N,) * n, dtype=complex)
    sign = (-1.0) ** np.sum(ms[:, :n], axis=1)
    for row, c, sg in zip(ms, coef, sign):
        idx = (row[n] % grid.Nt,) + tuple(int(m) % grid.N for m in row[:n])
        nidx = ((-row[n]) % grid.Nt,) + tuple(int(-m) % grid.N for m in row[:n])
        spec[(slice(None),) + idx] += 0.5 * sg * c
        spec[(slice(None),) + nidx] += 0.5 * sg * np.conj(c)
    f = np.fft.ifftn(spec, axes=tuple(range(1, n + 2)), norm="forward").real
    return GridField(grid, f)


def gaussian_pulse(grid, radius=None, center=None):
    """Gaussian-bump forcing e1 G(x) cos(w t) + e1 x2 G(x) / sigma with zero space-time mean.

    ``radius`` is the effective support radius (4 sigma); default L / 4.
    """
    n = grid.n
    radius = grid.L / 4 if radius is None else radius
    sig = radius / 4
    X = grid.coords()
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    r2 = sum((X[d] - c[d]) ** 2 for d in range(n))
    g = np.exp(-r2 / (2 * sig * sig))[None]
    tt = grid.t.reshape((-1,) + (1,) * n)
    f = np.zeros(grid.shape(n))
    f[0] = g * np.cos(grid.params.perf * tt) + g * (X[1] - c[1]) / sig
    return GridField(grid, f)


def uniform_forcing(grid):
    """Constant forcing e1: violates the (0, 0) compatibility condition."""
    f = np.zeros(grid.shape(grid.n))
    f[0] = 1.0
    return GridField(grid, f)


FORCINGS = ("manufactured", "pulse", "random", "uniform")


def builtin_forcing(grid, name, seed=0):
    if name == "manufactured":
        return manufactured_mode(grid)[0]
    if name == "pulse":
        return gaussian_pulse(grid)
    if name == "random":
        return band_limited_forcing(grid, np.random.default_rng(seed), band=2, kmax=min(2, grid.K))
    if name == "uniform":
        return uniform_forcing(grid)
    raise ConfigError(f"unknown forcing {name!r}; choose from {', '.join(FORCINGS)}")


# ---------------------------------------------------------------------------
# I/O

def write_field(path, field, meta=None):
    """Write a physical field to the TPSG container (plus ``.meta.json`` sidecar if meta given)."""
    if field.representation != PHYSICAL:
        raise ShapeError("only physical fields are written")
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, g.n, g.N, g.Nt, g.L, g.params.T))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    if meta is not None:
        with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_field(path):
    """Read a TPSG container; the component count follows from the payload size."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ShapeError("file too short for a TPSG header")
    magic, version, n, N, Nt, L, T = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ShapeError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ShapeError(f"unsupported container version {version}")
    grid = make_grid(L, int(N), int(Nt), Params(n=int(n), T=T))
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    per = grid.Nt * grid.N**grid.n
    if data.size == 0 or data.size % per:
        raise ShapeError("payload size is not a whole number of components")
    return GridField(grid, data.reshape(grid.shape(data.size // per)).astype(float))


def probe_line(field, axis=0, t_index=0):
    """Values along the coordinate axis through the origin at one time sample."""
    g = field.grid
    idx = [g.N // 2] * g.n
    idx[axis] = slice(None)
    vals = field.values[(slice(None), t_index) + tuple(idx)]
    return g.x1, vals.T


def write_probe_csv(path, field, axis=0, t_index=0, header=None):
    x, vals = probe_line(field, axis, t_index)
    t = field.grid.t[t_index]
    cols = ["x", "t"] + [f"c{i + 1}" for i in range(vals.shape[1])]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(",".join(cols) + "\n")
        for xv, row in zip(x, vals):
            fh.write(",".join(f"{v:.16e}" for v in (xv, t, *row)) + "\n")
