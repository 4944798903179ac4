"""Command-line front end: ``tpstokes eval | solve | verify``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 incompatible forcing.  ``verify`` exits 1 when a selected check fails.
Every output file records the package version, a hash of the effective
configuration and the RNG seed.  Timings are left out of written files
unless ``--timings`` is given, so identical configurations produce
byte-identical outputs.
"""

import hashlib
import json
import math
import re
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import spectral as sp
from . import verify as vf
from .errors import CompatibilityError, ConfigError, ShapeError, TPStokesError, TruncationWarning
from .kernels import (DEFAULT_K, Params, mode_stokeslet, remainder_kernel, steady_stokeslet_pressure,
                      steady_stokeslet_velocity)
from .report import VerificationReport

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_COMPAT = 4

KERNELS = ("steady", "remainder", "full", "mode")


@dataclass
class RunConfig:
    """Validated settings for one CLI run; field names double as JSON config keys."""

    subcommand: str = ""
    n: int = 3
    T: float = 2 * math.pi
    L: float = math.pi
    N: int = 32
    Nt: int = 9
    K: int = DEFAULT_K
    out: str = "-"
    checks: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    options: dict = field(default_factory=dict)

    def validate(self):
        self.params()
        if self.K < 1:
            raise ConfigError("truncation K must be >= 1")
        for name, val in self.tolerances.items():
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ConfigError(f"tolerance {name!r} must be a finite number")
        return self

    def params(self):
        return Params(int(self.n), float(self.T))

    def grid(self):
        return sp.make_grid(self.L, self.N, self.Nt, self.params())

    def to_dict(self):
        return asdict(self)

    def digest(self):
        # the output location does not change any computed value
        settings = {k: v for k, v in self.to_dict().items() if k != "out"}
        text = json.dumps(settings, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def stamp(self):
        return {"version": __version__, "config_hash": self.digest(), "seed": self.seed}


def _flatten_config(raw):
    flat = {}
    for key, val in raw.items():
        if key in ("params", "grid") and isinstance(val, dict):
            flat.update(val)
        else:
            flat[key] = val
    return flat


def load_config(path, subcommand, overrides):
    """Merge a JSON config file (optional) with command-line overrides (non-None values win)."""
    base = {}
    if path:
        try:
            base = _flatten_config(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(base) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    base["subcommand"] = subcommand
    try:
        cfg = RunConfig(**base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


# ---------------------------------------------------------------------------
# point sets

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _vector(text, n):
    vals = [float(v) for v in text.strip().strip("()").split(",")]
    if len(vals) != n:
        raise ConfigError(f"point {text!r} needs {n} coordinates")
    return vals


def parse_line(spec, n):
    """'(a,b)..(c,d):m' -> m equispaced points including both ends."""
    m = re.fullmatch(r"\s*(\([^)]*\))\s*\.\.\s*(\([^)]*\))\s*:\s*(\d+)\s*", spec)
    if not m:
        raise ConfigError(f"bad --line spec {spec!r}; expected '(x..)..(y..):count'")
    a, b, cnt = np.array(_vector(m[1], n)), np.array(_vector(m[2], n)), int(m[3])
    if cnt < 1:
        raise ConfigError("line needs at least one point")
    s = np.linspace(0.0, 1.0, cnt) if cnt > 1 else np.zeros(1)
    return a[None] + s[:, None] * (b - a)[None]


def parse_ring(spec, n):
    """'R:m' -> m points on the circle of radius R in the x1-x2 plane."""
    m = re.fullmatch(rf"\s*({_NUM})\s*:\s*(\d+)\s*", spec)
    if not m:
        raise ConfigError(f"bad --ring spec {spec!r}; expected 'radius:count'")
    R, cnt = float(m[1]), int(m[2])
    th = 2 * np.pi * np.arange(cnt) / cnt
    pts = np.zeros((cnt, n))
    pts[:, 0], pts[:, 1] = R * np.cos(th), R * np.sin(th)
    return pts


def parse_range(spec):
    """'a:b:m' -> numpy linspace(a, b, m)."""
    m = re.fullmatch(rf"\s*({_NUM})\s*:\s*({_NUM})\s*:\s*(\d+)\s*", spec)
    if not m:
        raise ConfigError(f"bad range {spec!r}; expected 'start:stop:count'")
    return np.linspace(float(m[1]), float(m[2]), int(m[3]))


# ---------------------------------------------------------------------------
# eval

def tabulate(cfg, kernel, points, times, k=1):
    """Rows (x, t, entries) and column names for the requested kernel."""
    p = cfg.params()
    n = p.n
    cols = [f"x{i + 1}" for i in range(n)] + ["t"]
    vel_names = [f"v{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    pres_names = [f"p{j + 1}" for j in range(n)]
    pres = steady_stokeslet_pressure(p, points)
    rows = []
    if kernel == "mode":
        G = mode_stokeslet(p, k, points)
        cols += ["re_" + c for c in vel_names] + ["im_" + c for c in vel_names] + pres_names
        for t in times:
            ph = np.exp(1j * p.perf * k * t)
            for x, g, q in zip(points, G * ph, pres):
                rows.append([*x, t, *g.real.ravel(), *g.imag.ravel(), *q])
        return cols, rows
    cols += vel_names + pres_names
    tarr = np.asarray(times, dtype=float)
    if kernel == "steady":
        V = np.repeat(steady_stokeslet_velocity(p, points)[:, None], tarr.size, axis=1)
    elif kernel == "remainder":
        V = remainder_kernel(p, points, tarr, K=cfg.K)
        pres = np.zeros_like(pres)
    elif kernel == "full":
        V = steady_stokeslet_velocity(p, points)[:, None] + remainder_kernel(p, points, tarr, K=cfg.K)
    else:
        raise ConfigError(f"unknown kernel {kernel!r}; choose from {', '.join(KERNELS)}")
    for j, t in enumerate(tarr):
        for i, x in enumerate(points):
            rows.append([*x, t, *V[i, j].ravel(), *pres[i]])
    return cols, rows


def write_csv(handle, header, cols, rows):
    handle.write("# " + header + "\n")
    handle.write(",".join(cols) + "\n")
    for row in rows:
        handle.write(",".join(f"{v:.16e}" for v in row) + "\n")


def _params_header(cfg, extra):
    items = {"n": cfg.n, "T": repr(float(cfg.T)), **extra, **cfg.stamp()}
    return "params " + " ".join(f"{k}={v}" for k, v in items.items())


# ---------------------------------------------------------------------------
# solve

def run_solve(cfg, forcing, forcing_file, cross_check):
    grid = cfg.grid()
    if forcing_file:
        f = sp.read_field(forcing_file)
        if f.grid.n != grid.n or f.grid.N != grid.N or f.grid.Nt != grid.Nt:
            raise ShapeError("forcing file grid does not match the configured grid")
        grid = f.grid
    else:
        f = sp.builtin_forcing(grid, forcing, cfg.seed)
    u, p = sp.solve_tp_stokes(grid, f)
    res = sp.apply_tp_stokes_operator(grid, u, p)
    fnorm = math.sqrt(float(np.sum(f.values**2)))
    summary = {
        "forcing": forcing_file or forcing,
        "grid": grid.to_dict(),
        "relative_residual": math.sqrt(float(np.sum((res.values - f.values) ** 2))) / fnorm,
        "divergence_l2": sp.divergence(grid, u).norm(),
        "relative_divergence": sp.divergence(grid, u).norm() / max(sp.gradient_norm(grid, u), 1e-300),
        **cfg.stamp(),
    }
    if forcing == "manufactured" and not forcing_file:
        ue = sp.manufactured_mode(grid)[1]
        summary["manufactured_max_error"] = float(np.max(np.abs(u.values - ue.values)))
    if cross_check:
        ur, pr = sp.solve_by_representation(grid, f)
        summary["cross_check_velocity_rel_l2"] = math.sqrt(
            float(np.sum((ur.values - u.values) ** 2) / max(np.sum(u.values**2), 1e-300)))
        summary["cross_check_pressure_rel_l2"] = math.sqrt(
            float(np.sum((pr.values - p.values) ** 2) / max(np.sum(p.values**2), 1e-300)))
    return u, p, summary


# ---------------------------------------------------------------------------
# verify

def _override_options(name, cfg):
    opts = {}
    o = cfg.options
    if o.get("radii") is not None and name in ("remainder-decay", "mode-sum", "pointwise-mode-bound"):
        opts["radii"] = parse_range(o["radii"])
    if o.get("q") is not None and name == "lq-summability":
        opts["q"] = o["q"]
    if name == "lq-summability" and opts and "q" not in opts:
        opts["q"] = 1.2 if cfg.n == 3 else 1.5
    return opts


def apply_tolerances(rep, tolerances):
    """Replace thresholds of criteria named in ``tolerances``; overrides are noted in the report."""
    for c in rep.criteria:
        if c.name in tolerances:
            rep.notes.append(f"threshold of {c.name!r} overridden: {c.threshold} -> {tolerances[c.name]}")
            c.threshold = float(tolerances[c.name])
    return rep


def run_verify(cfg, names, timings):
    params = cfg.params()
    reports = []
    for name in names:
        try:
            rep = vf.run_check(name, params, **_override_options(name, cfg))
        except (TPStokesError, ArithmeticError, ValueError) as exc:
            rep = VerificationReport(check=name, params=params.to_dict(),
                                     notes=[f"check aborted: {type(exc).__name__}: {exc}"])
        apply_tolerances(rep, cfg.tolerances)
        rep.params.update({"seed": cfg.seed})
        rep.samples.setdefault("stamp", cfg.stamp())
        if not timings:
            rep.runtime_s = 0.0
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# click wiring

def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map library exceptions to exit codes."""
    try:
        return fn()
    except CompatibilityError as exc:
        _fail(EXIT_COMPAT, exc)
    except (ConfigError, ShapeError) as exc:
        _fail(EXIT_CONFIG, exc)
    except (TPStokesError, ArithmeticError, ValueError) as exc:
        _fail(EXIT_NUMERIC, exc)


def _common(f):
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON RunConfig file")(f)
    f = click.option("--n", type=int, help="spatial dimension (2 or 3)")(f)
    f = click.option("--T", "T", type=float, help="time period (default 2 pi)")(f)
    f = click.option("--seed", type=int, help="RNG seed recorded in all outputs")(f)
    f = click.option("--out", type=str, help="output file or directory ('-' for stdout where allowed)")(f)
    return f


@click.group()
@click.version_option(__version__)
def main():
    """Time-periodic Stokes fundamental solution toolkit."""


@main.command("eval")
@_common
@click.option("--kernel", type=click.Choice(KERNELS), default="steady", show_default=True)
@click.option("--k", "mode_k", type=int, default=1, show_default=True, help="mode index for --kernel mode")
@click.option("--K", "K", type=int, help="mode truncation for remainder/full kernels")
@click.option("--t", "times", type=float, multiple=True, help="time value(s); default 0")
@click.option("--line", help="'(a,b)..(c,d):count'")
@click.option("--ring", help="'radius:count' in the x1-x2 plane")
@click.option("--point", "points", multiple=True, help="explicit point 'x1,x2[,x3]'")
def eval_cmd(config_path, n, T, seed, out, kernel, mode_k, K, times, line, ring, points):
    """Tabulate a kernel on a point set as CSV."""
    def go():
        cfg = load_config(config_path, "eval", {"n": n, "T": T, "seed": seed, "out": out, "K": K,
                                                "options": {"kernel": kernel, "k": mode_k, "line": line,
                                                            "ring": ring, "points": list(points),
                                                            "times": list(times)}})
        pts = []
        if line:
            pts.append(parse_line(line, cfg.n))
        if ring:
            pts.append(parse_ring(ring, cfg.n))
        if points:
            pts.append(np.array([_vector(p, cfg.n) for p in points]))
        if not pts:
            raise ConfigError("give a point set with --line, --ring or --point")
        X = np.concatenate(pts)
        with warnings.catch_warnings():
            warnings.simplefilter("always", TruncationWarning)
            cols, rows = tabulate(cfg, kernel, X, list(times) or [0.0], mode_k)
        extra = {"kernel": kernel}
        if kernel == "mode":
            extra["k"] = mode_k
        if kernel in ("remainder", "full"):
            extra["K"] = cfg.K
        header = _params_header(cfg, extra)
        if cfg.out == "-":
            write_csv(sys.stdout, header, cols, rows)
        else:
            with open(cfg.out, "w", newline="") as fh:
                write_csv(fh, header, cols, rows)
    _guard(go)


@main.command("solve")
@_common
@click.option("--L", "L", type=float, help="box half-length")
@click.option("--N", "N", type=int, help="spatial points per axis (power of 2)")
@click.option("--Nt", "Nt", type=int, help="time samples (odd)")
@click.option("--forcing", type=click.Choice(sp.FORCINGS), default="manufactured", show_default=True)
@click.option("--forcing-file", type=click.Path(exists=True, dir_okay=False))
@click.option("--cross-check", is_flag=True, help="also solve via the representation formula")
def solve_cmd(config_path, n, T, seed, out, L, N, Nt, forcing, forcing_file, cross_check):
    """Solve on a periodic box; write u, p and a JSON summary."""
    def go():
        cfg = load_config(config_path, "solve", {"n": n, "T": T, "seed": seed, "out": out, "L": L, "N": N,
                                                 "Nt": Nt, "options": {"forcing": forcing_file or forcing,
                                                                       "cross_check": cross_check}})
        outdir = Path("tpstokes_out" if cfg.out == "-" else cfg.out)
        u, p, summary = run_solve(cfg, forcing, forcing_file, cross_check)
        outdir.mkdir(parents=True, exist_ok=True)
        meta = {**cfg.stamp(), "config": {k: v for k, v in cfg.to_dict().items() if k != "out"}}
        sp.write_field(outdir / "u.tpsg", u, meta)
        sp.write_field(outdir / "p.tpsg", p, meta)
        text = json.dumps(summary, indent=2, sort_keys=True, allow_nan=False)
        (outdir / "summary.json").write_text(text + "\n")
        click.echo(text)
    _guard(go)


@main.command("verify")
@_common
@click.option("--check", "checks", multiple=True, help="check name (repeatable)")
@click.option("--all", "run_all", is_flag=True, help="run every registered check")
@click.option("--radii", help="'start:stop:count' radius set for radial checks")
@click.option("--q", type=float, help="exponent for lq-summability")
@click.option("--tol", "tols", multiple=True, help="override a criterion threshold: 'name=value'")
@click.option("--timings", is_flag=True, help="record runtimes in written reports")
def verify_cmd(config_path, n, T, seed, out, checks, run_all, radii, q, tols, timings):
    """Run verification checks; exit 0 iff all selected checks pass."""
    def go():
        tol = {}
        for item in tols:
            name, sep, val = item.rpartition("=")
            if not sep:
                raise ConfigError(f"bad --tol {item!r}; expected 'name=value'")
            try:
                tol[name] = float(val)
            except ValueError as exc:
                raise ConfigError(f"bad --tol value {val!r}") from exc
        cfg = load_config(config_path, "verify", {"n": n, "T": T, "seed": seed, "out": out,
                                                  "checks": list(checks) or None, "tolerances": tol or None,
                                                  "options": {"radii": radii, "q": q, "all": run_all}})
        names = list(vf.CHECKS) if run_all else list(cfg.checks)
        if not names:
            raise ConfigError("select checks with --check NAME or --all; available: " + ", ".join(vf.CHECKS))
        bad = [c for c in names if c not in vf.CHECKS]
        if bad:
            raise ConfigError(f"unknown check(s) {', '.join(bad)}; available: {', '.join(vf.CHECKS)}")
        return cfg, run_verify(cfg, names, timings)

    cfg, reports = _guard(go)
    outdir = None if cfg.out == "-" else Path(cfg.out)
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            (outdir / f"{rep.check}.json").write_text(rep.to_json() + "\n")
    aggregate = {"checks": {r.check: r.passed for r in reports},
                 "pass": all(r.passed for r in reports), **cfg.stamp(), "params": cfg.params().to_dict()}
    if outdir:
        (outdir / "aggregate.json").write_text(json.dumps(aggregate, indent=2, sort_keys=True) + "\n")
    for rep in reports:
        click.echo(rep.summary())
        for note in rep.notes:
            click.echo(f"  note: {note}")
    click.echo(f"aggregate: {'PASS' if aggregate['pass'] else 'FAIL'}")
    sys.exit(0 if aggregate["pass"] else 1)


if __name__ == "__main__":
    main()
