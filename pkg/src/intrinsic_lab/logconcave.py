"""Log-concave densities and their one-sided typical sets.

A density ``p = exp(-phi)`` with ``phi`` convex. The typical set in dimension
``n`` is ``{x : sum_i phi(x_i) <= n (h + eps)}``, a convex level set.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import _kernels
from ._rng import shard_generator
from .convex_bodies import (
    Ball,
    Crosspolytope,
    Cube,
    IntrinsicVolumeSequence,
    Oracle,
    ball_intrinsic_volumes,
    cube_intrinsic_volumes,
    steiner_fit,
)

# e^{-phi} below this is treated as zero when integrating
_TAIL_PHI = -math.log(1e-16)
_TAIL_ERR = 1e-12
_NORM_TOL = 1e-8


class DensityError(ValueError):
    pass


class NormalizationError(DensityError):
    pass


class EntropyError(RuntimeError):
    """Entropy integral diverged or could not be resolved."""


class MinorantError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class LogConcaveDensity:
    """``p(x) = exp(-phi(x))`` on a closed interval ``support``.

    ``phi`` is vectorized and returns ``+inf`` off the support. ``prox_code``
    and ``prox_params`` are set for builtin families and enable exact
    projections onto typical sets.
    """

    family: str
    params: tuple
    phi: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    support: tuple
    eta: float
    argmin: float
    entropy: float
    scale: float
    prox_code: Optional[int] = field(default=None, repr=False)
    prox_params: Optional[tuple] = field(default=None, repr=False)
    kinks: tuple = field(default=(), repr=False)

    def __call__(self, x) -> np.ndarray:
        return self.phi(np.asarray(x, dtype=np.float64))

    def pdf(self, x) -> np.ndarray:
        return np.exp(-self(x))

    @property
    def is_uniform(self) -> bool:
        return abs(self.entropy - self.eta) <= 1e-12 * max(1.0, abs(self.eta))

    def describe(self) -> dict:
        return {"family": self.family, "params": dict(self.params),
                "support": [float(s) for s in self.support],
                "eta": self.eta, "argmin": self.argmin, "entropy": self.entropy}


def _on_support(phi, lo, hi):
    def f(x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= lo) & (x <= hi)
        out = np.full(x.shape, np.inf)
        if inside.any():
            out[inside] = phi(x[inside])
        return out
    return f


def gaussian(nu: float = 1.0) -> LogConcaveDensity:
    if not nu > 0:
        raise DensityError("variance must be positive")
    c = 0.5 * math.log(2 * math.pi * nu)
    return LogConcaveDensity(
        "gaussian", (("nu", float(nu)),), lambda x: np.asarray(x) ** 2 / (2 * nu) + c,
        (-math.inf, math.inf), c, 0.0, 0.5 * math.log(2 * math.pi * math.e * nu),
        math.sqrt(nu), _kernels.PROX_GAUSSIAN, (float(nu), 0.0, c))


def uniform(A: float = 1.0) -> LogConcaveDensity:
    if not A > 0:
        raise DensityError("side length must be positive")
    c = math.log(A)
    phi = _on_support(lambda x: np.full(np.shape(x), c), 0.0, A)
    return LogConcaveDensity("uniform", (("A", float(A)),), phi, (0.0, float(A)), c,
                             A / 2.0, c, float(A), _kernels.PROX_BOX, (0.0, float(A), c))


def laplace(b: float = 1.0) -> LogConcaveDensity:
    if not b > 0:
        raise DensityError("scale must be positive")
    c = math.log(2 * b)
    return LogConcaveDensity(
        "laplace", (("b", float(b)),), lambda x: np.abs(x) / b + c,
        (-math.inf, math.inf), c, 0.0, 1.0 + c, float(b), _kernels.PROX_LAPLACE,
        (float(b), 0.0, c), kinks=(0.0,))


def exponential(lam: float = 1.0) -> LogConcaveDensity:
    if not lam > 0:
        raise DensityError("rate must be positive")
    c = -math.log(lam)
    phi = _on_support(lambda x: lam * x + c, 0.0, math.inf)
    return LogConcaveDensity("exponential", (("lam", float(lam)),), phi, (0.0, math.inf),
                             c, 0.0, 1.0 + c, 1.0 / lam, _kernels.PROX_EXPONENTIAL,
                             (float(lam), 0.0, c))


def _vectorized(fn):
    probe = np.array([0.0, 1.0])
    try:
        out = np.asarray(fn(probe), dtype=np.float64)
        if out.shape == probe.shape:
            return fn
    except Exception:
        pass
    return np.vectorize(fn, otypes=[np.float64])


def _endpoint_limits(phi, lo, hi):
    # phi on the closed support, using one-sided limits where the callable blows up
    def f(x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= lo) & (x <= hi)
        out = np.full(x.shape, np.inf)
        if inside.any():
            xi = x[inside]
            with np.errstate(all="ignore"):
                v = np.asarray(phi(xi), dtype=np.float64)
            bad = ~np.isfinite(v) & ((xi == lo) | (xi == hi))
            if bad.any():
                nudged = np.where(xi[bad] == lo, np.nextafter(lo, hi), np.nextafter(hi, lo))
                v[bad] = phi(nudged)
            out[inside] = v
        return out
    return f


def _expand_until(f, x0, direction, limit, target, start):
    """Smallest doubling step ``s`` with ``f(x0 + direction*s) > target`` or the edge."""
    s = start
    while True:
        x = x0 + direction * s
        if direction > 0 and x >= limit:
            return limit - x0, True
        if direction < 0 and x <= limit:
            return x0 - limit, True
        if f(np.array([x]))[0] > target:
            return s, False
        s *= 2.0
        if s > 1e12:
            raise EntropyError("potential does not grow; density not normalizable")


def _find_argmin(phi, lo, hi):
    mid = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (
        lo + 1.0 if math.isfinite(lo) else (hi - 1.0 if math.isfinite(hi) else 0.0))
    f0 = float(phi(np.array([mid]))[0])
    if not math.isfinite(f0):
        raise DensityError("potential is infinite at the support midpoint")
    a = mid - _expand_until(phi, mid, -1, lo, f0 + 1.0, 1.0)[0]
    b = mid + _expand_until(phi, mid, +1, hi, f0 + 1.0, 1.0)[0]
    res = optimize.minimize_scalar(lambda x: float(phi(np.array([x]))[0]), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-12})
    cand = np.array([res.x, a, b, mid])
    vals = phi(cand)
    k = int(np.argmin(vals))
    xs, eta = float(cand[k]), float(vals[k])
    # flat minimum: take the point of the minimizing set closest to the midpoint
    tol = 1e-12 * max(1.0, abs(eta))
    flat = lambda x: float(phi(np.array([x]))[0]) <= eta + tol
    left = optimize.bisect(lambda x: 0.5 if flat(x) else -0.5, a, xs, xtol=1e-13) \
        if not flat(a) else a
    right = optimize.bisect(lambda x: 0.5 if flat(x) else -0.5, xs, b, xtol=1e-13) \
        if not flat(b) else b
    xs = float(np.clip(mid, left, right))
    return xs, float(phi(np.array([xs]))[0])


def _side_cutoffs(phi, x0, lo, hi, level, scale):
    cl, hit_l = _expand_until(phi, x0, -1, lo, level, scale)
    cr, hit_r = _expand_until(phi, x0, +1, hi, level, scale)
    return x0 - cl, x0 + cr


def _quad_pieces(fn, a, b, kinks):
    pts = sorted(k for k in kinks if a < k < b)
    edges = [a] + pts + [b]
    total, err = 0.0, 0.0
    for u, v in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(fn, u, v, epsabs=1e-13, epsrel=1e-11, limit=400)
        total += val
        err += e
    return total, err


def _integrals(phi, lo, hi, x0, scale, kinks, c1=None, c2=None):
    a, b = _side_cutoffs(phi, x0, lo, hi, _TAIL_PHI, scale)
    # widen until the linear minorant certifies the neglected tail mass
    if c1 is not None:
        for _ in range(60):
            tails = []
            for edge, support_edge in ((b, hi), (a, lo)):
                if edge == support_edge:
                    tails.append(0.0)
                    continue
                u = c1 * abs(edge) + c2
                tails.append((u + 1.0) * math.exp(-u) / c1 if u > 1 else math.inf)
            if max(tails) < _TAIL_ERR:
                break
            if tails[0] >= _TAIL_ERR:
                b = min(hi, x0 + 2 * (b - x0))
            if tails[1] >= _TAIL_ERR:
                a = max(lo, x0 - 2 * (x0 - a))
        else:
            raise EntropyError("tail mass could not be certified")
    f1 = lambda x: math.exp(-float(phi(np.array([x]))[0]))
    def f2(x):
        v = float(phi(np.array([x]))[0])
        return v * math.exp(-v) if math.isfinite(v) else 0.0
    kk = tuple(kinks) + (x0,)
    z, ez = _quad_pieces(f1, a, b, kk)
    h, eh = _quad_pieces(f2, a, b, kk)
    return z, h, max(ez, eh)


def custom(phi: Callable, support: Sequence[float] = (-math.inf, math.inf),
           name: str = "custom", kinks: Sequence[float] = (), normalize: bool = False,
           params: tuple = ()) -> LogConcaveDensity:
    """Density from a user potential; entropy and normalization by quadrature.

    With ``normalize`` the potential is shifted by ``log Z``; otherwise
    ``|Z - 1| > 1e-8`` raises :class:`NormalizationError`.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise DensityError("support must be a nondegenerate interval")
    base = _endpoint_limits(_vectorized(phi), lo, hi)
    x0, eta = _find_argmin(base, lo, hi)
    sl = _expand_until(base, x0, -1, lo, eta + 1.0, 1e-3)[0]
    sr = _expand_until(base, x0, +1, hi, eta + 1.0, 1e-3)[0]
    scale = max(sl, sr)
    c1, c2 = _minorant_core(base, lo, hi, x0, eta, scale)[:2]
    z, h, err = _integrals(base, lo, hi, x0, scale, kinks, c1, c2)
    if not (math.isfinite(z) and math.isfinite(h)) or z <= 0:
        raise EntropyError("entropy integral diverged")
    shift = 0.0
    if normalize:
        shift = math.log(z)
        # h for the shifted potential: E[phi + log Z] under the normalized density
        h = h / z + shift
        z = 1.0
    elif abs(z - 1.0) > _NORM_TOL:
        raise NormalizationError(f"density integrates to {z:.12g}, not 1")
    final = base if shift == 0.0 else (lambda x, f=base, s=shift: f(x) + s)
    return LogConcaveDensity(name, tuple(params), final, (lo, hi), eta + shift, x0, float(h),
                             float(scale), kinks=tuple(float(k) for k in kinks))


def tabulated(xs: Sequence[float], phis: Sequence[float], left_slope: float = math.inf,
              right_slope: float = math.inf, normalize: bool = True,
              name: str = "tabulated") -> LogConcaveDensity:
    """Piecewise-linear potential through ``(xs, phis)`` with linear tails.

    An infinite tail slope ends the support at that table edge. Tail slopes
    are magnitudes: ``phi`` grows at ``left_slope`` leftwards.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ps = np.asarray(phis, dtype=np.float64)
    if xs.ndim != 1 or xs.size < 2 or xs.shape != ps.shape:
        raise DensityError("need at least two (x, phi) pairs")
    order = np.argsort(xs)
    xs, ps = xs[order], ps[order]
    if np.any(np.diff(xs) <= 0):
        raise DensityError("table abscissae must be distinct")
    slopes = np.diff(ps) / np.diff(xs)
    full = np.concatenate([[-left_slope], slopes, [right_slope]])
    if np.any(np.diff(full) < -1e-12):
        raise DensityError("tabulated potential is not convex")
    lo = -math.inf if math.isfinite(left_slope) else float(xs[0])
    hi = math.inf if math.isfinite(right_slope) else float(xs[-1])

    def phi(x):
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, xs, ps)
        if math.isfinite(left_slope):
            out = np.where(x < xs[0], ps[0] + left_slope * (xs[0] - x), out)
        if math.isfinite(right_slope):
            out = np.where(x > xs[-1], ps[-1] + right_slope * (x - xs[-1]), out)
        return out

    return custom(phi, (lo, hi), name=name, kinks=tuple(xs), normalize=normalize,
                  params=(("points", int(xs.size)), ("left_slope", left_slope),
                          ("right_slope", right_slope)))


def load_table(path) -> tuple:
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=np.float64)
    names = [n.lower() for n in data.dtype.names]
    if names[:2] != ["x", "phi"]:
        raise DensityError("table must have columns x,phi")
    return np.atleast_1d(data[data.dtype.names[0]]), np.atleast_1d(data[data.dtype.names[1]])


def read_key_values(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments allowed)."""
    text = Path(path).read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    cp.read_string("[_]\n" + text)
    return dict(cp["_"])


def density_from_config(cfg: dict, base_dir=None) -> LogConcaveDensity:
    """Build a density from a mapping such as ``{"family": "laplace", "b": "1"}``."""
    fam = str(cfg.get("family", "")).strip().lower()
    num = lambda k, d: float(cfg.get(k, d))
    if fam == "gaussian":
        return gaussian(num("nu", 1.0))
    if fam == "uniform":
        return uniform(num("A", 1.0))
    if fam == "laplace":
        return laplace(num("b", 1.0))
    if fam == "exponential":
        return exponential(num("lam", 1.0))
    if fam == "tabulated":
        if "table" not in cfg:
            raise DensityError("tabulated density needs a table path")
        p = Path(cfg["table"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        xs, ps = load_table(p)
        norm = str(cfg.get("normalize", "true")).lower() in ("1", "true", "yes")
        return tabulated(xs, ps, num("left_slope", math.inf), num("right_slope", math.inf),
                         normalize=norm, name=str(cfg.get("name", "tabulated")))
    raise DensityError(f"unknown density family {fam!r}")


def differential_entropy(d: LogConcaveDensity) -> float:
    return d.entropy


@dataclass(frozen=True)
class ConvexityReport:
    trials: int
    violations: int
    worst: float
    confidence_bound: float  # 95% upper bound on the violation rate


def midpoint_convexity_check(d: LogConcaveDensity, trials: int = 10_000, seed: int = 0,
                             tol: float = 1e-9) -> ConvexityReport:
    """Random-triple test of ``phi((x+y)/2) <= (phi(x)+phi(y))/2``."""
    rng = shard_generator(seed, 11)
    lo, hi = d.support
    a = max(lo, d.argmin - 20 * d.scale)
    b = min(hi, d.argmin + 20 * d.scale)
    x = rng.uniform(a, b, trials)
    y = rng.uniform(a, b, trials)
    with np.errstate(invalid="ignore"):
        gap = d((x + y) / 2) - (d(x) + d(y)) / 2
    gap = np.where(np.isnan(gap), -np.inf, gap)
    bad = gap > tol * (1 + np.abs(d(x)) + np.abs(d(y)))
    # rule of three when no violations are seen
    bound = 3.0 / trials if not bad.any() else float(bad.mean())
    return ConvexityReport(trials, int(bad.sum()), float(gap.max()), bound)


def normalization_error(d: LogConcaveDensity) -> float:
    z, _, _ = _integrals(d.phi, d.support[0], d.support[1], d.argmin, d.scale, d.kinks)
    return abs(z - 1.0)


# ---------------------------------------------------------------------------
# typical sets


@dataclass(frozen=True)
class TypicalSetSpec:
    density: LogConcaveDensity
    n: int
    eps: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def threshold(self) -> float:
        return self.n * (self.density.entropy + self.eps)

    @property
    def center(self) -> np.ndarray:
        return np.full(self.n, self.density.argmin)


def potential_sum(d: LogConcaveDensity, x: np.ndarray) -> np.ndarray:
    return np.sum(d(np.atleast_2d(x)), axis=1)


def typical_membership(spec: TypicalSetSpec, x, rtol: float = 0.0):
    """``sum phi(x_i) <= n (h + eps)`` for one point or each row."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != spec.n:
        raise ValueError(f"expected points of dimension {spec.n}")
    thr = spec.threshold
    res = potential_sum(spec.density, arr) <= thr + rtol * abs(thr)
    return bool(res[0]) if arr.ndim == 1 else res


def coordinate_range(spec: TypicalSetSpec) -> tuple:
    """Per-coordinate interval of the typical set (others at the minimizer)."""
    d = spec.density
    level = spec.threshold - (spec.n - 1) * d.eta
    lo, hi = d.support
    out = []
    for direction, edge in ((-1, lo), (+1, hi)):
        s, at_edge = _expand_until(d.phi, d.argmin, direction, edge, level, d.scale)
        if at_edge:
            out.append(edge)
            continue
        g = lambda u: float(d(np.array([d.argmin + direction * u]))[0]) - level
        u = optimize.brentq(g, 0.0, s, xtol=1e-14) if g(0.0) < 0 else 0.0
        out.append(d.argmin + direction * u)
    return out[0], out[1]


def _level_distance(spec: TypicalSetSpec):
    d = spec.density
    if d.prox_code is None:
        return None
    p = np.asarray(d.prox_params, dtype=np.float64)
    k = _kernels.active
    level = spec.threshold
    return lambda pts: k.separable_distance(d.prox_code, p, np.ascontiguousarray(pts), level)


def typical_body(spec: TypicalSetSpec):
    """Closed-form body where one exists, else an :class:`Oracle`."""
    d = spec.density
    if d.family == "gaussian":
        nu = dict(d.params)["nu"]
        return Ball(spec.n, math.sqrt(spec.n * nu * (1 + 2 * spec.eps)))
    if d.family == "uniform":
        return Cube(spec.n, dict(d.params)["A"])
    lo, hi = coordinate_range(spec)
    n = spec.n
    contains = lambda pts, s=spec: potential_sum(s.density, pts) <= s.threshold
    half = max(hi - d.argmin, d.argmin - lo)
    return Oracle(dim=n, contains=contains, radius=math.sqrt(n) * half,
                  center=spec.center, distance=_level_distance(spec),
                  box_lo=np.full(n, lo), box_hi=np.full(n, hi),
                  name=f"typical[{d.family}, n={n}, eps={spec.eps}]",
                  diameter=math.sqrt(n) * (hi - lo))


def _ray_extent(spec: TypicalSetSpec, level: float, dirs: np.ndarray, iters: int = 100):
    """Largest ``s`` with ``sum phi(x* + s d) <= level`` for each row ``d``."""
    d = spec.density
    c = spec.center
    f = lambda s: np.sum(d(c + s[:, None] * dirs), axis=1)
    lo = np.zeros(dirs.shape[0])
    hi = np.full(dirs.shape[0], d.scale)
    for _ in range(200):
        grow = f(hi) <= level
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, 2 * hi, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = f(mid) <= level
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo


def _directions(spec: TypicalSetSpec, rng, m: int) -> np.ndarray:
    d = spec.density
    g = rng.standard_normal((m, spec.n))
    # keep directions feasible when the minimizer sits on a support edge
    if d.argmin <= d.support[0]:
        g = np.abs(g)
    elif d.argmin >= d.support[1]:
        g = -np.abs(g)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_typical(spec: TypicalSetSpec, m: int, seed: int = 0, shard: int = 0,
                   boundary: bool = False, level: Optional[float] = None) -> np.ndarray:
    """Points of the typical set along random rays from the minimizer.

    With ``boundary`` every point sits on the boundary (inner side). This is
    a membership-exercising sampler, not a uniform one.
    """
    rng = shard_generator(seed, shard)
    dirs = _directions(spec, rng, m)
    lvl = spec.threshold if level is None else level
    s = _ray_extent(spec, lvl, dirs)
    if not boundary:
        s = s * rng.uniform(size=m) ** (1.0 / spec.n)
    return spec.center + s[:, None] * dirs


# ---------------------------------------------------------------------------
# linear minorant and crosspolytope containment


@dataclass(frozen=True)
class LinearMinorant:
    """``phi(x) >= c1 |x| + c2`` with the grid/random certificate data."""

    c1: float
    c2: float
    halvings: int
    points_checked: int

    def __iter__(self):
        return iter((self.c1, self.c2))


def _secant_slopes(phi, x0, eta, lo, hi, radii):
    out = []
    for direction, edge in ((1, hi), (-1, lo)):
        for r in radii:
            x = x0 + direction * r
            if (direction > 0 and x > edge) or (direction < 0 and x < edge):
                out.append(math.inf)
                continue
            out.append((float(phi(np.array([x]))[0]) - eta) / r)
    return out


def _offset(phi, c1, lo, hi, x0, scale):
    g = lambda x: phi(x) - c1 * np.abs(x)
    a = max(lo, x0 - 200 * scale - abs(x0))
    b = min(hi, x0 + 200 * scale + abs(x0))
    grid = np.unique(np.concatenate([np.linspace(a, b, 20001), [a, b, x0],
                                     [0.0] if a <= 0.0 <= b else []]))
    vals = g(grid)
    k = int(np.argmin(vals))
    best = float(vals[k])
    # local descent on the neighbouring cells
    u, v = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if v > u:
        res = optimize.minimize_scalar(lambda x: float(g(np.array([x]))[0]), bounds=(u, v),
                                       method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best - 1e-12 * (1.0 + abs(best))


def _certify(phi, c1, c2, lo, hi, x0, scale, rng, n_random=10_000):
    a = max(lo, x0 - 1000 * scale - abs(x0))
    b = min(hi, x0 + 1000 * scale + abs(x0))
    dense = np.linspace(a, b, 100_001)
    rand = x0 + scale * rng.standard_cauchy(n_random)
    rand = rand[(rand >= lo) & (rand <= hi)]
    pts = np.concatenate([dense, rand])
    with np.errstate(invalid="ignore"):
        slack = phi(pts) - c1 * np.abs(pts) - c2
    ok = bool(np.all(np.nan_to_num(slack, nan=-1.0) >= -1e-10 * (1 + np.abs(c2))))
    return ok, pts.size


def _minorant_core(phi, lo, hi, x0, eta, scale, seed=0, max_halvings=20):
    slopes = _secant_slopes(phi, x0, eta, lo, hi, (10 * scale, 100 * scale))
    finite = [s for s in slopes if math.isfinite(s)]
    c1 = 0.5 * min(finite) if finite else 1.0
    if not c1 > 0:
        raise MinorantError("potential does not grow linearly")
    rng = shard_generator(seed, 17)
    for k in range(max_halvings + 1):
        c2 = _offset(phi, c1, lo, hi, x0, scale)
        ok, checked = _certify(phi, c1, c2, lo, hi, x0, scale, rng)
        if ok and math.isfinite(c2):
            return c1, c2, k, checked
        c1 *= 0.5
    raise MinorantError(f"no certified minorant after {max_halvings} halvings")


def linear_minorant(d: LogConcaveDensity, seed: int = 0) -> LinearMinorant:
    """Certified ``(c1, c2)`` with ``phi(x) >= c1 |x| + c2``.

    ``c1`` is half the smaller secant slope of ``phi`` at distances ``10`` and
    ``100`` times the density scale; ``c2`` is the minimum of
    ``phi - c1 |x|`` by grid plus local descent. The inequality is then checked
    on a dense grid and at random points; on failure ``c1`` is halved.
    """
    c1, c2, k, checked = _minorant_core(d.phi, d.support[0], d.support[1], d.argmin,
                                        d.eta, d.scale, seed)
    return LinearMinorant(c1, c2, k, checked)


@dataclass(frozen=True)
class CrosspolytopeBound:
    body: Crosspolytope
    A: float
    minorant: LinearMinorant
    trials: int
    failures: int
    worst_ratio: float  # max of sum|x_i| / (n A) over samples


def crosspolytope_bound(spec: TypicalSetSpec, trials: int = 100_000, seed: int = 0,
                        minorant: Optional[LinearMinorant] = None) -> CrosspolytopeBound:
    """Containing crosspolytope ``{sum |x_i| <= n A}`` with ``A = (h + eps - c2) / c1``.

    Containment is exercised on sampled typical points, half of them on the
    boundary.
    """
    mn = minorant or linear_minorant(spec.density)
    A = (spec.density.entropy + spec.eps - mn.c2) / mn.c1
    pts = np.concatenate([
        sample_typical(spec, trials // 2, seed, shard=31, boundary=True),
        sample_typical(spec, trials - trials // 2, seed, shard=32),
    ])
    ratio = np.sum(np.abs(pts), axis=1) / (spec.n * A)
    fails = int(np.sum(ratio > 1.0 + 1e-12))
    return CrosspolytopeBound(Crosspolytope(spec.n, A), A, mn, trials, fails,
                              float(ratio.max()))


# ---------------------------------------------------------------------------
# projection bounds


def projection_volume_bound(spec: TypicalSetSpec, m: int) -> float:
    """Log of the bound ``n (h + eps) - (n - m) eta`` on a coordinate projection."""
    if not 0 <= m <= spec.n:
        raise ValueError("need 0 <= m <= n")
    d = spec.density
    return spec.n * (d.entropy + spec.eps) - (spec.n - m) * d.eta


@dataclass(frozen=True)
class LoomisWhitneyReport:
    m: int
    log_vm: float
    log_bound: float
    margin: float  # log_bound - log_vm
    stderr: Optional[float]
    z: Optional[float]  # (bound - V_m) / stderr for fitted values
    method: str
    passed: bool


def loomis_whitney_check(spec: TypicalSetSpec, m: int, samples: int = 10**6,
                         seed: int = 0, sigmas: float = 3.0) -> LoomisWhitneyReport:
    """Compare ``V_m`` of the typical set with ``C(n, m)`` times the projection bound."""
    n = spec.n
    log_bound = float(special.gammaln(n + 1) - special.gammaln(m + 1)
                      - special.gammaln(n - m + 1)) + projection_volume_bound(spec, m)
    body = typical_body(spec)
    if isinstance(body, Ball):
        seq = ball_intrinsic_volumes(n, body.r)
    elif isinstance(body, Cube):
        seq = cube_intrinsic_volumes(n, body.A)
    else:
        if n > 3:
            raise ValueError("fitted intrinsic volumes need n <= 3")
        rep = steiner_fit(body, samples=samples, seed=seed)
        v, se = float(rep.values[m]), float(rep.stderr[m])
        z = (math.exp(log_bound) - v) / se if se > 0 else math.inf
        lv = math.log(v) if v > 0 else -math.inf
        return LoomisWhitneyReport(m, lv, log_bound, log_bound - lv, se, z, "steiner_fit",
                                   z >= -sigmas)
    lv = float(seq[m])
    margin = log_bound - lv
    return LoomisWhitneyReport(m, lv, log_bound, margin, None, None, "closed_form",
                               margin >= -1e-12)


# ---------------------------------------------------------------------------
# bloating


@dataclass(frozen=True)
class BloatReport:
    alpha: float
    n: int
    eps: float
    trials: int
    failures: int
    min_margin: float  # min of sum phi((1+alpha) y) - n (h + eps)


def bloat_check(d: LogConcaveDensity, eps: float, n: int, trials: int = 10_000,
                seed: int = 0) -> BloatReport:
    """Scale boundary points of the lower set by ``1 + alpha`` about the minimizer.

    The lower set is ``{sum phi <= n (h - eps)}``; every scaled point must
    not lie strictly inside the upper set ``{sum phi <= n (h + eps)}``.
    """
    if d.is_uniform:
        raise DensityError("uniform densities have an empty lower typical set")
    if not 0 < eps < d.entropy - d.eta:
        raise ValueError("need 0 < eps < h - eta")
    alpha = 2 * eps / (d.entropy - eps - d.eta)
    spec = TypicalSetSpec(d, n, eps)
    lower = n * (d.entropy - eps)
    upper = n * (d.entropy + eps)
    y = sample_typical(spec, trials, seed, shard=41, boundary=True, level=lower)
    z = spec.center + (1 + alpha) * (y - spec.center)
    margin = potential_sum(d, z) - upper
    fails = int(np.sum(margin < -1e-9 * max(1.0, abs(upper))))
    return BloatReport(alpha, n, eps, trials, fails, float(margin.min()))


# ---------------------------------------------------------------------------
# set-level property checks


@dataclass(frozen=True)
class SamplingCheck:
    name: str
    trials: int
    failures: int


def concatenation_check(d: LogConcaveDensity, eps: float, m: int, n: int,
                        trials: int = 100_000, seed: int = 0) -> SamplingCheck:
    """Typical points in dimensions ``m`` and ``n`` concatenate to a typical point."""
    sm, sn, smn = (TypicalSetSpec(d, k, eps) for k in (m, n, m + n))
    half = trials // 2
    x = np.concatenate([sample_typical(sm, half, seed, 51, boundary=True),
                        sample_typical(sm, trials - half, seed, 52)])
    y = np.concatenate([sample_typical(sn, half, seed, 53, boundary=True),
                        sample_typical(sn, trials - half, seed, 54)])
    ok = typical_membership(smn, np.hstack([x, y]), rtol=1e-12)
    return SamplingCheck("concatenation", trials, int(np.sum(~ok)))


def nesting_check(d: LogConcaveDensity, eps_small: float, eps_large: float, n: int,
                  trials: int = 100_000, seed: int = 0) -> SamplingCheck:
    if not eps_small < eps_large:
        raise ValueError("need eps_small < eps_large")
    a, b = TypicalSetSpec(d, n, eps_small), TypicalSetSpec(d, n, eps_large)
    x = sample_typical(a, trials, seed, 61, boundary=True)
    ok = typical_membership(b, x, rtol=1e-12)
    return SamplingCheck("nesting", trials, int(np.sum(~ok)))
