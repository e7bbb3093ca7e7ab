"""Intrinsic volumes of convex bodies.

Closed forms for balls, cubes and regular crosspolytopes, products by
log-domain convolution, Steiner tube volumes, and a Monte-Carlo estimator that
recovers intrinsic volumes of a body known only through a membership oracle
and a Euclidean projection.

Everything is stored as ``log V_j``; ``-inf`` stands for a zero volume.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, optimize, special

from . import _kernels
from ._rng import shard_generator

NEG_INF = -np.inf


class DegenerateEstimateError(RuntimeError):
    """A Monte-Carlo estimate saw no hits and cannot be trusted."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SteinerFitError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True)
class IntrinsicVolumeSequence:
    """Log intrinsic volumes ``logv[j] = log V_j`` of an ``n``-dimensional body.

    Indices past ``n`` read as ``-inf``. ``linear`` optionally holds the same
    values computed directly in linear arithmetic (small closed forms), so
    ``values`` can be exact where ``exp(logv)`` would round.
    """

    n: int
    logv: np.ndarray
    linear: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        logv = np.asarray(self.logv, dtype=np.float64).copy()
        if self.n < 0:
            raise ValueError("dimension must be nonnegative")
        if logv.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} entries, got {logv.shape}")
        if np.isnan(logv).any() or np.isposinf(logv).any():
            raise ValueError("log volumes must be finite or -inf")
        logv.flags.writeable = False
        object.__setattr__(self, "logv", logv)
        if self.linear is not None:
            lin = np.asarray(self.linear, dtype=np.float64).copy()
            if lin.shape != logv.shape:
                raise ValueError("linear values must match logv")
            lin.flags.writeable = False
            object.__setattr__(self, "linear", lin)

    @classmethod
    def from_values(cls, values) -> "IntrinsicVolumeSequence":
        v = np.asarray(values, dtype=np.float64)
        if (v < 0).any():
            raise ValueError("intrinsic volumes are nonnegative")
        with np.errstate(divide="ignore"):
            return cls(len(v) - 1, np.log(v))

    def __getitem__(self, j: int) -> float:
        if j < 0:
            raise IndexError(j)
        return float(self.logv[j]) if j <= self.n else NEG_INF

    def __len__(self) -> int:
        return self.n + 1

    @property
    def values(self) -> np.ndarray:
        return self.linear.copy() if self.linear is not None else np.exp(self.logv)

    def padded(self, length: int) -> np.ndarray:
        out = np.full(length, NEG_INF)
        k = min(length, self.n + 1)
        out[:k] = self.logv[:k]
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "log_v": [_enc(x) for x in self.logv]}

    @classmethod
    def from_dict(cls, d: dict) -> "IntrinsicVolumeSequence":
        return cls(int(d["n"]), np.array([_dec(x) for x in d["log_v"]]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "IntrinsicVolumeSequence":
        return cls.from_dict(json.loads(s))


def _enc(x: float):
    if x == NEG_INF:
        return "-inf"
    return float(x)


def _dec(x) -> float:
    if isinstance(x, str):
        if x.strip() != "-inf":
            raise ValueError(f"bad log volume {x!r}")
        return NEG_INF
    return float(x)


POINT = IntrinsicVolumeSequence(0, np.zeros(1))


# ---------------------------------------------------------------------------
# body descriptions


@dataclass(frozen=True)
class Ball:
    n: int
    r: float = 1.0

    def __post_init__(self):
        _check_dim(self.n)
        if not self.r > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class Cube:
    """The cube ``[0, A]^n``."""

    n: int
    A: float = 1.0

    def __post_init__(self):
        _check_dim(self.n)
        if not self.A > 0:
            raise ValueError("side must be positive")


@dataclass(frozen=True)
class Crosspolytope:
    """The l1 ball ``{x : sum |x_i| <= A n}``."""

    n: int
    A: float = 1.0

    def __post_init__(self):
        _check_dim(self.n)
        if not self.A > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class Product:
    first: "ConvexBodySpec"
    second: "ConvexBodySpec"

    @property
    def n(self) -> int:
        return self.first.n + self.second.n


@dataclass(frozen=True)
class Oracle:
    """A convex body given by membership plus a distance routine.

    ``distance(points)`` must return the Euclidean distance of each row to the
    body (zero inside). Without one, distance is taken along the ray towards
    ``center`` by bisection, which is exact for balls about ``center`` and an
    overestimate otherwise.

    Sampling uses the axis box ``[box_lo - t, box_hi + t]`` when given, else
    the cube of half-width ``radius + t`` about ``center``.
    """

    dim: int
    contains: Callable[[np.ndarray], np.ndarray]
    radius: float
    center: Optional[np.ndarray] = None
    distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    box_lo: Optional[np.ndarray] = None
    box_hi: Optional[np.ndarray] = None
    name: str = "oracle"
    diameter: Optional[float] = None

    def __post_init__(self):
        _check_dim(self.dim)
        if not self.radius > 0:
            raise ValueError("bounding radius must be positive")
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, float)
        object.__setattr__(self, "center", c)
        if not bool(np.all(self.contains(c[None, :]))):
            raise ValueError("oracle must contain its center point")

    @property
    def n(self) -> int:
        return self.dim

    def sampling_box(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if self.box_lo is not None:
            return np.asarray(self.box_lo) - t, np.asarray(self.box_hi) + t
        half = self.radius + t
        return self.center - half, self.center + half

    def dist(self, pts: np.ndarray) -> np.ndarray:
        if self.distance is not None:
            return self.distance(pts)
        return _ray_distance(self, pts)


ConvexBodySpec = Union[Ball, Cube, Crosspolytope, Product, Oracle]


def _check_dim(n):
    if int(n) != n or n < 1:
        raise ValueError("dimension must be a positive integer")


def _ray_distance(oracle: Oracle, pts: np.ndarray, iters: int = 60) -> np.ndarray:
    inside = np.asarray(oracle.contains(pts), dtype=bool)
    out = np.zeros(pts.shape[0])
    if inside.all():
        return out
    x = pts[~inside]
    c = oracle.center
    lo = np.zeros(x.shape[0])
    hi = np.ones(x.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = np.asarray(oracle.contains(c + mid[:, None] * (x - c)), dtype=bool)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    out[~inside] = (1.0 - lo) * np.linalg.norm(x - c, axis=1)
    return out


# ---------------------------------------------------------------------------
# closed forms


def unit_ball_volume(j: int) -> float:
    """``log`` of the volume of the unit ball in dimension ``j``."""
    if j < 0:
        raise ValueError("dimension must be nonnegative")
    return 0.5 * j * math.log(math.pi) - special.gammaln(0.5 * j + 1.0)


def _log_omega(j: np.ndarray) -> np.ndarray:
    j = np.asarray(j, dtype=np.float64)
    return 0.5 * j * np.log(np.pi) - special.gammaln(0.5 * j + 1.0)


def _log_binom(n, k):
    return special.gammaln(n + 1.0) - special.gammaln(k + 1.0) - special.gammaln(n - k + 1.0)


def ball_intrinsic_volumes(n: int, r: float = 1.0) -> IntrinsicVolumeSequence:
    Ball(n, r)
    j = np.arange(n + 1, dtype=np.float64)
    logv = _log_binom(n, j) + _log_omega(n) - _log_omega(n - j) + j * math.log(r)
    logv[0] = 0.0
    return IntrinsicVolumeSequence(n, logv)


# every C(n, j) with n <= 56 is below 2^53, so it converts to float64 exactly
_EXACT_BINOM_MAX_N = 56


def cube_intrinsic_volumes(n: int, A: float = 1.0) -> IntrinsicVolumeSequence:
    Cube(n, A)
    j = np.arange(n + 1, dtype=np.float64)
    logv = _log_binom(n, j) + j * math.log(A)
    linear = None
    if n <= _EXACT_BINOM_MAX_N:
        # C(n, j) A^j with integer binomials; exact whenever A^j is
        linear = np.array([math.comb(n, k) * A**k for k in range(n + 1)], dtype=np.float64)
    return IntrinsicVolumeSequence(n, logv, linear)


_INNER_UPPER = 12.0


@lru_cache(maxsize=None)
def crosspolytope_inner_integral(n: int, i: int, rtol: float = 1e-10) -> float:
    """``log`` of ``int_0^inf exp(-x^2) erf(x / sqrt(i+1))^(n-i-1) dx``.

    Integrated on ``[0, 12]`` (the integrand is below 1e-60 past it) after
    dividing out the peak of the integrand, so large exponents stay finite.
    """
    if not 0 <= i <= n - 1:
        raise ValueError("need 0 <= i <= n-1")
    k = n - i - 1
    if k == 0:
        return 0.5 * math.log(math.pi) - math.log(2.0)
    s = math.sqrt(i + 1.0)

    def logf(x):
        if x <= 0.0:
            return -np.inf
        return -x * x + k * math.log(special.erf(x / s))

    res = optimize.minimize_scalar(lambda x: -logf(x), bounds=(1e-12, _INNER_UPPER),
                                   method="bounded", options={"xatol": 1e-12})
    xpk = float(res.x)
    peak = logf(xpk)

    def f(x):
        return math.exp(logf(x) - peak)

    val, err = integrate.quad(f, 0.0, _INNER_UPPER, points=[xpk], epsabs=0.0,
                              epsrel=rtol, limit=500)
    if not err <= max(rtol * abs(val), 1e-300) * 10:
        raise QuadratureError(
            f"crosspolytope integral n={n} i={i}: achieved error {err:.3e} on {val:.3e}")
    return peak + math.log(val)


def crosspolytope_intrinsic_volumes(n: int, A: float = 1.0) -> IntrinsicVolumeSequence:
    Crosspolytope(n, A)
    logv = np.empty(n + 1)
    lnA = math.log(n * A)
    for i in range(n):
        logv[i] = ((i + 1) * math.log(2.0) + _log_binom(n, i + 1) + 0.5 * math.log(i + 1)
                   - special.gammaln(i + 1.0) + i * lnA - 0.5 * math.log(math.pi)
                   + crosspolytope_inner_integral(n, i))
    logv[n] = n * math.log(2.0) + n * lnA - special.gammaln(n + 1.0)
    linear = None
    if n <= _EXACT_BINOM_MAX_N:
        # the volume (2nA)^n / n! and V_0 = 1 are exact; the rest come from quadrature
        linear = np.exp(logv)
        linear[0] = 1.0
        linear[n] = (2.0 * n * A) ** n / math.factorial(n)
    return IntrinsicVolumeSequence(n, logv, linear)


def product_intrinsic_volumes(a: IntrinsicVolumeSequence,
                              b: IntrinsicVolumeSequence) -> IntrinsicVolumeSequence:
    """Intrinsic volumes of a Cartesian product: the convolution of the factors."""
    out = _kernels.active.log_convolve(np.ascontiguousarray(a.logv),
                                       np.ascontiguousarray(b.logv))
    return IntrinsicVolumeSequence(a.n + b.n, out)


def intrinsic_volumes(spec: ConvexBodySpec) -> IntrinsicVolumeSequence:
    if isinstance(spec, Ball):
        return ball_intrinsic_volumes(spec.n, spec.r)
    if isinstance(spec, Cube):
        return cube_intrinsic_volumes(spec.n, spec.A)
    if isinstance(spec, Crosspolytope):
        return crosspolytope_intrinsic_volumes(spec.n, spec.A)
    if isinstance(spec, Product):
        return product_intrinsic_volumes(intrinsic_volumes(spec.first),
                                         intrinsic_volumes(spec.second))
    raise TypeError(f"no closed form for {type(spec).__name__}; use steiner_fit")


def steiner_volume(spec, t: float) -> float:
    """``|K + tB|`` from the Steiner polynomial of a closed-form body."""
    if t < 0:
        raise ValueError("tube radius must be nonnegative")
    seq = spec if isinstance(spec, IntrinsicVolumeSequence) else intrinsic_volumes(spec)
    n = seq.n
    j = np.arange(n + 1)
    terms = seq.logv[n - j] + _log_omega(j)
    if t == 0:
        return float(np.exp(terms[0]))
    terms = terms + j * math.log(t)
    return float(np.exp(special.logsumexp(terms)))


# ---------------------------------------------------------------------------
# oracles for the closed-form shapes


def as_oracle(spec: ConvexBodySpec) -> Oracle:
    """Membership/distance oracle for a closed-form body (exact projections)."""
    k = _kernels.active
    if isinstance(spec, Oracle):
        return spec
    if isinstance(spec, Ball):
        c = np.zeros(spec.n)
        return Oracle(spec.n, lambda x: np.sum(x * x, axis=1) <= spec.r ** 2, spec.r,
                      center=c, distance=lambda x: k.ball_distance(x, c, spec.r),
                      name=f"ball{spec.n}", diameter=2 * spec.r)
    if isinstance(spec, Cube):
        lo, hi = np.zeros(spec.n), np.full(spec.n, float(spec.A))
        return Oracle(spec.n, lambda x: np.all((x >= 0) & (x <= spec.A), axis=1),
                      spec.A * math.sqrt(spec.n), center=np.full(spec.n, spec.A / 2),
                      distance=lambda x: k.box_distance(x, lo, hi), box_lo=lo, box_hi=hi,
                      name=f"cube{spec.n}", diameter=spec.A * math.sqrt(spec.n))
    if isinstance(spec, Crosspolytope):
        c = np.zeros(spec.n)
        rad = spec.A * spec.n
        return Oracle(spec.n, lambda x: np.sum(np.abs(x), axis=1) <= rad, rad, center=c,
                      distance=lambda x: k.l1_distance(x, c, rad), box_lo=-np.full(spec.n, rad),
                      box_hi=np.full(spec.n, rad), name=f"crosspolytope{spec.n}",
                      diameter=2 * rad)
    raise TypeError(f"cannot build an oracle for {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Monte-Carlo tube volumes and Steiner fitting

_CHUNK = 1 << 17


@dataclass(frozen=True)
class TubeEstimate:
    estimate: float
    stderr: float
    hits: int
    samples: int
    box_volume: float


def mc_tube_volume(oracle: Oracle, t: float, samples: int, seed: int,
                   shard: int = 0) -> TubeEstimate:
    """Estimate ``|K + tB|`` by uniform sampling in a box covering the tube.

    Deterministic given ``(seed, shard)``; chunks draw from one stream in order.
    """
    if t < 0:
        raise ValueError("tube radius must be nonnegative")
    samples = int(samples)
    if samples < 1:
        raise ValueError("need at least one sample")
    lo, hi = oracle.sampling_box(t)
    width = hi - lo
    box_volume = float(np.prod(width))
    rng = shard_generator(seed, shard)
    hits = 0
    left = samples
    while left > 0:
        m = min(left, _CHUNK)
        pts = lo + width * rng.random((m, oracle.dim))
        d = oracle.dist(pts)
        hits += int(np.count_nonzero(d <= t))
        left -= m
    if hits == 0:
        raise DegenerateEstimateError(
            f"no hits in {samples} samples for t={t}; the box may not cover the body")
    p = hits / samples
    est = p * box_volume
    se = box_volume * math.sqrt(p * (1.0 - p) / samples)
    return TubeEstimate(est, se, hits, samples, box_volume)


@dataclass(frozen=True)
class SteinerFitReport:
    estimates: IntrinsicVolumeSequence
    stderr: np.ndarray
    t_grid: np.ndarray
    raw: tuple
    condition_number: float
    coefficients: np.ndarray
    negative_flags: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    @property
    def values(self) -> np.ndarray:
        return self.estimates.values

    @property
    def raw_volumes(self) -> np.ndarray:
        return np.array([r.estimate for r in self.raw])

    @property
    def raw_stderr(self) -> np.ndarray:
        return np.array([r.stderr for r in self.raw])

    def to_dict(self) -> dict:
        return {
            "estimates": self.estimates.to_dict(),
            "values": [float(v) for v in self.values],
            "stderr": [float(s) for s in self.stderr],
            "t_grid": [float(t) for t in self.t_grid],
            "raw": [{"t": float(t), "estimate": r.estimate, "stderr": r.stderr,
                     "hits": r.hits, "samples": r.samples, "box_volume": r.box_volume}
                    for t, r in zip(self.t_grid, self.raw)],
            "condition_number": self.condition_number,
            "negative_flags": [bool(b) for b in self.negative_flags],
        }


def default_t_grid(diameter: float, count: int) -> np.ndarray:
    """Chebyshev-spaced radii in ``[0.1 diam, 2 diam]``."""
    a, b = 0.1 * diameter, 2.0 * diameter
    k = np.arange(count)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * count))
    return np.sort(0.5 * (a + b) + 0.5 * (b - a) * nodes)


def steiner_fit(oracle: Oracle, t_grid=None, samples: int = 10**6, seed: int = 0,
                neg_tol: float = 3.0, jobs: int = 1) -> SteinerFitReport:
    """Recover intrinsic volumes from Monte-Carlo tube volumes.

    Fits ``|K + tB| = sum_j c_j t^j`` by inverse-variance weighted nonnegative
    least squares and returns ``V_{n-j} = c_j / omega_j`` with standard errors
    from the weighted normal equations. Coefficients the NNLS clamps to zero
    are flagged when the unconstrained solution sits more than ``neg_tol``
    standard errors below zero.
    """
    n = oracle.dim
    if t_grid is None:
        diam = oracle.diameter if oracle.diameter is not None else 2 * oracle.radius
        t_grid = default_t_grid(diam, n + 2)
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or len(t_grid) < n + 1:
        raise SteinerFitError(f"need at least {n + 1} radii, got {len(t_grid)}")
    if len(np.unique(t_grid)) != len(t_grid) or (t_grid < 0).any():
        raise SteinerFitError("radii must be distinct and nonnegative")

    # one stream per radius, so the result does not depend on ``jobs``
    tasks = [(float(t), k) for k, t in enumerate(t_grid)]
    run = lambda task: mc_tube_volume(oracle, task[0], samples, seed, shard=task[1])
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            raw = tuple(pool.map(run, tasks))
    else:
        raw = tuple(map(run, tasks))
    y = np.array([r.estimate for r in raw])
    se = np.array([r.stderr for r in raw])
    if (y <= 0).any():
        raise SteinerFitError("nonpositive tube volume estimate")
    se = np.where(se > 0, se, 1e-12 * y)

    design = t_grid[:, None] ** np.arange(n + 1)[None, :]
    w = 1.0 / se
    aw = design * w[:, None]
    yw = y * w
    # column scaling keeps the solve well posed across powers of t
    scale = np.linalg.norm(aw, axis=0)
    if (scale == 0).any():
        raise SteinerFitError("design matrix has a zero column")
    a_s = aw / scale
    cond = float(np.linalg.cond(design))
    if np.linalg.matrix_rank(a_s) < n + 1:
        raise SteinerFitError("design matrix is rank deficient")

    coef_s, _ = optimize.nnls(a_s, yw)
    coef = coef_s / scale
    cov = np.linalg.inv(aw.T @ aw)
    coef_se = np.sqrt(np.diag(cov))
    free = np.linalg.lstsq(a_s, yw, rcond=None)[0] / scale
    negative = free < -neg_tol * coef_se

    j = np.arange(n + 1)
    omega = np.exp(_log_omega(j))
    vols = coef / omega  # vols[j] = V_{n-j}
    vols_se = coef_se / omega
    v = vols[::-1]
    with np.errstate(divide="ignore"):
        seq = IntrinsicVolumeSequence(n, np.log(v))
    return SteinerFitReport(seq, vols_se[::-1], t_grid, raw, cond, coef, negative[::-1])


# ---------------------------------------------------------------------------
# Alexandrov-Fenchel log-concavity


@dataclass(frozen=True)
class AlexandrovFenchelReport:
    margins: np.ndarray
    passed: bool
    worst_index: Optional[int]
    tolerance: float


def check_alexandrov_fenchel(v: IntrinsicVolumeSequence,
                             tol: float = 1e-9) -> AlexandrovFenchelReport:
    """Margins ``2 log V_j - log V_{j-1} - log V_{j+1} - log((j+1)/j)``.

    Indices with an infinite neighbour get margin ``+inf`` (nothing to check).
    """
    lv = v.logv
    n = v.n
    if n < 2:
        return AlexandrovFenchelReport(np.zeros(0), True, None, tol)
    j = np.arange(1, n)
    with np.errstate(invalid="ignore"):
        m = 2 * lv[j] - lv[j - 1] - lv[j + 1] - np.log((j + 1) / j)
    finite = np.isfinite(lv[j - 1]) & np.isfinite(lv[j + 1])
    m = np.where(finite, m, np.inf)
    worst = int(j[np.argmin(m)])
    passed = bool(np.all(m >= -tol))
    return AlexandrovFenchelReport(m, passed, worst, tol)
