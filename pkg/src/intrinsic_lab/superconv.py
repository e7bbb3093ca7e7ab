"""Super-convolutive sequence families and their large-deviation limits.

A family ``n -> mu_n`` (log domain) is super-convolutive when
``(mu_m * mu_n)(i) <= mu_{m+n}(i)``. Then ``G_n(t) = log sum_j mu_n(j) e^{jt}``
is superadditive in ``n``, so ``g_n = G_n / n`` has a limit ``Lambda(t) =
sup_n g_n(t)``; the rate curve is the convex conjugate ``Lambda*`` on [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import special

from . import _kernels
from .convex_bodies import (
    IntrinsicVolumeSequence,
    ball_intrinsic_volumes,
    crosspolytope_intrinsic_volumes,
    cube_intrinsic_volumes,
    product_intrinsic_volumes,
)

NEG_INF = -np.inf
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConjugateBracketError(RuntimeError):
    """The conjugate maximizer kept escaping the search bracket."""


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class SuperConvFamily:
    """Sequences ``mu_1 .. mu_maxN`` with ``seqs[n-1].n == n``."""

    seqs: tuple
    provenance: str = "synthetic"

    def __post_init__(self):
        seqs = tuple(self.seqs)
        for k, s in enumerate(seqs, start=1):
            if s.n != k:
                raise ValueError(f"sequence {k} has dimension {s.n}")
        if not seqs:
            raise ValueError("empty family")
        object.__setattr__(self, "seqs", seqs)

    @property
    def max_n(self) -> int:
        return len(self.seqs)

    def __getitem__(self, n: int) -> IntrinsicVolumeSequence:
        if not 1 <= n <= self.max_n:
            raise IndexError(f"index {n} outside 1..{self.max_n}")
        return self.seqs[n - 1]

    @classmethod
    def from_function(cls, fn: Callable[[int], IntrinsicVolumeSequence], max_n: int,
                      provenance: str = "synthetic") -> "SuperConvFamily":
        return cls(tuple(fn(n) for n in range(1, max_n + 1)), provenance)

    def table(self, up_to: Optional[int] = None) -> np.ndarray:
        up_to = self.max_n if up_to is None else up_to
        out = np.full((up_to + 1, up_to + 1), NEG_INF)
        for n in range(1, up_to + 1):
            out[n, : n + 1] = self[n].logv
        return out

    def truncated(self, max_n: int) -> "SuperConvFamily":
        return SuperConvFamily(self.seqs[:max_n], self.provenance)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict()) + "\n" for s in self.seqs)

    @classmethod
    def from_jsonl(cls, text: str, provenance: str = "imported") -> "SuperConvFamily":
        seqs = [IntrinsicVolumeSequence.from_dict(json.loads(line))
                for line in text.splitlines() if line.strip()]
        seqs.sort(key=lambda s: s.n)
        return cls(tuple(seqs), provenance)


def cube_family(A: float, max_n: int) -> SuperConvFamily:
    return SuperConvFamily.from_function(lambda n: cube_intrinsic_volumes(n, A), max_n,
                                         f"closed form: cube A={A}")


def ball_family(radius: Callable[[int], float], max_n: int,
                provenance: str = "closed form: ball") -> SuperConvFamily:
    return SuperConvFamily.from_function(lambda n: ball_intrinsic_volumes(n, radius(n)),
                                         max_n, provenance)


def crosspolytope_family(A: float, max_n: int) -> SuperConvFamily:
    return SuperConvFamily.from_function(lambda n: crosspolytope_intrinsic_volumes(n, A),
                                         max_n, f"closed form: crosspolytope A={A}")


def appendix_example_family(alpha: float, delta: float, max_n: int) -> SuperConvFamily:
    """``mu_n(i) = C(n-1, i) alpha^i`` for ``i < n`` and ``mu_n(n) = delta``.

    Proper and super-convolutive, yet its rate function at 1 is ``-log alpha``
    while ``(1/n) log mu_n(n) -> 0``.
    """
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")

    def seq(n):
        i = np.arange(n, dtype=np.float64)
        logv = np.empty(n + 1)
        logv[:n] = (special.gammaln(n) - special.gammaln(i + 1) - special.gammaln(n - i)
                    + i * math.log(alpha))
        logv[n] = math.log(delta)
        return IntrinsicVolumeSequence(n, logv)

    return SuperConvFamily.from_function(seq, max_n,
                                         f"appendix example alpha={alpha} delta={delta}")


def convolve(a: IntrinsicVolumeSequence, b: IntrinsicVolumeSequence) -> IntrinsicVolumeSequence:
    return product_intrinsic_volumes(a, b)


# ---------------------------------------------------------------------------
# super-convolutivity


@dataclass(frozen=True)
class SuperconvReport:
    passed: bool
    worst_margin: float
    worst_pair: Optional[tuple]
    up_to: int
    tolerance: float


def check_superconvolutive(fam: SuperConvFamily, up_to: Optional[int] = None,
                           tol: float = 1e-9) -> SuperconvReport:
    """Worst ``log mu_{m+n}(i) - log (mu_m * mu_n)(i)`` over ``m + n <= up_to``."""
    up_to = fam.max_n if up_to is None else int(up_to)
    if up_to > fam.max_n:
        raise ValueError("up_to exceeds the materialized family")
    if up_to < 2:
        return SuperconvReport(True, math.inf, None, up_to, tol)
    margins = _kernels.active.superconv_margins(fam.table(up_to), up_to)
    k = int(np.argmin(margins))
    m, n = divmod(k, margins.shape[1])
    worst = float(margins[m, n])
    return SuperconvReport(worst >= -tol, worst, (m, n) if math.isfinite(worst) else None,
                           up_to, tol)


# ---------------------------------------------------------------------------
# generating functions and Lambda


def log_generating_function(fam: SuperConvFamily, n: int, t) -> np.ndarray:
    """``G_n(t)``; accepts scalar or array ``t``."""
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = _kernels.active.log_generating(np.ascontiguousarray(fam[n].logv), ts)
    return out if np.ndim(t) else float(out[0])


def normalized_generating_function(fam: SuperConvFamily, n: int, t) -> np.ndarray:
    """``g_n(t) = G_n(t) / n``."""
    return log_generating_function(fam, n, t) / n


def _envelope_indices(max_n: int) -> list:
    idx = {1, max_n, max(1, max_n - 1)}
    k = 1
    while k <= max_n:
        idx.add(k)
        idx.add(max(1, (3 * k) // 2))
        k *= 2
    return sorted(i for i in idx if i <= max_n)


def lower_envelope(fam: SuperConvFamily, t) -> np.ndarray:
    """``max_n g_n(t)`` over a geometric subset of indices.

    Superadditivity makes every ``g_n`` a lower bound on ``Lambda``.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    best = np.full(ts.shape, NEG_INF)
    for n in _envelope_indices(fam.max_n):
        best = np.maximum(best, normalized_generating_function(fam, n, ts))
    return best


def increment_indices(max_n: int) -> tuple:
    return max_n, max_n // 2


def increment_estimate(fam: SuperConvFamily, t, max_n: Optional[int] = None) -> np.ndarray:
    """Two-scale estimate ``(G_N(t) - G_M(t)) / (N - M)`` with ``M = N // 2``.

    For ``G_N = N Lambda + c + o(1)`` this cancels the constant that biases
    ``g_N`` by ``c / N``. Falls back to ``g_N`` when ``N < 2``.
    """
    N = fam.max_n if max_n is None else max_n
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    big, small = increment_indices(N)
    if small < 1:
        return normalized_generating_function(fam, big, ts)
    return ((log_generating_function(fam, big, ts) - log_generating_function(fam, small, ts))
            / (big - small))


@dataclass(frozen=True)
class LambdaEstimate:
    t: np.ndarray
    value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    g_last: np.ndarray
    gamma_hat: float
    n_used: int


def estimate_lambda(fam: SuperConvFamily, t) -> LambdaEstimate:
    """Estimate ``Lambda(t)`` with brackets.

    ``value`` is the two-scale increment estimate; ``lower = max_n g_n`` is a
    certified lower bracket; ``upper = max(gamma, t + gamma)`` uses the
    estimated ``gamma = Lambda(0)``; ``g_last`` is ``g_maxN`` itself.
    """
    if fam.max_n < 2:
        raise ValueError("need at least two sequences")
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    value = increment_estimate(fam, ts)
    gamma = float(increment_estimate(fam, 0.0)[0])
    lower = lower_envelope(fam, ts)
    upper = np.maximum(gamma, ts + gamma)
    g_last = normalized_generating_function(fam, fam.max_n, ts)
    return LambdaEstimate(ts, value, lower, upper, g_last, gamma, fam.max_n)


def trusted_window(fam: SuperConvFamily, tol: float = 1e-2, t_max: float = 60.0,
                   step: float = 0.25) -> tuple:
    """Largest ``[a, b]`` around 0 where the increment estimate is scale-stable.

    Compares the estimate from ``(N, N/2)`` with the one from ``(N/2, N/4)``;
    beyond the window finite-size terms (e.g. a lone top coefficient) dominate.
    """
    N = fam.max_n
    if N < 4:
        return -t_max, t_max
    ts = np.arange(0.0, t_max + step / 2, step)

    def reach(grid):
        d = np.abs(increment_estimate(fam, grid, N) - increment_estimate(fam, grid, N // 2))
        bad = np.flatnonzero(d > tol)
        if bad.size == 0:
            return grid[-1]
        return grid[bad[0] - 1] if bad[0] > 0 else 0.0

    return float(reach(-ts)), float(reach(ts))


# ---------------------------------------------------------------------------
# conjugates


def _golden_max(obj: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                xtol: float) -> tuple:
    """Vectorized golden-section search for the max of concave ``obj`` on [a, b]."""
    a = a.astype(np.float64).copy()
    b = b.astype(np.float64).copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    for _ in range(200):
        if np.all(b - a <= xtol):
            break
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - GOLDEN * (b - a), d)
        nd = np.where(left, c, a + GOLDEN * (b - a))
        fnew = obj(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
    # compare the interior optimum with the endpoints (guards flat/edge optima)
    x = 0.5 * (a + b)
    cands = np.stack([x, a, b])
    vals = np.stack([obj(x), obj(a), obj(b)])
    k = np.argmax(vals, axis=0)
    cols = np.arange(x.shape[0])
    return cands[k, cols], vals[k, cols]


@dataclass(frozen=True)
class ConjugateResult:
    value: np.ndarray
    argmax: np.ndarray
    widenings: np.ndarray
    at_infinity: np.ndarray


def conjugate(f: Callable[[np.ndarray], np.ndarray], theta, lo, hi, xtol: float = 1e-10,
              max_widen: int = 10, vtol: float = 1e-10) -> ConjugateResult:
    """``sup_t theta t - f(t)`` for many ``theta`` at once.

    Starts from the brackets ``[lo, hi]``; when the maximizer lands on a
    bracket edge that side is doubled and the search repeated. After
    ``max_widen`` widenings a maximizer still on the edge is accepted only if
    the last widening moved the value by less than ``vtol`` (the supremum is
    approached at infinity, e.g. ``theta`` in {0, 1}); otherwise
    :class:`ConjugateBracketError` is raised.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), th.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), th.shape).copy()
    if np.any(lo >= hi):
        raise ValueError("empty bracket")
    widen = np.zeros(th.shape, dtype=int)
    prev = np.full(th.shape, np.nan)
    active = np.ones(th.shape, dtype=bool)
    val = np.empty(th.shape)
    arg = np.empty(th.shape)
    at_inf = np.zeros(th.shape, dtype=bool)
    for rnd in range(max_widen + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        tt = th[idx]
        x, v = _golden_max(lambda t, tt=tt: tt * t - f(t), lo[idx], hi[idx], xtol)
        val[idx], arg[idx] = v, x
        width = hi[idx] - lo[idx]
        edge_tol = max(10 * xtol, 0.0) + 1e-9 * width
        at_lo = x - lo[idx] <= edge_tol
        at_hi = hi[idx] - x <= edge_tol
        on_edge = at_lo | at_hi
        settled = np.abs(v - prev[idx]) <= vtol * np.maximum(1.0, np.abs(v))
        done = ~on_edge
        if rnd == max_widen:
            at_inf[idx] = on_edge & settled
            bad = on_edge & ~settled
            if bad.any():
                raise ConjugateBracketError(
                    f"maximizer escaped the bracket at theta={th[idx][bad][:3]}")
            break
        prev[idx] = v
        grow = idx[on_edge]
        w = (hi - lo)[grow]
        lo[grow] = np.where(at_lo[on_edge], lo[grow] - w, lo[grow])
        hi[grow] = np.where(at_hi[on_edge], hi[grow] + w, hi[grow])
        widen[grow] += 1
        active[idx[done]] = False
    return ConjugateResult(val, arg, widen, at_inf)


def legendre_conjugate(f: Callable[[np.ndarray], np.ndarray], theta: float,
                       bracket: Sequence[float] = (-10.0, 10.0), **kw) -> float:
    """Scalar ``sup_t {theta t - f(t)}`` with the widen-and-retry bracket policy."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    fv = lambda t: np.asarray(f(t), dtype=np.float64)
    res = conjugate(fv, theta, bracket[0], bracket[1], **kw)
    return float(res.value[0])


def maximizer_bracket(theta: np.ndarray, gamma: float, log_mu1_0: float,
                      log_mu1_1: float) -> tuple:
    """Interval holding the conjugate maximizer for ``theta`` in (0, 1).

    Valid for any function squeezed between ``g_1`` and ``max(gamma, t+gamma)``.
    """
    th = np.asarray(theta, dtype=np.float64)
    lo = (log_mu1_0 - gamma) / th
    hi = (gamma - log_mu1_1) / (1.0 - th)
    return lo, hi


# ---------------------------------------------------------------------------
# rate curves


@dataclass(frozen=True)
class RateCurve:
    """Tabulated ``theta -> Lambda*(theta)`` (or ``g_N*``) on [0, 1]."""

    theta: np.ndarray
    values: np.ndarray
    bracket_lo: np.ndarray
    bracket_hi: np.ndarray
    n_used: int
    mode: str
    endpoints: dict = field(default_factory=dict)

    @property
    def width(self) -> np.ndarray:
        return self.bracket_hi - self.bracket_lo

    def to_csv(self) -> str:
        rows = ["theta,value,bracket_lo,bracket_hi"]
        for r in zip(self.theta, self.values, self.bracket_lo, self.bracket_hi):
            rows.append(",".join(f"{x:.12g}" for x in r))
        return "\n".join(rows) + "\n"


def _interior_brackets(fam, theta, gamma):
    mu1 = fam[1].logv
    if np.isfinite(mu1).all() and math.isfinite(gamma):
        lo, hi = maximizer_bracket(theta, gamma, mu1[0], mu1[1])
        pad = 1.0 + 0.05 * (np.abs(lo) + np.abs(hi))
        return lo - pad, hi + pad
    return np.full(theta.shape, -20.0), np.full(theta.shape, 20.0)


def _endpoint_data(fam):
    N = fam.max_n
    r0 = np.array([fam[n].logv[0] / n for n in range(1, N + 1)])
    r1 = np.array([fam[n].logv[n] / n for n in range(1, N + 1)])
    return {
        "beta_last": float(r0[-1]), "beta_lower": float(r0.max()),
        "alpha_last": float(r1[-1]), "alpha_lower": float(r1.max()),
    }


def rate_curve(fam: SuperConvFamily, theta_grid, mode: str = "gn_star",
               window_tol: float = 1e-2, gap_tol: float = 1e-3) -> RateCurve:
    """Conjugate curve of ``g_N`` (``gn_star``) or of the Lambda estimate.

    Endpoints: ``gn_star`` uses the exact limits ``g_N*(0) = -(1/N) log mu_N(0)``
    and ``g_N*(1) = -(1/N) log mu_N(N)``. ``lambda_star`` uses the conjugate
    limit over the trusted window and records ``-beta``/``-alpha`` alongside,
    flagging a strict gap when they differ by more than ``gap_tol``.

    ``bracket_hi`` is the conjugate of the certified lower envelope
    ``max_n g_n`` (an upper bound on ``Lambda*``); ``bracket_lo = -gamma``.
    """
    if mode not in ("gn_star", "lambda_star"):
        raise ValueError(f"unknown mode {mode!r}")
    theta = np.unique(np.asarray(theta_grid, dtype=np.float64))
    if theta.size == 0 or theta[0] < 0 or theta[-1] > 1:
        raise ValueError("theta grid must lie in [0, 1]")
    N = fam.max_n
    ends = _endpoint_data(fam)
    interior = (theta > 0) & (theta < 1)
    values = np.empty(theta.shape)

    if mode == "gn_star":
        f = lambda t: normalized_generating_function(fam, N, t)
        gamma = float(f(np.zeros(1))[0])
        if interior.any():
            lo, hi = _interior_brackets(fam, theta[interior], gamma)
            values[interior] = conjugate(f, theta[interior], lo, hi).value
        values[theta == 0] = -fam[N].logv[0] / N
        values[theta == 1] = -fam[N].logv[N] / N
        window = None
    else:
        f = lambda t: increment_estimate(fam, t)
        gamma = float(f(np.zeros(1))[0])
        window = trusted_window(fam, tol=window_tol)
        if interior.any():
            lo, hi = _interior_brackets(fam, theta[interior], gamma)
            lo = np.clip(lo, window[0], window[1] - 1e-6)
            hi = np.clip(hi, lo + 1e-6, window[1])
            # the estimate is only trusted inside the window, so no widening
            values[interior] = _bounded_conjugate(f, theta[interior], lo, hi)
        tw = np.linspace(window[0], window[1], 4001)
        fw = f(tw)
        lam0 = float(np.max(-fw))  # sup_t -Lambda(t): limit as t -> -inf
        lam1 = float(np.max(tw - fw))  # sup_t t - Lambda(t): limit as t -> +inf
        values[theta == 0] = lam0
        values[theta == 1] = lam1
        ends.update({
            "conjugate_at_0": lam0, "conjugate_at_1": lam1,
            "minus_beta": -ends["beta_last"], "minus_alpha": -ends["alpha_last"],
            "strict_gap_at_0": bool(-ends["beta_last"] - lam0 > gap_tol),
            "strict_gap_at_1": bool(-ends["alpha_last"] - lam1 > gap_tol),
            "window": window,
        })

    # certified bracket on Lambda*: [-gamma, (max_n g_n)*]
    env = lambda t: lower_envelope(fam, t)
    hi_br = np.empty(theta.shape)
    if interior.any():
        lo, hi = _interior_brackets(fam, theta[interior], gamma)
        hi_br[interior] = _bounded_conjugate(env, theta[interior], lo, hi, widen=True)
    hi_br[theta == 0] = -ends["beta_lower"]
    hi_br[theta == 1] = -ends["alpha_lower"]
    lo_br = np.full(theta.shape, -gamma)
    ends["gamma_hat"] = gamma
    return RateCurve(theta, values, np.minimum(lo_br, values), np.maximum(hi_br, values),
                     N, mode, ends)


def _bounded_conjugate(f, theta, lo, hi, widen=False):
    if widen:
        return conjugate(f, theta, lo, hi).value
    x, v = _golden_max(lambda t: theta * t - f(t), np.asarray(lo), np.asarray(hi), 1e-10)
    return v


def curve_concavity(values: np.ndarray) -> float:
    """Largest second difference (``<= 0`` for a concave sequence)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 3:
        return -math.inf
    return float(np.max(v[2:] - 2 * v[1:-1] + v[:-2]))


# ---------------------------------------------------------------------------
# interval masses


def interval_mass_bounds(fam: SuperConvFamily, interval: Sequence[float], n: int) -> float:
    """``(1/n) log sum_{j : j/n in [a, b]} mu_n(j)``; ``-inf`` if no index fits."""
    a, b = interval
    if not 0 <= a <= b <= 1:
        raise ValueError("interval must satisfy 0 <= a <= b <= 1")
    lv = fam[n].logv
    j = np.arange(n + 1)
    # small slack so that exact grid points survive rounding of j/n
    sel = (j >= a * n - 1e-9) & (j <= b * n + 1e-9)
    if not sel.any():
        return NEG_INF
    return float(special.logsumexp(lv[sel]) / n)


def rate_infimum(curve: RateCurve, interval: Sequence[float], open_: bool = False) -> float:
    """``inf Lambda*`` over the grid points of ``curve`` inside the interval."""
    a, b = interval
    th = curve.theta
    sel = (th > a) & (th < b) if open_ else (th >= a) & (th <= b)
    if not sel.any():
        return math.inf
    return float(curve.values[sel].min())


# ---------------------------------------------------------------------------
# properness and property checks


@dataclass(frozen=True)
class PropernessReport:
    endpoints_positive: bool
    beta: float
    beta_lower: float
    alpha: float
    alpha_lower: float
    gamma: float
    gamma_lower: float
    finite: bool

    @property
    def proper(self) -> bool:
        return self.endpoints_positive and self.finite

    @property
    def gamma_status(self) -> str:
        return "finite" if self.finite else "possibly infinite"


def properness(fam: SuperConvFamily) -> PropernessReport:
    """Estimates of ``beta``, ``alpha``, ``gamma`` with certified lower brackets.

    ``gamma`` is reported as finite only when the certified lower bracket and
    the estimate are both finite; an unbounded family reads as "possibly
    infinite".
    """
    pos = all(np.isfinite(s.logv[0]) and np.isfinite(s.logv[-1]) for s in fam.seqs)
    e = _endpoint_data(fam)
    gamma = float(increment_estimate(fam, 0.0)[0]) if fam.max_n >= 2 else float(
        normalized_generating_function(fam, 1, 0.0))
    gamma_lo = float(lower_envelope(fam, 0.0)[0])
    finite = all(math.isfinite(x) for x in (e["beta_last"], e["alpha_last"], gamma, gamma_lo))
    return PropernessReport(bool(pos), e["beta_last"], e["beta_lower"], e["alpha_last"],
                            e["alpha_lower"], gamma, gamma_lo, finite)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)


def check_gn_superadditivity(fam: SuperConvFamily, t_grid, tol: float = 1e-9) -> CheckResult:
    """``g_n(t) <= g_{2n}(t)`` for every ``n`` with ``2n <= maxN``."""
    ts = np.asarray(t_grid, dtype=np.float64)
    worst = math.inf
    where = None
    for n in range(1, fam.max_n // 2 + 1):
        d = normalized_generating_function(fam, 2 * n, ts) - normalized_generating_function(
            fam, n, ts)
        k = int(np.argmin(d))
        if d[k] < worst:
            worst, where = float(d[k]), (n, float(ts[k]))
    return CheckResult("gn_superadditivity", worst >= -tol, worst, {"worst_at": where})


def check_lambda_bounds(fam: SuperConvFamily, t_grid, tol: float = 1e-9) -> CheckResult:
    """``g_1 <= Lambda_hat <= max(gamma_hat, t + gamma_hat)`` pointwise."""
    est = estimate_lambda(fam, t_grid)
    g1 = normalized_generating_function(fam, 1, est.t)
    low = float(np.min(est.value - g1))
    up = float(np.min(est.upper - est.value))
    convex = curve_concavity(-est.value)  # second differences of Lambda_hat, negated
    mono = float(np.min(np.diff(est.value))) if est.value.size > 1 else 0.0
    margin = min(low, up)
    ok = margin >= -tol and convex <= tol and mono >= -tol
    return CheckResult("lambda_bounds", ok, margin,
                       {"lower_margin": low, "upper_margin": up,
                        "min_second_difference": -convex, "min_increment": mono})
