"""Intrinsic entropy curves ``theta -> h_X(theta)``.

Closed forms for gaussian and uniform densities, a numeric pipeline over an
eps ladder for families with closed-form typical bodies, and a certified band
for everything else.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .convex_bodies import check_alexandrov_fenchel, steiner_fit
from .logconcave import LogConcaveDensity, TypicalSetSpec, linear_minorant, typical_body
from .superconv import SuperConvFamily, ball_family, cube_family, rate_curve

DEFAULT_LADDER = (0.2, 0.1, 0.05, 0.025)


class UnsupportedPairError(ValueError):
    pass


def binary_entropy(theta):
    """``H(theta)`` in nats with ``H(0) = H(1) = 0``."""
    th = np.asarray(theta, dtype=np.float64)
    if np.any((th < 0) | (th > 1)):
        raise ValueError("theta must lie in [0, 1]")
    out = special.entr(th) + special.entr(1.0 - th)
    return float(out) if np.ndim(theta) == 0 else out


def gaussian_h_theta(nu: float, theta):
    th = np.asarray(theta, dtype=np.float64)
    if not nu > 0:
        raise ValueError("nu must be positive")
    # (1 - theta) log(1 - theta) = -entr(1 - theta), which is 0 at theta = 1
    out = (binary_entropy(th) + 0.5 * th * math.log(2 * math.pi * math.e * nu)
           - 0.5 * special.entr(1.0 - th))
    return float(out) if np.ndim(theta) == 0 else out


def uniform_h_theta(A: float, theta):
    if not A > 0:
        raise ValueError("A must be positive")
    th = np.asarray(theta, dtype=np.float64)
    out = binary_entropy(th) + th * math.log(A)
    return float(out) if np.ndim(theta) == 0 else out


def has_closed_form(d: LogConcaveDensity) -> bool:
    return d.family in ("gaussian", "uniform")


def closed_form_h_theta(d: LogConcaveDensity, theta):
    p = dict(d.params)
    if d.family == "gaussian":
        return gaussian_h_theta(p["nu"], theta)
    if d.family == "uniform":
        return uniform_h_theta(p["A"], theta)
    raise ValueError(f"no closed form for {d.family}")


def typical_family(d: LogConcaveDensity, eps: float, max_n: int) -> SuperConvFamily:
    """Intrinsic volumes of the typical sets for ``n = 1..max_n``."""
    p = dict(d.params)
    if d.family == "gaussian":
        nu = p["nu"]
        return ball_family(lambda n: math.sqrt(n * nu * (1 + 2 * eps)), max_n,
                           f"typical sets: gaussian nu={nu} eps={eps}")
    if d.family == "uniform":
        return cube_family(p["A"], max_n)
    raise ValueError(f"no closed-form typical bodies for {d.family}")


def _theta_grid(theta) -> np.ndarray:
    th = np.unique(np.asarray(theta, dtype=np.float64))
    if th.size == 0 or th[0] < 0 or th[-1] > 1:
        raise ValueError("theta grid must lie in [0, 1]")
    return th


def interpolant(seq_logv: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Piecewise-linear ``a_n(theta)`` through ``(j/n, (1/n) log mu_n(j))``."""
    n = seq_logv.size - 1
    return np.interp(theta * n, np.arange(n + 1), seq_logv / n)


@dataclass(frozen=True)
class IntrinsicEntropyCurve:
    theta: np.ndarray
    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    mode: str  # closed_form | pipeline | band
    density: dict
    eps_ladder: tuple = ()
    n_max: Optional[int] = None
    per_eps: dict = field(default_factory=dict)
    interpolants: dict = field(default_factory=dict)
    endpoints: dict = field(default_factory=dict)
    converged: bool = True
    fit_points: list = field(default_factory=list)
    seed: Optional[int] = None

    def to_csv(self) -> str:
        rows = ["theta,h,lo,hi"]
        for r in zip(self.theta, self.values, self.lo, self.hi):
            rows.append(",".join(f"{x:.12g}" for x in r))
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        arr = lambda a: [None if not np.isfinite(x) else float(x) for x in np.asarray(a)]
        return {
            "mode": self.mode, "density": self.density, "theta": arr(self.theta),
            "h": arr(self.values), "lo": arr(self.lo), "hi": arr(self.hi),
            "eps_ladder": list(self.eps_ladder), "n_max": self.n_max, "seed": self.seed,
            "converged": self.converged,
            "per_eps": {f"{k:g}": arr(v) for k, v in self.per_eps.items()},
            "interpolants": {f"{k:g}": arr(v) for k, v in self.interpolants.items()},
            "endpoints": self.endpoints, "fit_points": self.fit_points,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def closed_form_curve(d: LogConcaveDensity, theta) -> IntrinsicEntropyCurve:
    th = _theta_grid(theta)
    v = np.asarray(closed_form_h_theta(d, th), dtype=np.float64)
    ends = {"h0": {"value": 0.0, "lo": 0.0, "hi": 0.0},
            "h1": {"value": d.entropy, "lo": d.entropy, "hi": d.entropy}}
    return IntrinsicEntropyCurve(th, v, v.copy(), v.copy(), "closed_form", d.describe(),
                                 endpoints=ends)


def _extrapolate(eps: Sequence[float], curves: np.ndarray):
    """Limit as eps -> 0 from a decreasing ladder of monotone curves.

    Returns the linear extrapolation through the two smallest eps, confined
    to the band ``[last - gap, last]`` with ``gap`` the last ladder step.
    """
    last = curves[-1]
    if len(eps) < 2:
        return last.copy(), last.copy(), last.copy(), np.zeros_like(last)
    gap = curves[-2] - last
    ratio = eps[-1] / (eps[-2] - eps[-1])
    lin = last - gap * ratio
    lo = last - np.abs(gap)
    hi = last
    return np.clip(lin, lo, hi), lo, hi, gap


def estimate_curve(d: LogConcaveDensity, theta, eps_ladder: Sequence[float] = DEFAULT_LADDER,
                   n_max: int = 400, seed: int = 0, samples: int = 10**6,
                   band_tol: float = 0.05, monotone_tol: float = 1e-9
                   ) -> IntrinsicEntropyCurve:
    """Numeric ``h_X`` over an eps ladder.

    Gaussian and uniform densities go through the full pipeline: typical
    bodies, their intrinsic volume family, ``-g_N*`` per eps, then the
    eps -> 0 limit. Other densities get a certified band; see
    :func:`band_curve`.
    """
    th = _theta_grid(theta)
    ladder = tuple(sorted({float(e) for e in eps_ladder}, reverse=True))
    if not ladder or ladder[-1] <= 0:
        raise ValueError("eps ladder must hold positive values")
    if not has_closed_form(d):
        return band_curve(d, th, ladder, n_max, seed, samples)

    per_eps, interp, alpha_hat = {}, {}, []
    for e in ladder:
        fam = typical_family(d, e, n_max)
        rc = rate_curve(fam, th, "gn_star")
        per_eps[e] = -rc.values
        interp[e] = interpolant(fam[n_max].logv, th)
        alpha_hat.append(float(fam[n_max].logv[-1] / n_max))
    curves = np.array([per_eps[e] for e in ladder])
    value, lo, hi, gap = _extrapolate(ladder, curves)
    # finite-size allowance: change from N/2 to N at the smallest eps
    half = max(1, n_max // 2)
    coarse = -rate_curve(fam.truncated(half), th, "gn_star").values
    finite_n = np.abs(per_eps[ladder[-1]] - coarse)
    lo, hi = lo - finite_n, hi + finite_n

    # per-eps curves must shrink as eps decreases
    steps = np.diff(curves, axis=0) if len(ladder) > 1 else np.zeros((0, th.size))
    monotone = bool(np.all(steps <= monotone_tol))
    converged = monotone and bool(np.max(np.abs(gap)) <= band_tol)

    h = d.entropy
    a_last = alpha_hat[-1]
    a_gap = alpha_hat[-2] - a_last if len(alpha_hat) > 1 else 0.0
    ends = {
        "h0": {"value": float(value[0]) if th[0] == 0 else 0.0, "lo": 0.0,
               "hi": float(hi[0]) if th[0] == 0 else 0.0},
        "h1": {"value": float(value[-1]) if th[-1] == 1 else a_last,
               "lo": a_last - abs(a_gap), "hi": h + ladder[-1],
               "alpha_hat": alpha_hat},
        "monotone_in_eps": monotone,
        "max_gap": float(np.max(np.abs(gap))),
        "max_finite_n_allowance": float(np.max(finite_n)),
    }
    return IntrinsicEntropyCurve(th, value, lo, hi, "pipeline", d.describe(), ladder, n_max,
                                 per_eps, interp, ends, converged, seed=seed)


def crosspolytope_upper(A: float, theta: np.ndarray) -> np.ndarray:
    """Limit curve bound ``H(theta) + theta (1 + log(2A/theta))`` for crosspolytopes."""
    th = np.asarray(theta, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(th > 0, th * (1.0 + np.log(2 * A / np.where(th > 0, th, 1.0))), 0.0)
    return binary_entropy(th) + tail


def projection_upper(d: LogConcaveDensity, eps: float, theta: np.ndarray) -> np.ndarray:
    return binary_entropy(theta) + d.entropy + eps - (1.0 - theta) * d.eta


def band_curve(d: LogConcaveDensity, theta, eps_ladder: Sequence[float], n_max: int = 3,
               seed: int = 0, samples: int = 10**6) -> IntrinsicEntropyCurve:
    """Certified band for densities without closed-form typical bodies.

    Lower edge ``theta h``; upper edge the smaller of the projection bound and
    the crosspolytope bound over the ladder. Small-``n`` Steiner-fit points
    ``(j/n, (1/n) log V_j)`` are attached for ``n <= n_max`` (capped at 3).
    """
    th = _theta_grid(theta)
    ladder = tuple(sorted({float(e) for e in eps_ladder}, reverse=True))
    h = d.entropy
    mn = linear_minorant(d, seed)
    per_eps, uppers = {}, []
    for e in ladder:
        A = (h + e - mn.c2) / mn.c1
        up = np.minimum(projection_upper(d, e, th), crosspolytope_upper(A, th))
        per_eps[e] = up
        uppers.append(up)
    hi = np.min(uppers, axis=0)
    lo = th * h
    points = []
    eps_fit = ladder[-1]
    for n in range(1, min(int(n_max), 3) + 1):
        body = typical_body(TypicalSetSpec(d, n, eps_fit))
        rep = steiner_fit(body, samples=samples, seed=seed + n)
        for j in range(n + 1):
            v, se = float(rep.values[j]), float(rep.stderr[j])
            points.append({"n": n, "j": j, "theta": j / n, "eps": eps_fit,
                           "a": math.log(v) / n if v > 0 else None,
                           "V": v, "stderr": se})
    ends = {
        "h0": {"value": None, "lo": 0.0, "hi": float(crosspolytope_upper(1.0, 0.0))},
        "h1": {"value": None, "lo": h, "hi": float(h + ladder[-1])},
        "minorant": {"c1": mn.c1, "c2": mn.c2},
    }
    values = np.full(th.shape, np.nan)
    return IntrinsicEntropyCurve(th, values, lo, hi, "band", d.describe(), ladder, n_max,
                                 per_eps, {}, ends, True, points, seed)


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class EndpointReport:
    h0_ok: bool
    h1_ok: bool
    dominance_ok: bool
    dominance_margin: float
    h0_bracket: tuple
    h1_bracket: tuple
    entropy: float

    @property
    def passed(self) -> bool:
        return self.h0_ok and self.h1_ok and self.dominance_ok


def endpoint_checks(curve: IntrinsicEntropyCurve, d: Optional[LogConcaveDensity] = None,
                    tol: float = 1e-9) -> EndpointReport:
    """``h(0) = 0`` and ``h(1) = h(X)`` within brackets, plus the projection bound.

    The dominance test uses curve values, or the lower edge in band mode.
    """
    h = curve.density["entropy"] if d is None else d.entropy
    eta = curve.density["eta"] if d is None else d.eta
    e0, e1 = curve.endpoints["h0"], curve.endpoints["h1"]
    h0_ok = e0["lo"] - tol <= 0.0 <= e0["hi"] + tol
    h1_ok = e1["lo"] - tol <= h <= e1["hi"] + tol
    vals = np.where(np.isfinite(curve.values), curve.values, curve.lo)
    bound = binary_entropy(curve.theta) + h - (1.0 - curve.theta) * eta
    margin = float(np.min(bound - vals))
    return EndpointReport(bool(h0_ok), bool(h1_ok), margin >= -tol, margin,
                          (e0["lo"], e0["hi"]), (e1["lo"], e1["hi"]), h)


@dataclass(frozen=True)
class EpiReport:
    label: str
    theta: np.ndarray
    relative_gap: np.ndarray  # (e^a + e^b) / e^c - 1
    signs: np.ndarray
    nu: tuple


def epi_conjecture_check(dX: LogConcaveDensity, dY: LogConcaveDensity, theta) -> EpiReport:
    """Evaluate ``e^{2h_t(X)/t} + e^{2h_t(Y)/t} - e^{2h_t(X+Y)/t}`` for gaussians.

    Output is evidence for an open conjecture and carries that label; nothing
    here asserts it.
    """
    if dX.family != "gaussian" or dY.family != "gaussian":
        raise UnsupportedPairError("closed-form sums are available for gaussians only")
    nx, ny = dict(dX.params)["nu"], dict(dY.params)["nu"]
    th = _theta_grid(theta)
    th = th[th > 0]
    a = 2 * gaussian_h_theta(nx, th) / th
    b = 2 * gaussian_h_theta(ny, th) / th
    c = 2 * gaussian_h_theta(nx + ny, th) / th
    rel = np.expm1(np.logaddexp(a, b) - c)
    return EpiReport("conjecture evidence", th, rel, np.sign(rel), (nx, ny))


@dataclass(frozen=True)
class ConcavityReport:
    passed: bool
    worst_af_margin: float
    worst_n: Optional[int]
    max_second_difference: float
    failing: tuple
    tolerance: float


def concavity_diagnostics(fam: SuperConvFamily, tol: float = 1e-9) -> ConcavityReport:
    """Alexandrov-Fenchel margins and second differences of ``(1/n) log mu_n``."""
    worst, worst_n, sd_max, failing = math.inf, None, -math.inf, []
    for n in range(1, fam.max_n + 1):
        rep = check_alexandrov_fenchel(fam[n], tol)
        m = float(np.min(rep.margins)) if rep.margins.size else math.inf
        if m < worst:
            worst, worst_n = m, n
        if not rep.passed:
            failing.append(n)
        a = fam[n].logv / n
        if a.size >= 3 and np.all(np.isfinite(a)):
            sd_max = max(sd_max, float(np.max(a[2:] - 2 * a[1:-1] + a[:-2])))
    return ConcavityReport(not failing, worst, worst_n, sd_max, tuple(failing), tol)


def curve_second_differences(curve: IntrinsicEntropyCurve) -> float:
    """Largest second difference of the curve values on its grid (nonuniform-safe)."""
    t, v = curve.theta, curve.values
    if t.size < 3 or not np.all(np.isfinite(v)):
        return -math.inf
    s = np.diff(v) / np.diff(t)
    return float(np.max(np.diff(s) / (0.5 * (t[2:] - t[:-2]))) * np.min(np.diff(t)) ** 2)
