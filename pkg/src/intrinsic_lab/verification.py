"""Property suites behind ``intrinsic-lab verify``.

Each suite returns a list of :class:`Outcome`. Evidence-only outcomes carry
numbers but never fail a run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import intrinsic_entropy as ie
from . import logconcave as lc
from . import superconv as sc

T_GRID = np.linspace(-5.0, 5.0, 21)


@dataclass(frozen=True)
class Outcome:
    name: str
    passed: bool
    margin: Optional[float] = None
    details: dict = field(default_factory=dict)
    evidence_only: bool = False

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def build_family(name: str, max_n: int, A: float = 1.0, eps: float = 0.1, nu: float = 1.0,
                 alpha: float = 2.0, delta: float = 0.25) -> sc.SuperConvFamily:
    if name == "cube":
        return sc.cube_family(A, max_n)
    if name == "ball":
        return ie.typical_family(lc.gaussian(nu), eps, max_n)
    if name == "crosspolytope":
        return sc.crosspolytope_family(A, max_n)
    if name == "appendix":
        return sc.appendix_example_family(alpha, delta, max_n)
    raise ValueError(f"unknown family {name!r}")


# default sizes: crosspolytopes need quadrature per entry, so they stay small
FAMILY_SIZES = {"cube": 400, "ball": 400, "crosspolytope": 40, "appendix": 400}


def suite_superconv(families=("cube", "ball", "crosspolytope"), up_to: int = 40,
                    tol: float = 1e-9, **kw) -> list:
    out = []
    for name in families:
        fam = build_family(name, up_to, **kw)
        rep = sc.check_superconvolutive(fam, up_to, tol)
        out.append(Outcome(f"superconv[{name}]", rep.passed, rep.worst_margin,
                           {"up_to": up_to, "worst_pair": rep.worst_pair}))
    return out


def suite_alexandrov_fenchel(families=("cube", "ball", "crosspolytope"), n_max: int = 400,
                             tol: float = 1e-9, **kw) -> list:
    out = []
    for name in families:
        fam = build_family(name, n_max, **kw)
        rep = ie.concavity_diagnostics(fam, tol)
        out.append(Outcome(f"alexandrov_fenchel[{name}]", rep.passed, rep.worst_af_margin,
                           {"n_max": n_max, "worst_n": rep.worst_n, "failing": rep.failing,
                            "max_second_difference": rep.max_second_difference}))
    return out


def suite_lambda(families=("cube", "ball", "crosspolytope", "appendix"), **kw) -> list:
    out = []
    for name in families:
        fam = build_family(name, FAMILY_SIZES[name], **kw)
        b = sc.check_lambda_bounds(fam, T_GRID)
        pr = sc.properness(fam)
        detail = dict(b.detail, gamma_hat=pr.gamma, gamma_status=pr.gamma_status,
                      proper=pr.proper)
        out.append(Outcome(f"lambda_bounds[{name}]", b.passed, b.margin, detail))
        s = sc.check_gn_superadditivity(fam, T_GRID)
        out.append(Outcome(f"gn_superadditivity[{name}]", s.passed, s.margin, s.detail))
    return out


def suite_concatenation(trials: int = 100_000, seed: int = 0) -> list:
    out = []
    for d in (lc.gaussian(1.0), lc.laplace(1.0), lc.exponential(1.0), lc.uniform(2.0)):
        r = lc.concatenation_check(d, 0.1, 3, 5, trials, seed)
        out.append(Outcome(f"concatenation[{d.family}]", r.failures == 0, float(-r.failures),
                           {"trials": r.trials, "failures": r.failures}))
    return out


def suite_bloat(trials: int = 10_000, seed: int = 0) -> list:
    out = []
    for d, eps in ((lc.gaussian(1.0), 0.1), (lc.laplace(1.0), 0.05)):
        r = lc.bloat_check(d, eps, 5, trials, seed)
        out.append(Outcome(f"bloat[{d.family}]", r.failures == 0, r.min_margin,
                           {"alpha": r.alpha, "trials": r.trials, "failures": r.failures}))
    return out


def suite_loomis_whitney(samples: int = 10**6, seed: int = 0) -> list:
    out = []
    for d, n in ((lc.uniform(2.0), 3), (lc.gaussian(1.0), 3)):
        spec = lc.TypicalSetSpec(d, n, 0.05)
        for m in range(n + 1):
            r = lc.loomis_whitney_check(spec, m)
            out.append(Outcome(f"loomis_whitney[{d.family},n={n},m={m}]", r.passed, r.margin,
                               {"method": r.method}))
    spec = lc.TypicalSetSpec(lc.laplace(1.0), 2, 0.05)
    r = lc.loomis_whitney_check(spec, 1, samples, seed)
    out.append(Outcome("loomis_whitney[laplace,n=2,m=1]", r.passed, r.z,
                       {"method": r.method, "log_margin": r.margin, "stderr": r.stderr}))
    return out


def suite_endpoints(n_max: int = 400) -> list:
    out = []
    grid = np.linspace(0.0, 1.0, 21)
    for d in (lc.gaussian(1.0), lc.uniform(1.0)):
        curve = ie.estimate_curve(d, grid, n_max=n_max)
        r = ie.endpoint_checks(curve, d)
        out.append(Outcome(f"endpoints[{d.family}]", r.passed, r.dominance_margin,
                           {"h0_bracket": r.h0_bracket, "h1_bracket": r.h1_bracket,
                            "entropy": r.entropy}))
        sd = ie.curve_second_differences(curve)
        out.append(Outcome(f"curve_concavity[{d.family}]", sd <= 1e-6, -sd, {}))
    return out


def suite_appendix(alpha: float = 2.0, delta: float = 0.25, max_n: int = 400,
                   tol: float = 1e-3) -> list:
    fam = sc.appendix_example_family(alpha, delta, max_n)
    curve = sc.rate_curve(fam, [0.0, 0.5, 1.0], "lambda_star")
    lam1 = float(curve.values[-1])
    top = float(fam[max_n].logv[-1] / max_n)
    sup = sc.check_superconvolutive(fam, 60)
    return [
        Outcome("appendix[lambda_star_at_1]", abs(lam1 + math.log(alpha)) <= tol,
                tol - abs(lam1 + math.log(alpha)),
                {"lambda_star_1": lam1, "target": -math.log(alpha)}),
        Outcome("appendix[top_coefficient_rate]", abs(top) <= 0.01, 0.01 - abs(top),
                {"rate": top, "gn_star_at_1": -top}),
        Outcome("appendix[strict_gap]", bool(curve.endpoints["strict_gap_at_1"]),
                -top - lam1, {"minus_alpha": -top, "lambda_star_1": lam1}),
        Outcome("appendix[superconvolutive]", sup.passed, sup.worst_margin, {"up_to": 60}),
    ]


def suite_epi(nu1: float = 1.0, nu2: float = 1.0, theta=None, tol: float = 1e-10) -> list:
    grid = np.linspace(0.1, 1.0, 10) if theta is None else np.asarray(theta)
    rep = ie.epi_conjecture_check(lc.gaussian(nu1), lc.gaussian(nu2), grid)
    at1 = rep.relative_gap[rep.theta == 1.0]
    out = []
    if at1.size:
        out.append(Outcome("epi[saturation_at_1]", abs(float(at1[0])) <= tol,
                           tol - abs(float(at1[0])), {"relative_gap": float(at1[0])}))
    out.append(Outcome("epi[grid]", True, None,
                       {"label": rep.label, "theta": rep.theta,
                        "relative_gap": rep.relative_gap, "sign": rep.signs},
                       evidence_only=True))
    return out


def suite_sandwich(A: float = 1.0, n: int = 400, interval=(0.4, 0.6), tol: float = 0.02
                   ) -> list:
    fam = sc.cube_family(A, n)
    a, b = interval
    grid = np.unique(np.concatenate([np.linspace(0, 1, 201), np.linspace(a, b, 201)]))
    curve = sc.rate_curve(fam, grid, "lambda_star")
    mass = sc.interval_mass_bounds(fam, interval, n)
    upper = -sc.rate_infimum(curve, interval)
    lower = -sc.rate_infimum(curve, interval, open_=True)
    return [
        Outcome("sandwich[closed_interval_value]", abs(mass - upper) <= tol,
                tol - abs(mass - upper), {"mass_exponent": mass, "sup_minus_rate": upper}),
        Outcome("sandwich[bounds]", mass <= upper + 0.05 and mass >= lower - 0.05,
                min(upper + 0.05 - mass, mass - lower + 0.05),
                {"upper": upper, "lower": lower, "mass_exponent": mass}),
    ]


SUITES: dict = {
    "superconv": suite_superconv,
    "alexandrov-fenchel": suite_alexandrov_fenchel,
    "lambda": suite_lambda,
    "concatenation": suite_concatenation,
    "bloat": suite_bloat,
    "loomis-whitney": suite_loomis_whitney,
    "endpoints": suite_endpoints,
    "appendix-example": suite_appendix,
    "epi": suite_epi,
    "sandwich": suite_sandwich,
}


def run_all(seed: int = 0, samples: int = 10**6, jobs: int = 1) -> list:
    """Every suite with its default arguments; order is fixed regardless of ``jobs``."""
    calls = [
        lambda: suite_superconv(),
        lambda: suite_alexandrov_fenchel(),
        lambda: suite_lambda(),
        lambda: suite_concatenation(seed=seed),
        lambda: suite_bloat(seed=seed),
        lambda: suite_loomis_whitney(samples=samples, seed=seed),
        lambda: suite_endpoints(),
        lambda: suite_appendix(),
        lambda: suite_epi(),
        lambda: suite_sandwich(),
    ]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda f: f(), calls))
    else:
        parts = [f() for f in calls]
    return [o for part in parts for o in part]
