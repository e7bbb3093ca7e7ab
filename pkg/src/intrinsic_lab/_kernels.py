"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba implementations are used when numba imports cleanly and the
environment variable ``INTRINSIC_LAB_DISABLE_NUMBA`` is unset (or ``0``).
Both backends are always importable as :data:`numba_impl` / :data:`numpy_impl`
so tests and the benchmark can compare them directly.

All sequences are log-domain float64 arrays; ``-inf`` encodes a zero entry.
"""

from __future__ import annotations

import os
import types

import numpy as np
from scipy.special import logsumexp

NEG_INF = -np.inf

# ---------------------------------------------------------------------------
# pure numpy


def _np_log_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, n = a.shape[0], b.shape[0]
    # row i of `grid` holds a[i] + b shifted right by i
    grid = np.full((m, m + n - 1), NEG_INF)
    rows = np.arange(m)[:, None]
    cols = rows + np.arange(n)[None, :]
    grid[rows, cols] = a[:, None] + b[None, :]
    with np.errstate(invalid="ignore"):
        out = logsumexp(grid, axis=0)
    out[np.isnan(out)] = NEG_INF
    return out


def _np_log_generating(logv: np.ndarray, ts: np.ndarray) -> np.ndarray:
    j = np.arange(logv.shape[0], dtype=np.float64)
    with np.errstate(invalid="ignore"):
        return logsumexp(logv[None, :] + j[None, :] * ts[:, None], axis=1)


def _np_superconv_margins(table: np.ndarray, up_to: int) -> np.ndarray:
    """Worst log-domain margin ``mu_{m+n}(i) - (mu_m * mu_n)(i)`` per pair.

    ``table[k, :k+1]`` holds the log sequence of index ``k`` (row 0 unused).
    Returns an array ``(up_to+1, up_to+1)`` with ``+inf`` where no pair applies.
    """
    out = np.full((up_to + 1, up_to + 1), np.inf)
    for m in range(1, up_to):
        for n in range(m, up_to - m + 1):
            conv = _np_log_convolve(table[m, : m + 1], table[n, : n + 1])
            target = table[m + n, : m + n + 1]
            live = np.isfinite(conv)
            if not live.any():
                continue
            diff = target[live] - conv[live]
            out[m, n] = diff.min()
    return out


def _np_box_distance(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    gap = np.maximum(lo - x, 0.0) + np.maximum(x - hi, 0.0)
    return np.sqrt(np.sum(gap * gap, axis=1))


def _np_ball_distance(x: np.ndarray, center: np.ndarray, r: float) -> np.ndarray:
    d = np.sqrt(np.sum((x - center) ** 2, axis=1))
    return np.maximum(d - r, 0.0)


def _np_l1_project(x: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of each row onto the l1 ball (sort-based)."""
    y = x - center
    a = np.abs(y)
    inside = a.sum(axis=1) <= radius
    u = -np.sort(-a, axis=1)
    css = np.cumsum(u, axis=1)
    k = np.arange(1, y.shape[1] + 1)
    cond = u - (css - radius) / k > 0
    rho = y.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = (css[np.arange(y.shape[0]), rho] - radius) / (rho + 1)
    tau = np.where(inside, 0.0, np.maximum(tau, 0.0))
    p = np.sign(y) * np.maximum(a - tau[:, None], 0.0)
    return p + center


def _np_l1_distance(x: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    p = _np_l1_project(x, center, radius)
    return np.sqrt(np.sum((x - p) ** 2, axis=1))


# prox codes for separable potentials: 0 gaussian, 1 laplace, 2 box, 3 exponential
PROX_GAUSSIAN, PROX_LAPLACE, PROX_BOX, PROX_EXPONENTIAL = 0, 1, 2, 3


def _np_prox(code: int, p: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    if code == PROX_GAUSSIAN:  # phi = (x-p1)^2/(2 p0) + p2
        return p[1] + (x - p[1]) / (1.0 + s / p[0])
    if code == PROX_LAPLACE:  # phi = |x-p1|/p0 + p2
        y = x - p[1]
        return p[1] + np.sign(y) * np.maximum(np.abs(y) - s / p[0], 0.0)
    if code == PROX_BOX:  # phi = p2 on [p0, p1]
        return np.clip(x, p[0], p[1])
    # exponential: phi = p0 (x - p1) + p2 on [p1, inf)
    return np.maximum(x - s * p[0], p[1])


def _np_phi(code: int, p: np.ndarray, x: np.ndarray) -> np.ndarray:
    if code == PROX_GAUSSIAN:
        return (x - p[1]) ** 2 / (2.0 * p[0]) + p[2]
    if code == PROX_LAPLACE:
        return np.abs(x - p[1]) / p[0] + p[2]
    if code == PROX_BOX:
        return np.where((x >= p[0]) & (x <= p[1]), p[2], np.inf)
    return np.where(x >= p[1], p[0] * (x - p[1]) + p[2], np.inf)


def _np_separable_distance(
    code: int, p: np.ndarray, x: np.ndarray, level: float, iters: int = 200
) -> np.ndarray:
    """Distance from rows of ``x`` to ``{y : sum phi(y_i) <= level}``.

    The projection is ``prox_{s phi}`` applied coordinatewise, with the
    multiplier ``s`` found by bisection so the constraint is active.
    """
    total = np.sum(_np_phi(code, p, x), axis=1)
    outside = total > level
    dist = np.zeros(x.shape[0])
    if not outside.any():
        return dist
    xo = x[outside]
    lo = np.zeros(xo.shape[0])
    hi = np.ones(xo.shape[0])
    for _ in range(200):
        val = np.sum(_np_phi(code, p, _np_prox(code, p, xo, hi[:, None])), axis=1)
        grow = val > level
        if not grow.any():
            break
        hi = np.where(grow, hi * 2.0, hi)
    for _ in range(iters):
        if np.all(hi - lo <= 1e-15 * hi):
            break
        mid = 0.5 * (lo + hi)
        val = np.sum(_np_phi(code, p, _np_prox(code, p, xo, mid[:, None])), axis=1)
        over = val > level
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    y = _np_prox(code, p, xo, hi[:, None])
    dist[outside] = np.sqrt(np.sum((xo - y) ** 2, axis=1))
    return dist


numpy_impl = types.SimpleNamespace(
    name="numpy",
    log_convolve=_np_log_convolve,
    log_generating=_np_log_generating,
    superconv_margins=_np_superconv_margins,
    box_distance=_np_box_distance,
    ball_distance=_np_ball_distance,
    l1_distance=_np_l1_distance,
    l1_project=_np_l1_project,
    separable_distance=_np_separable_distance,
)

# ---------------------------------------------------------------------------
# numba


def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True)
    def log_convolve(a, b):
        m, n = a.shape[0], b.shape[0]
        out = np.empty(m + n - 1)
        for j in range(m + n - 1):
            lo = max(0, j - n + 1)
            hi = min(j, m - 1)
            mx = -np.inf
            for i in range(lo, hi + 1):
                v = a[i] + b[j - i]
                if v > mx:
                    mx = v
            if mx == -np.inf:
                out[j] = -np.inf
                continue
            s = 0.0
            for i in range(lo, hi + 1):
                v = a[i] + b[j - i]
                if v > -np.inf:
                    s += np.exp(v - mx)
            out[j] = mx + np.log(s)
        return out

    @njit(cache=True, nogil=True)
    def log_generating(logv, ts):
        out = np.empty(ts.shape[0])
        for k in range(ts.shape[0]):
            t = ts[k]
            mx = -np.inf
            for j in range(logv.shape[0]):
                v = logv[j] + j * t
                if v > mx:
                    mx = v
            if mx == -np.inf:
                out[k] = -np.inf
                continue
            s = 0.0
            for j in range(logv.shape[0]):
                v = logv[j] + j * t
                if v > -np.inf:
                    s += np.exp(v - mx)
            out[k] = mx + np.log(s)
        return out

    @njit(cache=True, nogil=True)
    def superconv_margins(table, up_to):
        out = np.full((up_to + 1, up_to + 1), np.inf)
        for m in range(1, up_to):
            for n in range(m, up_to - m + 1):
                conv = log_convolve(table[m, : m + 1], table[n, : n + 1])
                worst = np.inf
                seen = False
                for i in range(m + n + 1):
                    if conv[i] > -np.inf:
                        seen = True
                        d = table[m + n, i] - conv[i]
                        if d < worst:
                            worst = d
                if seen:
                    out[m, n] = worst
        return out

    @njit(cache=True, nogil=True)
    def box_distance(x, lo, hi):
        out = np.empty(x.shape[0])
        for r in range(x.shape[0]):
            s = 0.0
            for c in range(x.shape[1]):
                v = x[r, c]
                if v < lo[c]:
                    g = lo[c] - v
                elif v > hi[c]:
                    g = v - hi[c]
                else:
                    g = 0.0
                s += g * g
            out[r] = np.sqrt(s)
        return out

    @njit(cache=True, nogil=True)
    def ball_distance(x, center, radius):
        out = np.empty(x.shape[0])
        for r in range(x.shape[0]):
            s = 0.0
            for c in range(x.shape[1]):
                d = x[r, c] - center[c]
                s += d * d
            out[r] = max(np.sqrt(s) - radius, 0.0)
        return out

    @njit(cache=True, nogil=True)
    def _l1_tau(a, radius, u):
        total = a.sum()
        if total <= radius:
            return 0.0
        # descending insertion sort into the scratch row: rows are short, and
        # np.sort would allocate per call
        for k in range(a.shape[0]):
            v = a[k]
            m = k
            while m > 0 and u[m - 1] < v:
                u[m] = u[m - 1]
                m -= 1
            u[m] = v
        css = 0.0
        tau = 0.0
        for k in range(u.shape[0]):
            css += u[k]
            t = (css - radius) / (k + 1)
            if u[k] - t > 0:
                tau = t
        return max(tau, 0.0)

    @njit(cache=True, nogil=True)
    def l1_project(x, center, radius):
        out = np.empty_like(x)
        a = np.empty(x.shape[1])
        u = np.empty(x.shape[1])
        for r in range(x.shape[0]):
            for c in range(x.shape[1]):
                a[c] = abs(x[r, c] - center[c])
            tau = _l1_tau(a, radius, u)
            for c in range(x.shape[1]):
                y = x[r, c] - center[c]
                mag = max(abs(y) - tau, 0.0)
                out[r, c] = center[c] + (mag if y >= 0 else -mag)
        return out

    @njit(cache=True, nogil=True)
    def l1_distance(x, center, radius):
        out = np.empty(x.shape[0])
        a = np.empty(x.shape[1])
        u = np.empty(x.shape[1])
        for r in range(x.shape[0]):
            for c in range(x.shape[1]):
                a[c] = abs(x[r, c] - center[c])
            tau = _l1_tau(a, radius, u)
            s = 0.0
            for c in range(x.shape[1]):
                d = a[c] - max(a[c] - tau, 0.0)
                s += d * d
            out[r] = np.sqrt(s)
        return out

    @njit(cache=True, nogil=True)
    def _phi1(code, p, v):
        if code == 0:
            return (v - p[1]) ** 2 / (2.0 * p[0]) + p[2]
        if code == 1:
            return abs(v - p[1]) / p[0] + p[2]
        if code == 2:
            if v >= p[0] and v <= p[1]:
                return p[2]
            return np.inf
        if v >= p[1]:
            return p[0] * (v - p[1]) + p[2]
        return np.inf

    @njit(cache=True, nogil=True)
    def _prox1(code, p, v, s):
        if code == 0:
            return p[1] + (v - p[1]) / (1.0 + s / p[0])
        if code == 1:
            y = v - p[1]
            mag = max(abs(y) - s / p[0], 0.0)
            return p[1] + (mag if y >= 0 else -mag)
        if code == 2:
            return min(max(v, p[0]), p[1])
        return max(v - s * p[0], p[1])

    @njit(cache=True, nogil=True)
    def separable_distance(code, p, x, level, iters=200):
        out = np.zeros(x.shape[0])
        dim = x.shape[1]
        for r in range(x.shape[0]):
            total = 0.0
            for c in range(dim):
                total += _phi1(code, p, x[r, c])
            if total <= level:
                continue
            lo, hi = 0.0, 1.0
            for _ in range(200):
                val = 0.0
                for c in range(dim):
                    val += _phi1(code, p, _prox1(code, p, x[r, c], hi))
                if val > level:
                    hi *= 2.0
                else:
                    break
            for _ in range(iters):
                if hi - lo <= 1e-15 * hi:
                    break
                mid = 0.5 * (lo + hi)
                val = 0.0
                for c in range(dim):
                    val += _phi1(code, p, _prox1(code, p, x[r, c], mid))
                if val > level:
                    lo = mid
                else:
                    hi = mid
            s = 0.0
            for c in range(dim):
                d = x[r, c] - _prox1(code, p, x[r, c], hi)
                s += d * d
            out[r] = np.sqrt(s)
        return out

    return types.SimpleNamespace(
        name="numba",
        log_convolve=log_convolve,
        log_generating=log_generating,
        superconv_margins=superconv_margins,
        box_distance=box_distance,
        ball_distance=ball_distance,
        l1_distance=l1_distance,
        l1_project=l1_project,
        separable_distance=separable_distance,
    )


try:
    numba_impl = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None


def _select():
    flag = os.environ.get("INTRINSIC_LAB_DISABLE_NUMBA", "").strip().lower()
    if flag not in ("", "0", "false", "no") or numba_impl is None:
        return numpy_impl
    return numba_impl


active = _select()
BACKEND = active.name
