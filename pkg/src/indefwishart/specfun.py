"""Scalar special functions: log-gamma and the Gauss hypergeometric function.

Only the non-positive real axis of 2F1 is supported. That is the region the
condition-number densities need, since both hypergeometric arguments are
ratios of opposite-signed quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "SpecFunResult",
    "log_gamma",
    "gauss_2f1",
    "hyp2f1_nonpos",
    "log_hyp2f1_nonpos",
    "direct_series_2f1",
]

EPS = np.finfo(float).eps

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_EULER_GAMMA = 0.57721566490153286061

# zeta(k) - 1 for k = 2..41, for the Taylor expansion of lnGamma about 2.
_ZETA_MINUS_ONE = (
    0.6449340668482264, 0.20205690315959424, 0.08232323371113814,
    0.03692775514336999, 0.017343061984449237, 0.008349277381922926,
    0.0040773561979443596, 0.002008392826082117, 0.000994575127817976,
    0.0004941886041194277, 0.00024608655330804474, 0.00012271334757851804,
    6.124813505881122e-05, 3.058823630697205e-05, 1.5282259408611054e-05,
    7.637197637855309e-06, 3.8172932650404334e-06, 1.908212716505986e-06,
    9.53962033811706e-07, 4.769329868814509e-07, 2.384505026764572e-07,
    1.1921992593144637e-07, 5.960818905137444e-08, 2.980350344294891e-08,
    1.4901554878932188e-08, 7.450711825285339e-09, 3.725334041249084e-09,
    1.862659804174882e-09, 9.313274595967869e-10, 4.656628416199737e-10,
    2.328310877430795e-10, 1.1641554387153974e-10, 5.820766091346741e-11,
    2.9103830456733704e-11, 1.4551915228366852e-11, 7.275957614183426e-12,
    3.637978807091713e-12, 1.8189894035458565e-12, 9.094947017729282e-13,
    4.547473508864641e-13,
)

# Half-width of the windows around x = 1 and x = 2 where lnGamma is near zero
# and the Lanczos sum cannot deliver small relative error.
_TAYLOR_RADIUS = 0.3


@dataclass(frozen=True)
class SpecFunResult:
    """A special-function value with an estimate of its relative error."""

    value: float
    achieved_tol: float


def _log_gamma_taylor2(eps: float) -> float:
    # lnGamma(2 + eps) = (1 - gamma) eps + sum_k (-1)^k (zeta(k) - 1) eps^k / k
    total = 0.0
    power = -eps
    for k, zm1 in enumerate(_ZETA_MINUS_ONE, start=2):
        power *= -eps
        term = zm1 * power / k
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return (1.0 - _EULER_GAMMA) * eps + total


def _log_gamma_lanczos(x: float) -> float:
    z = x - 1.0
    s = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        s += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(s)


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``.

    Uses the Lanczos sum away from the zeros of lnGamma at 1 and 2, and a
    Taylor expansion in zeta values inside small windows around them, so the
    result keeps full relative accuracy right up to those zeros.
    """
    x = float(x)
    if not x > 0.0 or math.isnan(x):
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    if math.isinf(x):
        return math.inf
    if abs(x - 2.0) < _TAYLOR_RADIUS:
        return _log_gamma_taylor2(x - 2.0)
    if abs(x - 1.0) < _TAYLOR_RADIUS:
        eps = x - 1.0
        return _log_gamma_taylor2(eps) - math.log1p(eps)
    if x < 0.5:
        # Gamma(x) = Gamma(x + 1) / x; x + 1 lies in [1, 1.5).
        return log_gamma(x + 1.0) - math.log(x)
    return _log_gamma_lanczos(x)


# ---------------------------------------------------------------------------
# Gauss hypergeometric function on z <= 0
# ---------------------------------------------------------------------------

# Above this value of w = z/(z-1) the series is abandoned for quadrature.
_W_SERIES_MAX = 0.9
# Largest tolerated ratio sum|terms| / |sum| before the alternating series is
# considered ill-conditioned.
_COND_MAX = 1e3
_MAX_TERMS = 100_000
_GL_NODES = 20
_JACOBI_NODES = 40


def _pfaff_series(A, B, C, w, max_terms=_MAX_TERMS):
    """Sum 2F1(A, B; C; w) termwise for each entry of ``w`` in [0, 1).

    Stops an entry once three consecutive terms fall below 1e-16 of the
    partial sum. Returns (sum, sum of |terms|, relative tail estimate).
    """
    w = np.asarray(w, dtype=float)
    total = np.ones_like(w)
    abs_total = np.ones_like(w)
    tail = np.zeros_like(w)
    term = np.ones_like(w)
    quiet = np.zeros(w.shape, dtype=int)
    active = np.arange(w.size)
    wf, tf, sf, af, qf, rf = (
        w.ravel(), term.ravel(), total.ravel(), abs_total.ravel(),
        quiet.ravel(), tail.ravel(),
    )
    n = 0
    while active.size and n < max_terms:
        coeff = (n + A) * (n + B) / ((n + 1.0) * (n + C))
        new = tf[active] * coeff * wf[active]
        tf[active] = new
        sf[active] += new
        af[active] += np.abs(new)
        small = np.abs(new) <= 1e-16 * np.abs(sf[active])
        qf[active] = np.where(small, qf[active] + 1, 0)
        n += 1
        done = qf[active] >= 3
        if np.any(done):
            idx = active[done]
            ratio = min(abs(coeff), 1.0 - 1e-3) * wf[idx]
            rf[idx] = np.abs(tf[idx]) * ratio / (1.0 - ratio) / np.abs(sf[idx])
            active = active[~done]
    if active.size:
        # Hit the cap: estimate the tail from the current term ratio.
        coeff = abs((n + A) * (n + B) / ((n + 1.0) * (n + C)))
        ratio = np.minimum(coeff * wf[active], 1.0 - 1e-12)
        rf[active] = np.abs(tf[active]) * ratio / (1.0 - ratio) / np.abs(sf[active])
    return total, abs_total, tail


def _positive_series_log(a, b2, c, w, max_terms=_MAX_TERMS):
    """log 2F1(a, b2; c; w) for a, b2, c > 0 and w in [0, 1).

    Every term is positive, so there is no cancellation; the running sum is
    rescaled to stay in floating-point range. Returns (log value, rel. tail).
    """
    w = np.asarray(w, dtype=float).ravel()
    total = np.ones_like(w)
    term = np.ones_like(w)
    log_scale = np.zeros_like(w)
    tail = np.zeros_like(w)
    active = np.arange(w.size)
    n = 0
    while active.size and n < max_terms:
        coeff = (n + a) * (n + b2) / ((n + 1.0) * (n + c))
        term[active] *= coeff * w[active]
        total[active] += term[active]
        big = total[active] > 1e200
        if np.any(big):
            idx = active[big]
            total[idx] *= 1e-200
            term[idx] *= 1e-200
            log_scale[idx] += 200.0 * math.log(10.0)
        n += 1
        # Once the term ratio is below one the remaining tail is bounded by a
        # geometric series.
        next_coeff = (n + a) * (n + b2) / ((n + 1.0) * (n + c))
        ratio = next_coeff * w[active]
        with np.errstate(over="ignore"):
            bound = np.where(
                ratio < 1.0, term[active] * ratio / np.maximum(1.0 - ratio, 1e-300), np.inf
            )
        done = bound <= 1e-17 * total[active]
        if np.any(done):
            idx = active[done]
            tail[idx] = bound[done] / total[idx]
            active = active[~done]
    if active.size:
        next_coeff = (n + a) * (n + b2) / ((n + 1.0) * (n + c))
        ratio = np.minimum(next_coeff * w[active], 1.0 - 1e-12)
        tail[active] = term[active] * ratio / (1.0 - ratio) / total[active]
    return np.log(total) + log_scale, tail


@lru_cache(maxsize=256)
def _jacobi_unit(n: int, p: float):
    """Nodes/weights for int_0^1 x^(p-1) g(x) dx (Golub-Welsch).

    Built from the Jacobi(0, p-1) recurrence and normalized by the exact
    moment 1/p, so large p cannot overflow the weight scale.
    """
    al, be = 0.0, p - 1.0
    k = np.arange(n, dtype=float)
    s = 2.0 * k + al + be
    diag = np.empty(n)
    diag[0] = (be - al) / (al + be + 2.0)
    diag[1:] = (be * be - al * al) / (s[1:] * (s[1:] + 2.0))
    m = k[1:]
    sm = s[1:]
    off = np.sqrt(4.0 * m * (m + al) * (m + be) * (m + al + be) / (sm * sm * (sm + 1.0) * (sm - 1.0)))
    x, vec = eigh_tridiagonal(diag, off)
    return 0.5 * (x + 1.0), vec[0] ** 2 / p


@lru_cache(maxsize=4)
def _legendre_unit(n: int):
    x, wts = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * wts


def _logsumexp_rows(logv, logw_nodes):
    # log sum_j exp(logv[i, j]) * w_j, row-wise, tolerating -inf rows.
    m = np.max(logv, axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    s = np.exp(logv - m) @ logw_nodes
    with np.errstate(divide="ignore"):
        return np.log(s) + m[:, 0]


def _log_power_integral(p, log_h, x_end, x_start, rate):
    """log int_0^{x_end} x^(p-1) h(x) dx, vectorized over rows.

    ``log_h(x)`` maps an (k, m) array of abscissae to log h. ``x_start`` (k,)
    is where Gauss-Jacobi on [0, x_start] hands over to Gauss-Legendre
    panels in log x; ``rate`` bounds |d log(x^p h) / d log x|.
    """
    k = x_start.size
    xj, wj = _jacobi_unit(_JACOBI_NODES, float(p))
    xs = x_start[:, None] * xj[None, :]
    head = p * np.log(x_start) + _logsumexp_rows(log_h(xs), wj)
    pieces = [head]
    span = np.log(x_end) - np.log(x_start)
    if np.any(span > 0):
        npan = int(max(1, math.ceil(float(np.max(span)) * max(1.0, rate / 8.0))))
        xg, wg = _legendre_unit(_GL_NODES)
        width = span / npan
        # Abscissae in y = log x, one row per point, npan panels per row.
        off = (np.arange(npan)[:, None] + xg[None, :]).ravel()
        y = np.log(x_start)[:, None] + width[:, None] * off[None, :]
        xx = np.exp(y)
        logv = p * y + log_h(xx)
        wts = np.tile(wg, npan)
        body = _logsumexp_rows(logv, wts)
        with np.errstate(divide="ignore"):
            body = body + np.log(np.where(span > 0, width, 0.0))
        pieces.append(np.where(span > 0, body, -np.inf))
    return np.logaddexp.reduce(np.vstack(pieces), axis=0) if len(pieces) > 1 else head


def _euler_integral_log(A, B, C, w, one_minus_w):
    """log 2F1(A, B; C; w) via the Euler integral, for C > B > 0, w in (0, 1).

    The integrand s^(B-1) (1-s)^(C-B-1) (1-ws)^(-A) is split at s = 1/2. The
    right half, written in u = 1 - s, has a near-singularity at u = -delta
    with delta = (1-w)/w, which is resolved by panels uniform in log u.
    """
    w = np.asarray(w, dtype=float).ravel()
    k = w.size
    lognorm = log_gamma(C) - log_gamma(B) - log_gamma(C - B)
    rate = max(1.0, abs(B), abs(C - B), abs(A), abs(B - 1.0), abs(C - B - 1.0))
    half = np.full(k, 0.5)

    def log_h1(s):
        return (C - B - 1.0) * np.log1p(-s) - A * np.log1p(-w[:, None] * s)

    start1 = np.minimum(half, 1.0 / rate)
    left = _log_power_integral(B, log_h1, 0.5, start1, rate)

    delta = np.asarray(one_minus_w, dtype=float).ravel() / w

    def log_h2(u):
        return (B - 1.0) * np.log1p(-u) - A * (np.log(w)[:, None] + np.log(u + delta[:, None]))

    start2 = np.minimum(np.minimum(half, delta), 1.0 / rate)
    right = _log_power_integral(C - B, log_h2, 0.5, start2, rate)
    return lognorm + np.logaddexp(left, right)


def _contiguous_down(a, b, c0, z, extra=0):
    """2F1(a,b;c0;z) by Gauss's contiguous relation, recurring down in c.

    Starts from c0 + m > min(a, b), where the Euler integral applies.
    """
    m = int(math.floor(min(a, b) - c0)) + 1 + extra
    c = c0 + m
    f_hi, _ = hyp2f1_nonpos(a, b, c + 1, z)
    f_c, _ = hyp2f1_nonpos(a, b, c, z)
    for _ in range(m):
        f_lo = -(c * (c - 1 - (2 * c - a - b - 1) * z) * f_c
                 + (c - a) * (c - b) * z * f_hi) / (c * (c - 1) * (z - 1))
        f_hi, f_c = f_c, f_lo
        c -= 1
    return f_c


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _check_args(c, z):
    if not c > 0:
        raise ValueError(f"gauss_2f1 requires c > 0, got c={c!r}")
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)):
        raise ValueError("gauss_2f1 received NaN argument")
    if np.any(z > 0):
        raise ValueError("gauss_2f1 supports only z <= 0")
    return z


def log_hyp2f1_nonpos(a: float, b: float, c: float, z):
    """log |2F1(a, b; c; z)| for real z <= 0, without over- or underflow.

    Returns ``(log_abs, sign, achieved_tol)`` with the shape of ``z``; the
    tolerance is relative to the function value.

    The smaller of a, b is pulled out with the Pfaff transformation
    2F1(a,b;c;z) = (1-z)^(-b) 2F1(c-a,b;c;w), w = z/(z-1) in [0, 1), and the
    w-series is summed. Entries where the series would converge too slowly
    (w > 0.9) or lose digits to cancellation fall back to an Euler-integral
    quadrature, or to the all-positive companion series
    (1-z)^(-a) 2F1(a, c-b; c; w).
    """
    a, b, c = float(a), float(b), float(c)
    z = _check_args(c, z)
    if b > a:
        a, b = b, a
    if c <= b and not _is_nonpos_int(c - a):
        # No Euler integral below c = min(a, b); recur down from above it.
        # Two starting heights give an error estimate.
        v1 = _contiguous_down(a, b, c, z)
        v2 = _contiguous_down(a, b, c, z, extra=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            est = np.abs(v1 - v2) / np.abs(v1) + 8 * EPS
            return np.log(np.abs(v1)), np.sign(v1), np.where(z == 0, 0.0, est)
    shape = z.shape
    zf = z.ravel()
    logv = np.zeros_like(zf)
    sign = np.ones_like(zf)
    tol = np.zeros_like(zf)

    nz = np.flatnonzero(zf < 0)
    if nz.size == 0:
        return logv.reshape(shape), sign.reshape(shape), tol.reshape(shape)
    zn = zf[nz]
    with np.errstate(over="ignore"):
        w = np.where(np.isinf(zn), 1.0, zn / (zn - 1.0))
    log1mz = np.log1p(-zn)
    one_minus_w = 1.0 / (1.0 - zn)

    A, B, C = c - a, b, c
    terminating = _is_nonpos_int(A) or _is_nonpos_int(B)
    use_series = np.ones(zn.size, dtype=bool) if terminating else (w <= _W_SERIES_MAX)
    pending = np.ones(zn.size, dtype=bool)

    def put_series(sel, s, abs_s, tail):
        with np.errstate(divide="ignore", invalid="ignore"):
            logv[nz[sel]] = np.log(np.abs(s)) - b * log1mz[sel]
            sign[nz[sel]] = np.sign(s)
            tol[nz[sel]] = 4 * EPS * abs_s / np.abs(s) + tail

    idx = np.flatnonzero(use_series)
    if idx.size:
        s, abs_s, tail = _pfaff_series(A, B, C, w[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (abs_s / np.abs(s) <= _COND_MAX) & (s != 0)
        put_series(idx[ok], s[ok], abs_s[ok], tail[ok])
        pending[idx[ok]] = False

    rest = np.flatnonzero(pending)
    if rest.size:
        if c > b > 0:
            near_one = rest[w[rest] > _W_SERIES_MAX]
            if near_one.size:
                lv = _euler_integral_log(A, B, C, w[near_one], one_minus_w[near_one])
                logv[nz[near_one]] = lv - b * log1mz[near_one]
                tol[nz[near_one]] = 1e-13
            moderate = rest[w[rest] <= _W_SERIES_MAX]
            if moderate.size and a > 0:
                lv, tail = _positive_series_log(a, c - b, c, w[moderate])
                logv[nz[moderate]] = lv - a * log1mz[moderate]
                tol[nz[moderate]] = EPS * 16 + tail
            elif moderate.size:
                put_series(moderate, *_pfaff_series(A, B, C, w[moderate]))
        else:
            put_series(rest, *_pfaff_series(A, B, C, w[rest]))
    return logv.reshape(shape), sign.reshape(shape), tol.reshape(shape)


def hyp2f1_nonpos(a: float, b: float, c: float, z) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized 2F1(a, b; c; z) for real z <= 0.

    Returns ``(values, achieved_tol)`` with the shape of ``z``. Values below
    the floating-point range underflow to 0; use :func:`log_hyp2f1_nonpos`
    when that matters.
    """
    logv, sign, tol = log_hyp2f1_nonpos(a, b, c, z)
    return sign * np.exp(logv), tol


def gauss_2f1(a: float, b: float, c: float, z: float) -> SpecFunResult:
    """2F1(a, b; c; z) for scalar z <= 0, with an error estimate."""
    if not (a > 0 and b > 0):
        raise ValueError(f"gauss_2f1 requires a, b > 0, got a={a!r}, b={b!r}")
    val, tol = hyp2f1_nonpos(a, b, c, float(z))
    return SpecFunResult(float(val), float(tol))


def direct_series_2f1(a, b, c, z, dps: int = 50):
    """High-precision reference: Pfaff transform then plain series in mpmath.

    Independent of :func:`hyp2f1_nonpos` (no quadrature, no fallbacks); meant
    as a test oracle for moderate |z|.
    """
    import mpmath

    with mpmath.workdps(dps):
        a, b, c, z = (mpmath.mpf(v) for v in (a, b, c, z))
        w = z / (z - 1)
        total = mpmath.mpf(1)
        term = mpmath.mpf(1)
        n = 0
        eps = mpmath.mpf(10) ** (-dps)
        while True:
            term *= (n + c - a) * (n + b) / ((n + 1) * (n + c)) * w
            total += term
            n += 1
            if abs(term) < eps * abs(total) or n > 200_000:
                break
        return (1 - z) ** (-b) * total
