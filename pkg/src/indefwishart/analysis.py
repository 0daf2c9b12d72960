"""Quadrature, CDFs and Monte Carlo goodness-of-fit checks."""

from __future__ import annotations

import heapq
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .densities import cond_density, limit_condition_number
from .sampling import ModelParams, RngState, sample_condition, sample_direct_condition

__all__ = [
    "IntegrationError",
    "DensityGrid",
    "VerificationReport",
    "integrate_adaptive",
    "cond_cdf",
    "total_mass",
    "CondCDF",
    "ks_statistic",
    "ks_two_sample",
    "histogram",
    "default_histogram_range",
    "draw_condition_numbers",
    "verify",
    "SAMPLERS",
]

SAMPLERS = ("chi_pipeline", "direct_w")
SHARD_SIZE = 1 << 16
KS_COEFF = 1.95  # asymptotic one-sample critical value at alpha = 0.001
NORMALIZATION_TOL = 1e-6


class IntegrationError(RuntimeError):
    """Adaptive quadrature gave up; ``best_estimate`` holds its last answer."""

    def __init__(self, message, best_estimate, error_estimate):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


# 15-point Kronrod rule with its embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])
_EPS = np.finfo(float).eps


def _eval_many(f, x):
    try:
        y = np.asarray(f(x), dtype=float)
    except TypeError:
        y = None
    if y is None or y.shape != x.shape:
        y = np.array([float(f(v)) for v in x.ravel()]).reshape(x.shape)
    return y


def _gk15(f, a, b):
    """Apply GK15 to each interval in the arrays a, b (one f call)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    y = _eval_many(f, x)
    if not np.all(np.isfinite(y)):
        raise IntegrationError("integrand is not finite at a quadrature node", math.nan, math.inf)
    k = (y @ _WK15) * h
    g = (y @ _WG15) * h
    resabs = (np.abs(y) @ _WK15) * np.abs(h)
    mean = k / np.where(h == 0, 1.0, 2.0 * h)
    resasc = (np.abs(y - mean[:, None]) @ _WK15) * np.abs(h)
    err = np.abs(k - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return k, err


def integrate_adaptive(f, lo: float, hi: float, tol: float = 1e-10, *, splits: int = 1,
                       max_intervals: int = 5000) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over [lo, hi].

    ``hi`` may be +inf; the map x = lo + (1 - u)/u sends u in (0, 1] onto
    [lo, inf) (for lo = 1 this is x = 1/u). Nodes never touch the endpoints,
    so integrable endpoint singularities are fine. ``f`` may be vectorized;
    scalar functions are evaluated pointwise. ``splits`` pre-divides the range
    so narrow features are not missed by the first rule.

    Raises IntegrationError (carrying the best estimate) when the requested
    relative tolerance is not reached within ``max_intervals`` intervals.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = float(lo), float(hi)
    if math.isnan(lo) or math.isnan(hi) or math.isinf(lo):
        raise ValueError("integration limits must be finite (hi may be +inf)")
    if hi == lo:
        return 0.0
    if hi < lo:
        return -integrate_adaptive(f, hi, lo, tol, splits=splits, max_intervals=max_intervals)
    if math.isinf(hi):
        g = f

        def f(u, _g=g, _lo=lo):
            u = np.asarray(u, dtype=float)
            return _eval_many(_g, _lo + (1.0 - u) / u) / (u * u)

        lo, hi = 0.0, 1.0

    edges = np.linspace(lo, hi, int(splits) + 1)
    a, b = edges[:-1], edges[1:]
    vals, errs = _gk15(f, a, b)
    heap = [(-e, float(x0), float(x1), float(v)) for x0, x1, v, e in zip(a, b, vals, errs)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    err_total = float(np.sum(errs))
    frozen_err = 0.0
    while err_total > tol * abs(total) and err_total > 1e-300:
        if not heap or len(heap) >= max_intervals:
            raise IntegrationError(
                f"no convergence: estimate {total!r}, error {err_total!r}", total, err_total
            )
        neg_e, x0, x1, v = heapq.heappop(heap)
        mid = 0.5 * (x0 + x1)
        if not (x0 < mid < x1):
            # Interval cannot be bisected further in floating point.
            frozen_err += -neg_e
            if frozen_err > tol * abs(total):
                raise IntegrationError("roundoff limits the attainable accuracy", total, err_total)
            continue
        kv, ke = _gk15(f, np.array([x0, mid]), np.array([mid, x1]))
        total += float(kv[0] + kv[1]) - v
        err_total += float(ke[0] + ke[1]) + neg_e
        heapq.heappush(heap, (-float(ke[0]), x0, mid, float(kv[0])))
        heapq.heappush(heap, (-float(ke[1]), mid, x1, float(kv[1])))
    return total


# ---------------------------------------------------------------------------
# Distribution functions of the condition number
# ---------------------------------------------------------------------------


def _log_integrand(params):
    def g(y):
        s = np.exp(y)
        return cond_density(s, params) * s

    return g


def _bulk_edge(params: ModelParams) -> float:
    """A sigma beyond which the density is in its power-law tail."""
    ratio = max(abs(params.x1 / params.x2), abs(params.x2 / params.x1))
    return 10.0 * max(ratio, limit_condition_number(params.L, params.x1, params.x2))


def cond_cdf(sigma, params: ModelParams, tol: float = 1e-12):
    """P(condition number <= sigma), integrated in log(sigma) from 1."""
    if np.ndim(sigma):
        return np.array([cond_cdf(s, params, tol) for s in np.ravel(sigma)]).reshape(np.shape(sigma))
    sigma = float(sigma)
    if not sigma >= 1:
        raise ValueError("cond_cdf requires sigma >= 1")
    if math.isinf(sigma):
        return min(1.0, total_mass(params, tol))
    if sigma == 1.0:
        return 0.0
    y = math.log(sigma)
    val = integrate_adaptive(_log_integrand(params), 0.0, y, tol,
                             splits=max(1, min(64, int(math.ceil(4 * y)))))
    return min(1.0, max(0.0, val))


def _tail_mass(params: ModelParams, s0: float, tol: float) -> float:
    # sigma = s0 v^(-1/k) flattens the sigma^(-k-1) tail into a bounded
    # integrand on v in (0, 1].
    k = params.ratio_exponent

    def g(v):
        v = np.asarray(v, dtype=float)
        s = s0 * v ** (-1.0 / k)
        return cond_density(s, params) * s / (k * v)

    return integrate_adaptive(g, 0.0, 1.0, tol)


def total_mass(params: ModelParams, tol: float = 1e-12) -> float:
    """Integral of the condition-number density over [1, inf)."""
    s0 = _bulk_edge(params)
    y0 = math.log(s0)
    body = integrate_adaptive(_log_integrand(params), 0.0, y0, tol,
                              splits=max(1, min(256, int(math.ceil(8 * y0)))))
    return body + _tail_mass(params, s0, tol)


class CondCDF:
    """Fast vectorized CDF of the condition number on [1, sigma_max].

    F is tabulated on a grid in y = log(sigma), each cell integrated with
    8-point Gauss-Legendre, and interpolated by cubic Hermite polynomials
    with the exact derivative f(sigma) sigma. A cell is bisected until the
    interpolant matches the exact value at its midpoint to ``tol``, so
    refinement concentrates where the density is sharply peaked. Points
    above ``sigma_max`` fall back to :func:`cond_cdf`.
    """

    _GL_X, _GL_W = np.polynomial.legendre.leggauss(8)

    def __init__(self, params: ModelParams, sigma_max: float, tol: float = 1e-9,
                 max_cells: int = 1 << 20):
        self.params = params
        self.tol = tol
        self.y_max = math.log(max(float(sigma_max), 1.0 + 1e-9))
        g = _log_integrand(params)
        edges = np.linspace(0.0, self.y_max, max(64, int(math.ceil(self.y_max / 0.05))) + 1)
        g_edges = g(edges)
        lo, hi, g_lo, g_hi = edges[:-1], edges[1:], g_edges[:-1], g_edges[1:]
        kept = []
        n_cells = lo.size
        worst = 0.0
        while lo.size:
            w = hi - lo
            full = self._cell_integrals(g, lo, w)
            half = self._cell_integrals(g, lo, 0.5 * w)
            # Hermite prediction at s = 1/2 minus the exact half-cell integral.
            err = np.abs(0.5 * full + 0.125 * w * (g_lo - g_hi) - half)
            mid = 0.5 * (lo + hi)
            ok = (err <= tol) | ~((lo < mid) & (mid < hi)) | (n_cells + lo.size > max_cells)
            kept.append((lo[ok], g_lo[ok], full[ok]))
            worst = max(worst, float(np.max(err[ok], initial=0.0)))
            bad = ~ok
            n_cells += int(bad.sum())
            m, g_m = mid[bad], g(mid[bad])
            lo, hi = np.concatenate([lo[bad], m]), np.concatenate([m, hi[bad]])
            g_lo, g_hi = np.concatenate([g_lo[bad], g_m]), np.concatenate([g_m, g_hi[bad]])
        y = np.concatenate([k[0] for k in kept])
        order = np.argsort(y)
        self._y = np.append(y[order], self.y_max)
        self._dens = np.append(np.concatenate([k[1] for k in kept])[order], g_edges[-1])
        cells = np.concatenate([k[2] for k in kept])[order]
        self._cdf = np.concatenate([[0.0], np.cumsum(cells)])
        self.grid_error = worst

    @classmethod
    def _cell_integrals(cls, g, start, width):
        x = start[:, None] + width[:, None] * 0.5 * (cls._GL_X[None, :] + 1.0)
        return (g(x) @ cls._GL_W) * 0.5 * width

    def __call__(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma < 1):
            raise ValueError("CDF argument must be >= 1")
        y = np.log(sigma)
        out = np.empty_like(y)
        inside = y <= self.y_max
        yi = y[inside]
        i = np.clip(np.searchsorted(self._y, yi, side="right") - 1, 0, self._y.size - 2)
        h = self._y[i + 1] - self._y[i]
        s = (yi - self._y[i]) / h
        s2, s3 = s * s, s * s * s
        F, d = self._cdf, self._dens
        out[inside] = ((2 * s3 - 3 * s2 + 1) * F[i] + (s3 - 2 * s2 + s) * h * d[i]
                       + (3 * s2 - 2 * s3) * F[i + 1] + (s3 - s2) * h * d[i + 1])
        for j in np.flatnonzero(~inside):
            out.flat[j] = cond_cdf(float(sigma.flat[j]), self.params)
        return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Goodness of fit and histograms
# ---------------------------------------------------------------------------


def ks_statistic(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance sup |F_n - F|.

    ``cdf`` is called once on the sorted sample array.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_two_sample(x, y) -> float:
    """Two-sample KS distance sup |F_x - F_y|."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise ValueError("ks_two_sample needs two nonempty samples")
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


@dataclass
class DensityGrid:
    """Abscissae and density values; histograms also carry their overflow."""

    points: np.ndarray
    values: np.ndarray
    overflow: int = 0
    n: int = 0
    bin_width: float | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.points.shape != self.values.shape:
            raise ValueError("points and values must have equal lengths")
        if self.points.size > 1 and np.any(np.diff(self.points) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")


def histogram(samples, bins: int, lo: float, hi: float) -> DensityGrid:
    """Density-normalized histogram on [lo, hi] evaluated at bin midpoints.

    Values are counts / (n * bin width) with n the full sample size, so the
    samples outside [lo, hi] (returned as ``overflow``) account for the
    missing mass.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    if not lo < hi:
        raise ValueError("histogram requires lo < hi")
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("histogram needs at least one sample")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    overflow = int(n - counts.sum())
    mids = 0.5 * (edges[:-1] + edges[1:])
    return DensityGrid(mids, counts / (n * width), overflow=overflow, n=n, bin_width=width)


def default_histogram_range(samples) -> tuple[float, float]:
    """[1, empirical 99.5th percentile], so heavy tails do not flatten the plot."""
    hi = float(np.percentile(np.asarray(samples, dtype=float), 99.5))
    return 1.0, max(hi, 1.0 + 1e-6)


# ---------------------------------------------------------------------------
# Monte Carlo verification
# ---------------------------------------------------------------------------


def _check_sampler(sampler: str, params: ModelParams):
    if sampler not in SAMPLERS:
        raise ValueError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    if sampler == "direct_w" and params.beta not in (1.0, 2.0, 4.0):
        raise ValueError(f"direct_w sampling supports beta in {{1, 2, 4}}, got beta={params.beta}")


def draw_condition_numbers(params: ModelParams, n: int, seed: int, sampler: str = "chi_pipeline",
                           workers: int = 1) -> np.ndarray:
    """``n`` condition numbers from independent streams seed, seed + 1, ...

    Shard i holds draws [i * 65536, (i + 1) * 65536) and uses its own
    RngState(seed + i); shards are concatenated in order, so the result does
    not depend on ``workers``.
    """
    _check_sampler(sampler, params)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    draw = sample_condition if sampler == "chi_pipeline" else sample_direct_condition
    sizes = [min(SHARD_SIZE, n - start) for start in range(0, n, SHARD_SIZE)]

    def shard(i):
        return draw(params, sizes[i], RngState((seed + i) % 2**64))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(shard, range(len(sizes))))
    else:
        parts = [shard(i) for i in range(len(sizes))]
    return np.concatenate(parts)


@dataclass
class VerificationReport:
    params: ModelParams
    n: int
    seed: int
    sampler: str
    ks_statistic: float
    ks_threshold: float
    normalization_residual: float
    passed: bool

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"L": p.L, "beta": p.beta, "x1": p.x1, "x2": p.x2},
            "n": self.n,
            "seed": self.seed,
            "sampler": self.sampler,
            "ks_statistic": self.ks_statistic,
            "ks_threshold": self.ks_threshold,
            "normalization_residual": self.normalization_residual,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def verify(params: ModelParams, n: int, seed: int, sampler: str = "chi_pipeline", *,
           cdf_params: ModelParams | None = None, workers: int = 1) -> VerificationReport:
    """Sample ``n`` condition numbers and KS-test them against the exact CDF.

    ``cdf_params`` (default: ``params``) selects the analytic distribution,
    which lets a deliberately mismatched pair serve as a negative control.
    """
    if n < 100:
        raise ValueError(f"verify needs n >= 100, got {n}")
    target = params if cdf_params is None else cdf_params
    samples = np.sort(draw_condition_numbers(params, n, seed, sampler, workers))
    cdf = CondCDF(target, samples[-1])
    d = ks_statistic(samples, cdf)
    resid = abs(total_mass(target) - 1.0)
    threshold = KS_COEFF / math.sqrt(n)
    return VerificationReport(
        params=params, n=int(n), seed=int(seed), sampler=sampler,
        ks_statistic=d, ks_threshold=threshold, normalization_residual=resid,
        passed=bool(d <= threshold and resid <= NORMALIZATION_TOL),
    )
