"""Closed-form densities for the indefinite rank-2 Wishart ensemble.

Every density is assembled as exp(sum of logs), with the gamma-function
prefactors taken from :func:`~indefwishart.specfun.log_gamma`; Gamma(beta L)
alone overflows a double once beta L passes ~170.

Notation: ``t = -lambda2/lambda1`` is the eigenvalue ratio, ``sigma =
max(t, 1/t)`` the condition number, and ``k = beta (L - 1) / 2`` the common
exponent of both power-law tails of t.
"""

from __future__ import annotations

import math

import numpy as np

from .sampling import ModelParams, SymmetricProduct, condition_number, eig_sym2
from .specfun import hyp2f1_nonpos, log_gamma, log_hyp2f1_nonpos

__all__ = [
    "rho_R",
    "rho_t_theta",
    "rho_t",
    "rho_t_special",
    "cond_density",
    "cond_density_fold",
    "cond_density_special",
    "cond_density_symmetric",
    "simple_case_density",
    "limit_condition_number",
]

_LOG_SQRT_PI = 0.5 * math.log(math.pi)


def _as_out(x):
    return float(x) if np.ndim(x) == 0 else x


def _xlogy(p, x):
    # p * log(x) with 0 * log(0) = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p == 0, 0.0, p * np.log(x))


def rho_R(a, b, c, params: ModelParams):
    """Joint density of the triangular factor entries (a, b, c)."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    if np.any(a < 0) or np.any(b < 0) or np.any(c < 0):
        raise ValueError("rho_R requires a, b, c >= 0")
    L, beta = params.L, params.beta
    bl = beta * L
    log_norm = (
        (3.0 - bl) * math.log(2.0)
        - log_gamma(bl / 2.0)
        - log_gamma(beta / 2.0)
        - log_gamma(beta * (L - 1) / 2.0)
    )
    with np.errstate(over="ignore"):
        logv = (
            log_norm
            + _xlogy(bl - 1.0, a)
            + _xlogy(beta - 1.0, b)
            + _xlogy(beta * (L - 1) - 1.0, c)
            - 0.5 * (a * a + b * b + c * c)
        )
        return _as_out(np.exp(logv))


def rho_t_theta(t, theta, params: ModelParams):
    """Joint density of the eigenvalue ratio t and rotation angle theta.

    Zero outside the admissible region tan(theta)^2 > t.
    """
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(t < 0):
        raise ValueError("rho_t_theta requires t >= 0")
    if np.any((theta < 0) | (theta > 0.5 * math.pi)):
        raise ValueError("rho_t_theta requires theta in [0, pi/2]")
    L, beta, x1, x2 = params.L, params.beta, params.x1, params.x2
    bl = beta * L
    t, theta = np.broadcast_arrays(t, theta)
    s, co = np.sin(theta), np.cos(theta)
    s2, c2 = s * s, co * co
    inside = s2 > t * c2
    log_norm = (
        math.log(2.0)
        + 0.5 * bl * math.log(-x1 * x2)
        + log_gamma(bl)
        - log_gamma(beta / 2.0)
        - log_gamma(beta * (L - 1) / 2.0)
        - log_gamma(bl / 2.0)
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        gap = np.abs(t * c2 - s2)
        denom = np.abs(x1 * (t * t * c2 + s2) - x2 * t)
        logv = (
            log_norm
            + _xlogy(0.5 * bl - 1.0, t)
            + beta * np.log1p(t)
            + _xlogy(beta - 1.0, s * co)
            + _xlogy(beta * (L - 1), gap)
            - bl * np.log(denom)
        )
        out = np.where(inside, np.exp(logv), 0.0)
    return _as_out(out)


def _log_ratio_prefactor(params: ModelParams) -> float:
    L, beta, x1, x2 = params.L, params.beta, params.x1, params.x2
    bl = beta * L
    return (
        (bl - 1.0) * math.log(2.0)
        + 0.5 * bl * math.log(-x1 * x2)
        + log_gamma(0.5 * bl + 0.5)
        + log_gamma(beta * (L - 1) + 1.0)
        - _LOG_SQRT_PI
        - log_gamma(0.5 * beta * (L - 1))
        - log_gamma(bl - 0.5 * beta + 1.0)
    )


def _hyp_params(params: ModelParams):
    bl = params.beta * params.L
    return bl, 0.5 * params.beta, bl - 0.5 * params.beta + 1.0


def rho_t(t, params: ModelParams):
    """Density of the eigenvalue ratio t = -lambda2/lambda1 on (0, inf).

    At t = 0 the density behaves like t^(k-1): the value is 0 for k > 1,
    finite for k = 1, and t = 0 is rejected for k < 1.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("rho_t requires t >= 0")
    k = params.ratio_exponent
    if k < 1 and np.any(t == 0):
        raise ValueError("rho_t diverges at t = 0 when beta (L - 1) / 2 < 1")
    x1, x2 = params.x1, params.x2
    a, b, c = _hyp_params(params)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inf = np.isinf(t)
        tt = np.where(inf, 1.0, t)
        z = (tt * x1 - x2) / (tt * x2 - x1)
        log_hyp, _, _ = log_hyp2f1_nonpos(a, b, c, np.minimum(z, 0.0))
        logv = (
            _log_ratio_prefactor(params)
            + params.beta * np.log1p(tt)
            + _xlogy(k - 1.0, tt)
            - a * np.log(np.abs(x1 - tt * x2))
            + log_hyp
        )
        out = np.where(inf, 0.0, np.exp(logv))
    return _as_out(out)


def cond_density(sigma, params: ModelParams):
    """Condition-number density on [1, inf), written directly in sigma.

    f(sigma) = K (sigma+1)^beta sigma^(k-1) [|sigma x1 - x2|^(-beta L) F(r)
               + |sigma x2 - x1|^(-beta L) F(1/r)],
    r = (sigma x2 - x1)/(sigma x1 - x2), F = 2F1(beta L, beta/2; beta L - beta/2 + 1; .).
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 1) or np.any(np.isnan(sigma)):
        raise ValueError("cond_density requires sigma >= 1")
    x1, x2 = params.x1, params.x2
    a, b, c = _hyp_params(params)
    k = params.ratio_exponent
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inf = np.isinf(sigma)
        s = np.where(inf, 1.0, sigma)
        p = s * x1 - x2
        q = s * x2 - x1
        r = q / p
        lh1, _, _ = log_hyp2f1_nonpos(a, b, c, np.minimum(r, 0.0))
        lh2, _, _ = log_hyp2f1_nonpos(a, b, c, np.minimum(1.0 / r, 0.0))
        base = _log_ratio_prefactor(params) + params.beta * np.log1p(s) + (k - 1.0) * np.log(s)
        # Both terms stay in log form; the 2F1 values can underflow alone.
        out = np.exp(base + np.logaddexp(lh1 - a * np.log(np.abs(p)), lh2 - a * np.log(np.abs(q))))
        out = np.where(inf, 0.0, out)
    return _as_out(out)


def cond_density_fold(sigma, params: ModelParams):
    """Condition-number density as the fold rho_t(1/sigma)/sigma^2 + rho_t(sigma)."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 1) or np.any(np.isnan(sigma)):
        raise ValueError("cond_density_fold requires sigma >= 1")
    with np.errstate(divide="ignore", over="ignore"):
        inv = 1.0 / sigma
        out = np.asarray(rho_t(inv, params)) * inv * inv + np.asarray(rho_t(sigma, params))
    return _as_out(out)


def rho_t_special(t, params: ModelParams):
    """Closed forms of the ratio density for beta = 1, 2, 4.

    beta = 2 needs no hypergeometric function at all.
    """
    beta = params.beta
    if beta not in (1.0, 2.0, 4.0):
        raise ValueError(f"no closed-form specialization for beta={beta}")
    L, x1, x2 = params.L, params.x1, params.x2
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("rho_t_special requires t > 0")
    u = x1 - t * x2  # |u| = |t x2 - x1|
    z = (t * x1 - x2) / (t * x2 - x1)
    with np.errstate(over="ignore"):
        if beta == 1.0:
            logk = (
                (L - 1) * math.log(2.0) + 0.5 * L * math.log(-x1 * x2)
                + log_gamma(0.5 * (L + 1)) + log_gamma(L)
                - _LOG_SQRT_PI - log_gamma(0.5 * (L - 1)) - log_gamma(L + 0.5)
            )
            hyp, _ = hyp2f1_nonpos(L, 0.5, L + 0.5, z)
            out = np.exp(logk + np.log1p(t) + (0.5 * L - 1.5) * np.log(t) - L * np.log(np.abs(u))) * hyp
        elif beta == 2.0:
            logk = (
                2 * (L - 1) * math.log(2.0) + L * math.log(-x1 * x2)
                + log_gamma(L - 0.5) - _LOG_SQRT_PI - log_gamma(L - 1)
            )
            # (t x2 - x1) / (x2 - x1) > 0 on the whole domain
            lin = (t * x2 - x1) / (x2 - x1)
            out = np.exp(logk + np.log(lin) + np.log1p(t) + (L - 2) * np.log(t) - 2 * L * np.log(np.abs(u)))
        else:
            logk = (
                (4 * L - 1) * math.log(2.0) + 2 * L * math.log(-x1 * x2)
                + log_gamma(2 * L + 0.5) + log_gamma(4 * L - 3)
                - _LOG_SQRT_PI - log_gamma(2 * (L - 1)) - log_gamma(4 * L - 1)
            )
            hyp, _ = hyp2f1_nonpos(4 * L, 2.0, 4 * L - 1.0, z)
            out = np.exp(logk + 4 * np.log1p(t) + (2 * L - 3) * np.log(t) - 4 * L * np.log(np.abs(u))) * hyp
    return _as_out(out)


def cond_density_special(sigma, params: ModelParams):
    """Closed-form condition-number densities for beta = 1, 2, 4."""
    beta = params.beta
    if beta not in (1.0, 2.0, 4.0):
        raise ValueError(f"no closed-form specialization for beta={beta}")
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 1) or np.any(np.isnan(sigma)):
        raise ValueError("cond_density_special requires sigma >= 1")
    L, x1, x2 = params.L, params.x1, params.x2
    s = sigma
    p = s * x1 - x2
    q = s * x2 - x1
    r = q / p
    with np.errstate(over="ignore"):
        if beta == 1.0:
            logk = (
                (L - 1) * math.log(2.0) + 0.5 * L * math.log(-x1 * x2)
                + log_gamma(0.5 * L + 0.5) + log_gamma(L)
                - _LOG_SQRT_PI - log_gamma(0.5 * L - 0.5) - log_gamma(0.5 + L)
            )
            h1, _ = hyp2f1_nonpos(0.5, L, L + 0.5, r)
            h2, _ = hyp2f1_nonpos(0.5, L, L + 0.5, 1.0 / r)
            pre = np.exp(logk + np.log1p(s) + (0.5 * L - 1.5) * np.log(s))
            return _as_out(pre * (np.abs(p) ** -L * h1 + np.abs(q) ** -L * h2))
        if beta == 2.0:
            # 1/4 (-4 x1 x2)^L Gamma(L-1/2) (s+1) / (sqrt(pi) (x1-x2) Gamma(L-1) s^4)
            #   * [s^(L+2) (s x1 - x2)/(x2 - x1 s)^(2L) + s^(L+2) (x1 - s x2)/(x2 s - x1)^(2L)]
            logk = (
                -math.log(4.0) + L * math.log(-4.0 * x1 * x2)
                + log_gamma(L - 0.5) - _LOG_SQRT_PI - log_gamma(L - 1)
            )
            pre = np.exp(logk + np.log1p(s) + (L - 2) * np.log(s))
            t1 = (p / (x1 - x2)) * np.exp(-2 * L * np.log(np.abs(p)))
            t2 = (-q / (x1 - x2)) * np.exp(-2 * L * np.log(np.abs(q)))
            return _as_out(pre * (t1 + t2))
        logk = (
            (4 * L - 1) * math.log(2.0) + 2 * L * math.log(-x1 * x2)
            + log_gamma(2 * L + 0.5) + log_gamma(4 * (L - 1) + 1)
            - _LOG_SQRT_PI - log_gamma(2 * (L - 1)) - log_gamma(4 * L - 1)
        )
        h1, _ = hyp2f1_nonpos(4 * L, 2.0, 4 * L - 1.0, r)
        h2, _ = hyp2f1_nonpos(4 * L, 2.0, 4 * L - 1.0, 1.0 / r)
        pre = np.exp(logk + 4 * np.log1p(s) + (2 * L - 3) * np.log(s))
        return _as_out(pre * (np.exp(-4 * L * np.log(np.abs(p))) * h1 + np.exp(-4 * L * np.log(np.abs(q))) * h2))


def cond_density_symmetric(sigma, L: int, beta: float):
    """Condition-number density when x1 = -x2 (the 2F1 argument is -1)."""
    params = ModelParams(L, beta, 1.0, -1.0)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 1) or np.any(np.isnan(sigma)):
        raise ValueError("cond_density_symmetric requires sigma >= 1")
    k = params.ratio_exponent
    m = params.beta * (params.L - 1)
    logk = math.log(2.0) + log_gamma(m + 1.0) - math.log(m) - 2.0 * log_gamma(k)
    with np.errstate(over="ignore", divide="ignore"):
        inf = np.isinf(sigma)
        s = np.where(inf, 1.0, sigma)
        out = np.exp(logk + (k - 1.0) * np.log(s) - m * np.log1p(s))
        out = np.where(inf, 0.0, out)
    return _as_out(out)


def simple_case_density(sigma):
    """L = 2, beta = 1, x1 = -x2: f(sigma) = 2 / (pi sqrt(sigma) (sigma + 1))."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 1) or np.any(np.isnan(sigma)):
        raise ValueError("simple_case_density requires sigma >= 1")
    return _as_out(2.0 / (math.pi * np.sqrt(sigma) * (sigma + 1.0)))


def limit_condition_number(L: int, x1: float, x2: float) -> float:
    """The deterministic condition number reached as beta -> infinity.

    chi_s / sqrt(s) -> 1, so R -> sqrt(beta) [[sqrt(L), 1], [0, sqrt(L-1)]]
    and the scale drops out of the ratio.
    """
    params = ModelParams(L, 1.0, x1, x2)
    L, x1, x2 = params.L, params.x1, params.x2
    # Entries of M Sigma M^T with a^2 = L and c^2 = L - 1 taken exactly.
    m = SymmetricProduct(d=L * x1 + x2, e=(L - 1) * x2, f=math.sqrt(L - 1) * x2)
    return condition_number(eig_sym2(m))
