"""Random variates for the indefinite rank-2 Wishart ensemble.

Two independent routes produce condition numbers of A = W^T W Sigma:

* the chi pipeline draws the triangular factor R = [[a, b], [0, c]] with
  independent chi entries and works with R Sigma R^T directly;
* the direct route builds W (real, complex or quaternion normal entries),
  Gram-Schmidts its two columns into (a, b, c), and never touches the chi
  sampler.

Randomness comes from numpy's Philox4x64 counter-based generator. Normals
use numpy's ziggurat; gamma variates use Marsaglia and Tsang's squeeze
method implemented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "RngState",
    "TriangularFactor",
    "SymmetricProduct",
    "EigenDecomp",
    "DegenerateInputError",
    "gamma_sample",
    "chi_sample",
    "sample_triangular",
    "form_product",
    "eig_sym2",
    "ratio_t",
    "condition_number",
    "sample_condition",
    "sample_direct",
    "sample_direct_condition",
]


class DegenerateInputError(ValueError):
    """An eigenvalue is zero, so a ratio or condition number is undefined."""


@dataclass(frozen=True)
class ModelParams:
    """Row count ``L``, ghost parameter ``beta`` and the diagonal of Sigma."""

    L: int
    beta: float
    x1: float
    x2: float

    def __post_init__(self):
        if isinstance(self.L, bool) or int(self.L) != self.L:
            raise ValueError(f"L must be an integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "x1", float(self.x1))
        object.__setattr__(self, "x2", float(self.x2))
        if self.L < 2:
            raise ValueError(f"L must be at least 2, got {self.L}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError("x1 and x2 must be finite")
        if not self.x1 * self.x2 < 0:
            raise ValueError("x1 and x2 must have opposite signs (and be nonzero)")

    @property
    def ratio_exponent(self) -> float:
        """beta (L - 1) / 2: the power-law exponent of both tails of t."""
        return 0.5 * self.beta * (self.L - 1)


@dataclass
class RngState:
    """Seeded Philox4x64 stream. Same seed, same variates, bit for bit."""

    seed: int
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.generator = np.random.Generator(np.random.Philox(seed))

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)


@dataclass
class TriangularFactor:
    """Entries of R = [[a, b], [0, c]]; scalars or equal-shape arrays."""

    a: np.ndarray | float
    b: np.ndarray | float
    c: np.ndarray | float


@dataclass
class SymmetricProduct:
    """R Sigma R^T = [[d, f], [f, e]]."""

    d: np.ndarray | float
    e: np.ndarray | float
    f: np.ndarray | float


@dataclass
class EigenDecomp:
    """[[d, f], [f, e]] = G diag(lambda1, lambda2) G^T, G a rotation by theta."""

    lambda1: np.ndarray | float
    lambda2: np.ndarray | float
    theta: np.ndarray | float


def _marsaglia_tsang(shape: float, size: int, rng: RngState) -> np.ndarray:
    # Requires shape >= 1. Candidates are drawn in batches; the batch sizes
    # depend only on how many draws are still missing, so the stream is
    # deterministic.
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = int((size - filled) * 1.05) + 16
        x = rng.normal(m)
        u = rng.uniform(m)
        v = 1.0 + c * x
        pos = v > 0
        v = np.where(pos, v, 1.0) ** 3
        x2 = x * x
        with np.errstate(divide="ignore"):
            accept = pos & (
                (u < 1.0 - 0.0331 * x2 * x2)
                | (np.log(u) < 0.5 * x2 + d * (1.0 - v + np.log(v)))
            )
        got = (d * v)[accept][: size - filled]
        out[filled : filled + got.size] = got
        filled += got.size
    return out


def gamma_sample(shape: float, rng: RngState, size: int | None = None):
    """Draw Gamma(shape, scale=1) variates.

    For ``shape < 1`` the boost Gamma(shape) = Gamma(shape + 1) U^(1/shape)
    is applied in log space, so tiny shapes underflow gracefully to 0.
    Returns a float when ``size`` is None, else an array.
    """
    shape = float(shape)
    if not shape > 0 or not math.isfinite(shape):
        raise ValueError(f"gamma shape must be positive, got {shape}")
    n = 1 if size is None else int(size)
    if shape >= 1.0:
        g = _marsaglia_tsang(shape, n, rng)
    else:
        g1 = _marsaglia_tsang(shape + 1.0, n, rng)
        u = rng.uniform(n)
        with np.errstate(divide="ignore"):
            g = np.exp(np.log(g1) + np.log(u) / shape)
    return float(g[0]) if size is None else g


def chi_sample(dof: float, rng: RngState, size: int | None = None):
    """Draw chi variates with ``dof`` (possibly non-integer) degrees of freedom."""
    dof = float(dof)
    if not dof > 0 or not math.isfinite(dof):
        raise ValueError(f"chi degrees of freedom must be positive, got {dof}")
    g = gamma_sample(0.5 * dof, rng, size)
    return math.sqrt(2.0 * g) if size is None else np.sqrt(2.0 * g)


def sample_triangular(params: ModelParams, rng: RngState, size: int | None = None) -> TriangularFactor:
    """a ~ chi_{L beta}, b ~ chi_beta, c ~ chi_{(L-1) beta}, independent."""
    L, beta = params.L, params.beta
    a = chi_sample(L * beta, rng, size)
    b = chi_sample(beta, rng, size)
    c = chi_sample((L - 1) * beta, rng, size)
    return TriangularFactor(a, b, c)


def form_product(r: TriangularFactor, params: ModelParams) -> SymmetricProduct:
    x1, x2 = params.x1, params.x2
    a, b, c = r.a, r.b, r.c
    return SymmetricProduct(d=a * a * x1 + b * b * x2, e=c * c * x2, f=b * c * x2)


def eig_sym2(m: SymmetricProduct) -> EigenDecomp:
    """Closed-form eigendecomposition of [[d, f], [f, e]] with theta in [0, pi/2].

    With theta restricted to [0, pi/2], sin(2 theta) >= 0, so
    f = sin(2 theta)/2 (lambda1 - lambda2) forces sign(lambda1 - lambda2) =
    sign(f). When f == 0 exactly, lambda1 = d, lambda2 = e and theta = 0.

    The larger-magnitude eigenvalue comes from the trace and discriminant;
    the other one too unless |trace| is close to the discriminant, in which
    case it is recovered from the determinant to avoid cancellation.
    """
    d = np.asarray(m.d, dtype=float)
    e = np.asarray(m.e, dtype=float)
    f = np.asarray(m.f, dtype=float)
    scalar = d.ndim == 0 and e.ndim == 0 and f.ndim == 0
    d, e, f = np.broadcast_arrays(np.atleast_1d(d), np.atleast_1d(e), np.atleast_1d(f))

    diff = d - e
    disc = np.hypot(diff, 2.0 * f)
    tr = d + e
    big = 0.5 * (tr + np.where(tr >= 0, disc, -disc))
    det = d * e - f * f
    with np.errstate(divide="ignore", invalid="ignore"):
        # det/big only where tr - sign(tr) disc would cancel
        small = np.where(
            np.abs(tr) < 0.5 * disc,
            0.5 * (tr - np.where(tr >= 0, disc, -disc)),
            np.where(big != 0, det / big, 0.0),
        )
    hi = np.maximum(big, small)
    lo = np.minimum(big, small)

    neg = f < 0
    lam1 = np.where(neg, lo, hi)
    lam2 = np.where(neg, hi, lo)
    theta = 0.5 * np.arctan2(2.0 * np.abs(f), np.where(neg, -diff, diff))

    zero = f == 0
    lam1 = np.where(zero, d, lam1)
    lam2 = np.where(zero, e, lam2)
    theta = np.where(zero, 0.0, theta)
    if scalar:
        return EigenDecomp(float(lam1[0]), float(lam2[0]), float(theta[0]))
    return EigenDecomp(lam1, lam2, theta)


def ratio_t(eig: EigenDecomp):
    """t = -lambda2 / lambda1."""
    lam1 = np.asarray(eig.lambda1, dtype=float)
    if np.any(lam1 == 0):
        raise DegenerateInputError("lambda1 is zero; t = -lambda2/lambda1 undefined")
    t = -np.asarray(eig.lambda2, dtype=float) / lam1
    return float(t) if t.ndim == 0 else t


def condition_number(eig: EigenDecomp):
    """sigma = max(|lambda|) / min(|lambda|) = max(t, 1/t)."""
    l1 = np.abs(np.asarray(eig.lambda1, dtype=float))
    l2 = np.abs(np.asarray(eig.lambda2, dtype=float))
    if np.any(l1 == 0) or np.any(l2 == 0):
        raise DegenerateInputError("zero eigenvalue; condition number undefined")
    sigma = np.maximum(l1, l2) / np.minimum(l1, l2)
    return float(sigma) if sigma.ndim == 0 else sigma


def sample_condition(params: ModelParams, n: int, rng: RngState) -> np.ndarray:
    """``n`` condition numbers through the chi pipeline."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    r = sample_triangular(params, rng, n)
    return condition_number(eig_sym2(form_product(r, params)))


def _quaternion_inner(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """sum_l conj(p_l) q_l over axis -2; quaternion components on axis -1."""
    p0, p1, p2, p3 = p[..., 0], -p[..., 1], -p[..., 2], -p[..., 3]
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    prod = np.stack(
        [
            p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
            p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
            p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
            p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
        ],
        axis=-1,
    )
    return prod.sum(axis=-2)


def _direct_factor(L: int, beta: int, rng: RngState, size: int) -> TriangularFactor:
    if beta not in (1, 2, 4):
        raise ValueError(f"direct W sampling supports beta in {{1, 2, 4}}, got {beta}")
    # (draw, row, column, component)
    w = rng.normal((size, L, 2, beta))
    w1, w2 = w[:, :, 0, :], w[:, :, 1, :]
    n1 = np.einsum("nlk,nlk->n", w1, w1)
    n2 = np.einsum("nlk,nlk->n", w2, w2)
    if beta == 1:
        inner = np.abs(np.einsum("nl,nl->n", w1[..., 0], w2[..., 0]))
    elif beta == 2:
        z1 = w1[..., 0] + 1j * w1[..., 1]
        z2 = w2[..., 0] + 1j * w2[..., 1]
        inner = np.abs(np.einsum("nl,nl->n", z1.conj(), z2))
    else:
        inner = np.linalg.norm(_quaternion_inner(w1, w2), axis=-1)
    a = np.sqrt(n1)
    b = inner / a
    c = np.sqrt(np.maximum(n2 - b * b, 0.0))
    return TriangularFactor(a, b, c)


def sample_direct(L: int, beta: int, x1: float, x2: float, rng: RngState, size: int | None = None):
    """Eigenvalues (lambda1, lambda2) of A from explicitly sampled W.

    W is L x 2 with real (beta=1), complex (2) or quaternion (4) entries
    whose components are independent N(0, 1). The chi sampler is not used.
    """
    params = ModelParams(L, beta, x1, x2)
    n = 1 if size is None else int(size)
    r = _direct_factor(params.L, int(beta), rng, n)
    eig = eig_sym2(form_product(r, params))
    if size is None:
        return float(eig.lambda1[0]), float(eig.lambda2[0])
    return eig.lambda1, eig.lambda2


def sample_direct_condition(params: ModelParams, n: int, rng: RngState) -> np.ndarray:
    """``n`` condition numbers through the direct W route."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    beta = params.beta
    if beta not in (1.0, 2.0, 4.0):
        raise ValueError(f"direct W sampling supports beta in {{1, 2, 4}}, got {beta}")
    lam1, lam2 = sample_direct(params.L, int(beta), params.x1, params.x2, rng, n)
    return condition_number(EigenDecomp(lam1, lam2, np.zeros_like(lam1)))
