"""High-precision reference formulas (mpmath), independent of the package.

These transcribe the closed forms directly, with no log-space tricks,
transformations or fallbacks, so they serve as oracles for the production
code.
"""

import mpmath as mp

mp.mp.dps = 40
G = mp.gamma
SQRT_PI = mp.sqrt(mp.pi)


def rho_R_beta1(a, b, c, L):
    return 2 * a ** (L - 1) * c ** (L - 2) * mp.exp(-(a * a + b * b + c * c) / 2) / (mp.pi * G(L - 1))


def rho_R_beta2(a, b, c, L):
    return (mp.mpf(2) ** (-2 * L + 3) * (L - 1) * a ** (2 * L - 1) * b * c ** (2 * L - 3)
            * mp.exp(-(a * a + b * b + c * c) / 2) / G(L) ** 2)


def rho_R_beta4(a, b, c, L):
    return (mp.mpf(2) ** (-4 * (L - 1)) * (L - 1) * (2 * L - 1) * a ** (4 * L - 1) * b ** 3
            * c ** (4 * L - 5) * mp.exp(-(a * a + b * b + c * c) / 2) / G(2 * L) ** 2)


def rho_t_theta_beta2(t, th, L, x1, x2):
    t, th = mp.mpf(t), mp.mpf(th)
    s, co = mp.sin(th), mp.cos(th)
    if s * s <= t * co * co:
        return mp.mpf(0)
    return ((-x1 * x2) ** L * G(2 * L) * t ** (L - 1) * (t + 1) ** 2 / (G(L - 1) * G(L))
            * mp.sin(2 * th) * (t * co ** 2 - s ** 2) ** (2 * (L - 1))
            / (x1 * (t ** 2 * co ** 2 + s ** 2) - x2 * t) ** (2 * L))


def cond_general(s, L, beta, x1, x2):
    """Condition-number density, general beta, directly in sigma."""
    s, beta, x1, x2 = mp.mpf(s), mp.mpf(beta), mp.mpf(x1), mp.mpf(x2)
    bl = beta * L
    pre = (2 ** (bl - 1) * (-x1 * x2) ** (bl / 2) * G(bl / 2 + mp.mpf(1) / 2) * G(beta * (L - 1) + 1)
           * (s + 1) ** beta * s ** (bl / 2 - beta / 2 - 1)
           / (SQRT_PI * G(beta * (L - 1) / 2) * G(bl - beta / 2 + 1)))
    r = (s * x2 - x1) / (s * x1 - x2)
    F = lambda z: mp.hyp2f1(bl, beta / 2, bl - beta / 2 + 1, z)  # noqa: E731
    return pre * (abs(1 / (s * x1 - x2)) ** bl * F(r) + abs(1 / (s * x2 - x1)) ** bl * F(1 / r))


def cond_beta2(s, L, x1, x2):
    """The hypergeometric-free complex case."""
    s, x1, x2 = mp.mpf(s), mp.mpf(x1), mp.mpf(x2)
    return (mp.mpf(1) / 4 * (-4 * x1 * x2) ** L * G(L - mp.mpf(1) / 2) * (s + 1)
            / (SQRT_PI * (x1 - x2) * G(L - 1) * s ** 4)
            * (s ** (L + 2) * (s * x1 - x2) / (x2 - x1 * s) ** (2 * L)
               + s ** (L + 2) * (x1 - s * x2) / (x2 * s - x1) ** (2 * L)))


def cond_symmetric(s, L, beta):
    s, beta = mp.mpf(s), mp.mpf(beta)
    return (2 * s ** (beta * L / 2 - beta / 2 - 1) * G(beta * L - beta + 1) * (s + 1) ** (-beta * (L - 1))
            / (beta * (L - 1) * G(beta * (L - 1) / 2) ** 2))


def ratio_density(t, L, beta, x1, x2):
    """Density of t = -lambda2/lambda1 by numerically folding out theta."""
    t = mp.mpf(t)
    th0 = mp.atan(mp.sqrt(t))
    beta, x1, x2 = mp.mpf(beta), mp.mpf(x1), mp.mpf(x2)
    bl = beta * L

    def integrand(th):
        s, co = mp.sin(th), mp.cos(th)
        return (2 * (-x1 * x2) ** (bl / 2) * G(bl) * t ** (bl / 2 - 1) * (t + 1) ** beta
                / (G(beta / 2) * G(beta * (L - 1) / 2) * G(bl / 2))
                * (s * co) ** (beta - 1) * max(s * s - t * co * co, 0) ** (beta * (L - 1))
                / abs(x1 * (t * t * co * co + s * s) - x2 * t) ** bl)

    return mp.quad(integrand, [th0, (th0 + mp.pi / 2) / 2, mp.pi / 2])
