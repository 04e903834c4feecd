"""Scalar special functions used by the analytic predictions and the synthesis.

Conventions fixed here once and used everywhere else:

* Hermite polynomials are the probabilists' family (``H2(u) = u^2 - 1``),
  extended by ``H_{-1}(u) = sqrt(2 pi) (1 - Phi(u)) exp(u^2/2)``.
* ``rho_l(u) = (2 pi)^{-(l+1)/2} H_{l-1}(u) exp(-u^2/2)``, so that
  ``rho_0 = 1 - Phi``.
* Associated Legendre functions are fully normalized (integral of |Ylm|^2
  over the sphere equals one) and carry the Condon-Shortley phase.

Everything in this module is a pure function of its arguments.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "normal_cdf",
    "normal_pdf",
    "hermite",
    "rho",
    "legendre_p",
    "assoc_legendre_norm",
    "assoc_legendre_matrix",
    "bessel_j0",
    "bessel_j0_zeros",
    "cosint_ci",
    "sinint_si",
    "upper_incomplete_gamma",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(u: float) -> float:
    """Standard Gaussian CDF. Accepts +-inf."""
    if math.isinf(u):
        return 0.0 if u < 0 else 1.0
    return 0.5 * math.erfc(-u / _SQRT2)


def normal_pdf(u: float) -> float:
    if math.isinf(u):
        return 0.0
    return math.exp(-0.5 * u * u) / _SQRT2PI


def _hermite_minus_one(u: float) -> float:
    # sqrt(2 pi) (1 - Phi(u)) e^{u^2/2}; combine in log space on the right
    # tail where both factors under/overflow, switch to the Mills-ratio
    # asymptotic series once erfc itself degrades.
    if u >= 30.0:
        # 1/u * sum (-1)^k (2k-1)!! / u^{2k}, truncated where terms are ~1e-26
        s, term = 1.0, 1.0
        for k in range(1, 14):
            term *= -(2 * k - 1) / (u * u)
            s += term
        return s / u
    tail = 0.5 * math.erfc(u / _SQRT2)
    return _SQRT2PI * math.exp(0.5 * u * u + math.log(tail))


def hermite(k: int, u: float) -> float:
    """Probabilists' Hermite polynomial H_k(u); k = -1 is the extended case."""
    if k < -1:
        raise ValueError(f"Hermite order must be >= -1, got {k}")
    if k == -1:
        return _hermite_minus_one(u)
    h_prev, h = 1.0, u
    if k == 0:
        return 1.0
    for n in range(1, k):
        h_prev, h = h, u * h - n * h_prev
    return h


def rho(l: int, u: float) -> float:
    """rho_l(u) = (2 pi)^{-(l+1)/2} H_{l-1}(u) exp(-u^2/2).

    The l = 0 case reduces analytically to 1 - Phi(u) and is evaluated that
    way to avoid the exp(u^2/2) * exp(-u^2/2) round trip.
    """
    if l < 0:
        raise ValueError("rho order must be >= 0")
    if l == 0:
        return 1.0 - normal_cdf(u)
    if math.isinf(u):
        return 0.0  # Gaussian factor wins over any polynomial
    return (2.0 * math.pi) ** (-(l + 1) / 2.0) * hermite(l - 1, u) * math.exp(-0.5 * u * u)


def legendre_p(ell: int, t: float) -> float:
    """Legendre polynomial P_ell(t) by the stable upward recurrence."""
    if ell < 0:
        raise ValueError("degree must be >= 0")
    if abs(t) > 1.0:
        raise ValueError(f"Legendre argument must satisfy |t| <= 1, got {t}")
    p_prev, p = 1.0, t
    if ell == 0:
        return 1.0
    for n in range(1, ell):
        p_prev, p = p, ((2 * n + 1) * t * p - n * p_prev) / (n + 1)
    return p


def assoc_legendre_matrix(ell: int, theta: np.ndarray) -> np.ndarray:
    """Fully normalized P̄_{ell,m}(cos theta) for all m = 0..ell.

    Returns an array of shape ``(len(theta), ell + 1)``.  Uses the seeded
    degree recurrence on the normalized functions with exponent rescaling so
    that sin(theta)^m underflow near the poles (large m, small theta) does not
    zero out values that recover to O(1) later in the recurrence.  Safe for
    ell up to a few thousand.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x = np.cos(theta)
    s = np.sin(theta)
    n = theta.shape[0]
    out = np.zeros((n, ell + 1))

    # seed P̄_mm, advanced in m with the running rescale exponent (powers of 1e-240)
    pmm = np.full(n, 1.0 / math.sqrt(4.0 * math.pi))
    ex = np.zeros(n, dtype=np.int64)
    for m in range(ell + 1):
        if m > 0:
            pmm = pmm * s * (-math.sqrt((2 * m + 1) / (2.0 * m)))
            small = np.abs(pmm) < 1e-240
            if small.any():
                pmm[small] *= 1e240
                ex[small] -= 1
        p_prev = np.zeros(n)
        p_cur = pmm
        e = ex.copy()
        for l in range(m, ell):
            a = math.sqrt((2 * l + 1.0) * (2 * l + 3.0) / ((l + 1.0 - m) * (l + 1.0 + m)))
            b = math.sqrt(
                (2 * l + 3.0) * (l - m) * (l + m) / ((2 * l - 1.0) * (l + 1.0 - m) * (l + 1.0 + m))
            ) if l > m else 0.0
            p_prev, p_cur = p_cur, a * x * p_cur - b * p_prev
            if m > 0:
                recover = (e < 0) & (np.abs(p_cur) > 1e-40)
                if recover.any():
                    fac = np.where(recover, 1e-240, 1.0)
                    p_cur = p_cur * fac
                    p_prev = p_prev * fac
                    e[recover] += 1
        v = p_cur.copy()
        under = e < 0
        if under.any():
            # exponent still negative: value is genuinely tiny; unfold what fits
            scale = np.power(1e-240, np.minimum(-e[under], 2).astype(float))
            v[under] = p_cur[under] * scale
        out[:, m] = v
    return out


def assoc_legendre_norm(ell: int, m: int, theta: float) -> float:
    """Scalar P̄_{ell,m}(cos theta); see assoc_legendre_matrix."""
    if m < 0 or m > ell:
        raise ValueError(f"order m must satisfy 0 <= m <= ell, got m={m}, ell={ell}")
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    return float(assoc_legendre_matrix(ell, np.array([theta]))[0, m])


# --- Bessel J0 -------------------------------------------------------------

_J0_SWITCH = 12.0


def _j0_series(x: float) -> float:
    # sum (-1)^k (x/2)^{2k} / (k!)^2; converges for all x, usable below ~13
    q = 0.25 * x * x
    term = 1.0
    s = 1.0
    for k in range(1, 60):
        term *= -q / (k * k)
        s += term
        if abs(term) < 1e-18:
            break
    return s


def _j0_asymptotic(x: float) -> float:
    # Hankel expansion: J0 = sqrt(2/(pi x)) [P cos(x - pi/4) + Q sin(x - pi/4)]
    # with a_k = prod (2i-1)^2 / (k! 8^k); truncated at the smallest term.
    ak = 1.0
    p, q = 1.0, 0.0
    sign_p, sign_q = -1.0, 1.0
    last = math.inf
    for k in range(1, 20):
        ak *= (2 * k - 1) ** 2 / (8.0 * k)
        t = ak / x**k
        if t > last:
            break
        last = t
        if k % 2 == 1:
            q += sign_q * t
            sign_q = -sign_q
        else:
            p += sign_p * t
            sign_p = -sign_p
    chi = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) + q * math.sin(chi))


def bessel_j0(x: float) -> float:
    """J0(x) for x >= 0: power series below 12, Hankel form above."""
    if x < 0:
        raise ValueError("bessel_j0 requires x >= 0")
    return _j0_series(x) if x <= _J0_SWITCH else _j0_asymptotic(x)


def bessel_j0_zeros(n: int) -> np.ndarray:
    """First n positive zeros of J0 (McMahon expansion + bisection polish)."""
    zeros = np.empty(n)
    for k in range(1, n + 1):
        beta = (k - 0.25) * math.pi
        x = beta + 1.0 / (8 * beta) - 31.0 / (384 * beta**3)
        lo, hi = x - 0.1, x + 0.1
        flo = bessel_j0(lo)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = bessel_j0(mid)
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
            if hi - lo < 1e-13:
                break
        zeros[k - 1] = 0.5 * (lo + hi)
    return zeros


# --- sine/cosine integrals -------------------------------------------------


def _cisi(x: float) -> tuple[float, float]:
    """(Ci(x), Si(x)) for x > 0: series below 2, Lentz continued fraction above."""
    if x <= 2.0:
        x2 = x * x
        # Si = sum t_k / (2k+1), t_k = (-1)^k x^{2k+1} / (2k+1)!
        sums = 0.0
        t = x
        k = 0
        while True:
            sums += t / (2 * k + 1)
            k += 1
            t *= -x2 / ((2 * k) * (2 * k + 1))
            if abs(t) < 1e-20 or k > 60:
                break
        # Ci = gamma + ln x + sum u_k / (2k), u_k = (-1)^k x^{2k} / (2k)!
        sumc = 0.0
        u = -0.5 * x2
        k = 1
        while True:
            sumc += u / (2 * k)
            k += 1
            u *= -x2 / ((2 * k - 1) * (2 * k))
            if abs(u) < 1e-20 or k > 60:
                break
        euler = 0.5772156649015328606
        return euler + math.log(x) + sumc, sums
    # complex continued fraction for E1(ix) (modified Lentz)
    b = complex(1.0, x)
    c = complex(1e308, 0.0)
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        a = -(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    h *= complex(math.cos(x), -math.sin(x))
    ci = -h.real
    si = 0.5 * math.pi + h.imag
    return ci, si


def cosint_ci(x: float) -> float:
    """Cosine integral Ci(x), x > 0."""
    if x <= 0:
        raise ValueError("Ci requires x > 0")
    return _cisi(x)[0]


def sinint_si(x: float) -> float:
    """Sine integral Si(x), x >= 0."""
    if x < 0:
        raise ValueError("Si requires x >= 0")
    if x == 0.0:
        return 0.0
    return _cisi(x)[1]


# --- incomplete gamma ------------------------------------------------------


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Gamma(a, x) = int_x^inf t^{a-1} e^{-t} dt for a > 0, x >= 0."""
    if a <= 0:
        raise ValueError("upper_incomplete_gamma requires a > 0")
    if x < 0:
        raise ValueError("upper_incomplete_gamma requires x >= 0")
    if x == 0.0:
        return math.gamma(a)
    if x < a + 1.0:
        # lower series, then complement
        term = 1.0 / a
        total = term
        n = a
        for _ in range(500):
            n += 1.0
            term *= x / n
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        lower = total * math.exp(-x + a * math.log(x))
        return math.gamma(a) - lower
    # continued fraction (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x)) * h
