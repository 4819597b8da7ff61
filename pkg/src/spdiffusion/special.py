"""Modified Bessel, modified spherical Bessel and Legendre functions.

Direct evaluations are backed by :mod:`scipy.special`.  The Green's function
series need ratios of Bessel functions at orders of several hundred where
``I_n`` underflows and ``K_n`` overflows; for those we work with logarithms
and fall back on the Debye uniform expansion.

The spherical ``k_n`` here follows the normalization
``k_n(x) = sqrt(2/(pi x)) K_{n+1/2}(x)`` so that ``k_0(x) = exp(-x)/x``.
This is ``2/pi`` times :func:`scipy.special.spherical_kn`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import DomainError, RangeError

LOG_OVERFLOW = math.log(np.finfo(float).max)  # ~709.78
_TINY = 1e-280
_HUGE = 1e280

VARIANTS = ("BesselI", "BesselK", "SphericalI", "SphericalK", "LegendreP")


@dataclass(frozen=True)
class SpecialKind:
    variant: str
    order: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown special function {self.variant!r}")
        if int(self.order) != self.order or self.order < 0:
            raise ValueError("order must be a non-negative integer")


def _check_range(val, name, x):
    if np.any(np.isinf(val)):
        raise RangeError(f"{name} overflows for x={np.max(x):g}; log-threshold {LOG_OVERFLOW:.2f}")
    return val


def _check_positive(x, name):
    if np.any(np.asarray(x) <= 0):
        raise DomainError(f"{name} requires x > 0")


def bessel_i(n, x):
    """``I_n(x)``."""
    x = np.asarray(x, dtype=float)
    return _check_range(sp.iv(n, x), "I_n", x)


def bessel_k(n, x):
    """``K_n(x)`` for ``x > 0``."""
    _check_positive(x, "K_n")
    x = np.asarray(x, dtype=float)
    return _check_range(sp.kv(n, x), "K_n", x)


def spherical_i(n, x):
    """Modified spherical Bessel ``i_n(x) = sqrt(pi/(2x)) I_{n+1/2}(x)``."""
    x = np.asarray(x, dtype=float)
    return _check_range(sp.spherical_in(n, x), "i_n", x)


def spherical_k(n, x):
    """Modified spherical Bessel ``k_n(x) = sqrt(2/(pi x)) K_{n+1/2}(x)``."""
    _check_positive(x, "k_n")
    x = np.asarray(x, dtype=float)
    return _check_range(sp.spherical_kn(n, x) * (2.0 / math.pi), "k_n", x)


def spherical_i_prime(n, x):
    """Derivative of ``i_n``; uses ``i_n' = i_{n+1} + (n/x) i_n`` (``i_1`` for ``n=0``)."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return spherical_i(1, x)
    return spherical_i(n + 1, x) + (n / x) * spherical_i(n, x)


def spherical_k_prime(n, x):
    """Derivative of ``k_n``; ``-k_1`` for ``n=0``, else ``-k_{n-1} - ((n+1)/x) k_n``."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return -spherical_k(1, x)
    return -spherical_k(n - 1, x) - ((n + 1) / x) * spherical_k(n, x)


def legendre_p(n, x):
    return sp.eval_legendre(n, np.asarray(x, dtype=float))


def eval_special(kind: SpecialKind, x):
    """Evaluate the function described by ``kind`` at ``x``."""
    n = kind.order
    if kind.variant == "BesselI":
        return bessel_i(n, x)
    if kind.variant == "BesselK":
        return bessel_k(n, x)
    if kind.variant == "SphericalI":
        return spherical_i(n, x)
    if kind.variant == "SphericalK":
        return spherical_k(n, x)
    return legendre_p(n, x)


def interface_F(x):
    """``x I_1(x) / I_0(x)``, computed from exponentially scaled Bessels."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("interface_F requires x >= 0")
    out = x * sp.ive(1, x) / sp.ive(0, x)
    return out if out.ndim else float(out)


# ------------------------------------------------------------ log domain

def _debye_u(t):
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2**2 - 425425.0 * t2**3) / 414720.0
    u4 = t2 * t2 * (4465125.0 - 94121676.0 * t2 + 349922430.0 * t2**2
                    - 446185740.0 * t2**3 + 185910725.0 * t2**4) / 39813120.0
    return u1, u2, u3, u4


def _debye_parts(nu, x):
    z = x / nu
    sq = np.sqrt(1.0 + z * z)
    t = 1.0 / sq
    eta = sq + np.log(z / (1.0 + sq))
    return t, eta, sq


def debye_log_i(nu, x):
    """Debye uniform expansion of ``log I_nu(x)``; accurate for large ``nu``."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    t, eta, sq = _debye_parts(nu, x)
    u1, u2, u3, u4 = _debye_u(t)
    s = 1.0 + u1 / nu + u2 / nu**2 + u3 / nu**3 + u4 / nu**4
    return nu * eta - 0.5 * np.log(2.0 * math.pi * nu) - 0.5 * np.log(sq) + np.log(s)


def debye_log_k(nu, x):
    """Debye uniform expansion of ``log K_nu(x)``; accurate for large ``nu``."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    t, eta, sq = _debye_parts(nu, x)
    u1, u2, u3, u4 = _debye_u(t)
    s = 1.0 - u1 / nu + u2 / nu**2 - u3 / nu**3 + u4 / nu**4
    return -nu * eta + 0.5 * np.log(math.pi / (2.0 * nu)) - 0.5 * np.log(sq) + np.log(s)


def log_bessel_i(nu, x):
    """``log I_nu(x)`` for real ``nu >= 0`` and ``x >= 0`` without overflow."""
    nu, x = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        v = sp.ive(nu, x)
        out = np.log(v) + x
    bad = ~(v > _TINY) & (x > 0)
    if np.any(bad):
        nb, xb = nu[bad], x[bad]
        small = xb * xb < 1e-6 * (nb + 1.0)
        fix = np.empty(nb.shape)
        # two-term power series when x is tiny, Debye otherwise
        q = 0.25 * xb[small] ** 2
        fix[small] = (nb[small] * np.log(0.5 * xb[small]) - sp.gammaln(nb[small] + 1.0)
                      + np.log1p(q / (nb[small] + 1.0) * (1.0 + 0.5 * q / (nb[small] + 2.0))))
        fix[~small] = debye_log_i(nb[~small], xb[~small])
        out = np.array(out, dtype=float)
        out[bad] = fix
    zero = x == 0
    if np.any(zero):
        out = np.array(out, dtype=float)
        out[zero] = np.where(nu[zero] == 0, 0.0, -np.inf)
    return out


def log_bessel_k(nu, x):
    """``log K_nu(x)`` for ``x > 0`` without overflow."""
    _check_positive(x, "K_nu")
    nu, x = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = sp.kve(nu, x)
        out = np.log(v) - x
    bad = ~(np.isfinite(v) & (v < _HUGE) & (v > 0))
    if np.any(bad):
        nb, xb = nu[bad], x[bad]
        small = (xb * xb < 1e-6 * nb) & (nb >= 1.0)
        fix = np.empty(nb.shape)
        ns, xs = nb[small], xb[small]
        q = 0.25 * xs * xs
        fix[small] = sp.gammaln(ns) - np.log(2.0) + ns * np.log(2.0 / xs) + np.log1p(-q / np.maximum(ns - 1.0, 1.0))
        fix[~small] = debye_log_k(nb[~small], xb[~small])
        out = np.array(out, dtype=float)
        out[bad] = fix
    return out


def log_bessel_i_prime(n, x):
    """``log I_n'(x)`` via ``I_n' = I_{n+1} + (n/x) I_n`` (no cancellation)."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    li = log_bessel_i(n, x)
    li1 = log_bessel_i(n + 1.0, x)
    return li + np.log(np.exp(li1 - li) + n / x)


def log_bessel_k_prime_abs(n, x):
    """``log |K_n'(x)|``; ``K_n' = -K_{n-1} - (n/x) K_n`` and ``K_0' = -K_1``."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    lk = log_bessel_k(n, x)
    lkm = log_bessel_k(np.abs(n - 1.0), x)  # K_{-1} = K_1
    return np.where(n == 0, lkm, lk + np.log(np.exp(lkm - lk) + n / x))


def log_spherical_i(n, x):
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * np.log(math.pi / (2.0 * x)) + log_bessel_i(n + 0.5, x)
    # i_0(0) = 1 and i_n(0) = 0 otherwise
    return np.where(x == 0, np.where(n == 0, 0.0, -np.inf), out)


def log_spherical_k(n, x):
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    return 0.5 * np.log(2.0 / (math.pi * x)) + log_bessel_k(n + 0.5, x)


def log_spherical_i_prime(n, x):
    """``log i_n'(x)`` for ``x > 0`` using ``i_n' = i_{n+1} + (n/x) i_n``."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    li = log_spherical_i(n, x)
    li1 = log_spherical_i(n + 1.0, x)
    return li + np.log(np.exp(li1 - li) + n / x)


def log_spherical_k_prime_abs(n, x):
    """``log |k_n'(x)|`` with ``k_n' = -k_{n-1} - ((n+1)/x) k_n``, ``k_0' = -k_1``."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    lk = log_spherical_k(n, x)
    lk1 = log_spherical_k(n + 1.0, x)
    lkm = log_spherical_k(np.maximum(n - 1.0, 0.0), x)
    general = lk + np.log(np.exp(lkm - lk) + (n + 1.0) / x)
    return np.where(n == 0, lk1, general)
