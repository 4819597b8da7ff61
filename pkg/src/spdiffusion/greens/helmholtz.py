"""Neumann Green's functions of the modified Helmholtz equation.

Both evaluators solve ``D lap G - gamma G = -delta(x - xi)`` with a
reflecting boundary, where ``gamma = s + gamma0`` is passed as
``s_plus_gamma``.  The free-space kernel is corrected by a separable series
whose coefficients are formed in log space so that orders up to the series
cap neither overflow nor underflow.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as sp

from .. import special
from ..errors import DomainError
from ..geometry import Disk2D, Sphere3D
from .base import (SERIES_CAP, SERIES_START, GreensEval, as_points, check_distinct,
                   check_inside, series_sum, squeeze)

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
EULER_GAMMA = 0.5772156649015329


def _wavenumber(s_plus_gamma, D):
    if not s_plus_gamma > 0:
        raise DomainError("modified Helmholtz evaluators require s + gamma0 > 0")
    return math.sqrt(s_plus_gamma / D)


# ------------------------------------------------------------------- disk

def _disk_series(pts, xi, k, radius, n_max, cap):
    r = np.linalg.norm(pts, axis=-1)
    r0 = float(np.linalg.norm(xi))
    dth = np.arctan2(pts[:, 1], pts[:, 0]) - math.atan2(xi[1], xi[0])
    ka = k * radius

    def log_env(n, idx):
        coef = special.log_bessel_k_prime_abs(n, ka) - special.log_bessel_i_prime(n, ka)
        le = coef + special.log_bessel_i(n, k * r[idx]) + special.log_bessel_i(n, k * r0)
        return le + np.where(n == 0, 0.0, math.log(2.0))

    def weight(n, idx):
        return np.cos(n * dth[idx])

    return series_sum(log_env, weight, len(pts), start=n_max, cap=cap)


def disk_helmholtz_G(x, xi, D=1.0, s_plus_gamma=1.0, n_max=SERIES_START, radius=1.0,
                     cap=SERIES_CAP) -> GreensEval:
    """Neumann modified-Helmholtz Green's function of a disk.

    ``G = (1/(2 pi D)) [K0(k |x - xi|) - sum_n e_n (K_n'(ka)/I_n'(ka)) I_n(k r) I_n(k r') cos(n dtheta)]``
    with ``k = sqrt(gamma/D)``, ``e_0 = 1`` and ``e_n = 2`` otherwise.
    """
    geom = Disk2D(radius)
    k = _wavenumber(s_plus_gamma, D)
    pts, single = as_points(x, 2)
    xi = np.asarray(xi, dtype=float)
    check_inside(geom, pts)
    check_inside(geom, xi[None, :], "source")
    rho = np.linalg.norm(pts - xi, axis=-1)
    check_distinct(rho)
    ser, tail = _disk_series(pts, xi, k, radius, n_max, cap)
    sing = -np.log(rho) / (TWO_PI * D)
    # K0(k rho) + ln(rho) stays bounded as rho -> 0
    reg = (sp.k0(k * rho) + np.log(rho) + ser) / (TWO_PI * D)
    # the full value is summed directly: sing + reg cancels when k rho is large
    val = (sp.k0(k * rho) + ser) / (TWO_PI * D)
    return squeeze(GreensEval(val, reg, sing, tail / (TWO_PI * D)), single)


def disk_helmholtz_R(xi, D=1.0, s_plus_gamma=1.0, n_max=SERIES_START, radius=1.0) -> float:
    """Regular part at the source: ``K0(k rho) + ln rho -> -ln(k/2) - gamma_E``."""
    k = _wavenumber(s_plus_gamma, D)
    xi = np.asarray(xi, dtype=float)
    ser, _ = _disk_series(xi[None, :], xi, k, radius, n_max, SERIES_CAP)
    return float((-math.log(0.5 * k) - EULER_GAMMA + ser[0]) / (TWO_PI * D))


# ------------------------------------------------------------------- ball

def _sphere_series(pts, x0, k, R0, n_max, cap):
    r = np.linalg.norm(pts, axis=-1)
    r0 = float(np.linalg.norm(x0))
    with np.errstate(invalid="ignore", divide="ignore"):
        cth = np.where((r > 0) & (r0 > 0), (pts @ x0) / (r * r0), 1.0)
    cth = np.clip(cth, -1.0, 1.0)
    kR = k * R0

    def log_env(n, idx):
        coef = special.log_spherical_k_prime_abs(n, kR) - special.log_spherical_i_prime(n, kR)
        return np.log(2.0 * n + 1.0) + coef + special.log_spherical_i(n, k * r[idx]) + special.log_spherical_i(n, k * r0)

    def weight(n, idx):
        return sp.eval_legendre(n, cth[idx][None, :])

    return series_sum(log_env, weight, len(pts), start=n_max, cap=cap)


def sphere_helmholtz_G(x, x0, R0=1.0, D=1.0, s_plus_gamma=1.0, n_max=SERIES_START,
                       cap=SERIES_CAP) -> GreensEval:
    """Neumann modified-Helmholtz Green's function of the ball of radius ``R0``.

    ``G = (1/D) [exp(-k rho)/(4 pi rho) - G_sp]`` where the image part
    ``G_sp = (k/4 pi) sum (2n+1) P_n(cos theta) (k_n'(kR0)/i_n'(kR0)) i_n(k|x|) i_n(k|x0|)``.
    With ``x0`` at the centre only ``n = 0`` survives.
    """
    geom = Sphere3D(R0)
    k = _wavenumber(s_plus_gamma, D)
    pts, single = as_points(x, 3)
    x0 = np.asarray(x0, dtype=float)
    check_inside(geom, pts)
    check_inside(geom, x0[None, :], "source")
    rho = np.linalg.norm(pts - x0, axis=-1)
    check_distinct(rho)
    ser, tail = _sphere_series(pts, x0, k, R0, n_max, cap)
    sing = 1.0 / (FOUR_PI * D * rho)
    reg = (np.expm1(-k * rho) / (FOUR_PI * rho) + k * ser / FOUR_PI) / D
    val = (np.exp(-k * rho) / (FOUR_PI * rho) + k * ser / FOUR_PI) / D
    return squeeze(GreensEval(val, reg, sing, k * tail / (FOUR_PI * D)), single)


def sphere_helmholtz_R(x0, R0=1.0, D=1.0, s_plus_gamma=1.0, n_max=SERIES_START) -> float:
    """Regular part at the source, ``(1/D) [-k/(4 pi) - G_sp(x0, x0)]``."""
    k = _wavenumber(s_plus_gamma, D)
    x0 = np.asarray(x0, dtype=float)
    ser, _ = _sphere_series(x0[None, :], x0, k, R0, n_max, SERIES_CAP)
    return float((-k + k * ser[0]) / (FOUR_PI * D))
