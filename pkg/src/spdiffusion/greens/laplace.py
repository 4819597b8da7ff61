"""Neumann Green's functions of Laplace's equation.

Each evaluator solves ``D lap G = 1/|Omega| - delta(x - xi)`` with a
reflecting boundary and ``int G dx = 0``.  Closed forms for the disk, the
rectangle and the ball are used; all are divided by ``D``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from ..geometry import Disk2D, Rect2D, Sphere3D
from .base import GreensEval, as_points, check_distinct, check_inside, squeeze

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


# ------------------------------------------------------------------- disk

def _disk_reg(X, Xi):
    """Regular part (times 2 pi) of the unit-disk function in scaled coordinates."""
    nxi = np.linalg.norm(Xi)
    nx2 = np.sum(X * X, axis=-1)
    if nxi == 0.0:
        img = np.zeros(len(X))  # |x|xi| - xi/|xi|| -> 1
    else:
        img = np.log(np.linalg.norm(X * nxi - Xi / nxi, axis=-1))
    return -img + 0.5 * (nx2 + nxi * nxi) - 0.75


def disk_laplace_G0(x, xi, D=1.0, radius=1.0) -> GreensEval:
    """Neumann Green's function of the disk of radius ``radius``."""
    geom = Disk2D(radius)
    pts, single = as_points(x, 2)
    xi = np.asarray(xi, dtype=float)
    check_inside(geom, pts)
    check_inside(geom, xi[None, :], "source")
    rho = np.linalg.norm(pts - xi, axis=-1)
    check_distinct(rho)
    sing = -np.log(rho) / (TWO_PI * D)
    reg = (math.log(radius) + _disk_reg(pts / radius, xi / radius)) / (TWO_PI * D)
    return squeeze(GreensEval(sing + reg, reg, sing), single)


def disk_laplace_R(xi, D=1.0, radius=1.0) -> float:
    """Regular part at the source, ``R(xi, xi)``."""
    X = np.asarray(xi, dtype=float) / radius
    r2 = float(X @ X)
    return (math.log(radius) - math.log1p(-r2) + r2 - 0.75) / (TWO_PI * D)


# -------------------------------------------------------------- rectangle

def rect_tau(L1, L2) -> float:
    return math.exp(-TWO_PI * L2 / L1)


def rect_H0(y, yp, L2):
    return L2 / 3.0 + (y * y + yp * yp) / (2.0 * L2) - np.maximum(y, yp)


def _log_abs_1m(z):
    """``ln|1 - z|`` for complex ``z``."""
    return np.log(np.abs(1.0 - z))


def _log_expm1_over(a, b):
    """``ln(|exp(w) - 1| / |w|)`` for ``w = a + i b``, stable as ``w -> 0``."""
    num = np.expm1(a) ** 2 + 4.0 * np.exp(a) * np.sin(0.5 * b) ** 2
    den = a * a + b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * np.log(num / den)
    return np.where(den == 0.0, 0.0, out)


def _rect_parts(pts, xp, L1, L2, tau_terms):
    """Regular part, distance to the source and tail bound, before dividing by D."""
    x, y = pts[:, 0], pts[:, 1]
    x0, y0 = xp
    tau = rect_tau(L1, L2)
    zp = np.exp(1j * math.pi * (x + x0) / L1)
    zm = np.exp(1j * math.pi * (x - x0) / L1)
    dp, dm = np.abs(y + y0), np.abs(y - y0)
    total = np.zeros(len(pts))
    for j in range(tau_terms):
        tj = tau**j
        for z in (zp, zm):
            for d in (dp, dm):
                total += _log_abs_1m(tj * z * np.exp(-math.pi * (2.0 * L2 - d) / L1))
                if j == 0 and z is zm and d is dm:
                    continue  # singular product, regularized below
                total += _log_abs_1m(tj * z * np.exp(-math.pi * d / L1))
    a = -math.pi * np.abs(y - y0) / L1
    b = math.pi * (x - x0) / L1
    rho = np.hypot(x - x0, y - y0)
    # ln|1 - z_- zeta_-| = ln|r - r'| + ln(pi/L1) + ln(|expm1(w)|/|w|)
    total_reg = total + _log_expm1_over(a, b) + math.log(math.pi / L1)
    reg = rect_H0(y, y0, L2) / L1 - total_reg / TWO_PI
    tail = 8.0 * tau**tau_terms / (1.0 - tau)
    return reg, rho, tail


def rect_laplace_G0(x, xp, L1=1.0, L2=1.0, D=1.0, tau_terms=6) -> GreensEval:
    """Neumann Green's function of ``[0, L1] x [0, L2]`` from its image series.

    ``tau_terms`` powers of ``tau = exp(-2 pi L2/L1)`` are kept; the reported
    ``tail`` bounds the neglected terms.
    """
    geom = Rect2D(L1, L2)
    pts, single = as_points(x, 2)
    xp = np.asarray(xp, dtype=float)
    check_inside(geom, pts)
    check_inside(geom, xp[None, :], "source")
    reg, rho, tail = _rect_parts(pts, xp, L1, L2, tau_terms)
    check_distinct(rho)
    sing = -np.log(rho) / (TWO_PI * D)
    reg = reg / D
    return squeeze(GreensEval(sing + reg, reg, sing, tail / (TWO_PI * D)), single)


def rect_laplace_R(xp, L1=1.0, L2=1.0, D=1.0, tau_terms=6) -> float:
    reg, _, _ = _rect_parts(np.asarray(xp, dtype=float)[None, :], np.asarray(xp, dtype=float), L1, L2, tau_terms)
    return float(reg[0]) / D


# ------------------------------------------------------------------- ball

def _sphere_P(pts, xi, a):
    """``|x| |x' - xi|`` with ``x' = a^2 x/|x|^2``, written symmetrically."""
    r2 = np.sum(pts * pts, axis=-1)
    dot = pts @ xi
    return np.sqrt(np.maximum(a**4 - 2.0 * a * a * dot + r2 * float(xi @ xi), 0.0)), dot, r2


def _sphere_smooth(pts, xi, a):
    """Part of the ball function excluding ``1/(4 pi |x - xi|)`` and ``B``."""
    P, dot, r2 = _sphere_P(pts, xi, a)
    vol = FOUR_PI * a**3 / 3.0
    return (a / (FOUR_PI * P) + np.log(2.0 * a * a / (a * a - dot + P)) / (FOUR_PI * a)
            + (r2 + float(xi @ xi)) / (6.0 * vol))


@lru_cache(maxsize=None)
def sphere_constant(R0: float) -> float:
    """Constant making the ball Green's function integrate to zero.

    With the source at the centre the function is radial, so the
    normalization reduces to a one-dimensional integral.
    """
    vol = FOUR_PI * R0**3 / 3.0

    def shell(r):
        g = 1.0 / (FOUR_PI * r) + _sphere_smooth(np.array([[r, 0.0, 0.0]]), np.zeros(3), R0)[0]
        return g * FOUR_PI * r * r

    val, _ = integrate.quad(shell, 0.0, R0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return -val / vol


def sphere_laplace_G0(x, xi, R0=1.0, D=1.0) -> GreensEval:
    """Neumann Green's function of the ball of radius ``R0``."""
    geom = Sphere3D(R0)
    pts, single = as_points(x, 3)
    xi = np.asarray(xi, dtype=float)
    check_inside(geom, pts)
    check_inside(geom, xi[None, :], "source")
    rho = np.linalg.norm(pts - xi, axis=-1)
    check_distinct(rho)
    sing = 1.0 / (FOUR_PI * rho * D)
    reg = (_sphere_smooth(pts, xi, R0) + sphere_constant(R0)) / D
    return squeeze(GreensEval(sing + reg, reg, sing), single)


def sphere_laplace_R(xi, R0=1.0, D=1.0) -> float:
    xi = np.asarray(xi, dtype=float)
    r2 = float(xi @ xi)
    a = R0
    vol = FOUR_PI * a**3 / 3.0
    val = a / (FOUR_PI * (a * a - r2)) + math.log(a * a / (a * a - r2)) / (FOUR_PI * a) + 2.0 * r2 / (6.0 * vol)
    return (val + sphere_constant(R0)) / D
