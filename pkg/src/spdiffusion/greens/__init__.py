"""Neumann Green's functions, interaction matrices and s-derivatives.

:func:`kernel_for` picks the evaluator for a geometry; ``s_plus_gamma=None``
selects Laplace's equation and a positive value the modified Helmholtz
equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, UnsupportedError
from ..geometry import Disk2D, Rect2D, Sphere3D, ValidatedSpec
from .base import SERIES_CAP, SERIES_START, GreensEval
from .helmholtz import disk_helmholtz_G, disk_helmholtz_R, sphere_helmholtz_G, sphere_helmholtz_R
from .laplace import (disk_laplace_G0, disk_laplace_R, rect_H0, rect_laplace_G0, rect_laplace_R,
                      rect_tau, sphere_constant, sphere_laplace_G0, sphere_laplace_R)

__all__ = [
    "GreensEval", "Kernel", "InteractionMatrix", "kernel_for", "build_interaction_matrix",
    "helmholtz_s_derivative", "green_s_derivative", "matrix_from_points", "disk_laplace_G0", "rect_laplace_G0", "sphere_laplace_G0",
    "disk_helmholtz_G", "sphere_helmholtz_G", "disk_laplace_R", "rect_laplace_R",
    "sphere_laplace_R", "disk_helmholtz_R", "sphere_helmholtz_R", "rect_H0", "rect_tau",
    "sphere_constant", "SERIES_START", "SERIES_CAP",
]


@dataclass(frozen=True)
class Kernel:
    """Green's function of one geometry with fixed ``D`` and ``s + gamma0``."""

    geometry: object
    D: float = 1.0
    s_plus_gamma: float | None = None
    tau_terms: int = 6

    @property
    def laplace(self) -> bool:
        return self.s_plus_gamma is None

    @property
    def dim(self) -> int:
        return self.geometry.dim

    def __call__(self, x, xi) -> GreensEval:
        g = self.geometry
        if isinstance(g, Disk2D):
            if self.laplace:
                return disk_laplace_G0(x, xi, self.D, g.radius)
            return disk_helmholtz_G(x, xi, self.D, self.s_plus_gamma, radius=g.radius)
        if isinstance(g, Rect2D):
            return rect_laplace_G0(x, xi, g.L1, g.L2, self.D, self.tau_terms)
        if self.laplace:
            return sphere_laplace_G0(x, xi, g.R0, self.D)
        return sphere_helmholtz_G(x, xi, g.R0, self.D, self.s_plus_gamma)

    def value(self, x, xi):
        return self(x, xi).value

    def regular_at(self, xi) -> float:
        """``R(xi, xi)``, the regular part at the source."""
        g = self.geometry
        if isinstance(g, Disk2D):
            if self.laplace:
                return disk_laplace_R(xi, self.D, g.radius)
            return disk_helmholtz_R(xi, self.D, self.s_plus_gamma, radius=g.radius)
        if isinstance(g, Rect2D):
            return rect_laplace_R(xi, g.L1, g.L2, self.D, self.tau_terms)
        if self.laplace:
            return sphere_laplace_R(xi, g.R0, self.D)
        return sphere_helmholtz_R(xi, g.R0, self.D, self.s_plus_gamma)


def kernel_for(geometry, D=1.0, s_plus_gamma=None, tau_terms=6) -> Kernel:
    """Return the evaluator for ``geometry``; rectangles support Laplace only."""
    if isinstance(geometry, Rect2D) and s_plus_gamma is not None:
        raise UnsupportedError("rectangle Green's function is available for Laplace's equation only")
    if not isinstance(geometry, (Disk2D, Rect2D, Sphere3D)):
        raise UnsupportedError(f"no Green's function for {type(geometry).__name__}")
    if s_plus_gamma is not None and not s_plus_gamma > 0:
        raise DomainError("s + gamma0 must be positive")
    return Kernel(geometry, float(D), None if s_plus_gamma is None else float(s_plus_gamma), tau_terms)


@dataclass(frozen=True)
class InteractionMatrix:
    """Green's interaction matrix of the compartment centres.

    Off-diagonal entries are ``G(x_i, x_j)``; the diagonal holds
    ``R(x_j, x_j) - ln(ell_j)/(2 pi D)`` in two dimensions and
    ``R(x_j, x_j)`` in three.
    """

    entries: np.ndarray
    dim: int
    s_plus_gamma: float | None

    @property
    def N(self) -> int:
        return self.entries.shape[0]


def matrix_from_points(kernel: Kernel, centers, ells=None) -> np.ndarray:
    centers = np.asarray(centers, dtype=float)
    n = len(centers)
    G = np.empty((n, n))
    for j in range(n):
        G[j, j] = kernel.regular_at(centers[j])
        if kernel.dim == 2 and ells is not None:
            G[j, j] -= math.log(ells[j]) / (2.0 * math.pi * kernel.D)
        others = [k for k in range(n) if k != j]
        if others:
            G[others, j] = kernel(centers[others], centers[j]).value
    # symmetrize away evaluation noise
    return 0.5 * (G + G.T)


def build_interaction_matrix(spec: ValidatedSpec, mode="laplace", s=0.0) -> InteractionMatrix:
    """Interaction matrix for Laplace (``mode='laplace'``) or modified Helmholtz.

    For ``mode='helmholtz'`` the rate is ``spec.gamma0 + s``.
    """
    if mode == "laplace":
        spg = None
    elif mode == "helmholtz":
        spg = spec.gamma0 + s
    else:
        raise ValueError(f"unknown mode {mode!r}")
    kernel = kernel_for(spec.geometry, spec.D, spg)
    G = matrix_from_points(kernel, spec.centers(), spec.ells())
    return InteractionMatrix(G, spec.dim, spg)


def helmholtz_s_derivative(fn, s0, h, gamma0=None):
    """Derivative in ``s`` of ``fn(s)`` by Richardson-extrapolated central differences.

    Parameters
    ----------
    fn : callable
        ``fn(s)`` returns a value or array (for instance a Green's function
        evaluated at ``s + gamma0``).
    s0, h : float
        Expansion point and base step; ``s0 - h`` must keep ``s + gamma0 > 0``.
    gamma0 : float, optional
        Used only to reject the pole at ``s0 = 0`` when ``gamma0 == 0``.

    Returns
    -------
    derivative, error_estimate
    """
    if gamma0 is not None:
        if gamma0 == 0 and s0 == 0:
            raise DomainError("G has a pole at s = 0 when gamma0 = 0")
        if s0 - h + gamma0 <= 0:
            raise DomainError("step crosses s + gamma0 = 0")
    d1 = (np.asarray(fn(s0 + h)) - np.asarray(fn(s0 - h))) / (2.0 * h)
    h2 = 0.5 * h
    d2 = (np.asarray(fn(s0 + h2)) - np.asarray(fn(s0 - h2))) / (2.0 * h2)
    rich = (4.0 * d2 - d1) / 3.0
    err = np.max(np.abs(rich - d2))
    return rich, float(err)


def green_s_derivative(geometry, x, xp, D=1.0, gamma0=1.0, s0=0.0, h=None, part="value"):
    """``dG/ds`` at ``s0`` between points (or the regular part at ``x == xp``).

    ``part='regular'`` differentiates ``R(xp, xp)`` instead.  The default
    step is ``1e-3 * (gamma0 + s0)``, which keeps ``s + gamma0`` positive.
    """
    if h is None:
        h = 1e-3 * (gamma0 + s0)

    def fn(s):
        k = kernel_for(geometry, D, gamma0 + s)
        if part == "regular":
            return k.regular_at(xp)
        return k.value(x, xp)

    return helmholtz_s_derivative(fn, s0, h, gamma0)
