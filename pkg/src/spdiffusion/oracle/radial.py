"""Exact solutions for one compartment at the centre of a disk or ball.

With the compartment of radius ``a = eps ell`` at the origin the steady
problem is radial and separates.  Outside, ``D (u'' + (d-1) u'/r) - gamma0 u + I0 = 0``
with ``u'(R) = 0``; a receptor pool inside obeys
``(Dbar/eps^2)(v'' + (d-1) v'/r) - gammabar v + Ibar = 0``.  The interface
conditions in physical radius are

* fixed value: ``u(a) = c0``;
* reactive: ``D u'(a) = (kappa/eps)(u(a) - c0)``;
* receptor pool: ``D u'(a) = Dbar v'(a)`` together with ``u(a) = v(a)`` or
  ``D u'(a) = (kappa/eps)(u(a) - v(a))``.

Bases are exponentially rescaled so that large rates do not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sps

from ..errors import DomainError, UnsupportedError
from ..geometry import Disk2D, ModelI, ModelII, Sphere3D, validate


@dataclass(frozen=True)
class RadialSolution:
    """Coefficients of the exact radial solution and its residuals.

    ``u(r)`` returns the bulk field for ``r >= a`` and the interior field
    (receptor pool) or boundary value for ``r < a``.
    """

    dim: int
    a: float
    R: float
    coefficients: np.ndarray
    residuals: dict
    _outer: object
    _inner: object

    def u(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r >= self.a, self._outer(np.maximum(r, self.a))[0].reshape(r.shape),
                       self._inner(np.minimum(r, self.a))[0].reshape(r.shape))
        return out if out.ndim else float(out)

    def du(self, r):
        r = np.asarray(r, dtype=float)
        d = self._outer(r)[1].reshape(r.shape)
        return d if d.ndim else float(d)

    def at(self, x):
        """Field at Cartesian points ``x``."""
        return self.u(np.linalg.norm(np.atleast_2d(x), axis=-1))

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def _outer_basis(dim, D, gamma0, I0, a, R):
    """Return ``f(r) -> (values (r, 3), derivatives (r, 3))`` with columns particular, P, Q."""
    if gamma0 > 0:
        b = math.sqrt(gamma0 / D)
        part = I0 / gamma0

        if dim == 2:
            def f(r):
                P = sps.ive(0, b * r) * np.exp(b * (r - R))
                Q = sps.kve(0, b * r) * np.exp(-b * (r - a))
                dP = b * sps.ive(1, b * r) * np.exp(b * (r - R))
                dQ = -b * sps.kve(1, b * r) * np.exp(-b * (r - a))
                one = np.ones_like(r)
                return np.stack([part * one, P, Q], -1), np.stack([0 * one, dP, dQ], -1)
        else:
            def f(r):
                e = np.exp(b * (r - R))
                g = 0.5 * e * (-np.expm1(-2.0 * b * r))
                dg = 0.5 * b * e * (1.0 + np.exp(-2.0 * b * r))
                P, dP = g / r, dg / r - g / r**2
                Q = np.exp(-b * (r - a)) / r
                dQ = -(b + 1.0 / r) * Q
                one = np.ones_like(r)
                return np.stack([part * one, P, Q], -1), np.stack([0 * one, dP, dQ], -1)
        return f
    if dim == 2:
        def f(r):
            one = np.ones_like(r)
            return (np.stack([-I0 * r * r / (4.0 * D), one, np.log(r)], -1),
                    np.stack([-I0 * r / (2.0 * D), 0 * one, 1.0 / r], -1))
    else:
        def f(r):
            one = np.ones_like(r)
            return (np.stack([-I0 * r * r / (6.0 * D), one, 1.0 / r], -1),
                    np.stack([-I0 * r / (3.0 * D), 0 * one, -1.0 / r**2], -1))
    return f


def _inner_basis(dim, b, a):
    """Regular interior solution ``p(r)`` of ``p'' + (d-1)p'/r = b^2 p``, scaled by ``exp(-b a)``."""
    if dim == 2:
        def p(r):
            e = np.exp(b * (r - a))
            return sps.ive(0, b * r) * e, b * sps.ive(1, b * r) * e
    else:
        def p(r):
            r = np.maximum(r, 1e-300)
            e = np.exp(b * (r - a))
            x = b * r
            sh = 0.5 * e * (-np.expm1(-2.0 * x))
            ch = 0.5 * e * (1.0 + np.exp(-2.0 * x))
            small = x < 1e-8
            val = np.where(small, np.exp(-b * a), sh / np.where(small, 1.0, x))
            der = np.where(small, 0.0, (x * ch - sh) / (b * r * r))
            return val, der
    return p


def _radial(spec, dim, geom_type):
    spec = validate(spec)
    if not isinstance(spec.geometry, geom_type) or spec.N != 1:
        raise UnsupportedError(f"radial solution needs one compartment in a {geom_type.__name__}")
    comp = spec.compartments[0]
    if np.any(np.abs(np.asarray(comp.center)) > 1e-14):
        raise DomainError("the compartment must sit at the centre")
    if comp.shape is not None and comp.shape.kind != "sphere":
        raise UnsupportedError("radial solution needs a spherical compartment")
    R = spec.geometry.radius if dim == 2 else spec.geometry.R0
    D, g0, I0, eps = spec.D, spec.gamma0, spec.I0, spec.epsilon
    a = eps * comp.ell
    k = comp.kappa / eps
    m = comp.model
    outer = _outer_basis(dim, D, g0, I0, a, R)
    (ua, dua), (uR, duR) = [tuple(x[0] for x in outer(np.array([r]))) for r in (a, R)]
    rows, rhs = [], []
    # Neumann at the outer boundary; column 0 (particular) is known
    rows.append([duR[1], duR[2]])
    rhs.append(-duR[0])
    if isinstance(m, ModelI):
        if comp.dirichlet:
            rows.append([ua[1], ua[2]])
            rhs.append(m.c0 - ua[0])
        else:
            rows.append([D * dua[1] - k * ua[1], D * dua[2] - k * ua[2]])
            rhs.append(k * (ua[0] - m.c0) - D * dua[0])
        A = np.array(rows)
        coef = np.linalg.solve(A, np.array(rhs))
        coef = np.concatenate([coef, [0.0]])
        inner = None
        c_in = m.c0
    elif isinstance(m, ModelII):
        if m.gammabar <= 0:
            raise UnsupportedError("receptor pool needs gammabar > 0")
        bb = m.beta / eps
        p = _inner_basis(dim, bb, a)
        pa, dpa = (float(v[0]) for v in p(np.array([a])))
        cbar = m.Ibar / m.gammabar
        rows = [[duR[1], duR[2], 0.0]]
        rhs = [-duR[0]]
        # flux continuity
        rows.append([D * dua[1], D * dua[2], -m.Dbar * dpa])
        rhs.append(-D * dua[0])
        if comp.dirichlet:
            rows.append([ua[1], ua[2], -pa])
            rhs.append(cbar - ua[0])
        else:
            rows.append([D * dua[1] - k * ua[1], D * dua[2] - k * ua[2], k * pa])
            rhs.append(k * (ua[0] - cbar) - D * dua[0])
        coef = np.linalg.solve(np.array(rows), np.array(rhs))
        inner = p
        c_in = cbar
    else:
        raise UnsupportedError("radial solutions cover fixed-concentration and receptor-pool compartments")
    cvec = np.array([1.0, coef[0], coef[1]])

    def outer_eval(r):
        v, d = outer(np.atleast_1d(r))
        return v @ cvec, d @ cvec

    def inner_eval(r):
        r = np.atleast_1d(r)
        if inner is None:
            return np.full(r.shape, c_in), np.zeros(r.shape)
        v, d = inner(r)
        return c_in + coef[2] * v, coef[2] * d

    # residuals of the boundary and interface conditions (relative)
    u_a, du_a = (float(x[0]) for x in outer_eval(np.array([a])))
    _, du_R = (float(x[0]) for x in outer_eval(np.array([R])))
    scale = max(abs(u_a), abs(D * du_a), 1e-300)
    res = {"neumann": abs(du_R) * R / scale}
    if inner is None:
        res["interface"] = abs(u_a - c_in) / scale if comp.dirichlet else abs(D * du_a - k * (u_a - c_in)) / max(scale, k * scale)
    else:
        v_a, dv_a = (float(x[0]) for x in inner_eval(np.array([a])))
        res["flux"] = abs(D * du_a - m.Dbar * dv_a) / scale
        res["interface"] = abs(u_a - v_a) / scale if comp.dirichlet else abs(D * du_a - k * (u_a - v_a)) / max(scale, k * scale)
    return RadialSolution(dim, a, R, coef, res, outer_eval, inner_eval)


def radial_exact_disk(spec) -> RadialSolution:
    """Exact field for one centred compartment in a disk (``I0/K0`` or ``1/log`` bases)."""
    return _radial(spec, 2, Disk2D)


def radial_exact_sphere(spec) -> RadialSolution:
    """Exact field for one centred compartment in a ball (``exp(+-br)/r`` or ``1, 1/r`` bases)."""
    return _radial(spec, 3, Sphere3D)
