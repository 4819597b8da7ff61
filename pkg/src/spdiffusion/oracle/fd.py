"""Finite differences on a uniform vertex grid with embedded compartments.

Solves ``D lap u - gamma0 u + I0 + f(x) = 0`` with a reflecting outer
boundary.  The rectangle's outer boundary is grid-aligned and uses mirrored
ghost values (second order).  The disk is embedded in its bounding box and
links leaving it carry zero flux, the weakest path here.

A link from an exterior node ``P`` to a node inside compartment ``j`` is cut
by the boundary at fraction ``theta``; the missing value is replaced by the
linear extrapolation ``u_P + (u_B - u_P)/theta``.  On a fixed-value boundary
``u_B`` is the data; on a reactive boundary it comes from the one-sided
normal difference ``D (u_X - u_B)/delta = (kappa/eps)(u_B - g)`` with ``X``
two cells out along the normal at ``B`` and ``u_X`` interpolated bilinearly.
The embedded treatment is first order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from ..errors import ConvergenceError, ResolutionError, UnsupportedError, ValidationError, Violation
from ..geometry import Disk2D, ModelI, ProblemSpec, Rect2D, validate

MIN_CELLS = 8
ROBIN_REACH = 2.0   # normal offset, in cells, of the reactive-boundary difference


@dataclass(frozen=True)
class GridField:
    """Grid values (NaN inside compartments and outside the domain)."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray       # shape (len(x), len(y))
    h: float
    residual: float

    def interpolate(self, pts):
        f = RegularGridInterpolator((self.x, self.y), self.values, bounds_error=False, fill_value=np.nan)
        return f(np.atleast_2d(pts))

    def to_rows(self):
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        keep = np.isfinite(self.values)
        return np.stack([X[keep], Y[keep], self.values[keep]], axis=-1)


def _cut_fraction(p, q, c, a):
    """Fraction along ``p -> q`` where each segment meets the circle ``|x - c| = a``."""
    d = q - p
    f = p - c
    A = np.einsum("ij,ij->i", d, d)
    B = 2.0 * np.einsum("ij,ij->i", f, d)
    C = np.einsum("ij,ij->i", f, f) - a * a
    disc = np.maximum(B * B - 4.0 * A * C, 0.0)
    return (-B - np.sqrt(disc)) / (2.0 * A)


def _validated(spec):
    # an empty domain is a legitimate oracle problem (manufactured solutions)
    if isinstance(spec, ProblemSpec) and len(spec.compartments) == 0:
        if not (spec.D > 0 and spec.gamma0 >= 0 and spec.I0 >= 0):
            raise ValidationError([Violation("D", "bulk rates out of range")])
        return spec
    return validate(spec)


def fd_solve_rect(spec, h, source=None, boundary_data=None) -> GridField:
    """Grid solution of the steady problem for a rectangle or disk.

    Parameters
    ----------
    spec : ProblemSpec or ValidatedSpec
        Fixed-concentration compartments (fixed value or reactive).
    h : float
        Grid spacing; every compartment must span at least eight cells.
    source : callable, optional
        Extra source ``f(x, y)`` (manufactured solutions).
    boundary_data : callable, optional
        ``g(j, points)`` replacing ``c0`` of compartment ``j``.
    """
    spec = _validated(spec)
    geom = spec.geometry
    if not isinstance(geom, (Rect2D, Disk2D)):
        raise UnsupportedError("finite differences cover the rectangle and the disk")
    D, g0, I0, eps = spec.D, spec.gamma0, spec.I0, spec.epsilon
    comps = spec.compartments
    for j, c in enumerate(comps):
        if not isinstance(c.model, ModelI):
            raise UnsupportedError("finite differences support fixed-concentration compartments")
        if 2.0 * eps * c.ell / h < MIN_CELLS:
            raise ResolutionError(f"compartment {j} spans {2 * eps * c.ell / h:.1f} cells; need >= {MIN_CELLS}")
    lo, hi = geom.bounding_box()
    nx = int(round((hi[0] - lo[0]) / h))
    ny = int(round((hi[1] - lo[1]) / h))
    x = np.linspace(lo[0], hi[0], nx + 1)
    y = np.linspace(lo[1], hi[1], ny + 1)
    hx, hy = x[1] - x[0], y[1] - y[0]
    X, Y = np.meshgrid(x, y, indexing="ij")
    P = np.stack([X, Y], axis=-1)
    centers = spec.centers().reshape(len(comps), 2)
    ells = spec.ells()
    radii = eps * ells
    owner = np.full(X.shape, -1)
    for j in range(len(comps)):
        owner[np.linalg.norm(P - centers[j], axis=-1) <= radii[j]] = j
    if isinstance(geom, Disk2D):
        in_dom = np.linalg.norm(P, axis=-1) <= geom.radius
    else:
        in_dom = np.ones(X.shape, dtype=bool)
    unknown = in_dom & (owner < 0)
    index = -np.ones(X.shape, dtype=int)
    index[unknown] = np.arange(unknown.sum())
    n = int(unknown.sum())
    rows, cols, vals = [], [], []
    b = np.full(n, -I0, dtype=float)
    if source is not None:
        b -= source(X[unknown], Y[unknown])

    def data(j, pts):
        if boundary_data is not None:
            return np.asarray(boundary_data(j, pts), dtype=float)
        return np.full(len(pts), comps[j].model.c0)

    I, J = np.nonzero(unknown)
    r = index[I, J]
    diag = np.full(n, -float(g0))
    for di, dj, hh in ((1, 0, hx), (-1, 0, hx), (0, 1, hy), (0, -1, hy)):
        w = D / (hh * hh)
        qi, qj = I + di, J + dj
        outside = (qi < 0) | (qi > nx) | (qj < 0) | (qj > ny)
        # mirrored ghost across a grid-aligned reflecting wall
        qi = np.where(outside, I - di, qi)
        qj = np.where(outside, J - dj, qj)
        # links leaving the disk carry no flux; a mirrored node inside a
        # compartment is treated the same way
        live = in_dom[qi, qj] & ~(outside & ~unknown[qi, qj])
        plain = live & unknown[qi, qj]
        rows.append(r[plain]); cols.append(index[qi[plain], qj[plain]]); vals.append(np.full(plain.sum(), w))
        diag[r[plain]] -= w
        cut = live & ~unknown[qi, qj]
        if not cut.any():
            continue
        rc = r[cut]
        p = P[I[cut], J[cut]]
        q = P[qi[cut], qj[cut]]
        k = owner[qi[cut], qj[cut]]
        c, a = centers[k], radii[k]
        theta = np.maximum(_cut_fraction(p, q, c, a), 1e-6)
        B = p + theta[:, None] * (q - p)
        beta = np.zeros(rc.size)
        robin = np.zeros(rc.size, dtype=bool)
        kap = np.zeros(rc.size)
        for m in np.unique(k):
            sel = k == m
            beta[sel] = data(m, B[sel])
            if not comps[m].dirichlet:
                robin[sel] = True
                kap[sel] = comps[m].kappa / eps
        # fixed value: u_B = g(B); ghost = u_P + (u_B - u_P)/theta
        np.add.at(diag, rc, -w / theta)
        dirc = ~robin
        np.add.at(b, rc[dirc], -w * beta[dirc] / theta[dirc])
        if robin.any():
            # reactive: D (u_X - u_B)/delta = kap (u_B - g) with X = B + delta n
            # and u_X interpolated bilinearly from the four surrounding nodes
            rr, th, kp, g = rc[robin], theta[robin], kap[robin], beta[robin]
            Bn = B[robin]
            nrm = Bn - c[robin]
            nrm /= np.linalg.norm(nrm, axis=-1)[:, None]
            delta = ROBIN_REACH * max(hx, hy)
            Xp = Bn + delta * nrm
            fi = (Xp[:, 0] - x[0]) / hx
            fj = (Xp[:, 1] - y[0]) / hy
            i0 = np.clip(np.floor(fi).astype(int), 0, nx - 1)
            j0 = np.clip(np.floor(fj).astype(int), 0, ny - 1)
            tx, ty = fi - i0, fj - j0
            alpha = (D / delta) / (D / delta + kp)
            b[rr] -= w * (kp * g / (D / delta + kp)) / th
            for ci, cj, wt in ((0, 0, (1 - tx) * (1 - ty)), (1, 0, tx * (1 - ty)),
                               (0, 1, (1 - tx) * ty), (1, 1, tx * ty)):
                node = index[i0 + ci, j0 + cj]
                if np.any(node < 0):
                    raise ResolutionError("reactive boundary stencil leaves the bulk; refine the grid")
                rows.append(rr); cols.append(node); vals.append(w * alpha * wt / th)
    rows.append(np.arange(n)); cols.append(np.arange(n)); vals.append(diag)
    rows, cols, vals = (np.concatenate(v) for v in (rows, cols, vals))
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    u = spsolve(A.tocsc(), b, permc_spec="MMD_AT_PLUS_A")
    res = float(np.linalg.norm(A @ u - b) / max(np.linalg.norm(b), 1e-300))
    if not np.isfinite(res) or res > 1e-10:
        raise ConvergenceError(f"sparse solve residual {res:.2e} exceeds 1e-10", [res])
    vals_grid = np.full(X.shape, np.nan)
    vals_grid[unknown] = u
    return GridField(x, y, vals_grid, float(h), res)
