"""Shared pieces of the Green's function evaluators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AccuracyError, DomainError, SingularityError

SERIES_START = 64
SERIES_CAP = 1024
SERIES_TOL = 1e-12


@dataclass(frozen=True)
class GreensEval:
    """Green's function value split into singular and regular parts.

    ``value == singular_part + regular_part`` away from the source.  ``tail``
    is an estimate of the truncation error of any series involved.
    """

    value: np.ndarray
    regular_part: np.ndarray
    singular_part: np.ndarray
    tail: float = 0.0


def as_points(x, dim):
    """Return ``x`` as an ``(M, dim)`` array plus a flag for scalar input."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != dim:
        raise DomainError(f"expected points with {dim} coordinates, got shape {x.shape}")
    return x, single


def squeeze(ev: GreensEval, single: bool) -> GreensEval:
    if not single:
        return ev
    return GreensEval(float(ev.value[0]), float(ev.regular_part[0]), float(ev.singular_part[0]), ev.tail)


def check_inside(geometry, pts, name="point"):
    if np.any(geometry.boundary_distance(pts) < -1e-14):
        raise DomainError(f"{name} lies outside the {geometry.kind}")


def check_distinct(rho):
    if np.any(rho == 0.0):
        raise SingularityError("Green's function evaluated at its source point")


def series_sum(log_env, weight, n_points, start=SERIES_START, cap=SERIES_CAP, tol=SERIES_TOL):
    """Sum ``sum_n exp(log_env(n)) * weight(n)`` with adaptive truncation.

    Parameters
    ----------
    log_env : callable
        ``log_env(n, idx)`` returns the log of the term envelope, shape
        ``(len(n), len(idx))``; ``-inf`` marks an exactly zero term.
    weight : callable
        ``weight(n, idx)`` returns factors bounded by one in magnitude
        (cosines, Legendre polynomials).
    n_points : int
        Number of evaluation points.

    The truncation level doubles from ``start`` until the geometric tail
    estimate built from the last two envelopes drops below ``tol`` relative
    to the partial sum, up to ``cap`` terms.

    Returns
    -------
    total : ndarray
    tail : float
        Largest absolute tail estimate over the points.
    """
    total = np.zeros(n_points)
    tails = np.zeros(n_points)
    active = np.arange(n_points)
    lo, hi = 0, start
    scale = np.zeros(n_points)
    while active.size:
        n = np.arange(lo, hi, dtype=float)[:, None]
        le = log_env(n, active)
        env = np.exp(le)
        total[active] += np.sum(env * weight(n, active), axis=0)
        if lo == 0:
            scale[active] = env[0]
        scale[active] = np.maximum(scale[active], np.abs(total[active]))
        last, prev = env[-1], env[-2]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(prev > 0, last / prev, 0.0)
            tail = np.where(q < 1.0, last * q / (1.0 - q), np.inf)
        tail = np.where(last == 0.0, 0.0, tail)
        tails[active] = tail
        done = tail <= tol * scale[active]
        if hi >= cap:
            if np.any(~np.isfinite(tail)):
                raise AccuracyError(f"series failed to converge within {cap} terms (tail ratio >= 1)")
            break
        active = active[~done]
        lo, hi = hi, min(2 * hi, cap)
    return total, float(np.max(tails)) if n_points else 0.0
