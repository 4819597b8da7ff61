"""Small numerical helpers: guarded dense solves and damped Newton."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConditioningError, ConvergenceError

COND_MAX = 1e12


@dataclass(frozen=True)
class Factored:
    """LU factorization of a small dense matrix with its condition number."""

    lu: tuple
    condition: float
    matrix: np.ndarray

    def solve(self, rhs):
        return linalg.lu_solve(self.lu, rhs)


def factor(T, cond_max=COND_MAX) -> Factored:
    T = np.asarray(T, dtype=float)
    cond = float(np.linalg.cond(T)) if T.size else 1.0
    if not np.isfinite(cond) or cond > cond_max:
        raise ConditioningError(f"linear system is ill-conditioned (condition {cond:.3e})", cond)
    with np.errstate(all="raise"):
        lu = linalg.lu_factor(T, check_finite=True)
    return Factored(lu, cond, T)


def relative_residual(T, x, rhs) -> float:
    r = np.asarray(T) @ x - rhs
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    return float(np.linalg.norm(r) / scale)


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    history: tuple


def damped_newton(F, J, x0, tol=1e-10, max_iter=60, min_step=1e-10) -> NewtonResult:
    """Newton iteration with backtracking on the residual norm.

    Raises :class:`ConvergenceError` with the residual history when the
    tolerance is not met within ``max_iter`` steps.
    """
    x = np.array(x0, dtype=float)
    r = F(x)
    nr = float(np.linalg.norm(r))
    hist = [nr]
    for it in range(max_iter):
        if nr <= tol:
            return NewtonResult(x, nr, it, tuple(hist))
        try:
            dx = np.linalg.solve(J(x), -r)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J(x), -r, rcond=None)[0]
        t = 1.0
        while True:
            xn = x + t * dx
            rn = F(xn)
            nrn = float(np.linalg.norm(rn))
            if np.isfinite(nrn) and nrn < (1.0 - 1e-4 * t) * nr:
                break
            t *= 0.5
            if t < min_step:
                raise ConvergenceError(f"line search stalled at residual {nr:.3e}", hist)
        x, r, nr = xn, rn, nrn
        hist.append(nr)
    if nr <= tol:
        return NewtonResult(x, nr, max_iter, tuple(hist))
    raise ConvergenceError(f"Newton did not converge in {max_iter} steps (residual {nr:.3e})", hist)
