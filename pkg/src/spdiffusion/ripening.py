"""Coarsening of droplets through a shared dilute phase.

Radii follow mean-field laws in which droplets larger than a mean radius
grow and smaller ones shrink:

* planar, ``d ell_j/d tau = (D nu phi_a/(phi_b ell_j)) (1/ell_harm - 1/ell_j)``
  with ``ell_harm`` the harmonic mean;
* spatial, ``d ell_j/dt = (D phi_a ell_c/(phi_b ell_j)) (1/ell_av - 1/ell_j)``
  with ``ell_av`` the arithmetic mean.

Both laws conserve total droplet volume (``sum ell^2`` or ``sum ell^3``).
The integrator advances the volumes ``v_j = ell_j^d`` rather than the radii:
the conserved quantity is then linear in the state, which any Runge-Kutta
scheme preserves to rounding, and the spatial law stays bounded as a droplet
vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .asymptotic2d import TWO_PI, solve_coefficients
from .errors import ConvergenceError, DomainError, EventOrderingError, UnsupportedError
from .geometry import Disk2D, ModelI, validate
from .greens import kernel_for, matrix_from_points

EXTINCTION = 1e-4


@dataclass(frozen=True)
class RipeningParams:
    D: float = 1.0
    nu: float = 0.25
    phi_a: float = 0.1
    phi_b: float = 1.0
    ell_c: float = 1.0
    dim: int = 3

    def __post_init__(self):
        if not (0 < self.phi_a < self.phi_b):
            raise DomainError("need 0 < phi_a < phi_b")
        if self.ell_c <= 0 or self.D <= 0:
            raise DomainError("capillary length and diffusivity must be positive")
        if self.dim not in (2, 3):
            raise DomainError("dim must be 2 or 3")

    @property
    def rate(self) -> float:
        if self.dim == 2:
            return self.D * self.nu * self.phi_a / self.phi_b
        return self.D * self.phi_a * self.ell_c / self.phi_b


def _check(ell):
    ell = np.asarray(ell, dtype=float)
    if np.any(ell <= 0):
        raise DomainError("active droplet radii must be positive")
    return ell


def rhs_2d(ell, p: RipeningParams):
    """Planar coarsening rates for the active radii ``ell``."""
    ell = _check(ell)
    inv_h = np.mean(1.0 / ell)
    K = p.D * p.nu * p.phi_a / p.phi_b
    return (K / ell) * (inv_h - 1.0 / ell)


def rhs_3d(ell, p: RipeningParams):
    """Spatial coarsening rates for the active radii ``ell``."""
    ell = _check(ell)
    K = p.D * p.phi_a * p.ell_c / p.phi_b
    return (K / ell) * (1.0 / np.mean(ell) - 1.0 / ell)


def volume_rhs(v, p: RipeningParams):
    """Rates of ``v_j = ell_j^d``; the components sum to zero."""
    v = np.maximum(np.asarray(v, dtype=float), 0.0)
    if p.dim == 2:
        ell = np.sqrt(v)
        r = 2.0 * p.rate * (np.mean(1.0 / ell) - 1.0 / ell)
    else:
        ell = np.cbrt(v)
        r = 3.0 * p.rate * (ell / np.mean(ell) - 1.0)
    return r - np.mean(r)  # removes rounding in the zero-sum property


@dataclass
class DropletState:
    ell: np.ndarray
    tau: float = 0.0
    retired: frozenset = frozenset()


@dataclass
class Trajectory:
    """Sampled radii (zeros after retirement) and extinction events."""

    tau: np.ndarray
    ell: np.ndarray
    active_count: np.ndarray
    events: list = field(default_factory=list)
    dim: int = 3

    @property
    def volume(self) -> np.ndarray:
        return np.sum(self.ell**self.dim, axis=1)

    @property
    def drift(self) -> float:
        v = self.volume
        return float(np.max(np.abs(v - v[0])) / v[0])

    @property
    def final(self) -> np.ndarray:
        return self.ell[-1]


def evolve(state, p: RipeningParams, t_end, rtol=1e-12, atol=1e-14, extinction=EXTINCTION,
           max_step=np.inf) -> Trajectory:
    """Integrate the coarsening law until ``t_end``, retiring vanishing droplets.

    A droplet retires when its radius falls below ``extinction``; the event
    time is located by the integrator's root finder on the dense output.
    Its remaining volume (below ``extinction**dim``) is shared among the
    survivors in proportion to their volumes, so total volume is unchanged.
    """
    if not isinstance(state, DropletState):
        state = DropletState(np.asarray(state, dtype=float))
    ell0 = _check(state.ell)
    N, d = len(ell0), p.dim
    v = ell0**d
    active = np.array([j not in state.retired for j in range(N)])
    v[~active] = 0.0
    t = state.tau
    ts, vs, events = [t], [v.copy()], []
    vmin = extinction**d
    while t < t_end and active.sum() > 1:
        idx = np.flatnonzero(active)

        def f(_, y):
            return volume_rhs(y, p)

        def make_event(k):
            def ev(_, y):
                return y[k] - vmin
            ev.terminal = True
            ev.direction = -1
            return ev

        evs = [make_event(k) for k in range(len(idx))]
        sol = solve_ivp(f, (t, t_end), v[idx], method="DOP853", rtol=rtol, atol=atol,
                        events=evs, max_step=max_step)
        if sol.status == -1:
            raise EventOrderingError(f"integration failed at tau={sol.t[-1]:.6g}: {sol.message}",
                                     state={"tau": float(sol.t[-1]), "ell": np.cbrt(sol.y[:, -1]).tolist()})
        for k in range(1, len(sol.t)):
            row = np.zeros(N)
            row[idx] = sol.y[:, k]
            ts.append(sol.t[k])
            vs.append(row)
        t = float(sol.t[-1])
        v = vs[-1].copy()
        if sol.status == 1:
            hit = [k for k, te in enumerate(sol.t_events) if len(te)]
            for k in hit:
                j = idx[k]
                rest = v[j]
                active[j] = False
                v[j] = 0.0
                alive = active & (v > 0)
                v[alive] += rest * v[alive] / v[alive].sum()
                events.append((float(sol.t_events[k][0]), int(j)))
            ts.append(t)
            vs.append(v.copy())
    if ts[-1] < t_end:
        ts.append(float(t_end))
        vs.append(v.copy())
    V = np.array(vs)
    ell = np.where(V > 0, np.abs(V) ** (1.0 / d), 0.0)
    return Trajectory(np.array(ts), ell, (V > 0).sum(axis=1), events, d)


# ------------------------------------------------------- cluster balance


@dataclass(frozen=True)
class ClusterResult:
    ell: np.ndarray
    A: np.ndarray
    residual: float
    iterations: int
    history: tuple


def cluster_balance(spec, ell, u0):
    """Absorbed flux minus loss, ``2 pi D nu A_j - gamma0 u0 pi eps^2 ell_j^2``, and ``A``.

    ``spec`` supplies the geometry, centres, ``D``, ``gamma0``, ``I0`` and
    ``epsilon``; compartments are perfectly absorbing (``u = 0``).
    """
    spec = validate(spec)
    nu, D = spec.nu, spec.D
    kernel = kernel_for(spec.geometry, D, spec.gamma0)
    G = matrix_from_points(kernel, spec.centers(), ell)
    A = solve_coefficients(spec, G, np.zeros(spec.N), np.zeros(spec.N)).A
    loss = spec.gamma0 * u0 * math.pi * spec.epsilon**2 * np.asarray(ell) ** 2
    return TWO_PI * D * nu * A - loss, A


def cluster_fixed_point(spec, u0, ell0=None, omega=0.5, tol=1e-8, max_iter=500) -> ClusterResult:
    """Self-consistent cluster radii with absorbed flux equal to internal loss.

    Each compartment absorbs ``2 pi D nu A_j`` from a bulk kept at
    ``I0/gamma0`` far away and loses ``gamma0 u0 |U_j|`` with
    ``|U_j| = pi eps^2 ell_j^2``.  The damped map
    ``ell <- (1 - omega) ell + omega sqrt(2 D nu A(ell)/(gamma0 u0 eps^2))``
    is iterated until the balance residual drops below ``tol``.
    """
    spec = validate(spec)
    if spec.dim != 2 or not isinstance(spec.geometry, Disk2D):
        raise UnsupportedError("cluster radii are computed for the disk")
    if spec.gamma0 <= 0 or spec.I0 <= 0:
        raise UnsupportedError("cluster balance needs gamma0 > 0 and I0 > 0")
    if any(not isinstance(c.model, ModelI) or c.model.c0 != 0 or not c.dirichlet for c in spec.compartments):
        raise UnsupportedError("clusters are perfectly absorbing compartments with zero boundary value")
    if u0 <= 0:
        raise DomainError("interior concentration must be positive")
    ell = spec.ells() if ell0 is None else np.asarray(ell0, dtype=float)
    scale = spec.gamma0 * u0 * spec.epsilon**2
    hist = []
    for it in range(max_iter):
        res, A = cluster_balance(spec, ell, u0)
        r = float(np.max(np.abs(res)))
        hist.append(r)
        if r <= tol:
            return ClusterResult(ell, A, r, it, tuple(hist))
        target = np.sqrt(np.maximum(2.0 * spec.D * spec.nu * A / scale, 0.0))
        if not np.all(np.isfinite(target)) or np.any(target <= 0):
            raise ConvergenceError("cluster iteration left the admissible region; try a larger interior concentration", hist)
        ell = (1.0 - omega) * ell + omega * target
    raise ConvergenceError(f"cluster iteration did not converge (residual {hist[-1]:.3e})", hist)
