"""Phase oscillators coupled through a shared complex environment.

Each oscillator has a phase ``theta_j`` and natural frequency ``omega_j``;
the environment is a complex amplitude ``z = a exp(i psi)``:

    dtheta_j/dt = omega_j + k a sum_k W_jk sin(psi - theta_k)
    dz/dt       = (alpha k/N) sum_jk W_jk (exp(i theta_k) - z) - (gamma0 + i omega0) z

with ``k`` the coupling strength.  ``W = I`` is the well-mixed model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import solve_ivp

from ..errors import DomainError, NumericalError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KuramotoParams:
    kappa_hat: float = 1.0
    alpha: float = 1.0
    gamma0: float = 0.1
    omega0: float = 0.0


@dataclass
class OscState:
    theta: np.ndarray
    z: complex
    omega: np.ndarray

    def __post_init__(self):
        self.theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        self.omega = np.asarray(self.omega, dtype=float)
        self.z = complex(self.z)


def kuramoto_rhs(state: OscState, params: KuramotoParams, W=None):
    """Return ``(dtheta/dt, dz/dt)``; ``W=None`` means the identity."""
    th, z = state.theta, state.z
    N = th.size
    # a sin(psi - theta) = Im(z exp(-i theta))
    drive = (z * np.exp(-1j * th)).imag
    e = np.exp(1j * th)
    if W is None:
        coup, pull = drive, np.sum(e - z)
    else:
        W = np.asarray(W, dtype=float)
        coup = W @ drive
        pull = np.sum(W @ (e - z))
    dth = state.omega + params.kappa_hat * coup
    dz = params.alpha * params.kappa_hat / N * pull - (params.gamma0 + 1j * params.omega0) * z
    return dth, complex(dz)


def order_parameter(theta) -> complex:
    """``(1/N) sum exp(i theta_j)``."""
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        raise DomainError("order parameter needs at least one phase")
    return complex(np.mean(np.exp(1j * theta)))


_DENSITIES = {
    "gaussian": stats.norm,
    "lorentzian": stats.cauchy,
    "uniform": stats.uniform,
}


def frequency_quantiles(N, density="gaussian", width=1.0, mean=0.0):
    """Deterministic natural frequencies at the mid quantiles ``(j + 1/2)/N``.

    ``density`` is an even law (``gaussian``, ``lorentzian`` or ``uniform``)
    with scale ``width``; ``uniform`` spans ``[mean - width, mean + width]``.
    """
    if density not in _DENSITIES:
        raise DomainError(f"unknown frequency density {density!r}")
    p = (np.arange(N) + 0.5) / N
    if density == "uniform":
        return mean - width + 2.0 * width * p
    return mean + width * _DENSITIES[density].ppf(p)


def spread_phases(N):
    """Low-discrepancy initial phases ``2 pi frac(j g)`` with ``g`` the golden ratio."""
    g = 0.5 * (1.0 + math.sqrt(5.0))
    return TWO_PI * np.mod(np.arange(N) * g, 1.0)


@dataclass(frozen=True)
class KuramotoTrajectory:
    t: np.ndarray
    theta: np.ndarray      # (len(t), N), wrapped to [0, 2 pi)
    z: np.ndarray
    order: np.ndarray      # |zbar|


def integrate_kuramoto(state: OscState, params: KuramotoParams, t_end, W=None, t_eval=None,
                       rtol=1e-9, atol=1e-11) -> KuramotoTrajectory:
    N = state.theta.size

    def f(t, y):
        st = OscState.__new__(OscState)
        st.theta, st.z, st.omega = y[:N], complex(y[N], y[N + 1]), state.omega
        dth, dz = kuramoto_rhs(st, params, W)
        return np.concatenate([dth, [dz.real, dz.imag]])

    y0 = np.concatenate([state.theta, [state.z.real, state.z.imag]])
    sol = solve_ivp(f, (0.0, t_end), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if sol.status < 0 or not np.all(np.isfinite(sol.y)):
        raise NumericalError(f"oscillator integration failed: {sol.message}")
    th = sol.y[:N].T
    zbar = np.abs(np.mean(np.exp(1j * th), axis=1))
    return KuramotoTrajectory(sol.t, np.mod(th, TWO_PI), sol.y[N] + 1j * sol.y[N + 1], zbar)
