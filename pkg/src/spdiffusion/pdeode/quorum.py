"""Reduced ODEs for compartments coupled through fast bulk diffusion.

With bulk diffusivity ``D = D0/nu`` the bulk is nearly uniform at its mean
``ubar`` and each compartment exchanges species 0 through a flux strength
``A_j``:

    dubar/dt = -gamma0 ubar - (2 pi D0/|Omega|) sum_j A_j
    dw_j/dt  = f(w_j) + (2 pi D0/|U_j|) A_j e_0

where ``|U_j| = pi eps^2 ell_j^2`` and ``A`` solves the dense system

    A_j + q_j 2 pi D0 nu sum_k G_jk A_k = q_j (ubar - w_{j,0}),
    q_j = kappa_j ell_j/(kappa_j ell_j + D0),

with ``G`` the Neumann interaction matrix at diffusivity ``D0`` (diagonal
``R - ln(ell)/(2 pi D0)``).  For identical compartments this is
``A = q W (ubar - w_0)`` with ``W = (I + nu Q)^{-1}`` and
``Q = 2 pi q D0 G``; ``W -> I`` recovers the well-mixed model.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ..errors import ConvergenceError, DomainError, NumericalError, UnsupportedError
from ..geometry import validate
from ..greens import kernel_for, matrix_from_points
from ..kinetics import Kinetics, selkov_kinetics
from ..numerics import damped_newton, factor

TWO_PI = 2.0 * math.pi


@dataclass
class ReducedState:
    ubar: float
    w: np.ndarray
    t: float = 0.0

    def pack(self) -> np.ndarray:
        return np.concatenate([[self.ubar], np.asarray(self.w, dtype=float).ravel()])


@dataclass(frozen=True)
class CouplingMatrixW:
    W: np.ndarray
    nu: float
    D0: float
    kappa: float
    ell: float
    residual: float


def _exchange_weights(kappa, ell, D0):
    kappa = np.asarray(kappa, dtype=float)
    ell = np.asarray(ell, dtype=float)
    with np.errstate(invalid="ignore"):
        q = np.where(np.isinf(kappa), 1.0, kappa * ell / (kappa * ell + D0))
    return q


def _greens(spec, D0):
    if spec.dim != 2:
        raise UnsupportedError("the reduced model is derived for planar domains")
    kernel = kernel_for(spec.geometry, D0)
    return matrix_from_points(kernel, spec.centers(), spec.ells())


def coupling_matrix(spec, D0) -> CouplingMatrixW:
    """``W = (I + nu Q)^{-1}`` for identical compartments.

    Heterogeneous compartments raise; use :class:`QuorumSystem`, which
    solves the general matching system.
    """
    spec = validate(spec)
    ell, kap = spec.ells(), spec.kappas()
    if np.ptp(ell) != 0 or not (np.all(kap == kap[0])):
        raise UnsupportedError("W needs identical compartments (same ell and kappa)")
    q = float(_exchange_weights(kap[0], ell[0], D0))
    Q = TWO_PI * q * D0 * _greens(spec, D0)
    T = np.eye(spec.N) + spec.nu * Q
    fac = factor(T)
    W = fac.solve(np.eye(spec.N))
    res = float(np.max(np.abs(T @ W - np.eye(spec.N))))
    return CouplingMatrixW(W, spec.nu, float(D0), float(kap[0]), float(ell[0]), res)


class QuorumSystem:
    """Reduced ODE system for one spec, bulk diffusivity scale and kinetics.

    Parameters
    ----------
    spec : ProblemSpec or ValidatedSpec
        Geometry, centres, ``ell``, ``kappa``, ``gamma0`` and ``epsilon``;
        ``spec.D`` is not used (the bulk diffusivity is ``D0/nu``).
    D0 : float
        Scaled bulk diffusivity.
    kinetics : Kinetics
        Per-volume intracellular rates ``f(w)``.
    """

    def __init__(self, spec, D0, kinetics: Kinetics):
        spec = validate(spec)
        if D0 <= 0:
            raise DomainError("D0 must be positive")
        self.spec = spec
        self.D0 = float(D0)
        self.kinetics = kinetics
        self.N, self.K = spec.N, kinetics.K
        self.nu = spec.nu
        self.G = _greens(spec, self.D0)
        self.q = _exchange_weights(spec.kappas(), spec.ells(), self.D0)
        self.volumes = math.pi * spec.epsilon**2 * spec.ells() ** 2
        self.area = spec.geometry.measure
        M = np.eye(self.N) + (TWO_PI * self.D0 * self.nu) * self.q[:, None] * self.G
        self.factored = factor(M)
        # A = S (ubar - w0) with S = M^{-1} diag(q); state independent
        self.S = self.factored.solve(np.diag(self.q))

    @property
    def size(self) -> int:
        return 1 + self.N * self.K

    def unpack(self, y):
        y = np.asarray(y, dtype=float)
        return y[0], y[1:].reshape(self.N, self.K)

    def strengths(self, ubar, w0):
        return self.factored.solve(self.q * (ubar - np.asarray(w0)))

    def rhs(self, t, y):
        ubar, w = self.unpack(y)
        A = self.strengths(ubar, w[:, 0])
        du = -self.spec.gamma0 * ubar - TWO_PI * self.D0 / self.area * A.sum()
        dw = self.kinetics(w)
        dw[:, 0] += TWO_PI * self.D0 * A / self.volumes
        return np.concatenate([[du], dw.ravel()])

    def jacobian(self, y):
        ubar, w = self.unpack(y)
        n, K = self.N, self.K
        J = np.zeros((self.size, self.size))
        dA_du = self.S.sum(axis=1)
        dA_dw = -self.S
        J[0, 0] = -self.spec.gamma0 - TWO_PI * self.D0 / self.area * dA_du.sum()
        J[0, 1::K] = -TWO_PI * self.D0 / self.area * dA_dw.sum(axis=0)
        jf = self.kinetics.jac(w)
        for j in range(n):
            r = 1 + j * K
            J[r:r + K, r:r + K] = jf[j]
            c = TWO_PI * self.D0 / self.volumes[j]
            J[r, 0] += c * dA_du[j]
            J[r, 1::K] += c * dA_dw[j]
        return J

    def total_content(self, y):
        """``|Omega| ubar + sum_j |U_j| w_{j,0}``, conserved when ``gamma0 = 0`` and ``f_0 = 0``."""
        ubar, w = self.unpack(y)
        return self.area * ubar + float(self.volumes @ w[:, 0])


def reduced_rhs(state: ReducedState, system: QuorumSystem) -> ReducedState:
    """Time derivatives of ``state`` through the general matching system."""
    d = system.rhs(state.t, state.pack())
    du, dw = system.unpack(d)
    return ReducedState(float(du), dw, state.t)


def reduced_rhs_w(state: ReducedState, spec, D0, kinetics: Kinetics) -> ReducedState:
    """Identical-compartment derivatives through ``W``.

    ``dubar/dt = -gamma0 ubar + (2 pi/|Omega|) q D0 sum_jk W_jk (w_k - ubar)`` and
    ``dw_j/dt = f(w_j) - (2 pi N/|U_total|) q D0 sum_k W_jk (w_k - ubar) e_0``.
    """
    spec = validate(spec)
    cm = coupling_matrix(spec, D0)
    q = float(_exchange_weights(cm.kappa, cm.ell, D0))
    w = np.asarray(state.w, dtype=float)
    flux = cm.W @ (w[:, 0] - state.ubar)
    u_total = spec.N * math.pi * spec.epsilon**2 * cm.ell**2
    du = -spec.gamma0 * state.ubar + TWO_PI / spec.geometry.measure * q * D0 * flux.sum()
    dw = kinetics(w)
    dw[:, 0] -= TWO_PI * spec.N / u_total * q * D0 * flux
    return ReducedState(float(du), dw, state.t)


@dataclass(frozen=True)
class QuorumTrajectory:
    t: np.ndarray
    ubar: np.ndarray
    w: np.ndarray          # shape (len(t), N, K)
    nfev: int
    advisory: str = ""

    def amplitude(self, after=0.5):
        """Peak-to-peak range of ``ubar`` over the final ``1 - after`` fraction of the run."""
        k = self.t >= self.t[0] + after * (self.t[-1] - self.t[0])
        return float(np.ptp(self.ubar[k]))


def integrate_reduced(initial: ReducedState, system: QuorumSystem, t_end, t_eval=None,
                      rtol=1e-9, atol=1e-12, method="DOP853") -> QuorumTrajectory:
    """Integrate the reduced system with dense output at ``t_eval``.

    An explicit method that spends many more evaluations than accepted
    steps is flagged with an advisory (the coupling makes the system stiff);
    ``method='Radau'`` uses the analytic Jacobian instead.
    """
    y0 = initial.pack()
    if y0.size != system.size:
        raise DomainError(f"state has {y0.size} entries, system expects {system.size}")
    kw = {"jac": lambda t, y: system.jacobian(y)} if method in ("Radau", "BDF", "LSODA") else {}
    sol = solve_ivp(system.rhs, (initial.t, t_end), y0, method=method, t_eval=t_eval,
                    rtol=rtol, atol=atol, **kw)
    if sol.status < 0 or not np.all(np.isfinite(sol.y)):
        raise NumericalError(f"reduced integration failed: {sol.message}")
    advisory = ""
    if method in ("DOP853", "RK45", "RK23"):
        per_step = {"DOP853": 12, "RK45": 6, "RK23": 3}[method]
        steps = max(sol.nfev // per_step, 1)
        if sol.nfev > 2000 * per_step and steps > 50 * max(len(sol.t), 1):
            advisory = "many explicit steps: the exchange terms look stiff; reduce kappa or use method='Radau'"
            warnings.warn(advisory, RuntimeWarning, stacklevel=2)
    N, K = system.N, system.K
    w = sol.y[1:].T.reshape(len(sol.t), N, K)
    return QuorumTrajectory(sol.t, sol.y[0], w, sol.nfev, advisory)


# ------------------------------------------------------------ stability


@dataclass(frozen=True)
class StabilityResult:
    eigenvalues: np.ndarray
    max_real: float
    hopf: bool
    fixed_point: np.ndarray
    residual: float


def find_fixed_point(system: QuorumSystem, guess, tol=1e-11) -> np.ndarray:
    r = damped_newton(lambda y: system.rhs(0.0, y), system.jacobian, guess, tol=tol)
    return r.x


def linear_stability(fixed_point, system: QuorumSystem, tol=1e-8, residual_tol=1e-10) -> StabilityResult:
    """Eigenvalues of the reduced Jacobian at a fixed point.

    The Hopf flag is set when a complex pair has ``|Re| <= tol``.
    """
    y = np.asarray(fixed_point, dtype=float)
    res = float(np.max(np.abs(system.rhs(0.0, y))))
    if res > residual_tol:
        raise ConvergenceError(f"not a fixed point (residual {res:.2e})", [res])
    ev = np.linalg.eigvals(system.jacobian(y))
    ev = ev[np.argsort(-ev.real)]
    hopf = bool(np.any((np.abs(ev.real) <= tol) & (np.abs(ev.imag) > tol)))
    return StabilityResult(ev, float(ev.real.max()), hopf, y, res)


@dataclass(frozen=True)
class HopfCrossing:
    D0: float
    bracket: tuple
    frequency: float


def _max_real(spec, kinetics, D0, guess):
    sys_ = QuorumSystem(spec, D0, kinetics)
    y = find_fixed_point(sys_, guess)
    st = linear_stability(y, sys_)
    lead = st.eigenvalues[0]
    return st.max_real, y, abs(lead.imag)


def hopf_sweep(spec, kinetics: Kinetics, D0_values, guess, xtol=1e-4):
    """Track the leading eigenvalue over ``D0_values`` and bisect sign changes of its real part.

    Returns ``(max_real, crossings)`` where each crossing is bracketed to
    ``xtol`` in ``D0``.
    """
    D0_values = np.asarray(D0_values, dtype=float)
    mr, fps, y = [], [], np.asarray(guess, dtype=float)
    for D0 in D0_values:
        m, y, _ = _max_real(spec, kinetics, D0, y)
        mr.append(m)
        fps.append(y)
    mr = np.array(mr)
    crossings = []
    for i in np.flatnonzero(np.sign(mr[:-1]) * np.sign(mr[1:]) < 0):
        lo, hi, y_lo = D0_values[i], D0_values[i + 1], fps[i]
        s_lo = np.sign(mr[i])
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            m, y_mid, _ = _max_real(spec, kinetics, mid, y_lo)
            if np.sign(m) == s_lo:
                lo, y_lo = mid, y_mid
            else:
                hi = mid
        _, _, freq = _max_real(spec, kinetics, 0.5 * (lo + hi), y_lo)
        crossings.append(HopfCrossing(0.5 * (lo + hi), (lo, hi), freq))
    return mr, crossings


# -------------------------------------------------------- Sel'kov plug-in


def selkov_trace(a, b):
    """Trace of the isolated Sel'kov Jacobian at its fixed point."""
    return -1.0 + 2.0 * b * b / (a + b * b) - a - b * b


def selkov_hopf_window(a):
    """The two values of ``b`` between which the isolated Sel'kov cell oscillates.

    The determinant ``a + b^2`` is positive, so stability changes only where
    the trace vanishes; both roots are located by bracketing.
    """
    grid = np.linspace(1e-4, 3.0, 3001)
    tr = selkov_trace(a, grid)
    idx = np.flatnonzero(np.sign(tr[:-1]) * np.sign(tr[1:]) < 0)
    if len(idx) != 2:
        raise DomainError(f"no oscillatory window for a={a}")
    return tuple(brentq(lambda b: selkov_trace(a, b), grid[i], grid[i + 1], xtol=1e-14) for i in idx)


def selkov_below_threshold(a=0.1, margin=0.03):
    """Sel'kov kinetics with ``b`` just above the upper edge of the oscillatory window.

    The isolated cell is then a stable focus close to its Hopf point.
    """
    b = selkov_hopf_window(a)[1] + margin
    return selkov_kinetics(a, b), b
