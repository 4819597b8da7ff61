"""Steady states of planar problems by summing all logarithmic terms.

With ``nu = -1/ln(epsilon)`` the outer field is a Green's-weighted sum
``u(x) = u_inf - 2 pi nu D sum_k A_k G(x, x_k)`` (``u_inf`` is the uniform
background ``I0/gamma0`` when ``gamma0 > 0``) and near compartment ``j`` the
stretched inner field is ``Phi_j + nu A_j ln(rho/ell_j)``.  Matching gives
one dense linear system for the strengths ``A``:

    (I + nu M) A = -c,      M = diag(Psi) + 2 pi D G,

where ``c_j`` is the interface concentration relative to the background
and ``Psi_j`` collects the interface resistances.  With no degradation the
strengths must sum to zero, which fixes ``u_inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from scipy import special as sps

from . import special
from .errors import DomainError, ProximityError, UnsupportedError
from .geometry import CompartmentSpec, ModelI, ModelII, ModelIII, ValidatedSpec, validate
from .greens import InteractionMatrix, Kernel, kernel_for, matrix_from_points
from .kinetics import Kinetics, make_kinetics
from .numerics import damped_newton, factor, relative_residual

TWO_PI = 2.0 * math.pi


# -------------------------------------------------------- model constants


@dataclass(frozen=True)
class ReceptorPool2D:
    """Interface constants of a passive receptor pool (planar)."""

    c0: float
    Psi: float
    Dbar: float
    beta: float
    ell: float
    F: float
    D: float

    def Phibar(self, A, nu):
        return nu * A * self.D / (self.Dbar * self.F)

    def profile(self, rho, A, nu):
        """Interior concentration ``V(rho)`` for ``0 <= rho <= ell``."""
        rho = np.asarray(rho, dtype=float)
        ratio = np.exp(self.beta * (rho - self.ell)) * sps.ive(0, self.beta * rho) / sps.ive(0, self.beta * self.ell)
        return self.c0 + self.Phibar(A, nu) * ratio


def model2_constants_2d(comp: CompartmentSpec, D=1.0) -> ReceptorPool2D:
    """``c0 = Ibar/gammabar`` and ``Psi = D/(kappa ell) + D/(Dbar F(beta ell))``."""
    m = comp.model
    if not isinstance(m, ModelII):
        raise UnsupportedError("receptor-pool constants need a ModelII compartment")
    if m.gammabar <= 0:
        raise UnsupportedError("receptor pool without turnover has no steady interior state")
    beta = m.beta
    F = special.interface_F(beta * comp.ell)
    psi = D / (m.Dbar * F)
    if not comp.dirichlet:
        psi += D / (comp.kappa * comp.ell)
    return ReceptorPool2D(m.Ibar / m.gammabar, psi, m.Dbar, beta, comp.ell, F, D)


def interface_constants(spec: ValidatedSpec, w0=None):
    """Interface concentrations and resistances ``(c, Psi)`` per compartment.

    ``w0`` supplies concentrations for compartments with active kinetics.
    """
    c = np.empty(spec.N)
    psi = np.empty(spec.N)
    for j, comp in enumerate(spec.compartments):
        m = comp.model
        if isinstance(m, ModelII):
            pool = model2_constants_2d(comp, spec.D)
            c[j], psi[j] = pool.c0, pool.Psi
            continue
        if isinstance(m, ModelI):
            c[j] = m.c0
        elif isinstance(m, ModelIII):
            c[j] = m.w0[0] if w0 is None else w0[j]
        psi[j] = 0.0 if comp.dirichlet else spec.D / (comp.kappa * comp.ell)
    return c, psi


# --------------------------------------------------------------- solution


@dataclass(frozen=True)
class Coefficients2D:
    """Strengths ``A`` and the quantities that define them.

    ``u_inf`` is the far-field constant when ``gamma0 == 0`` (``None``
    otherwise); ``shift`` is the uniform background ``I0/gamma0``.
    """

    A: np.ndarray
    u_inf: float | None
    Psi: np.ndarray
    c0: np.ndarray
    nu: float
    shift: float = 0.0
    residual: float = 0.0
    condition: float = 1.0

    @property
    def background(self) -> float:
        return self.u_inf if self.u_inf is not None else self.shift


def _kernel(spec: ValidatedSpec) -> Kernel:
    if spec.dim != 2:
        raise UnsupportedError("planar solver needs a two-dimensional geometry")
    spg = spec.gamma0 if spec.gamma0 > 0 else None
    return kernel_for(spec.geometry, spec.D, spg)


def system_matrix(nu, psi, G, D):
    return np.eye(len(psi)) + nu * (np.diag(psi) + TWO_PI * D * G)


def strength_map(spec: ValidatedSpec, G, psi):
    """Affine map ``c -> A`` as ``(L, a0)`` with ``A = L c + a0``, plus the factorization.

    ``c`` holds raw interface concentrations (before the background shift).
    """
    nu = spec.nu
    fac = factor(system_matrix(nu, psi, G, spec.D))
    Tinv = fac.solve(np.eye(spec.N))
    if spec.gamma0 > 0:
        L = -Tinv
        a0 = Tinv @ np.full(spec.N, spec.shift)
    else:
        y = Tinv.sum(axis=1)
        L = np.outer(y, Tinv.sum(axis=0)) / y.sum() - Tinv
        a0 = np.zeros(spec.N)
    return L, a0, fac


def solve_coefficients(spec: ValidatedSpec, G, c, psi) -> Coefficients2D:
    nu = spec.nu
    T = system_matrix(nu, psi, G, spec.D)
    fac = factor(T)
    if spec.gamma0 > 0:
        rhs = -(c - spec.shift)
        A = fac.solve(rhs)
        return Coefficients2D(A, None, psi, c, nu, spec.shift, relative_residual(T, A, rhs), fac.condition)
    y = fac.solve(np.ones(spec.N))
    z = fac.solve(c)
    u_inf = float(z.sum() / y.sum())
    A = u_inf * y - z
    res = relative_residual(T, A, u_inf - c) if np.any(u_inf - c) else 0.0
    return Coefficients2D(A, u_inf, psi, c, nu, 0.0, res, fac.condition)


def solve_model1_2d(spec, w0=None) -> Coefficients2D:
    """Strengths for fixed-concentration (and receptor-pool) compartments.

    Parameters
    ----------
    spec : ProblemSpec or ValidatedSpec
    w0 : array, optional
        Interface concentrations for compartments with active kinetics.
    """
    spec = validate(spec)
    if w0 is None and any(isinstance(c.model, ModelIII) for c in spec.compartments):
        raise UnsupportedError("compartments with kinetics are solved by solve_model3_2d")
    kernel = _kernel(spec)
    G = matrix_from_points(kernel, spec.centers(), spec.ells())
    c, psi = interface_constants(spec, w0)
    return solve_coefficients(spec, G, c, psi)


@dataclass(frozen=True)
class SteadyField2D:
    spec: ValidatedSpec
    coefficients: Coefficients2D
    matrix: InteractionMatrix
    kernel: Kernel
    pools: dict = field(default_factory=dict)

    def outer(self, x, check=True):
        return eval_outer_2d(self, x, check)

    def inner(self, j, rho):
        return eval_inner_2d(self, j, rho)


def steady_field_2d(spec, w0=None) -> SteadyField2D:
    spec = validate(spec)
    kernel = _kernel(spec)
    G = matrix_from_points(kernel, spec.centers(), spec.ells())
    c, psi = interface_constants(spec, w0)
    coef = solve_coefficients(spec, G, c, psi)
    pools = {j: model2_constants_2d(comp, spec.D) for j, comp in enumerate(spec.compartments)
             if isinstance(comp.model, ModelII)}
    return SteadyField2D(spec, coef, InteractionMatrix(G, 2, kernel.s_plus_gamma), kernel, pools)


def eval_outer_2d(field: SteadyField2D, x, check=True):
    """Outer concentration at ``x`` (one point or an ``(M, 2)`` array)."""
    spec = field.spec
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    centers = spec.centers()
    if check:
        for j, xj in enumerate(centers):
            if np.any(np.linalg.norm(pts - xj, axis=-1) < 2.0 * spec.epsilon):
                raise ProximityError(f"point within 2 epsilon of compartment {j}; use the inner solution")
    coef = field.coefficients
    u = np.full(len(pts), coef.background)
    for k, xk in enumerate(centers):
        u -= TWO_PI * coef.nu * spec.D * coef.A[k] * field.kernel.value(pts, xk)
    return u if np.ndim(x) > 1 else float(u[0])


def eval_inner_2d(field: SteadyField2D, j: int, rho):
    """Inner concentration ``Phi_j + nu A_j ln(rho/ell_j)`` for ``rho >= ell_j``."""
    coef = field.coefficients
    ell = field.spec.compartments[j].ell
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < ell):
        raise DomainError("inner solution is defined outside the compartment (rho >= ell)")
    Phi = coef.c0[j] + coef.nu * coef.A[j] * coef.Psi[j]
    return Phi + coef.nu * coef.A[j] * np.log(rho / ell)


def receptor_count(field: SteadyField2D, j: int) -> float:
    """Steady receptor number ``pi eps^2 ell^2 Ibar/gammabar + 2 pi eps^2 nu D A_j/gammabar``."""
    comp = field.spec.compartments[j]
    if not isinstance(comp.model, ModelII):
        raise UnsupportedError("receptor count needs a ModelII compartment")
    m = comp.model
    eps = field.spec.epsilon
    A = field.coefficients.A[j]
    return (math.pi * eps**2 * comp.ell**2 * m.Ibar / m.gammabar
            + TWO_PI * field.coefficients.nu * field.spec.D * A * eps**2 / m.gammabar)


# ---------------------------------------------------------- active kinetics


@dataclass(frozen=True)
class KineticRoot:
    """One steady state of compartments with active kinetics."""

    w: np.ndarray  # (N, K)
    A: np.ndarray
    residual: float
    flux_residual: float


def _kinetics_for(spec, kinetics):
    if kinetics is not None:
        return [kinetics] * spec.N
    out = []
    for comp in spec.compartments:
        m = comp.model
        if not isinstance(m, ModelIII):
            raise UnsupportedError("every compartment needs kinetics (ModelIII)")
        out.append(make_kinetics(m.kinetics, **m.kinetics_params()))
    return out


def _dedup(roots, tol=1e-6):
    out = []
    for r in roots:
        if all(np.max(np.abs(r.w - o.w)) > tol for o in out):
            out.append(r)
    return out


def solve_kinetic_roots(spec, kin, exchange, guesses, tol, max_iter):
    """Shared Newton driver for active compartments.

    ``exchange(w0)`` returns ``(g, dg)``: the bulk exchange added to the rate
    of species ``0`` and its Jacobian with respect to the species-0 values.
    """
    N = spec.N
    K = kin[0].K

    def F(z):
        W = z.reshape(N, K)
        out = np.stack([kin[j].f(W[j]) for j in range(N)])
        g, _ = exchange(W[:, 0])
        out[:, 0] += g
        return out.ravel()

    def J(z):
        W = z.reshape(N, K)
        Jm = np.zeros((N * K, N * K))
        for j in range(N):
            Jm[j * K:(j + 1) * K, j * K:(j + 1) * K] = kin[j].jac(W[j])
        _, dg = exchange(W[:, 0])
        Jm[np.ix_(np.arange(N) * K, np.arange(N) * K)] += dg
        return Jm

    seeds = []
    # isolated kinetics (no bulk exchange) first
    base = np.array([np.asarray(c.model.w0, dtype=float) if isinstance(c.model, ModelIII)
                     else np.zeros(K) for c in spec.compartments])
    try:
        iso = []
        for j in range(N):
            r = damped_newton(lambda z, j=j: kin[j].f(z), lambda z, j=j: kin[j].jac(z), base[j], tol, max_iter)
            iso.append(r.x)
        seeds.append(np.array(iso).ravel())
    except Exception:
        pass
    seeds.append(base.ravel())
    for g in guesses:
        seeds.append(np.asarray(g, dtype=float).reshape(N, K).ravel())
    roots, last = [], None
    for s in seeds:
        try:
            r = damped_newton(F, J, s, tol, max_iter)
        except Exception as exc:  # keep trying other seeds
            last = exc
            continue
        roots.append(r)
    if not roots:
        raise last
    return roots


def solve_model3_2d(spec, kinetics: Kinetics | None = None, guesses=(), tol=1e-10, max_iter=60):
    """Steady states of compartments with active kinetics (planar).

    Solves ``f(w_j) + 2 pi D nu A_j e_0 = 0`` where ``A`` depends on the
    species-0 values of all compartments through the matching system.
    Seeds are the isolated-kinetics roots, the declared initial states and
    ``guesses``; roots closer than ``1e-6`` are merged.
    """
    spec = validate(spec)
    kin = _kinetics_for(spec, kinetics)
    kernel = _kernel(spec)
    G = matrix_from_points(kernel, spec.centers(), spec.ells())
    _, psi = interface_constants(spec, np.zeros(spec.N))
    L, a0, _ = strength_map(spec, G, psi)
    scale = TWO_PI * spec.D * spec.nu

    def exchange(w0):
        return scale * (L @ w0 + a0), scale * L

    roots = solve_kinetic_roots(spec, kin, exchange, guesses, tol, max_iter)
    out = []
    K = kin[0].K
    for r in roots:
        W = r.x.reshape(spec.N, K)
        A = L @ W[:, 0] + a0
        # independent check: Robin flux kappa 2 pi ell (w - U(ell)) or D dU/drho on the circle
        U_ell = W[:, 0] + spec.nu * A * psi
        with np.errstate(invalid="ignore"):
            flux = np.where(np.isinf(spec.kappas()),
                            -TWO_PI * spec.ells() * spec.D * (spec.nu * A / spec.ells()),
                            spec.kappas() * TWO_PI * spec.ells() * (W[:, 0] - U_ell))
        fr = np.array([kin[j].f(W[j])[0] for j in range(spec.N)]) - flux
        out.append(KineticRoot(W, A, r.residual, float(np.max(np.abs(fr)))))
    return _dedup(out)


# ----------------------------------------------------- volume transmission


@dataclass(frozen=True)
class VolumeTransmission:
    """Steady mean concentration of a switching release/uptake problem.

    ``ubar`` is the total mean concentration and ``ubar1`` the part
    conditioned on the firing state.
    """

    phi: np.ndarray
    u_inf: float
    A: np.ndarray
    B: np.ndarray
    alpha: float
    beta: float
    nu: float
    D: float
    centers: np.ndarray
    kernel0: Kernel
    kernel_g: Kernel
    epsilon: float

    def ubar(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        u = np.full(len(pts), self.u_inf)
        for k, xk in enumerate(self.centers):
            u -= TWO_PI * self.D * self.nu * self.A[k] * self.kernel0.value(pts, xk)
        return u

    def ubar1(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        g = self.alpha + self.beta
        u = np.full(len(pts), self.beta * self.u_inf / g)
        for k, xk in enumerate(self.centers):
            G0 = self.kernel0.value(pts, xk)
            Gg = self.kernel_g.value(pts, xk)
            u -= TWO_PI * self.D * self.nu * (self.beta / g) * self.A[k] * (G0 - Gg)
            u -= TWO_PI * self.D * self.nu * self.B[k] * Gg
        return u


def volume_transmission_2d(spec, J, alpha, beta) -> VolumeTransmission:
    """Mean concentration when all release sites switch between two states.

    In the firing state each site releases total flux ``2 pi eps ell_j J_j``;
    otherwise it absorbs perfectly.  The firing-state mean ``ubar1`` solves a
    degradation problem with rate ``alpha + beta`` and source ``beta ubar``.
    Both stages are matched with unknown boundary values ``phi`` that are
    fixed by the release condition, weighted by the stationary firing
    probability ``beta/(alpha + beta)``.
    """
    spec = validate(spec)
    if spec.dim != 2:
        raise UnsupportedError("volume transmission is implemented for planar domains")
    if alpha <= 0 or beta < 0:
        raise DomainError("switching rates need alpha > 0 and beta >= 0")
    N, nu, D = spec.N, spec.nu, spec.D
    J = np.broadcast_to(np.asarray(J, dtype=float), (N,))
    g = alpha + beta
    x, ell = spec.centers(), spec.ells()
    k0 = kernel_for(spec.geometry, D)
    kg = kernel_for(spec.geometry, D, g)
    G0 = matrix_from_points(k0, x, ell)
    Gg = matrix_from_points(kg, x, ell)
    zero = np.zeros(N)
    # stage 1: Laplace with Dirichlet data phi, strengths summing to zero
    f0 = factor(system_matrix(nu, zero, G0, D))
    Z = f0.solve(np.eye(N))
    y = Z.sum(axis=1)
    q = Z.sum(axis=0) / y.sum()  # u_inf = q . phi
    P = np.outer(y, q) - Z       # A = P phi
    # stage 2: B = -(I + nu M_g)^{-1} (phi - Gamma(x_j))
    fg = factor(system_matrix(nu, zero, Gg, D))
    KK = (G0 - Gg) / g
    Gamma = (beta / g) * np.outer(np.ones(N), q) - TWO_PI * D * nu * beta * KK @ P
    C = -fg.solve(np.eye(N) - Gamma)
    rho1 = beta / g
    B_target = -spec.epsilon * ell * J * rho1 / (D * nu)
    fc = factor(C)
    phi = fc.solve(B_target)
    A = P @ phi
    B = C @ phi
    return VolumeTransmission(phi, float(q @ phi), A, B, alpha, beta, nu, D, x, k0, kg, spec.epsilon)
