"""Two-term steady states in three dimensions.

Each compartment acts at leading order as a point source of strength
``4 pi D eps Lambda_j c_j`` where ``Lambda_j = kappa ell^2/(kappa ell + D)``
is the Robin-reduced radius (its capacitance when the boundary is
absorbing).  The next term corrects ``c_j`` by ``eps chi_j``, the value of
the regular part of the field generated by all compartments at ``x_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ProximityError, UnsupportedError
from .geometry import CompartmentSpec, ModelI, ModelII, ModelIII, ShapeSpec, ValidatedSpec, validate
from .greens import InteractionMatrix, Kernel, kernel_for, matrix_from_points
from .kinetics import Kinetics
from .asymptotic2d import KineticRoot, _dedup, _kinetics_for, solve_kinetic_roots

FOUR_PI = 4.0 * math.pi


def capacitance(shape: ShapeSpec, convention: str = "printed") -> float:
    """Electrostatic capacitance of a compartment shape.

    Spheroids take ``a`` along the symmetry axis and ``b`` across it, with
    ``a >= b``.  The oblate form ``sqrt(a^2 - b^2)/acosh(b/a)`` is only real
    when ``b >= a``; with ``convention='printed'`` it is evaluated as written
    and rejected otherwise, while ``convention='standard'`` uses
    ``sqrt(a^2 - b^2)/arccos(b/a)``.  Equal semi-axes return the sphere
    limit ``a``.
    """
    a, b, kind = float(shape.a), shape.b, shape.kind
    if a <= 0:
        raise DomainError("shape size must be positive")
    if kind == "sphere":
        return a
    if kind == "hemisphere":
        return 2.0 * a * (1.0 - 1.0 / math.sqrt(3.0))
    if b is None or b <= 0:
        raise DomainError("spheroids need a positive second semi-axis")
    b = float(b)
    if a == b:
        return a
    if kind == "prolate":
        if a < b:
            raise DomainError("prolate spheroid needs a >= b")
        return math.sqrt(a * a - b * b) / math.acosh(a / b)
    if kind == "oblate":
        if a < b:
            raise DomainError("oblate spheroid needs a >= b")
        if convention == "standard":
            return math.sqrt(a * a - b * b) / math.acos(b / a)
        raise DomainError("printed oblate capacitance needs acosh(b/a) with b/a < 1; "
                          "use convention='standard'")
    raise DomainError(f"unknown shape {kind!r}")


def reduced_radius(ell, kappa, D):
    """``Lambda = kappa ell^2/(kappa ell + D)``; ``ell`` for an absorbing boundary."""
    ell = np.asarray(ell, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    with np.errstate(invalid="ignore"):
        lam = kappa * ell * ell / (kappa * ell + D)
    return np.where(np.isinf(kappa), ell, lam)


@dataclass(frozen=True)
class ReceptorPool3D:
    """Leading-order solution of an isolated passive receptor pool (ball)."""

    A: float
    B: float
    Lambda_eff: float
    c0: float
    beta: float
    ell: float

    def profile(self, rho):
        rho = np.asarray(rho, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = np.where(rho > 0, np.sinh(self.beta * rho) / np.where(rho > 0, rho, 1.0), self.beta)
        return self.c0 + self.B * v


def model2_coefficient_3d(comp: CompartmentSpec, D=1.0, far_field=0.0) -> ReceptorPool3D:
    """Strength ``A`` of a receptor pool with bulk value ``far_field`` far away.

    ``A = Dbar C (Ibar/gammabar - far_field) / (D sinh(beta ell)/ell + Dbar C/Lambda)``
    with ``C = beta ell cosh(beta ell) - sinh(beta ell)``, and the interior is
    ``V = Ibar/gammabar + B sinh(beta rho)/rho`` with ``B = -D A/(Dbar C)``.
    """
    m = comp.model
    if not isinstance(m, ModelII):
        raise UnsupportedError("receptor-pool coefficient needs a ModelII compartment")
    if m.gammabar <= 0:
        raise UnsupportedError("receptor pool without turnover has no steady interior state")
    ell, beta = comp.ell, m.beta
    lam = float(reduced_radius(ell, comp.kappa, D))
    x = beta * ell
    Cb = x * math.cosh(x) - math.sinh(x)
    lam_eff = m.Dbar * Cb / (D * math.sinh(x) / ell + m.Dbar * Cb / lam)
    c0 = m.Ibar / m.gammabar
    A = lam_eff * (c0 - far_field)
    B = -D * A / (m.Dbar * Cb)
    return ReceptorPool3D(A, B, lam_eff, c0, beta, ell)


def _lambdas(spec: ValidatedSpec):
    lam = np.empty(spec.N)
    for j, comp in enumerate(spec.compartments):
        m = comp.model
        if comp.shape is not None:
            if comp.shape.kind == "sphere":
                lam[j] = reduced_radius(comp.shape.a, comp.kappa, spec.D)
                continue
            if not comp.dirichlet:
                raise UnsupportedError("non-spherical compartments support absorbing boundaries only")
            lam[j] = capacitance(comp.shape)
            continue
        if isinstance(m, ModelII):
            lam[j] = model2_coefficient_3d(comp, spec.D).Lambda_eff
        else:
            lam[j] = reduced_radius(comp.ell, comp.kappa, spec.D)
    return lam


def _concentrations(spec, w0=None):
    c = np.empty(spec.N)
    for j, comp in enumerate(spec.compartments):
        m = comp.model
        if isinstance(m, ModelI):
            c[j] = m.c0
        elif isinstance(m, ModelII):
            c[j] = m.Ibar / m.gammabar
        else:
            c[j] = m.w0[0] if w0 is None else w0[j]
    return c


@dataclass(frozen=True)
class Coefficients3D:
    """``Lambda``, ``chi`` and the far-field constant of a 3D steady state.

    ``c0`` holds the interface concentrations relative to the background
    (``I0/gamma0`` when ``gamma0 > 0``, ``u_inf`` when ``gamma0 == 0``).
    """

    Lambda: np.ndarray
    chi: np.ndarray
    u_inf: float | None
    c0: np.ndarray
    epsilon: float
    shift: float = 0.0

    @property
    def background(self) -> float:
        return self.u_inf if self.u_inf is not None else self.shift

    @property
    def strengths(self) -> np.ndarray:
        """``Lambda_j (c_j - eps chi_j)``."""
        return self.Lambda * (self.c0 - self.epsilon * self.chi)


@dataclass(frozen=True)
class SteadyField3D:
    spec: ValidatedSpec
    coefficients: Coefficients3D
    matrix: InteractionMatrix
    kernel: Kernel

    def outer(self, x, check=True):
        return eval_outer_3d(self, x, check)

    def inner(self, j, rho, far_field=False):
        return eval_inner_3d(self, j, rho, far_field)


def _kernel(spec):
    if spec.dim != 3:
        raise UnsupportedError("3D solver needs the ball geometry")
    return kernel_for(spec.geometry, spec.D, spec.gamma0 if spec.gamma0 > 0 else None)


def coefficients_3d(spec: ValidatedSpec, G, lam, c, iterations=2) -> Coefficients3D:
    eps, D = spec.epsilon, spec.D
    if spec.gamma0 > 0:
        cc = c - spec.shift
        chi = FOUR_PI * D * (G @ (lam * cc))
        return Coefficients3D(lam, chi, None, cc, eps, spec.shift)
    # gamma0 = 0: u_inf is the Lambda-weighted mean of c - eps chi, and chi
    # itself depends on u_inf; a short fixed-point iteration closes the loop
    u_inf = float(lam @ c / lam.sum())
    for _ in range(iterations):
        chi = FOUR_PI * D * (G @ (lam * (c - u_inf)))
        u_inf = float(lam @ (c - eps * chi) / lam.sum())
    return Coefficients3D(lam, chi, u_inf, c - u_inf, eps, 0.0)


def solve_model1_3d(spec, w0=None) -> Coefficients3D:
    """Two-term coefficients for the ball with fixed-concentration compartments.

    Receptor-pool compartments enter through their effective reduced radius.
    """
    spec = validate(spec)
    kernel = _kernel(spec)
    G = matrix_from_points(kernel, spec.centers())
    return coefficients_3d(spec, G, _lambdas(spec), _concentrations(spec, w0))


def steady_field_3d(spec, w0=None) -> SteadyField3D:
    spec = validate(spec)
    kernel = _kernel(spec)
    G = matrix_from_points(kernel, spec.centers())
    coef = coefficients_3d(spec, G, _lambdas(spec), _concentrations(spec, w0))
    return SteadyField3D(spec, coef, InteractionMatrix(G, 3, kernel.s_plus_gamma), kernel)


def eval_outer_3d(field: SteadyField3D, x, check=True):
    """``background + 4 pi D eps sum_k Lambda_k (c_k - eps chi_k) G(x, x_k)``."""
    spec = field.spec
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    centers = spec.centers()
    if check:
        for j, xj in enumerate(centers):
            if np.any(np.linalg.norm(pts - xj, axis=-1) < 2.0 * spec.epsilon):
                raise ProximityError(f"point within 2 epsilon of compartment {j}; use the inner solution")
    coef = field.coefficients
    u = np.full(len(pts), coef.background)
    S = coef.strengths
    for k, xk in enumerate(centers):
        u += FOUR_PI * spec.D * spec.epsilon * S[k] * field.kernel.value(pts, xk)
    return u if np.ndim(x) > 1 else float(u[0])


def eval_inner_3d(field: SteadyField3D, j: int, rho, far_field=False):
    """Inner field ``background + (Lambda_j/rho)(c_j - eps chi_j)``.

    ``far_field=True`` adds the constant ``eps chi_j`` the inner field tends
    to, which is needed when comparing with the outer field at finite
    ``rho``.
    """
    coef = field.coefficients
    comp = field.spec.compartments[j]
    ell = comp.shape.a if comp.shape is not None else comp.ell
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < ell):
        raise DomainError("inner solution is defined outside the compartment (rho >= ell)")
    u = coef.background + coef.strengths[j] / rho
    if far_field:
        u = u + coef.epsilon * coef.chi[j]
    return u


def solve_model3_3d(spec, kinetics: Kinetics | None = None, guesses=(), tol=1e-10, max_iter=60):
    """Steady states of active compartments in the ball (leading order).

    Each compartment loses ``4 pi D Lambda_j (w_{j,0} - ubar)`` to the bulk,
    where ``ubar`` is the background (``I0/gamma0``, or the
    ``Lambda``-weighted mean of ``w_{j,0}`` when ``gamma0 == 0``).
    """
    spec = validate(spec)
    if spec.dim != 3:
        raise UnsupportedError("3D solver needs the ball geometry")
    kin = _kinetics_for(spec, kinetics)
    lam = _lambdas(spec)
    N = spec.N
    if spec.gamma0 > 0:
        Lmap = np.eye(N)
        b0 = -np.full(N, spec.shift)
    else:
        Lmap = np.eye(N) - np.outer(np.ones(N), lam) / lam.sum()
        b0 = np.zeros(N)
    scale = FOUR_PI * spec.D * lam

    def exchange(w0):
        return -scale * (Lmap @ w0 + b0), -scale[:, None] * Lmap

    roots = solve_kinetic_roots(spec, kin, exchange, guesses, tol, max_iter)
    out = []
    K = kin[0].K
    ell = spec.ells()
    kap = spec.kappas()
    for r in roots:
        W = r.x.reshape(N, K)
        cj = Lmap @ W[:, 0] + b0
        # independent check through the Robin flux kappa 4 pi ell^2 (w - U(ell))
        U_ell = W[:, 0] - cj + lam * cj / ell
        with np.errstate(invalid="ignore"):
            robin = kap * FOUR_PI * ell**2 * (W[:, 0] - U_ell)
        flux = np.where(np.isinf(kap), FOUR_PI * spec.D * ell * cj, robin)
        fr = np.array([kin[j].f(W[j])[0] for j in range(N)]) - flux
        out.append(KineticRoot(W, lam * cj, r.residual, float(np.max(np.abs(fr)))))
    return _dedup(out)
