"""Accumulation times: the local mean relaxation time towards steady state.

With ``Z(x, t) = 1 - u(x, t)/u(x)`` the accumulation time is the integral of
``Z`` over time.  In Laplace space it becomes a derivative at ``s = 0``,

    T(x) = +-(1/u(x)) d/ds [s u~(x, s)] at s = 0,

with ``+`` when the compartments drain an initial bulk load (sinks) and
``-`` when they fill an empty bulk (sources).  The Laplace-space problem is
the steady problem with ``gamma0 -> gamma0 + s``, ``c_j -> c_j/s`` and the
initial condition as a source, so the planar and spatial matched solutions
carry over.  Each time is computed twice: from the assembled derivative
(strengths ``A``, their ``s``-derivatives ``A'`` and ``H = dG/ds``) and by
differentiating the full Laplace-space solution numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sps
from scipy.interpolate import RegularGridInterpolator

from .asymptotic2d import TWO_PI, interface_constants, system_matrix
from .asymptotic3d import FOUR_PI, _lambdas
from .errors import AccuracyError, DomainError, ProximityError, UnsupportedError
from .geometry import Disk2D, ModelI, Rect2D, Sphere3D, validate
from .greens import helmholtz_s_derivative, kernel_for, matrix_from_points
from .numerics import factor

CHUNK = 16384
GAMMA0_REQUIRED = ("accumulation times need gamma0 > 0; with zero degradation G has a pole at s = 0 "
                   "and the expansion needs partial summation of eps/s terms, which is not implemented")


def _step(gamma0, h=None):
    # 1e-3 relative to the rate keeps s + gamma0 > 0 for every gamma0 > 0
    return 1e-3 * gamma0 if h is None else h


def laplace_accumulation_time(s_u, gamma0, h=None, sign=1.0):
    """Accumulation time from ``s_u(s) = s u~(x, s)`` by Richardson differentiation.

    Returns ``(T, steady, error_estimate)`` with ``T = sign * F'(0)/F(0)``.
    """
    h = _step(gamma0, h)
    steady = np.asarray(s_u(0.0), dtype=float)
    dF, err = helmholtz_s_derivative(s_u, 0.0, h, gamma0)
    return sign * dF / steady, steady, float(np.max(np.abs(err / steady)))


# -------------------------------------------------------------- 1D benchmark


def accumulation_time_1d(x, gamma0, D=1.0):
    """Closed form ``(1/(2 gamma0)) (1 + sqrt(gamma0/D) x)`` on the half line."""
    if gamma0 <= 0:
        raise UnsupportedError(GAMMA0_REQUIRED)
    if D <= 0:
        raise DomainError("D must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be non-negative")
    return (1.0 + math.sqrt(gamma0 / D) * x) / (2.0 * gamma0)


def laplace_profile_1d(x, s, gamma0, D=1.0, J0=1.0, L=None):
    """``s u~(x, s)`` for injection flux ``J0`` at ``x = 0`` and a reflecting end at ``L``.

    Solves ``D u'' - (gamma0 + s) u = 0`` with ``-D u'(0) = J0/s`` and
    ``u'(L) = 0``.  ``L`` defaults to twenty decay lengths.
    """
    if L is None:
        L = 20.0 * math.sqrt(D / gamma0)
    k = math.sqrt((gamma0 + s) / D)
    x = np.asarray(x, dtype=float)
    # cosh(k(L-x))/sinh(kL) without overflow
    ratio = (np.exp(-k * x) + np.exp(-k * (2.0 * L - x))) / (1.0 - math.exp(-2.0 * k * L))
    return J0 * ratio / (D * k)


def accumulation_time_1d_laplace(x, gamma0, D=1.0, L=None, h=None):
    """Accumulation time of the injection problem through the Laplace pipeline.

    The bulk starts empty, so the source convention applies.
    """
    if gamma0 <= 0:
        raise UnsupportedError(GAMMA0_REQUIRED)
    T, _, _ = laplace_accumulation_time(lambda s: laplace_profile_1d(x, s, gamma0, D, 1.0, L),
                                        gamma0, h, sign=-1.0)
    return T


# --------------------------------------------------------- initial conditions


@dataclass(frozen=True)
class InitialCondition:
    """Initial bulk concentration.

    ``kind`` is ``"zero"``, ``"constant"``, ``"bump"`` (truncated Gaussian
    ``amplitude exp(-|x - center|^2/(2 sigma^2))`` for ``|x - center| < cutoff``)
    or ``"grid"`` (multilinear interpolation of samples, zero outside).
    """

    kind: str = "zero"
    amplitude: float = 0.0
    center: tuple = ()
    sigma: float = 0.0
    cutoff: float = 0.0
    axes: tuple = ()
    values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "bump", "grid"):
            raise DomainError(f"unknown initial condition {self.kind!r}")
        if self.kind in ("constant", "bump") and self.amplitude < 0:
            raise DomainError("initial concentration must be non-negative")
        if self.kind == "bump" and not (self.sigma > 0 and self.cutoff > 0):
            raise DomainError("bump needs positive sigma and cutoff")
        if self.kind == "grid":
            if self.values is None or np.any(np.asarray(self.values) < 0):
                raise DomainError("grid initial condition needs non-negative samples")

    @property
    def is_zero(self) -> bool:
        if self.kind == "grid":
            return not np.any(self.values)
        return self.kind == "zero" or self.amplitude == 0

    def support(self):
        """Bounding ball ``(center, radius)`` or ``None`` when not compact."""
        if self.kind == "bump":
            return np.asarray(self.center, dtype=float), self.cutoff
        if self.kind == "grid":
            lo = np.array([a[0] for a in self.axes])
            hi = np.array([a[-1] for a in self.axes])
            return 0.5 * (lo + hi), 0.5 * float(np.linalg.norm(hi - lo))
        return None

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "zero":
            return np.zeros(len(pts))
        if self.kind == "constant":
            return np.full(len(pts), self.amplitude)
        if self.kind == "bump":
            r2 = np.sum((pts - np.asarray(self.center)) ** 2, axis=-1)
            return np.where(r2 < self.cutoff**2, self.amplitude * np.exp(-0.5 * r2 / self.sigma**2), 0.0)
        interp = RegularGridInterpolator(self.axes, np.asarray(self.values, dtype=float),
                                         bounds_error=False, fill_value=0.0)
        return interp(pts)

    def mass(self, dim) -> float:
        """Total amount for the bump (exact); other kinds raise."""
        if self.kind != "bump":
            raise UnsupportedError("closed-form mass is available for the bump only")
        q = 0.5 * (self.cutoff / self.sigma) ** 2
        return self.amplitude * (2.0 * math.pi * self.sigma**2) ** (dim / 2) * float(sps.gammainc(dim / 2, q))


def zero_ic():
    return InitialCondition("zero")


def constant_ic(value):
    return InitialCondition("constant", float(value))


def bump_ic(center, amplitude=1.0, sigma=0.05, cutoff=None):
    cutoff = 4.0 * sigma if cutoff is None else cutoff
    return InitialCondition("bump", float(amplitude), tuple(float(c) for c in center), float(sigma), float(cutoff))


def grid_ic(axes, values):
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    return InitialCondition("grid", axes=axes, values=np.asarray(values, dtype=float))


def ic_from_dict(d: dict) -> InitialCondition:
    kind = d.get("kind", "zero")
    if kind == "zero":
        return zero_ic()
    if kind == "constant":
        return constant_ic(d["value"])
    if kind in ("bump", "gaussian-bump", "gaussian"):
        return bump_ic(d["center"], d.get("amplitude", 1.0), d.get("sigma", 0.05), d.get("cutoff"))
    if kind == "grid":
        if "file" in d:
            data = np.load(d["file"])
            names = [k for k in ("x", "y", "z") if k in data]
            return grid_ic([data[k] for k in names], data["values"])
        return grid_ic(d["axes"], d["values"])
    raise DomainError(f"unknown initial condition {kind!r}")


# ---------------------------------------------------------------- projection

# base quadrature resolution; each refinement level doubles every direction
_BASE = {2: (32, 64), 3: (12, 12, 24)}
_MAX_LEVEL = {2: 3, 3: 3}


def _directions(dim, level):
    if dim == 2:
        nt = _BASE[2][1] << level
        th = 2.0 * math.pi * np.arange(nt) / nt
        return np.stack([np.cos(th), np.sin(th)], axis=-1), np.full(nt, 2.0 * math.pi / nt)
    nmu, nphi = _BASE[3][1] << level, _BASE[3][2] << level
    mu, wmu = np.polynomial.legendre.leggauss(nmu)
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    st = np.sqrt(1.0 - mu**2)
    e = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(mu, np.ones(nphi))], axis=-1)
    w = np.outer(wmu, np.full(nphi, 2.0 * math.pi / nphi))
    return e.reshape(-1, 3), w.ravel()


def _rule(u0: InitialCondition, x, geometry, level):
    """Quadrature nodes and weights (times ``u0``) for ``int G(x, .) u0``.

    Polar (spherical) coordinates are centred on the support when ``x`` lies
    outside it, and on ``x`` itself otherwise so that the area element
    cancels the source singularity; the radial map ``r = R t^2`` smooths the
    remaining ``r log r`` behaviour.
    """
    dim = geometry.dim
    c, R = u0.support()
    nr = _BASE[dim][0] << level
    t, wt = np.polynomial.legendre.leggauss(nr)
    t, wt = 0.5 * (t + 1.0), 0.5 * wt
    e, we = _directions(dim, level)
    inside = np.linalg.norm(x - c) < R
    if inside:
        d = x - c
        b = e @ d
        rmax = -b + np.sqrt(b * b - (d @ d - R * R))
        r = rmax[:, None] * t[None, :] ** 2
        jac = 2.0 * rmax[:, None] * t[None, :] * r ** (dim - 1)
        nodes = x + e[:, None, :] * r[..., None]
    else:
        r = R * t
        jac = np.broadcast_to(R * r ** (dim - 1), (len(e), nr))
        nodes = c + e[:, None, :] * r[None, :, None]
    w = (we[:, None] * wt[None, :] * jac).ravel()
    nodes = nodes.reshape(-1, dim)
    keep = geometry.contains(nodes)
    nodes, w = nodes[keep], w[keep]
    w = w * u0(nodes)
    nz = w != 0
    return nodes[nz], w[nz]


def _integrate(kernel, nodes, w, x):
    total = 0.0
    for i in range(0, len(nodes), CHUNK):
        total += float(w[i:i + CHUNK] @ kernel.value(nodes[i:i + CHUNK], x))
    return total


@dataclass(frozen=True)
class Projection:
    value: np.ndarray
    error: np.ndarray
    level: np.ndarray


def _geometry_ok(geometry):
    if isinstance(geometry, Rect2D):
        raise UnsupportedError("accumulation needs the modified Helmholtz Green's function (disk or ball)")
    if not isinstance(geometry, (Disk2D, Sphere3D)):
        raise UnsupportedError(f"no Helmholtz evaluator for {type(geometry).__name__}")


def gamma0_projection(u0: InitialCondition, x, s, geometry, D=1.0, gamma0=1.0, tol=1e-6, level=None) -> Projection:
    """``Gamma0(x, s) = int G(x, x'; s) u0(x') dx'`` with ``G`` at rate ``gamma0 + s``.

    The constant initial condition uses ``int G = 1/(gamma0 + s)`` exactly.
    Otherwise the quadrature level doubles until successive values agree to
    ``tol`` relative (or a fixed ``level`` is used); the difference is the
    returned error estimate.
    """
    _geometry_ok(geometry)
    if gamma0 + s <= 0:
        raise DomainError("s + gamma0 must be positive")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    n = len(pts)
    if u0.kind in ("zero", "constant") or u0.is_zero:
        v = 0.0 if u0.is_zero else u0.amplitude / (gamma0 + s)
        return Projection(np.full(n, v), np.zeros(n), np.zeros(n, dtype=int))
    kernel = kernel_for(geometry, D, gamma0 + s)
    dim = geometry.dim
    vals, errs, levels = np.empty(n), np.empty(n), np.empty(n, dtype=int)
    for i, xi in enumerate(pts):
        if level is not None:
            vals[i] = _integrate(kernel, *_rule(u0, xi, geometry, level), xi)
            errs[i], levels[i] = np.nan, level
            continue
        prev = _integrate(kernel, *_rule(u0, xi, geometry, 0), xi)
        for lev in range(1, _MAX_LEVEL[dim] + 1):
            cur = _integrate(kernel, *_rule(u0, xi, geometry, lev), xi)
            err = abs(cur - prev)
            prev = cur
            if err <= tol * abs(cur):
                break
        else:
            if err > tol * abs(cur) * 1e3:
                raise AccuracyError(f"projection did not settle: estimated relative error {err / abs(cur):.2e}")
        # the coarser level already meets the tolerance; report it for reuse
        vals[i], errs[i], levels[i] = cur, err, lev - 1
    return Projection(vals, errs, levels)


# ----------------------------------------------------- planar and spatial T


@dataclass(frozen=True)
class AccumulationResult:
    """Accumulation time at probe points with its pieces.

    ``T`` is the assembled value ``numerator/steady``; ``terms`` splits the
    numerator (each divided by ``steady``), ``leading`` is the dominant
    small-compartment term and ``pipeline`` the same time obtained by
    differentiating the full Laplace-space solution numerically.
    """

    x: np.ndarray
    T: np.ndarray
    leading: np.ndarray
    terms: dict
    steady: np.ndarray
    pipeline: np.ndarray
    pipeline_error: float
    sign: float


def _prepare(spec, u0, x, dim):
    spec = validate(spec)
    if spec.dim != dim:
        raise UnsupportedError(f"expected a {dim}D geometry")
    _geometry_ok(spec.geometry)
    if spec.gamma0 <= 0:
        raise UnsupportedError(GAMMA0_REQUIRED)
    if spec.I0 != 0:
        raise UnsupportedError("accumulation times are defined here without bulk input (I0 = 0)")
    for j, comp in enumerate(spec.compartments):
        if not isinstance(comp.model, ModelI):
            raise UnsupportedError(f"compartment {j}: accumulation times support fixed boundary concentrations only")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    sup = u0.support()
    for j, xj in enumerate(spec.centers()):
        if sup is not None and np.linalg.norm(xj - sup[0]) < sup[1] + spec.epsilon:
            raise DomainError(f"initial condition support reaches the epsilon-neighbourhood of compartment {j}")
        if np.any(np.linalg.norm(pts - xj, axis=-1) < 2.0 * spec.epsilon):
            raise ProximityError(f"probe within 2 epsilon of compartment {j}")
    return spec, pts


def _projection_levels(spec, u0, pts, tol):
    """Quadrature levels fixed at ``s = 0`` and reused for every ``s``."""
    allpts = np.vstack([pts, spec.centers()])
    if u0.kind in ("zero", "constant") or u0.is_zero:
        return allpts, [None] * len(allpts)
    p = gamma0_projection(u0, allpts, 0.0, spec.geometry, spec.D, spec.gamma0, tol)
    return allpts, list(p.level)


def _gamma0_at(spec, u0, allpts, levels, s):
    if levels[0] is None:
        return gamma0_projection(u0, allpts, s, spec.geometry, spec.D, spec.gamma0).value
    return np.array([gamma0_projection(u0, p, s, spec.geometry, spec.D, spec.gamma0, level=lv).value[0]
                     for p, lv in zip(allpts, levels)])


def _sign(u0, convention):
    if convention == "auto":
        return -1.0 if u0.is_zero else 1.0
    if convention not in ("sink", "source"):
        raise ValueError("convention must be 'auto', 'sink' or 'source'")
    return 1.0 if convention == "sink" else -1.0


def _point_green(kernel, pts, centers):
    return np.stack([kernel.value(pts, xk) for xk in centers], axis=-1)


def _degenerate(u):
    if np.any(np.abs(u) <= 1e-300) or not np.all(np.isfinite(u)):
        raise DomainError("degenerate accumulation time: the steady field vanishes at a probe "
                          "(all boundary concentrations zero)")


def accumulation_time_2d(spec, u0: InitialCondition, x, convention="auto", tol=1e-6, h=None) -> AccumulationResult:
    """Planar accumulation time at the probes ``x``.

    The assembled derivative is
    ``Gamma0(x, 0) - 2 pi nu D sum_k [A'_k G(x, x_k) + A_k H(x, x_k)]`` with
    ``A = -T^{-1} c``, ``A' = T^{-1} T' T^{-1} c + T^{-1} Gamma0(x_i, 0)`` and
    ``T(s) = I + nu (diag Psi + 2 pi D G(s))``; the leading term is
    ``Gamma0(x, 0)/(2 pi nu D sum_k G(x, x_k) c_k)``.
    """
    spec, pts = _prepare(spec, u0, x, 2)
    nu, D, g0, N = spec.nu, spec.D, spec.gamma0, spec.N
    h = _step(g0, h)
    centers, ells = spec.centers(), spec.ells()
    c, psi = interface_constants(spec)
    allpts, levels = _projection_levels(spec, u0, pts, tol)
    sign = _sign(u0, convention)

    def parts(s):
        ker = kernel_for(spec.geometry, D, g0 + s)
        Gm = matrix_from_points(ker, centers, ells)
        Gx = _point_green(ker, pts, centers)
        return Gm, Gx

    Gm0, Gx0 = parts(0.0)
    dG, _ = helmholtz_s_derivative(lambda s: np.concatenate([a.ravel() for a in parts(s)]), 0.0, h, g0)
    dGm, H = dG[:N * N].reshape(N, N), dG[N * N:].reshape(len(pts), N)
    T0 = factor(system_matrix(nu, psi, Gm0, D))
    gam = _gamma0_at(spec, u0, allpts, levels, 0.0)
    gx, gk = gam[:len(pts)], gam[len(pts):]
    A = -T0.solve(c)
    Tprime = nu * TWO_PI * D * dGm
    Ap = T0.solve(Tprime @ T0.solve(c)) + T0.solve(gk)
    steady = -TWO_PI * nu * D * (Gx0 @ A)
    _degenerate(steady)
    terms = {
        "Gamma0": gx / steady,
        "A_prime": -TWO_PI * nu * D * (Gx0 @ Ap) / steady,
        "H": -TWO_PI * nu * D * (H @ A) / steady,
    }
    T = sign * sum(terms.values())
    leading = sign * gx / (TWO_PI * nu * D * (Gx0 @ c))

    def s_u(s):
        if s == 0.0:
            return steady
        Gm, Gx = parts(s)
        gs = _gamma0_at(spec, u0, allpts, levels, s)
        Ts = factor(system_matrix(nu, psi, Gm, D))
        sA = -Ts.solve(c - s * gs[len(pts):])
        return s * gs[:len(pts)] - TWO_PI * nu * D * (Gx @ sA)

    Tp, _, perr = laplace_accumulation_time(s_u, g0, h, sign)
    return AccumulationResult(pts, T, leading, {k: sign * v for k, v in terms.items()}, steady, Tp, perr, sign)


def accumulation_time_3d(spec, u0: InitialCondition, x, convention="auto", tol=1e-6, h=None) -> AccumulationResult:
    """Spatial accumulation time at the probes ``x`` (ball only).

    The Laplace-space outer field is
    ``Gamma0(x, s) + 4 pi eps D sum_k Lambda_k [c_k/s - Gamma0(x_k, s) - eps chi_k(s)] G(x, x_k; s)``
    with ``chi_j(s) = 4 pi D sum_k Lambda_k [c_k/s - Gamma0(x_k, s)] G_jk(s)``.
    Its ``s``-derivative splits into the ``H`` terms, the ``Gamma0(x_k, 0) G``
    products and the ``chi`` terms, reported separately.
    """
    spec, pts = _prepare(spec, u0, x, 3)
    eps, D, g0, N = spec.epsilon, spec.D, spec.gamma0, spec.N
    h = _step(g0, h)
    centers = spec.centers()
    lam = _lambdas(spec)
    c = np.array([comp.model.c0 for comp in spec.compartments], dtype=float)
    allpts, levels = _projection_levels(spec, u0, pts, tol)
    sign = _sign(u0, convention)

    def parts(s):
        ker = kernel_for(spec.geometry, D, g0 + s)
        return matrix_from_points(ker, centers), _point_green(ker, pts, centers)

    Gm0, Gx0 = parts(0.0)
    dG, _ = helmholtz_s_derivative(lambda s: np.concatenate([a.ravel() for a in parts(s)]), 0.0, h, g0)
    dGm, H = dG[:N * N].reshape(N, N), dG[N * N:].reshape(len(pts), N)
    gam = _gamma0_at(spec, u0, allpts, levels, 0.0)
    gx, gk = gam[:len(pts)], gam[len(pts):]
    k = FOUR_PI * eps * D
    chi0 = FOUR_PI * D * (Gm0 @ (lam * c))
    dchi = FOUR_PI * D * (dGm @ (lam * c) - Gm0 @ (lam * gk))  # d/ds of s chi(s) at 0
    steady = k * (Gx0 @ (lam * (c - eps * chi0)))
    _degenerate(steady)
    terms = {
        "Gamma0": gx / steady,
        "H": k * (H @ (lam * (c - eps * chi0))) / steady,
        "Gamma0_G": -k * (Gx0 @ (lam * gk)) / steady,
        "chi": -k * eps * (Gx0 @ (lam * dchi)) / steady,
    }
    T = sign * sum(terms.values())
    leading = sign * gx / (k * (Gx0 @ (lam * c)))

    def s_u(s):
        if s == 0.0:
            return steady
        Gm, Gx = parts(s)
        gs = _gamma0_at(spec, u0, allpts, levels, s)
        q = c - s * gs[len(pts):]
        s_chi = FOUR_PI * D * (Gm @ (lam * q))
        return s * gs[:len(pts)] + k * (Gx @ (lam * (q - eps * s_chi)))

    Tp, _, perr = laplace_accumulation_time(s_u, g0, h, sign)
    return AccumulationResult(pts, T, leading, {k_: sign * v for k_, v in terms.items()}, steady, Tp, perr, sign)


def laplace_steady_2d(spec, u0: InitialCondition, x, s):
    """``s u~(x, s)`` of the planar Laplace-space solution (tends to the steady field as ``s -> 0``)."""
    spec, pts = _prepare(spec, u0, x, 2)
    nu, D = spec.nu, spec.D
    c, psi = interface_constants(spec)
    ker = kernel_for(spec.geometry, D, spec.gamma0 + s)
    Gm = matrix_from_points(ker, spec.centers(), spec.ells())
    Gx = _point_green(ker, pts, spec.centers())
    allpts = np.vstack([pts, spec.centers()])
    gs = gamma0_projection(u0, allpts, s, spec.geometry, D, spec.gamma0).value
    sA = -factor(system_matrix(nu, psi, Gm, D)).solve(c - s * gs[len(pts):])
    return s * gs[:len(pts)] - TWO_PI * nu * D * (Gx @ sA)
