import math

import numpy as np
import pytest
from scipy.sparse.linalg import spsolve

from oracles import _at, _radial_operator
from spdiffusion.errors import DomainError, ResolutionError, UnsupportedError
from spdiffusion.geometry import CompartmentSpec, Disk2D, ModelI, ModelII, ModelIII, ProblemSpec, Rect2D, Sphere3D
from spdiffusion.oracle import compare, convergence_order, fd_solve_rect, radial_exact_disk, radial_exact_sphere

D, G0, EPS = 1.0, 1.0, 0.1
C = np.array([0.45, 0.55])


def u_exact(x, y):
    return np.cos(math.pi * x) * np.cos(math.pi * y) + 0.2 * np.cos(2 * math.pi * x)


def grad_exact(p):
    x, y = p[:, 0], p[:, 1]
    return np.stack([-math.pi * np.sin(math.pi * x) * np.cos(math.pi * y) - 0.4 * math.pi * np.sin(2 * math.pi * x),
                     -math.pi * np.cos(math.pi * x) * np.sin(math.pi * y)], axis=-1)


def source(x, y):
    lap = -2 * math.pi**2 * np.cos(math.pi * x) * np.cos(math.pi * y) - 0.8 * math.pi**2 * np.cos(2 * math.pi * x)
    return -(D * lap - G0 * u_exact(x, y))


def _mms_errors(comps, data, hs=(1 / 40, 1 / 80, 1 / 160)):
    errs = []
    for h in hs:
        spec = ProblemSpec(Rect2D(1.0, 1.0), comps, D=D, gamma0=G0, I0=0.0, epsilon=EPS)
        f = fd_solve_rect(spec, h, source=source, boundary_data=data)
        X, Y = np.meshgrid(f.x, f.y, indexing="ij")
        m = np.isfinite(f.values)
        errs.append(np.max(np.abs(f.values[m] - u_exact(X, Y)[m])))
        assert f.residual < 1e-10
    return list(hs), errs


def test_fd_manufactured_plain_rectangle():
    hs, errs = _mms_errors((), None)
    assert convergence_order(hs, errs) >= 1.9


def test_fd_manufactured_fixed_value_hole():
    comps = (CompartmentSpec(tuple(C), 1.0, math.inf, ModelI(0.0)),)
    hs, errs = _mms_errors(comps, lambda j, p: u_exact(p[:, 0], p[:, 1]))
    assert convergence_order(hs, errs) >= 1.9


def test_fd_manufactured_reactive_hole():
    kappa = 2.0
    comps = (CompartmentSpec(tuple(C), 1.0, kappa, ModelI(0.0)),)

    def g(j, p):
        n = (p - C) / np.linalg.norm(p - C, axis=1)[:, None]
        return u_exact(p[:, 0], p[:, 1]) - EPS * D / kappa * np.einsum("ij,ij->i", grad_exact(p), n)

    hs, errs = _mms_errors(comps, g)
    assert convergence_order(hs, errs) >= 0.9


def test_fd_disk_against_radial():
    spec = ProblemSpec(Disk2D(1.0), (CompartmentSpec((0.0, 0.0), 1.0, math.inf, ModelI(1.0)),),
                       D=1.0, gamma0=1.0, I0=0.0, epsilon=0.1)
    f = fd_solve_rect(spec, 0.01)
    pts = np.array([[0.3, 0.0], [0.0, 0.5], [0.5, 0.5]])
    rep = compare(f.interpolate, radial_exact_disk(spec).at, pts)
    assert rep.max_rel < 2e-2


def test_fd_requirements():
    spec = ProblemSpec(Rect2D(1.0, 1.0), (CompartmentSpec((0.5, 0.5), 1.0, math.inf, ModelI(0.0)),),
                       D=1.0, gamma0=1.0, I0=0.0, epsilon=0.02)
    with pytest.raises(ResolutionError):
        fd_solve_rect(spec, 0.01)
    pool = ProblemSpec(Rect2D(1.0, 1.0), (CompartmentSpec((0.5, 0.5), 1.0, 1.0, ModelII()),),
                       D=1.0, gamma0=1.0, I0=0.0, epsilon=0.1)
    with pytest.raises(UnsupportedError):
        fd_solve_rect(pool, 0.01)
    ball = ProblemSpec(Sphere3D(1.0), (CompartmentSpec((0, 0, 0), 1.0, math.inf, ModelI(0.0)),),
                       D=1.0, gamma0=1.0, I0=0.0, epsilon=0.1)
    with pytest.raises(UnsupportedError):
        fd_solve_rect(ball, 0.01)


def _ode_residual(sol, dim, D, g0, I0, r, h=1e-4):
    u = lambda s: sol.u(np.asarray(s))
    upp = (u(r + h) - 2 * u(r) + u(r - h)) / h**2
    up = (u(r + h) - u(r - h)) / (2 * h)
    return D * (upp + (dim - 1) * up / r) - g0 * u(r) + I0


@pytest.mark.parametrize("dim,kappa", [(2, math.inf), (2, 3.0), (3, math.inf), (3, 3.0)])
def test_radial_solution_satisfies_problem(dim, kappa):
    geom = Disk2D(1.0) if dim == 2 else Sphere3D(1.0)
    spec = ProblemSpec(geom, (CompartmentSpec((0.0,) * dim, 1.0, kappa, ModelI(0.4)),),
                       D=1.3, gamma0=0.8, I0=0.5, epsilon=0.05)
    sol = (radial_exact_disk if dim == 2 else radial_exact_sphere)(spec)
    assert sol.max_residual < 1e-12
    r = np.array([0.1, 0.4, 0.9])
    res = _ode_residual(sol, dim, 1.3, 0.8, 0.5, r)
    assert np.max(np.abs(res)) < 1e-5
    # reflecting outer wall and the compartment condition
    assert abs(sol.du(1.0)) < 1e-12
    a = 0.05
    if math.isinf(kappa):
        assert sol.u(a) == pytest.approx(0.4, abs=1e-12)
    else:
        assert 1.3 * sol.du(a) == pytest.approx(kappa / 0.05 * (sol.u(a) - 0.4), rel=1e-9)


@pytest.mark.parametrize("dim", [2, 3])
def test_radial_against_finite_volumes(dim):
    geom = Disk2D(1.0) if dim == 2 else Sphere3D(1.0)
    spec = ProblemSpec(geom, (CompartmentSpec((0.0,) * dim, 1.0, math.inf, ModelI(1.0)),),
                       D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    rc, L, b = _radial_operator(dim, 0.05, 1.0, 1.0, 1.0, 1.0, 4000)
    us = spsolve(L, -b)
    sol = (radial_exact_disk if dim == 2 else radial_exact_sphere)(spec)
    for r in (0.2, 0.5, 0.9):
        assert _at(rc, us, r) == pytest.approx(float(sol.u(r)), rel=1e-5)


def test_radial_receptor_pool_interface():
    spec = ProblemSpec(Disk2D(1.0), (CompartmentSpec((0.0, 0.0), 1.0, 2.0, ModelII(0.5, 1.5, 3.0)),),
                       D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    sol = radial_exact_disk(spec)
    assert sol.max_residual < 1e-12
    # interior value at the centre is bounded and below the isolated level Ibar/gammabar
    assert 0 < float(sol.u(0.0)) < 2.0


def test_radial_large_rates_do_not_overflow():
    spec = ProblemSpec(Sphere3D(1.0), (CompartmentSpec((0, 0, 0), 1.0, math.inf, ModelI(1.0)),),
                       D=1.0, gamma0=1e4, I0=0.0, epsilon=0.05)
    sol = radial_exact_sphere(spec)
    v = sol.u(np.array([0.06, 0.2, 1.0]))
    assert np.all(np.isfinite(v)) and v[0] > v[1] > v[2] >= 0


def test_radial_zero_degradation_is_flat():
    spec = ProblemSpec(Disk2D(1.0), (CompartmentSpec((0.0, 0.0), 1.0, math.inf, ModelI(0.7)),),
                       D=1.0, gamma0=0.0, I0=0.0, epsilon=0.05)
    assert np.allclose(radial_exact_disk(spec).u(np.array([0.1, 0.5, 1.0])), 0.7, atol=1e-12)


def test_radial_requirements():
    off = ProblemSpec(Disk2D(1.0), (CompartmentSpec((0.1, 0.0), 1.0, math.inf, ModelI(0.7)),),
                      D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    with pytest.raises(DomainError):
        radial_exact_disk(off)
    with pytest.raises(UnsupportedError):
        radial_exact_sphere(off)
    active = ProblemSpec(Disk2D(1.0), (CompartmentSpec((0.0, 0.0), 1.0, 1.0, ModelIII("linear", 1, (0.0,))),),
                         D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    with pytest.raises(UnsupportedError):
        radial_exact_disk(active)


def test_compare_skips_and_reports():
    f = lambda p: 1.0 + p[:, 0]
    g = lambda p: 1.0 + p[:, 0] + 1e-3
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [0.01, 0.0]])
    rep = compare(g, f, pts, centers=[[0.0, 0.0]], radii=[0.1])
    assert len(rep.probes) == 1
    assert [i for i, _ in rep.skipped] == [0, 2]
    assert rep.max_abs == pytest.approx(1e-3)
    assert rep.to_dict()["max_rel"] == pytest.approx(1e-3 / 1.5)


def test_convergence_order():
    assert convergence_order([0.1, 0.05, 0.025], [4e-2, 1e-2, 2.5e-3]) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        convergence_order([0.1], [1.0])
    with pytest.raises(DomainError):
        convergence_order([0.1, 0.05], [1.0, 0.0])
