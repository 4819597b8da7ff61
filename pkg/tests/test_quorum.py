import math

import numpy as np
import pytest

from oracles import rk4
from spdiffusion.errors import ConvergenceError, DomainError, UnsupportedError
from spdiffusion.geometry import CompartmentSpec, Disk2D, ModelIII, ProblemSpec, Sphere3D
from spdiffusion.greens import kernel_for, matrix_from_points
from spdiffusion.kinetics import linear_kinetics, selkov_kinetics
from spdiffusion.pdeode import (QuorumSystem, ReducedState, coupling_matrix, find_fixed_point, hopf_sweep,
                                integrate_reduced, linear_stability, reduced_rhs, reduced_rhs_w)
from spdiffusion.pdeode.quorum import selkov_below_threshold, selkov_hopf_window, selkov_trace

CENTERS = [(0.4, 0.0), (-0.2, 0.35), (-0.2, -0.35)]


def _spec(kappa=2.0, centers=CENTERS, ell=1.0, gamma0=1.0, eps=0.05, K=2):
    comps = tuple(CompartmentSpec(c, ell, kappa, ModelIII("selkov", K, (0.5,) * K)) for c in centers)
    return ProblemSpec(Disk2D(1.0), comps, D=1.0, gamma0=gamma0, I0=0.0, epsilon=eps)


def test_w_path_matches_general_path():
    rng = np.random.default_rng(3)
    kin = selkov_kinetics(0.1, 0.6)
    for D0 in (0.05, 1.0, 20.0):
        spec = _spec()
        system = QuorumSystem(spec, D0, kin)
        for _ in range(100):
            st = ReducedState(rng.uniform(0, 2), rng.uniform(0, 2, (3, 2)))
            a = reduced_rhs(st, system)
            b = reduced_rhs_w(st, spec, D0, kin)
            scale = max(1.0, np.abs(a.w).max())
            assert abs(a.ubar - b.ubar) <= 1e-12 * scale
            assert np.max(np.abs(a.w - b.w)) <= 1e-12 * scale


def test_well_mixed_limit():
    cm = coupling_matrix(_spec(kappa=2.0), 1e8)
    assert np.max(np.abs(cm.W - np.eye(3))) <= 1e-6
    assert cm.residual < 1e-12


def test_coupling_matrix_needs_identical_cells():
    comps = (CompartmentSpec((0.4, 0.0), 1.0, 2.0, ModelIII("selkov", 2, (0.5, 0.5))),
             CompartmentSpec((-0.4, 0.0), 0.8, 2.0, ModelIII("selkov", 2, (0.5, 0.5))))
    spec = ProblemSpec(Disk2D(1.0), comps, D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    with pytest.raises(UnsupportedError):
        coupling_matrix(spec, 1.0)
    # the general path still works
    QuorumSystem(spec, 1.0, selkov_kinetics())


def test_planar_only():
    comps = (CompartmentSpec((0.3, 0.0, 0.0), 1.0, 2.0, ModelIII("selkov", 2, (0.5, 0.5))),)
    spec = ProblemSpec(Sphere3D(1.0), comps, D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    with pytest.raises(UnsupportedError):
        QuorumSystem(spec, 1.0, selkov_kinetics())
    with pytest.raises(DomainError):
        QuorumSystem(_spec(), 0.0, selkov_kinetics())


def _reference_rhs(spec, D0, kin):
    # the reduced model written out from scratch with a dense solve per call
    eps, g0 = spec.epsilon, spec.gamma0
    nu = -1.0 / math.log(eps)
    ell, kap = np.array([c.ell for c in spec.compartments]), np.array([c.kappa for c in spec.compartments])
    centers = np.array([c.center for c in spec.compartments])
    G = matrix_from_points(kernel_for(spec.geometry, D0), centers, ell)
    q = kap * ell / (kap * ell + D0)
    vol = math.pi * eps**2 * ell**2
    area = math.pi
    M = np.eye(len(ell)) + 2 * math.pi * D0 * nu * q[:, None] * G

    def f(y):
        u, w = y[0], y[1:].reshape(len(ell), -1)
        A = np.linalg.solve(M, q * (u - w[:, 0]))
        du = -g0 * u - 2 * math.pi * D0 / area * A.sum()
        dw = kin(w)
        dw[:, 0] += 2 * math.pi * D0 * A / vol
        return np.concatenate([[du], dw.ravel()])

    return f


def test_two_cells_against_rk4():
    spec = _spec(kappa=0.05, centers=[(0.4, 0.1), (-0.3, -0.2)])
    kin = selkov_kinetics(0.1, 0.6)
    D0 = 0.5
    y0 = np.array([0.2, 0.9, 0.3, 0.4, 1.1])
    ref = rk4(_reference_rhs(spec, D0, kin), y0, 5.0, 5e-4)
    tr = integrate_reduced(ReducedState(y0[0], y0[1:].reshape(2, 2)), QuorumSystem(spec, D0, kin), 5.0,
                           rtol=1e-11, atol=1e-13)
    assert tr.ubar[-1] == pytest.approx(ref[0], rel=1e-8)
    assert np.allclose(tr.w[-1].ravel(), ref[1:], rtol=1e-8)


def test_total_content_conserved_without_loss():
    spec = _spec(kappa=1.0, gamma0=0.0, K=1)
    system = QuorumSystem(spec, 0.3, linear_kinetics(0.0, 0.0))
    y0 = ReducedState(0.1, np.array([[2.0], [0.5], [1.0]]))
    tr = integrate_reduced(y0, system, 20.0, np.linspace(0, 20, 11), method="Radau")
    totals = [system.total_content(np.concatenate([[u], w.ravel()])) for u, w in zip(tr.ubar, tr.w)]
    assert np.ptp(totals) <= 1e-9 * abs(totals[0])
    # everything relaxes to a common level
    assert np.ptp(np.concatenate([[tr.ubar[-1]], tr.w[-1, :, 0]])) < 1e-3


def test_jacobian_against_finite_differences():
    system = QuorumSystem(_spec(kappa=0.5), 0.2, selkov_kinetics(0.1, 0.6))
    y = np.array([0.3, 0.9, 0.4, 0.7, 1.2, 1.1, 0.6])
    J = system.jacobian(y)
    h = 1e-6
    num = np.column_stack([(system.rhs(0, y + h * e) - system.rhs(0, y - h * e)) / (2 * h)
                           for e in np.eye(len(y))])
    assert np.allclose(J, num, rtol=1e-6, atol=1e-6 * np.abs(J).max())


def test_selkov_window_edges():
    lo, hi = selkov_hopf_window(0.1)
    assert selkov_trace(0.1, lo) == pytest.approx(0.0, abs=1e-12)
    assert selkov_trace(0.1, hi) == pytest.approx(0.0, abs=1e-12)
    assert selkov_trace(0.1, 0.5 * (lo + hi)) > 0
    kin, b = selkov_below_threshold(0.1, 0.03)
    assert b == pytest.approx(hi + 0.03)
    w = np.array([[b, b / (0.1 + b * b)]])
    assert np.allclose(kin(w), 0.0, atol=1e-14)
    ev = np.linalg.eigvals(kin.jac(w)[0])
    assert np.all(ev.real < 0) and np.all(ev.real > -0.05)


def _selkov_collective():
    kin, b = selkov_below_threshold()
    y0 = b / (0.1 + b * b)
    comps = tuple(CompartmentSpec(c, 1.0, 0.0018, ModelIII("selkov", 2, (b, y0))) for c in CENTERS)
    spec = ProblemSpec(Disk2D(1.0), comps, D=1.0, gamma0=1.0, I0=0.0, epsilon=0.05)
    return spec, kin, np.concatenate([[0.0], np.tile([b, y0], 3)])


def test_hopf_sweep_brackets_crossing():
    spec, kin, guess = _selkov_collective()
    D0s = np.geomspace(1e-3, 10, 25)
    mr, cross = hopf_sweep(spec, kin, D0s, guess)
    assert len(cross) == 1
    c = cross[0]
    lo, hi = c.bracket
    assert hi - lo <= 1e-4 and lo < c.D0 < hi
    assert c.frequency > 0
    # the real part changes sign across the bracket
    s_lo, s_hi = (linear_stability(find_fixed_point(QuorumSystem(spec, d, kin), guess),
                                   QuorumSystem(spec, d, kin)).max_real for d in (lo, hi))
    assert s_lo * s_hi < 0


def test_linear_stability_requires_fixed_point():
    spec, kin, guess = _selkov_collective()
    with pytest.raises(ConvergenceError):
        linear_stability(guess + 0.1, QuorumSystem(spec, 1.0, kin))


def test_state_size_checked():
    spec, kin, _ = _selkov_collective()
    with pytest.raises(DomainError):
        integrate_reduced(ReducedState(0.0, np.zeros((2, 2))), QuorumSystem(spec, 1.0, kin), 1.0)
