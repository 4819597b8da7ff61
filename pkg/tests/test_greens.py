import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sps

import oracles as O
from spdiffusion.errors import DomainError, SingularityError, UnsupportedError
from spdiffusion.geometry import Disk2D, Rect2D, Sphere3D
from spdiffusion.greens import (disk_helmholtz_G, disk_helmholtz_R, disk_laplace_G0, disk_laplace_R,
                                green_s_derivative, kernel_for, rect_laplace_G0, rect_laplace_R,
                                sphere_helmholtz_G, sphere_helmholtz_R, sphere_laplace_G0, sphere_laplace_R)

# values from the polar finite-volume oracle (200 x 400 cells, mollified source),
# frozen; the grid error is about 1e-3 relative
DISK_G0_FD = -0.11494887   # G0((0.5, 0), (-0.5, 0)), D = 1
DISK_H_FD = 0.35389583     # G((0.4, 0), (0, 0)), D = 1, s + gamma0 = 1

inside_disk = st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7)).filter(lambda p: math.hypot(*p) < 0.7)
inside_ball = st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6)).filter(
    lambda p: math.sqrt(sum(c * c for c in p)) < 0.6)


def test_disk_laplace_against_grid_oracle():
    assert disk_laplace_G0([0.5, 0.0], [-0.5, 0.0]).value == pytest.approx(DISK_G0_FD, rel=3e-3)


def test_disk_helmholtz_against_grid_oracle():
    assert disk_helmholtz_G([0.4, 0.0], [0.0, 0.0], 1.0, 1.0).value == pytest.approx(DISK_H_FD, rel=3e-3)


@pytest.mark.parametrize("r,k,D", [(0.4, 1.0, 1.0), (0.9, 3.0, 2.0), (0.05, 0.2, 1.0)])
def test_disk_helmholtz_centred_source_closed_form(r, k, D):
    # radial solution K0(kr) + (K1(k)/I1(k)) I0(kr) satisfies the reflecting condition at r = 1
    ref = (sps.k0(k * r) + sps.k1(k) / sps.i1(k) * sps.i0(k * r)) / (2 * math.pi * D)
    assert disk_helmholtz_G([r, 0.0], [0.0, 0.0], D, D * k * k).value == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("x,xi", [
    ([0.3, 0.2, 0.1], [-0.2, 0.1, 0.4]),
    ([0.5, 0.0, 0.0], [0.0, 0.0, 0.0]),
    ([0.1, 0.7, 0.0], [0.2, -0.3, 0.5]),
])
def test_sphere_laplace_against_legendre_series(x, xi):
    assert sphere_laplace_G0(x, xi).value == pytest.approx(O.sphere_laplace_series(x, xi, n_max=80), rel=1e-12)


@pytest.mark.parametrize("x,xi,sigma", [
    ([0.3, 0.2, 0.1], [-0.2, 0.1, 0.4], 2.0),
    ([0.5, 0.0, 0.0], [0.0, 0.0, 0.0], 2.0),
    ([0.1, 0.7, 0.0], [0.2, -0.3, 0.5], 0.3),
    ([0.0, 0.0, 0.9], [0.0, 0.1, 0.85], 25.0),
])
def test_sphere_helmholtz_against_series(x, xi, sigma):
    ref = O.sphere_helmholtz_series(x, xi, sigma, n_max=160)
    assert sphere_helmholtz_G(x, xi, 1.0, 1.0, sigma).value == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("x,xi", [([0.3, 0.2, 0.1], [-0.2, 0.1, 0.4]), ([0.1, 0.7, 0.0], [0.2, -0.3, 0.5])])
def test_sphere_s_derivative_against_termwise_series(x, xi):
    d, err = green_s_derivative(Sphere3D(1.0), x, xi, D=1.0, gamma0=1.0)
    ref = O.sphere_helmholtz_series(x, xi, 1.0, n_max=80, dsigma=True)
    assert float(d) == pytest.approx(ref, rel=1e-9)
    assert err < 1e-6


def test_helmholtz_tends_to_laplace_plus_pole():
    # G(s) = 1/(s |Omega|) + G0 + O(s) for gamma0 = 0
    x, xi = [0.3, -0.2], [-0.1, 0.4]
    s = 1e-5
    G = disk_helmholtz_G(x, xi, 1.0, s).value
    assert G - 1 / (s * math.pi) == pytest.approx(disk_laplace_G0(x, xi).value, abs=1e-4)


def test_disk_zero_mean():
    xi = np.array([0.35, -0.2])
    val = O.disk_integral_about(lambda p: disk_laplace_G0(p, xi).value, xi)
    assert abs(val) < 1e-7


def test_disk_regular_part_is_limit():
    xi = np.array([0.2, 0.45])
    for D, R in ((1.0, 1.0), (2.0, 1.5)):
        d = 1e-6
        ev = disk_laplace_G0(xi + [d, 0.0], xi, D, R)
        assert float(ev.regular_part) == pytest.approx(disk_laplace_R(xi, D, R), abs=1e-5)
        ev = disk_helmholtz_G(xi + [d, 0.0], xi, D, 1.3, radius=R)
        assert float(ev.regular_part) == pytest.approx(disk_helmholtz_R(xi, D, 1.3, radius=R), abs=1e-5)


def test_rect_regular_part_and_sphere_regular_part():
    xp = np.array([0.3, 0.6])
    ev = rect_laplace_G0(xp + [1e-7, 0.0], xp, 1.0, 1.0)
    assert float(ev.regular_part) == pytest.approx(rect_laplace_R(xp, 1.0, 1.0), abs=1e-6)
    x0 = np.array([0.1, 0.2, -0.3])
    ev = sphere_laplace_G0(x0 + [1e-7, 0, 0], x0)
    assert float(ev.regular_part) == pytest.approx(sphere_laplace_R(x0), abs=1e-6)
    ev = sphere_helmholtz_G(x0 + [1e-7, 0, 0], x0, 1.0, 1.0, 2.0)
    assert float(ev.regular_part) == pytest.approx(sphere_helmholtz_R(x0, 1.0, 1.0, 2.0), abs=1e-6)


@pytest.mark.parametrize("L1,L2", [(1.0, 1.0), (2.0, 0.7), (0.5, 1.0)])
def test_rect_laplacian_is_uniform(L1, L2):
    xp = np.array([0.3 * L1, 0.4 * L2])
    f = lambda p: rect_laplace_G0(p, xp, L1, L2).value  # noqa: E731
    for x in ([0.8 * L1, 0.7 * L2], [0.1 * L1, 0.9 * L2]):
        lap = O.five_point_laplacian(f, x, 1e-3 * min(L1, L2))
        assert lap == pytest.approx(1 / (L1 * L2), rel=1e-4)


def test_rect_reflecting_walls():
    xp = np.array([0.3, 0.4])
    h = 1e-5
    for x, n in (([h, 0.5], 0), ([1 - h, 0.2], 0), ([0.6, h], 1), ([0.6, 1 - h], 1)):
        x = np.array(x)
        e = np.zeros(2)
        e[n] = h
        grad = (rect_laplace_G0(x + e / 2, xp).value - rect_laplace_G0(x - e / 2, xp).value) / h
        assert abs(grad) < 1e-4


@given(inside_disk, inside_disk)
def test_disk_reciprocity(a, b):
    if math.dist(a, b) < 1e-3:
        return
    assert disk_laplace_G0(a, b).value == pytest.approx(disk_laplace_G0(b, a).value, rel=1e-10, abs=1e-12)
    assert disk_helmholtz_G(a, b, 1.0, 2.0).value == pytest.approx(
        disk_helmholtz_G(b, a, 1.0, 2.0).value, rel=1e-10, abs=1e-12)


@given(inside_ball, inside_ball)
def test_sphere_reciprocity(a, b):
    if math.dist(a, b) < 1e-3:
        return
    assert sphere_laplace_G0(a, b).value == pytest.approx(sphere_laplace_G0(b, a).value, rel=1e-10, abs=1e-12)
    assert sphere_helmholtz_G(a, b, 1.0, 1.0, 3.0).value == pytest.approx(
        sphere_helmholtz_G(b, a, 1.0, 1.0, 3.0).value, rel=1e-10, abs=1e-12)


@given(st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95)), st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95)))
def test_rect_reciprocity(a, b):
    if math.dist(a, b) < 1e-3:
        return
    assert rect_laplace_G0(a, b).value == pytest.approx(
        rect_laplace_G0(b, a).value, rel=1e-10, abs=1e-12)


@given(st.floats(0.01, 1e4))
def test_helmholtz_positive_and_finite(sg):
    v = disk_helmholtz_G([0.6, 0.1], [-0.2, 0.3], 1.0, sg).value
    w = sphere_helmholtz_G([0.6, 0.1, 0.0], [-0.2, 0.3, 0.1], 1.0, 1.0, sg).value
    assert np.isfinite(v) and v > 0
    assert np.isfinite(w) and w > 0


def test_scaling_with_diffusivity():
    x, xi = [0.3, -0.2], [-0.1, 0.4]
    assert disk_laplace_G0(x, xi, 4.0).value == pytest.approx(disk_laplace_G0(x, xi, 1.0).value / 4.0)


def test_errors():
    with pytest.raises(SingularityError):
        disk_laplace_G0([0.1, 0.1], [0.1, 0.1])
    with pytest.raises(DomainError):
        disk_laplace_G0([1.2, 0.0], [0.0, 0.0])
    with pytest.raises(UnsupportedError):
        kernel_for(Rect2D(), 1.0, 1.0)
    with pytest.raises(DomainError):
        kernel_for(Disk2D(), 1.0, 0.0)
    with pytest.raises(DomainError):
        green_s_derivative(Sphere3D(), [0.1, 0, 0], [0, 0.2, 0], gamma0=0.0)


def test_vectorized_evaluation_matches_pointwise():
    pts = np.array([[0.1, 0.2], [0.5, -0.3], [-0.6, 0.0]])
    xi = np.array([0.0, 0.4])
    vec = disk_helmholtz_G(pts, xi, 1.0, 2.0).value
    assert np.allclose(vec, [disk_helmholtz_G(p, xi, 1.0, 2.0).value for p in pts], rtol=1e-14)
